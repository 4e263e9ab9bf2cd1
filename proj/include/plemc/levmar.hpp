#pragma once

// Small damped least-squares (Levenberg-Marquardt) minimizer with box
// constraints. Parameters sitting on a bound with the gradient pointing
// outward are "pegged" and dropped from the damped normal equations, the
// same treatment MINPACK-style fitters use; they re-enter as soon as the
// gradient flips. Convergence is relative cost improvement, or a vanishing
// projected gradient when the solution is pinned to bounds.
//
// The evaluation callback fills residuals and the Jacobian together: for
// line-shape fits the special function dominates and derivative rows come
// almost free, so accepted trial steps are never re-evaluated.

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace plemc {

struct LevMarOptions {
    double cost_tol = 1e-8;  // relative cost improvement below which we stop
    double grad_tol = 1e-8;  // projected gradient infinity-norm scale
    int max_iterations = 200;
    double lambda_init = 1e-3;
    double lambda_max = 1e12;
};

struct LevMarResult {
    std::vector<double> x;
    double cost = 0.0; // sum of squared residuals
    int iterations = 0;
    bool converged = false;
    std::vector<double> jtj;  // p x p normal matrix at the solution, row-major
    std::vector<bool> pegged; // parameters held on an active bound at the solution
    std::size_t n_residuals = 0;
};

namespace detail {

/// Solve a*x = b for SPD a (p x p row-major); returns false if not positive
/// definite. a and b are clobbered; the solution lands in b.
inline bool cholesky_solve(std::vector<double>& a, std::vector<double>& b, std::size_t p) {
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            if (i == j) {
                if (!(s > 0.0)) return false;
                a[i * p + i] = std::sqrt(s);
            } else {
                a[i * p + j] = s / a[j * p + j];
            }
        }
    }
    for (std::size_t i = 0; i < p; ++i) { // forward
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a[i * p + k] * b[k];
        b[i] = s / a[i * p + i];
    }
    for (std::size_t i = p; i-- > 0;) { // backward
        double s = b[i];
        for (std::size_t k = i + 1; k < p; ++k) s -= a[k * p + i] * b[k];
        b[i] = s / a[i * p + i];
    }
    return true;
}

} // namespace detail

/// eval(x, r, jac) fills m residuals and the m x p row-major Jacobian.
template <class Eval>
LevMarResult levmar_fit(Eval&& eval, std::vector<double> x0, const std::vector<double>& lower,
                        const std::vector<double>& upper, std::size_t n_residuals,
                        const LevMarOptions& opt = {}) {
    const std::size_t p = x0.size();
    const std::size_t m = n_residuals;

    auto clamp_into = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < p; ++i) v[i] = std::min(std::max(v[i], lower[i]), upper[i]);
    };

    LevMarResult res;
    res.x = std::move(x0);
    clamp_into(res.x);
    res.n_residuals = m;

    std::vector<double> r(m), jac(m * p);
    std::vector<double> r_try(m), jac_try(m * p), x_try(p);
    std::vector<double> g(p), jtj(p * p);
    std::vector<double> damped(p * p), step(p), reduced(p * p), step_red(p);
    std::vector<bool> pegged(p, false);
    std::vector<std::size_t> free_ix(p);

    eval(res.x, r, jac);
    double cost = 0.0;
    for (double v : r) cost += v * v;

    auto build_normal = [&]() {
        std::fill(g.begin(), g.end(), 0.0);
        std::fill(jtj.begin(), jtj.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = &jac[i * p];
            for (std::size_t a = 0; a < p; ++a) {
                g[a] += row[a] * r[i];
                for (std::size_t b = 0; b <= a; ++b) jtj[a * p + b] += row[a] * row[b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = a + 1; b < p; ++b) jtj[a * p + b] = jtj[b * p + a];
    };

    auto mark_pegged = [&]() {
        for (std::size_t i = 0; i < p; ++i)
            pegged[i] = (res.x[i] <= lower[i] && g[i] > 0) || (res.x[i] >= upper[i] && g[i] < 0);
    };

    auto projected_grad_norm = [&]() {
        double n = 0.0;
        for (std::size_t i = 0; i < p; ++i)
            if (!pegged[i]) n = std::max(n, std::fabs(2.0 * g[i]));
        return n;
    };

    double lambda = opt.lambda_init;
    for (res.iterations = 0; res.iterations < opt.max_iterations && !res.converged;
         ++res.iterations) {
        build_normal();
        mark_pegged();

        if (cost == 0.0 || projected_grad_norm() <= opt.grad_tol * (1.0 + cost)) {
            res.converged = true;
            break;
        }

        std::size_t pf = 0;
        for (std::size_t i = 0; i < p; ++i)
            if (!pegged[i]) free_ix[pf++] = i;

        bool stepped = false;
        while (lambda <= opt.lambda_max) {
            for (std::size_t a = 0; a < pf; ++a) {
                for (std::size_t b = 0; b < pf; ++b)
                    reduced[a * pf + b] = jtj[free_ix[a] * p + free_ix[b]];
                const double d = jtj[free_ix[a] * p + free_ix[a]];
                reduced[a * pf + a] = d + lambda * (d > 0 ? d : 1.0);
                step_red[a] = -g[free_ix[a]];
            }
            if (detail::cholesky_solve(reduced, step_red, pf)) {
                x_try = res.x;
                for (std::size_t a = 0; a < pf; ++a) x_try[free_ix[a]] += step_red[a];
                clamp_into(x_try);
                eval(x_try, r_try, jac_try);
                double cost_try = 0.0;
                for (double v : r_try) cost_try += v * v;
                if (cost_try < cost) {
                    const double rel = (cost - cost_try) / std::max(cost, 1e-300);
                    res.x.swap(x_try);
                    r.swap(r_try);
                    jac.swap(jac_try);
                    cost = cost_try;
                    lambda = std::max(lambda * 0.2, 1e-12);
                    stepped = true;
                    if (rel < opt.cost_tol) res.converged = true;
                    break;
                }
            }
            lambda *= 10.0;
        }

        if (!stepped) {
            // All damping levels rejected: either we are at a (possibly
            // bound-constrained) optimum, or the model is numerically stuck.
            res.converged = projected_grad_norm() <= 1e-6 * (1.0 + cost);
            break;
        }
    }

    build_normal();
    mark_pegged();
    if (!res.converged && projected_grad_norm() <= opt.grad_tol * (1.0 + cost))
        res.converged = true;

    res.jtj = jtj;
    res.pegged = pegged;
    res.cost = cost;
    return res;
}

} // namespace plemc
