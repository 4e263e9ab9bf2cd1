#include "plemc/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "plemc/levmar.hpp"

namespace plemc {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;
constexpr double kTiedFwhmPerSigma = 3.6013; // analysis convention for gamma = sigma
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Observation {
    std::vector<double> x; // bin centers, MHz
    std::vector<double> y; // counts
    std::vector<double> w; // least-squares weights (1 or 1/max(y,1) Poisson-ish)
};

Observation make_observation(const Scan& scan, const FitConfig& cfg) {
    Observation obs;
    const std::size_t n = scan.counts.size();
    obs.x.resize(n);
    obs.y.resize(n);
    obs.w.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        obs.x[i] = scan.window.bin_center(i);
        obs.y[i] = static_cast<double>(scan.counts[i]);
        if (cfg.poisson_weighted) obs.w[i] = 1.0 / std::sqrt(std::max(obs.y[i], 1.0));
    }
    return obs;
}

// w(z) + z w'(z), the width-direction sensitivity. Like the derivative it
// cancels for large |z|; series: -(i/sqrt(pi)) z^-3 (1 + 3 z^-2 + 45/4 z^-4).
std::complex<double> w_plus_z_dw(std::complex<double> z, std::complex<double> w,
                                 std::complex<double> dw) {
    if (std::norm(z) > 1e4) {
        const std::complex<double> iz2 = 1.0 / (z * z);
        return std::complex<double>(0.0, -0.5641895835477563) * (iz2 / z) *
               (1.0 + iz2 * (3.0 + 11.25 * iz2));
    }
    return w + z * dw;
}

// Residuals r_i = w_i (f(x_i) - y_i) and analytic Jacobian, sharing one
// Faddeeva evaluation per bin. Parameter layouts:
//   tied: [A, mu, sigma, offset]          (gamma follows sigma)
//   free: [A, mu, sigma, gamma, offset]
void eval_voigt(const Observation& obs, bool tied, bool with_offset,
                const std::vector<double>& q, std::vector<double>& r,
                std::vector<double>& jac) {
    const double A = q[0];
    const double mu = q[1];
    const double sigma = q[2];
    const double gamma = tied ? q[2] : q[3];
    const std::size_t p = (tied ? 3 : 4) + (with_offset ? 1 : 0);
    const double offset = with_offset ? q[p - 1] : 0.0;

    const double s2 = sigma * kSqrt2;
    const double norm = 1.0 / (sigma * kSqrt2Pi);
    const double v = gamma / s2;
    const double common = A * norm;

    for (std::size_t i = 0; i < obs.x.size(); ++i) {
        const double u = (obs.x[i] - mu) / s2;
        const std::complex<double> z{u, v};
        const std::complex<double> w = faddeeva_fast(z);
        const double value = common * w.real() + offset;
        r[i] = obs.w[i] * (value - obs.y[i]);

        const std::complex<double> dw = faddeeva_derivative(z, w);
        double* row = &jac[i * p];
        row[0] = norm * w.real();          // d/dA
        row[1] = -common * dw.real() / s2; // d/dmu
        if (tied) {
            // z = u + i/sqrt2 with only u scaling as 1/sigma
            row[2] = -(common / sigma) * (w.real() + u * dw.real());
        } else {
            // prefactor 1/sigma and z = (x - mu + i gamma)/(sigma sqrt2) both scale
            row[2] = -(common / sigma) * w_plus_z_dw(z, w, dw).real();
            row[3] = -common * dw.imag() / s2; // d/dgamma: Re[dw * i] = -Im dw
        }
        if (with_offset) row[p - 1] = 1.0;
        if (obs.w[i] != 1.0)
            for (std::size_t c = 0; c < p; ++c) row[c] *= obs.w[i];
    }
}

struct Seed {
    std::vector<double> q, lo, hi;
};

Seed initial_guess(const Scan& scan, const Observation& obs, const FitConfig& cfg, bool tied) {
    const double bin_width = scan.window.bin_width;
    double total = 0.0, centroid = 0.0;
    for (std::size_t i = 0; i < obs.x.size(); ++i) {
        total += obs.y[i];
        centroid += obs.y[i] * obs.x[i];
    }
    centroid /= total;

    double var = 0.0;
    for (std::size_t i = 0; i < obs.x.size(); ++i)
        var += obs.y[i] * (obs.x[i] - centroid) * (obs.x[i] - centroid);
    var /= total;
    const double width_seed = std::max(std::sqrt(var), 0.25 * bin_width);

    // Treat the count spread as a Gaussian-equivalent FWHM and start from the
    // tied-convention width; free mode splits the same value across both.
    const double sigma0 =
        std::max(gaussian_fwhm(width_seed) / kTiedFwhmPerSigma, cfg.sigma_floor);

    const double mid = scan.window.midpoint();
    const double mu_lo = std::max(scan.window.lo, mid - cfg.center_halfspan);
    const double mu_hi = std::min(scan.window.hi, mid + cfg.center_halfspan);
    const double mu0 = std::min(std::max(centroid, mu_lo), mu_hi);

    Seed s;
    if (tied) {
        s.q = {total * bin_width, mu0, sigma0};
        s.lo = {0.0, mu_lo, cfg.sigma_floor};
        s.hi = {kInf, mu_hi, kInf};
    } else {
        s.q = {total * bin_width, mu0, sigma0, sigma0};
        s.lo = {0.0, mu_lo, cfg.sigma_floor, 0.0};
        s.hi = {kInf, mu_hi, kInf, kInf};
    }
    if (cfg.fit_offset) {
        std::vector<double> counts_sorted(obs.y);
        std::nth_element(counts_sorted.begin(), counts_sorted.begin() + counts_sorted.size() / 2,
                         counts_sorted.end());
        s.q.push_back(counts_sorted[counts_sorted.size() / 2]); // median bin count
        s.lo.push_back(0.0);
        s.hi.push_back(kInf);
    }
    return s;
}

// FWHM sensitivity to (sigma, gamma) from the width combination formula;
// close enough to the exact derivative for error propagation.
void fwhm_gradient(double sigma, double gamma, double& dsigma, double& dgamma) {
    const double fl = lorentzian_fwhm(gamma);
    const double fg = gaussian_fwhm(sigma);
    const double root = std::sqrt(0.2166 * fl * fl + fg * fg);
    dgamma = 2.0 * (0.5346 + (root > 0 ? 0.2166 * fl / root : 0.0));
    dsigma = 2.3548200450309493 * (root > 0 ? fg / root : 1.0);
}

// Invert the normal matrix after scaling it to unit diagonal, so a minimum
// Cholesky pivot measures parameter collinearity directly. Sub-bin spike
// fits make (A, sigma) perfectly degenerate: their covariance is meaningless
// and must be reported as unavailable rather than astronomically large.
bool conditioned_covariance(std::vector<double>& a, std::size_t p) {
    constexpr double kMinPivotSq = 1e-10; // 1 - correlation^2 below this is singular
    std::vector<double> scale(p);
    for (std::size_t i = 0; i < p; ++i) {
        if (!(a[i * p + i] > 0)) return false;
        scale[i] = std::sqrt(a[i * p + i]);
    }
    std::vector<double> n(p * p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) n[i * p + j] = a[i * p + j] / (scale[i] * scale[j]);

    // Cholesky with pivot inspection
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = n[i * p + j];
            for (std::size_t k = 0; k < j; ++k) s -= n[i * p + k] * n[j * p + k];
            if (i == j) {
                if (!(s > kMinPivotSq)) return false;
                n[i * p + i] = std::sqrt(s);
            } else {
                n[i * p + j] = s / n[j * p + j];
            }
        }
    }
    // invert via the factor: solve for unit vectors
    std::vector<double> inv(p * p);
    for (std::size_t col = 0; col < p; ++col) {
        std::vector<double> e(p, 0.0);
        e[col] = 1.0;
        for (std::size_t i = 0; i < p; ++i) {
            double s = e[i];
            for (std::size_t k = 0; k < i; ++k) s -= n[i * p + k] * e[k];
            e[i] = s / n[i * p + i];
        }
        for (std::size_t i = p; i-- > 0;) {
            double s = e[i];
            for (std::size_t k = i + 1; k < p; ++k) s -= n[k * p + i] * e[k];
            e[i] = s / n[i * p + i];
        }
        for (std::size_t i = 0; i < p; ++i) inv[i * p + col] = e[i];
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) a[i * p + j] = inv[i * p + j] / (scale[i] * scale[j]);
    return true;
}

} // namespace

bool accept_scan(const Scan& scan, const AcceptanceRule& rule) {
    rule.validate();
    return scan.max_bin_count() >= rule.min_counts_per_bin;
}

FitResult fit_voigt_scan(const Scan& scan, const FitConfig& config) {
    FitResult out;
    const bool tied = config.mode == FitMode::tied;

    if (scan.total_counts() == 0) {
        out.failure = FitFailure::empty_scan;
        return out;
    }
    if (!tied && scan.nonzero_bins() < 4) {
        out.failure = FitFailure::too_few_bins;
        return out;
    }

    const Observation obs = make_observation(scan, config);
    Seed seed = initial_guess(scan, obs, config, tied);

    LevMarOptions opt;
    opt.cost_tol = config.cost_tol;
    opt.max_iterations = config.max_iterations;

    const std::size_t m = obs.x.size();
    auto eval = [&](const std::vector<double>& q, std::vector<double>& r,
                    std::vector<double>& jac) {
        eval_voigt(obs, tied, config.fit_offset, q, r, jac);
    };
    LevMarResult lm = levmar_fit(eval, std::move(seed.q), seed.lo, seed.hi, m, opt);

    out.params.amplitude = lm.x[0];
    out.params.center = lm.x[1];
    out.params.gaussian_sigma = lm.x[2];
    out.params.lorentz_gamma = tied ? lm.x[2] : lm.x[3];
    out.params.offset = config.fit_offset ? lm.x.back() : 0.0;
    out.rss = lm.cost;
    out.iterations = lm.iterations;
    out.converged = lm.converged;
    out.accepted = lm.converged;
    out.failure = lm.converged ? FitFailure::none : FitFailure::no_convergence;

    out.fwhm = tied ? kTiedFwhmPerSigma * out.params.gaussian_sigma
                    : voigt_fwhm(out.params.gaussian_sigma, out.params.lorentz_gamma);

    // Parameter covariance over the free (non-pegged) parameters; a width
    // pinned to its bound is unidentified at this resolution and reports a
    // zero standard error, which downstream weighting must pre-filter.
    const std::size_t p = lm.x.size();
    std::vector<std::size_t> free_ix;
    for (std::size_t i = 0; i < p; ++i)
        if (!lm.pegged[i]) free_ix.push_back(i);
    const std::size_t pf = free_ix.size();

    std::vector<double> cov(pf * pf);
    for (std::size_t a = 0; a < pf; ++a)
        for (std::size_t b = 0; b < pf; ++b) cov[a * pf + b] = lm.jtj[free_ix[a] * p + free_ix[b]];

    if (m > pf && pf > 0 && conditioned_covariance(cov, pf)) {
        const double s2 = lm.cost / static_cast<double>(m - pf);
        std::vector<double> se_full(p, 0.0);
        std::vector<std::size_t> pos(p, p); // param index -> free slot
        for (std::size_t a = 0; a < pf; ++a) {
            pos[free_ix[a]] = a;
            const double v = cov[a * pf + a] * s2;
            se_full[free_ix[a]] = v > 0 ? std::sqrt(v) : 0.0;
        }
        out.se_amplitude = se_full[0];
        out.se_center = se_full[1];
        out.se_sigma = se_full[2];
        out.se_offset = config.fit_offset ? se_full[p - 1] : 0.0;
        if (tied) {
            out.se_gamma = out.se_sigma;
            out.stderr_fwhm = kTiedFwhmPerSigma * out.se_sigma;
        } else {
            out.se_gamma = se_full[3];
            double ds, dg;
            fwhm_gradient(out.params.gaussian_sigma, out.params.lorentz_gamma, ds, dg);
            double var = 0.0;
            if (pos[2] < p) var += ds * ds * cov[pos[2] * pf + pos[2]] * s2;
            if (pos[3] < p) var += dg * dg * cov[pos[3] * pf + pos[3]] * s2;
            if (pos[2] < p && pos[3] < p) var += 2.0 * ds * dg * cov[pos[2] * pf + pos[3]] * s2;
            out.stderr_fwhm = var > 0 ? std::sqrt(var) : 0.0;
        }
    }

    // A width fitted below one bin is unresolved: the likelihood is flat in
    // the (amplitude, width) valley and the formal covariance there carries
    // no information. Claim no width error; weighted consumers pre-filter.
    if (out.fwhm < scan.window.bin_width) out.stderr_fwhm = 0.0;
    return out;
}

BatchFitSummary fit_batch(const std::vector<Scan>& scans, const AcceptanceRule& rule,
                          const FitConfig& config) {
    BatchFitSummary summary;
    summary.n_scans = scans.size();
    summary.results.resize(scans.size());
    for (std::size_t i = 0; i < scans.size(); ++i) {
        if (!accept_scan(scans[i], rule)) {
            summary.results[i].failure = FitFailure::rejected_by_filter;
            ++summary.n_rejected;
            continue;
        }
        FitResult r = fit_voigt_scan(scans[i], config);
        r.accepted = r.converged;
        if (r.converged)
            ++summary.n_ok;
        else
            ++summary.n_failed;
        summary.results[i] = std::move(r);
    }
    return summary;
}

} // namespace plemc
