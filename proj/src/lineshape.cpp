#include "plemc/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace plemc {

namespace {

constexpr double kTwoOverSqrtPi = 1.1283791670955126; // 2/sqrt(pi)
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2Pi = 2.5066282746310002;

// Faddeeva function for the first quadrant, after Poppe & Wijers (the
// classic WOFZ routine): Maclaurin series near the origin, a truncated
// Taylor form at intermediate radius, and the Laplace continued fraction
// outside. Accuracy is ~1e-14 over the upper half plane.
std::complex<double> wofz_first_quadrant(double x, double y) {
    const double xq = x / 6.3;
    const double yq = y / 4.4;
    double qrho = xq * xq + yq * yq;

    const double xquad = x * x - y * y;
    const double yquad = 2.0 * x * y;

    if (qrho < 0.085264) {
        // Power series for erfc(-iz); n terms chosen from the scaled radius.
        qrho = (1.0 - 0.85 * yq) * std::sqrt(qrho);
        const int n = static_cast<int>(std::lround(6.0 + 72.0 * qrho));
        int j = 2 * n + 1;
        double xsum = 1.0 / j;
        double ysum = 0.0;
        for (int i = n; i >= 1; --i) {
            j -= 2;
            const double xaux = (xsum * xquad - ysum * yquad) / i;
            ysum = (xsum * yquad + ysum * xquad) / i;
            xsum = xaux + 1.0 / j;
        }
        const double u1 = -kTwoOverSqrtPi * (xsum * y + ysum * x) + 1.0;
        const double v1 = kTwoOverSqrtPi * (xsum * x - ysum * y);
        const double daux = std::exp(-xquad);
        const double u2 = daux * std::cos(yquad);
        const double v2 = -daux * std::sin(yquad);
        return {u1 * u2 - v1 * v2, u1 * v2 + v1 * u2};
    }

    double h = 0.0;
    double h2 = 0.0;
    int kapn = 0;
    int nu = 0;
    if (qrho > 1.0) {
        // Laplace continued fraction; few convergents needed far out.
        const double rho = std::sqrt(qrho);
        nu = static_cast<int>(3.0 + 1442.0 / (26.0 * rho + 77.0));
    } else {
        // Intermediate region: CF seeded Taylor expansion.
        qrho = (1.0 - yq) * std::sqrt(1.0 - qrho);
        h = 1.88 * qrho;
        h2 = 2.0 * h;
        kapn = static_cast<int>(std::lround(7.0 + 34.0 * qrho));
        nu = static_cast<int>(std::lround(16.0 + 26.0 * qrho));
    }

    const bool use_taylor = h > 0.0;
    double qlambda = use_taylor ? std::pow(h2, kapn) : 0.0;

    double rx = 0.0, ry = 0.0, sx = 0.0, sy = 0.0;
    for (int n = nu; n >= 0; --n) {
        const double np1 = n + 1;
        const double tx = y + h + np1 * rx;
        const double ty = x - np1 * ry;
        const double c = 0.5 / (tx * tx + ty * ty);
        rx = c * tx;
        ry = c * ty;
        if (use_taylor && n <= kapn) {
            const double t = qlambda + sx;
            sx = rx * t - ry * sy;
            sy = ry * t + rx * sy;
            qlambda /= h2;
        }
    }

    double u, v;
    if (use_taylor) {
        u = kTwoOverSqrtPi * sx;
        v = kTwoOverSqrtPi * sy;
    } else {
        u = kTwoOverSqrtPi * rx;
        v = kTwoOverSqrtPi * ry;
    }
    if (y == 0.0) u = std::exp(-x * x);
    return {u, v};
}

} // namespace

std::complex<double> faddeeva(std::complex<double> z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::domain_error("faddeeva: non-finite argument");

    const double x = z.real();
    const double y = z.imag();

    if (y >= 0.0) {
        std::complex<double> w = wofz_first_quadrant(std::fabs(x), y);
        if (x < 0.0) w = std::conj(w); // w(-conj z) = conj w(z)
        return w;
    }
    // Lower half plane via w(z) = 2 exp(-z^2) - w(-z); may overflow by design.
    const std::complex<double> wm = faddeeva(-z);
    return 2.0 * std::exp(-z * z) - wm;
}

std::complex<double> faddeeva_fast(std::complex<double> z) {
    // Weideman (1994) rational series on the upper half plane, N = 24.
    // Coefficients precomputed from the FFT construction and frozen.
    static constexpr double kL = 4.119534287814235;
    static constexpr double kA[24] = {
        -1.5137469056014652e-10, 4.904820416137823e-09,  1.3310453109352295e-09,
        -3.0082823610602605e-08, -1.9122258957660688e-08, 1.87383434459447e-07,
        2.5682641329013596e-07,  -1.085647579377311e-06, -3.038893184278043e-06,
        4.1394617242916025e-06,  3.0471066082970273e-05, 2.4331415462208058e-05,
        -0.00020748431511423976, -0.0007816642995623942, -0.000493642690128576,
        0.006215006362949158,    0.03372336685531593,    0.10838723484566715,
        0.26549639598807695,     0.5361139535729114,     0.9257087138588673,
        1.394819673379119,       1.85628649920554,       2.1978589365315417,
    };
    // Spelled out in real arithmetic: the loop is straight-line code with a
    // single division overall, which matters in the fit inner loops.
    const double zdr = kL + z.imag(); // L - iz
    const double zdi = -z.real();
    const double d = zdr * zdr + zdi * zdi;
    const double inv = 1.0 / d;
    const double zrr = 2.0 * kL * zdr * inv - 1.0; // (L + iz)/(L - iz)
    const double zri = -2.0 * kL * zdi * inv;
    double pr = kA[0], pi = 0.0;
    for (int k = 1; k < 24; ++k) {
        const double t = pr * zrr - pi * zri + kA[k];
        pi = pr * zri + pi * zrr;
        pr = t;
    }
    constexpr double kInvSqrtPi = 0.5641895835477563;
    const double qr = 2.0 * pr + kInvSqrtPi * zdr; // 2p + zd/sqrt(pi)
    const double qi = 2.0 * pi + kInvSqrtPi * zdi;
    const double s2r = zdr * zdr - zdi * zdi; // zd^2
    const double s2i = 2.0 * zdr * zdi;
    const double inv2 = inv * inv; // 1/|zd^2|^2 = 1/d^2
    return {(qr * s2r + qi * s2i) * inv2, (qi * s2r - qr * s2i) * inv2};
}

std::complex<double> faddeeva_derivative(std::complex<double> z, std::complex<double> w_of_z) {
    // The direct form -2 z w + 2i/sqrt(pi) cancels catastrophically for large
    // |z| (both terms ~2/sqrt(pi), result ~1/z^2); switch to the asymptotic
    // series w'(z) = -(i/sqrt(pi)) z^-2 (1 + 3/2 z^-2 + 15/4 z^-4 + ...).
    const double zmag2 = std::norm(z);
    if (zmag2 > 1e4) {
        const std::complex<double> iz2 = 1.0 / (z * z);
        return std::complex<double>(0.0, -0.5641895835477563) * iz2 *
               (1.0 + iz2 * (1.5 + 3.75 * iz2));
    }
    return -2.0 * z * w_of_z + std::complex<double>(0.0, kTwoOverSqrtPi);
}

double voigt_value(double x_mhz, const VoigtParams& p) {
    p.validate();
    if (p.gaussian_sigma == 0.0)
        throw std::domain_error(
            "voigt_value: sigma = 0 degenerates to a Lorentzian; use lorentzian_value");
    const std::complex<double> z{(x_mhz - p.center) / (p.gaussian_sigma * kSqrt2),
                                 p.lorentz_gamma / (p.gaussian_sigma * kSqrt2)};
    return p.amplitude * faddeeva(z).real() / (p.gaussian_sigma * kSqrt2Pi) + p.offset;
}

double gaussian_value(double x_mhz, const VoigtParams& p) {
    if (!(p.gaussian_sigma > 0)) throw std::domain_error("gaussian_value: sigma must be > 0");
    const double t = (x_mhz - p.center) / p.gaussian_sigma;
    return p.amplitude * std::exp(-0.5 * t * t) / (p.gaussian_sigma * kSqrt2Pi) + p.offset;
}

double lorentzian_value(double x_mhz, const VoigtParams& p) {
    if (!(p.lorentz_gamma > 0)) throw std::domain_error("lorentzian_value: gamma must be > 0");
    const double d = x_mhz - p.center;
    return p.amplitude * p.lorentz_gamma /
               (std::numbers::pi * (d * d + p.lorentz_gamma * p.lorentz_gamma)) +
           p.offset;
}

double voigt_fwhm(double sigma_mhz, double gamma_mhz) {
    if (!(sigma_mhz >= 0) || !(gamma_mhz >= 0))
        throw std::domain_error("voigt_fwhm: widths must be >= 0");
    if (sigma_mhz == 0.0 && gamma_mhz == 0.0)
        throw std::domain_error("voigt_fwhm: sigma and gamma cannot both be 0");
    if (sigma_mhz == 0.0) return lorentzian_fwhm(gamma_mhz);
    if (gamma_mhz == 0.0) return gaussian_fwhm(sigma_mhz);

    const double fl = lorentzian_fwhm(gamma_mhz);
    const double fg = gaussian_fwhm(sigma_mhz);
    double half = 0.5 * (0.5346 * fl + std::sqrt(0.2166 * fl * fl + fg * fg));

    // Newton polish of V(x) = V(0)/2; the profile is normalized away since
    // only the ratio matters. Three steps take the seed to machine precision.
    const double s2 = sigma_mhz * kSqrt2;
    const double a = gamma_mhz / s2;
    const double peak = faddeeva({0.0, a}).real();
    for (int i = 0; i < 3; ++i) {
        const std::complex<double> z{half / s2, a};
        const std::complex<double> w = faddeeva(z);
        const double f = w.real() - 0.5 * peak;
        const double df = faddeeva_derivative(z, w).real() / s2;
        if (df == 0.0) break;
        const double step = f / df;
        half -= step;
        if (std::fabs(step) < 1e-14 * half) break;
    }
    return 2.0 * half;
}

double truncated_cauchy_quantile(double u, double gamma_mhz, const FrequencyWindow& window) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("truncated_cauchy_quantile: u must be in [0, 1]");
    if (!(gamma_mhz > 0)) throw std::domain_error("truncated_cauchy_quantile: gamma must be > 0");
    window.validate();

    const double mid = window.midpoint();
    const double a = std::atan((window.lo - mid) / gamma_mhz);
    const double b = std::atan((window.hi - mid) / gamma_mhz);
    if (u == 0.0) return window.lo;
    if (u == 1.0) return window.hi;
    const double f = mid + gamma_mhz * std::tan(a + u * (b - a));
    return std::clamp(f, window.lo, window.hi);
}

double lifetime_to_linewidth(double tau_ns) {
    if (!(tau_ns > 0)) throw std::domain_error("lifetime_to_linewidth: tau must be > 0");
    return 1000.0 / (2.0 * std::numbers::pi * tau_ns); // 1/ns = GHz -> MHz
}

} // namespace plemc
