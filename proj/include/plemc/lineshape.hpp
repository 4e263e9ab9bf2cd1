#pragma once

#include <complex>
#include <stdexcept>

#include "plemc/window.hpp"

namespace plemc {

/// Voigt line parameters. `amplitude` is the profile area (counts*MHz), so the
/// value at the peak is amplitude * Re[w(i*gamma/(sigma*sqrt2))] / (sigma*sqrt(2*pi)).
/// `offset` is a constant per-bin baseline; measured scans have a noise floor
/// even though the pure profile does not.
struct VoigtParams {
    double amplitude = 1.0;     // counts * MHz
    double center = 0.0;        // MHz
    double gaussian_sigma = 1.0; // MHz
    double lorentz_gamma = 1.0;  // MHz, half width
    double offset = 0.0;        // counts per bin

    void validate() const {
        if (!(amplitude >= 0)) throw std::invalid_argument("voigt: amplitude must be >= 0");
        if (!(gaussian_sigma >= 0)) throw std::invalid_argument("voigt: sigma must be >= 0");
        if (!(lorentz_gamma >= 0)) throw std::invalid_argument("voigt: gamma must be >= 0");
        if (gaussian_sigma == 0 && lorentz_gamma == 0)
            throw std::invalid_argument("voigt: sigma and gamma cannot both be 0");
    }
};

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
/// Relative accuracy is better than 1e-6 for Im(z) >= 0 (the half plane the
/// Voigt evaluation uses); the lower half plane goes through the reflection
/// w(z) = 2 exp(-z^2) - w(-z) and can overflow for large |Im z|.
std::complex<double> faddeeva(std::complex<double> z);

/// Derivative w'(z) = -2 z w(z) + 2i/sqrt(pi), given a precomputed w(z).
std::complex<double> faddeeva_derivative(std::complex<double> z, std::complex<double> w_of_z);

/// Branch-free rational approximation of w(z) for Im(z) >= 0 (Weideman's
/// N = 24 expansion, relative error below 1e-9). Bulk-evaluation variant for
/// the fit inner loops, where the straight-line form runs several times
/// faster than the region-switching reference above.
std::complex<double> faddeeva_fast(std::complex<double> z);

/// Voigt profile value at x. Requires sigma > 0; the sigma = 0 limit is a pure
/// Lorentzian and is rejected so callers reach for lorentzian_value instead.
double voigt_value(double x_mhz, const VoigtParams& p);

/// Gaussian limit (gamma ignored): area-normalized, plus offset.
double gaussian_value(double x_mhz, const VoigtParams& p);

/// Lorentzian limit (sigma ignored): area-normalized, plus offset.
double lorentzian_value(double x_mhz, const VoigtParams& p);

inline double gaussian_fwhm(double sigma_mhz) { return 2.3548200450309493 * sigma_mhz; }
inline double lorentzian_fwhm(double gamma_mhz) { return 2.0 * gamma_mhz; }

/// Voigt full width at half maximum. Seeded with the Olivero-Longbothum
/// combination 0.5346 f_L + sqrt(0.2166 f_L^2 + f_G^2) (3.6013 sigma in the
/// tied gamma = sigma convention) and polished by Newton iteration on the
/// half-maximum equation; the bare combination can miss by up to 0.024%.
double voigt_fwhm(double sigma_mhz, double gamma_mhz);

/// Inverse CDF of a Cauchy law with half-width gamma, centered on the window
/// midpoint and renormalized to the window. u in [0, 1] maps onto [lo, hi].
double truncated_cauchy_quantile(double u, double gamma_mhz, const FrequencyWindow& window);

/// Lifetime-limited linewidth: tau [ns] -> 1/(2 pi tau) [MHz].
double lifetime_to_linewidth(double tau_ns);

} // namespace plemc
