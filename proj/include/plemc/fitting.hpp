#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "plemc/lineshape.hpp"
#include "plemc/synth.hpp"

namespace plemc {

/// tied: gamma = sigma with FWHM = 3.6013 sigma (the lmfit Voigt default the
/// analysis convention follows); free: sigma and gamma independent, FWHM from
/// the full Voigt width.
enum class FitMode { tied, free_widths };

struct FitConfig {
    FitMode mode = FitMode::tied;
    bool poisson_weighted = false; // default off: plain least squares
    bool fit_offset = true; // free constant baseline; disable for bare-profile fits
    double cost_tol = 1e-8;
    int max_iterations = 200;
    double sigma_floor = 1e-3; // MHz, lower bound on the Gaussian width
    // Half-range of the center bound around the window midpoint; inf = the
    // center may sit anywhere in the window. Synthetic/recentered scans pin
    // the resonance near zero, so a tight bound is a meaningful prior there.
    double center_halfspan = std::numeric_limits<double>::infinity();
};

struct AcceptanceRule {
    std::uint32_t min_counts_per_bin = 3;

    void validate() const {
        if (min_counts_per_bin < 1)
            throw std::invalid_argument("acceptance rule: min_counts_per_bin must be >= 1");
    }
};

enum class FitFailure {
    none,
    rejected_by_filter,
    empty_scan,
    too_few_bins, // free mode needs >= 4 nonzero bins
    no_convergence,
};

struct FitResult {
    VoigtParams params{};
    double fwhm = 0.0;        // MHz
    double stderr_fwhm = 0.0; // MHz
    // standard errors aligned with VoigtParams fields
    double se_amplitude = 0.0, se_center = 0.0, se_sigma = 0.0, se_gamma = 0.0, se_offset = 0.0;
    double rss = 0.0;
    int iterations = 0;
    bool converged = false;
    bool accepted = false;
    FitFailure failure = FitFailure::none;
};

struct BatchFitSummary {
    std::vector<FitResult> results;
    std::size_t n_scans = 0;
    std::size_t n_rejected = 0;  // failed the acceptance filter
    std::size_t n_failed = 0;    // accepted but did not converge
    std::size_t n_ok = 0;        // accepted and converged
};

/// True iff some bin holds at least the rule's minimum photon count.
bool accept_scan(const Scan& scan, const AcceptanceRule& rule);

/// Nonlinear least squares of a Voigt profile against bin centers/counts.
/// Non-convergence is reported in the result, never thrown. The acceptance
/// flag mirrors convergence; fit_batch overrides it with the filter outcome.
FitResult fit_voigt_scan(const Scan& scan, const FitConfig& config);

/// Filter + fit each scan, preserving order. Per-scan failures are data.
BatchFitSummary fit_batch(const std::vector<Scan>& scans, const AcceptanceRule& rule,
                          const FitConfig& config);

} // namespace plemc
