#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "plemc/mcm.hpp"

namespace plemc {

enum class EstimatorKind { median, ivw, lognormal, mcm };

/// One estimator-quality sweep: repetitions of k-scan pipelines per
/// (gamma, nbar) cell, all sharing the synth + fit code path so estimator
/// differences are attributable to the estimator alone.
struct SweepSpec {
    std::vector<double> gammas; // true linewidths, MHz FWHM
    std::vector<double> nbars;  // mean photon numbers
    std::size_t scans_per_rep = 2000; // k
    std::size_t repetitions = 50;     // R
    EstimatorKind estimator = EstimatorKind::median;
    double photon_sigma = 6.0;
    double noise_mean = 2.0;
    std::uint64_t base_seed = 0;

    FrequencyWindow window{};
    AcceptanceRule rule{};
    FitConfig fit{};
    BinningScheme binning{};

    // mcm estimator settings; the expected table is built once per sweep.
    GridSpec mcm_grid{};
    std::size_t mcm_replicas = 0; // 0 = default max(k, 10k/acceptance)
    unsigned n_threads = 0;

    void validate() const {
        if (gammas.empty() || nbars.empty())
            throw std::invalid_argument("sweep: gamma and nbar axes must be non-empty");
        if (repetitions < 1) throw std::invalid_argument("sweep: repetitions must be >= 1");
        if (scans_per_rep < 1) throw std::invalid_argument("sweep: k must be >= 1");
    }
};

struct StudyCell {
    double gamma = 0.0;
    double nbar = 0.0;
    double mean_estimate = 0.0;
    double bias_abs = 0.0; // |mean(estimate) - gamma|
    double bias_rel = 0.0;
    double std_dev = 0.0;  // of the estimates over repetitions
    double mean_ci_rel_width = 0.0; // mcm only: mean (ci_hi - ci_lo)/gamma
    double coverage = 0.0;          // mcm only: fraction of reps with gamma in CI
    std::size_t reps_used = 0;
    std::size_t reps_dropped = 0;
    bool flagged = false;          // > 20% of repetitions dropped
    bool degenerate_std = false;   // R = 1, spread unmeasurable
};

struct StudyReport {
    std::vector<StudyCell> cells; // row-major: gamma-major, nbar-minor
    std::size_t repetitions = 0;
    std::size_t scans_per_rep = 0;
    EstimatorKind estimator = EstimatorKind::median;
};

/// Mean bias and spread of the selected estimator per (gamma, nbar) cell.
StudyReport bias_sweep(const SweepSpec& spec);

struct StabilityPoint {
    double nbar = 0.0;
    std::size_t k = 0;
    double mean = 0.0;
    double std_abs = 0.0; // MHz
    double std_rel = 0.0; // relative to the true linewidth
};

struct StabilityReport {
    double gamma = 0.0;
    std::size_t repetitions = 0;
    std::vector<StabilityPoint> points; // nbar-major, k-minor
};

/// Spread of the median prediction as scans accumulate: every repetition
/// grows one batch to max(k_list) and the median is read at each prefix k.
StabilityReport stability_curve(double gamma, const std::vector<double>& nbars,
                                const std::vector<std::size_t>& k_list, std::size_t repetitions,
                                const SweepSpec& pipeline);

struct ThresholdEvaluation {
    double nbar = 0.0;
    double success_fraction = 0.0;
    std::size_t repetitions = 0;
};

struct ThresholdResult {
    double gamma = 0.0;
    double nbar_star = 0.0;
    bool resolved = false;
    double precision = 0.02;
    double confidence = 0.99;
    std::vector<ThresholdEvaluation> evaluated;
};

/// Smallest swept nbar where at least `confidence` of the repetitions land
/// the median within `precision` of the true linewidth, by monotone
/// bisection over the nbar grid. Unresolved searches return the range edge,
/// flagged.
ThresholdResult consistency_threshold(double gamma, double precision, double confidence,
                                      const std::vector<double>& nbar_grid,
                                      const SweepSpec& pipeline);

struct McmQualityCell {
    double gamma = 0.0;
    double nbar = 0.0;
    double bias_abs = 0.0;
    double bias_rel = 0.0;
    double std_dev = 0.0;
    double mean_ci_rel_width = 0.0;
    double coverage = 0.0;
    std::size_t scans_needed = 0; // smallest k meeting the CI benchmark; 0 = unresolved
    std::size_t reps_used = 0;
    std::size_t reps_dropped = 0;
    bool flagged = false;
};

struct McmQualityReport {
    std::vector<McmQualityCell> cells;
    std::vector<std::size_t> k_list;
    std::size_t repetitions = 0;
};

/// MCM bias, CI width and scans-needed maps. scans-needed is the smallest k
/// in k_list whose mean relative CI half-width is at most `ci_half_width`.
McmQualityReport mcm_quality_sweep(const SweepSpec& spec, const std::vector<std::size_t>& k_list,
                                   double ci_half_width = 0.02);

} // namespace plemc
