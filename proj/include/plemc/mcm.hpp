#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "plemc/estimators.hpp"
#include "plemc/fitting.hpp"
#include "plemc/histogram.hpp"
#include "plemc/synth.hpp"

namespace plemc {

/// Rectangular (gamma, nbar) search grid; gamma is the FWHM of the trial
/// emission line in MHz, nbar the trial mean photon number per scan.
struct GridSpec {
    double gamma_min = 10.0, gamma_max = 40.0, gamma_step = 1.0;
    double nbar_min = 10.0, nbar_max = 60.0, nbar_step = 2.0;

    std::vector<double> gammas() const { return axis(gamma_min, gamma_max, gamma_step); }
    std::vector<double> nbars() const { return axis(nbar_min, nbar_max, nbar_step); }
    std::size_t cell_count() const { return gammas().size() * nbars().size(); }

    void validate() const {
        if (!(gamma_step > 0) || !(nbar_step > 0))
            throw std::invalid_argument("grid: steps must be positive");
        if (!(gamma_max >= gamma_min) || !(nbar_max >= nbar_min))
            throw std::invalid_argument("grid: max must be >= min");
        if (!(gamma_min > 0) || !(nbar_min >= 0))
            throw std::invalid_argument("grid: gamma must be positive");
    }

private:
    static std::vector<double> axis(double lo, double hi, double step) {
        std::vector<double> v;
        for (int i = 0;; ++i) {
            const double x = lo + i * step;
            if (x > hi + 0.5 * step) break;
            v.push_back(x);
            if (v.size() > 100000) throw std::invalid_argument("grid: axis too large");
        }
        return v;
    }
};

/// Everything held fixed during the grid search: the photon-number spread,
/// the background mean, and the full synth + fit + binning pipeline config.
struct McmModelConfig {
    double photon_sigma = 6.0;
    double noise_mean = 2.0;
    FrequencyWindow window{};
    AcceptanceRule rule{};
    FitConfig fit{};
    BinningScheme binning{};
    std::size_t replica_cap = 300000; // hard ceiling on simulated scans per cell
};

/// Raw simulation outcome for one grid cell: occurrences of fitted
/// linewidths over the binning (with_overflow layout), before any scaling.
struct CellExpected {
    std::vector<double> raw_hist;
    std::size_t m_replicas = 0;
    std::size_t n_accepted = 0;
    bool masked = false;
};

/// Precomputed expected-occurrence table over a grid. It depends only on the
/// grid, the fixed model and the seed, never on observed data, so one table
/// serves any number of observed batches and repetitions.
struct ExpectedTable {
    GridSpec spec{};
    McmModelConfig model{};
    std::uint64_t seed = 0;
    std::size_t scans_hint = 0; // k used to choose per-cell replica counts
    std::vector<CellExpected> cells; // row-major: gamma index * n_nbar + nbar index
};

/// Simulate one cell: synth_batch -> acceptance filter -> Voigt fits ->
/// linewidth histogram. With m_replicas = 0 the replica count defaults to
/// max(k, 10 k / acceptance-rate), the rate estimated from the first k
/// replicas. Throws DegenerateModelError when no scan survives the filter.
CellExpected simulate_cell(double gamma_fwhm, double nbar, const McmModelConfig& model,
                           std::size_t k_observed, std::size_t m_replicas, std::uint64_t cell_seed);

/// Spec-level operation: expected occurrences per bin scaled to k observed
/// scans (raw counts times k/M).
std::vector<double> expected_histogram(double gamma_fwhm, double nbar,
                                       const McmModelConfig& model, std::size_t k_observed,
                                       std::size_t m_replicas, std::uint64_t cell_seed);

/// Build the full table; cell seeds derive from (seed, cell index), so the
/// result is independent of evaluation order. Degenerate cells are masked.
ExpectedTable build_expected_table(const GridSpec& spec, const McmModelConfig& model,
                                   std::size_t k_observed, std::uint64_t seed,
                                   std::size_t m_replicas = 0, unsigned n_threads = 0);

/// S = sum (O_i - E_i)^2 / E_i. Lengths must match and every E_i must be
/// positive; zero expectations are a binning bug at this level.
double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected);

struct MCMGrid {
    std::vector<double> gammas; // MHz, FWHM convention
    std::vector<double> nbars;
    std::vector<double> s_values; // row-major, +inf where the model is impossible
    std::vector<bool> masked;
    std::vector<double> scale; // k/M per cell
    std::size_t k_observed = 0;

    double s_at(std::size_t ig, std::size_t in) const { return s_values[ig * nbars.size() + in]; }
};

/// Evaluate S over a precomputed table for one observed histogram (raw
/// binning, with source_scans set). Merging is recomputed per cell since the
/// expected histogram differs cell to cell. Fails when more than 10% of the
/// cells are masked.
MCMGrid grid_search(const LinewidthHistogram& observed, const ExpectedTable& table);

/// Convenience: build the table, then search.
MCMGrid grid_search(const LinewidthHistogram& observed, const GridSpec& spec,
                    const McmModelConfig& model, std::uint64_t seed, std::size_t m_replicas = 0,
                    unsigned n_threads = 0);

inline constexpr double kDelta99TwoParam = 9.21; // chi2 99% quantile, 2 parameters
inline constexpr double kDelta99OneParam = 6.63; // chi2 99% quantile, 1 parameter

struct MCMResult {
    double best_gamma = 0.0; // MHz FWHM
    double best_nbar = 0.0;
    double s_min = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> region; // (gamma idx, nbar idx)
    double gamma_ci_lo = 0.0, gamma_ci_hi = 0.0;
    double nbar_ci_lo = 0.0, nbar_ci_hi = 0.0;
    bool boundary_hit = false;
};

/// All cells with S <= S_min + delta; interval bounds are the extreme grid
/// values inside the region. boundary_hit warns that the region touches a
/// grid edge (the true region may extend beyond it).
MCMResult confidence_region(const MCMGrid& grid, double delta = kDelta99TwoParam);

} // namespace plemc
