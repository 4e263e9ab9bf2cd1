#include "plemc/study.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "plemc/errors.hpp"
#include "plemc/rng.hpp"

namespace plemc {

namespace {

std::uint64_t rep_seed(std::uint64_t base, std::size_t cell, std::size_t rep) {
    return Rng::for_stream(Rng::for_stream(base, cell).next_u64(), rep).next_u64();
}

ScanModel cell_model(const SweepSpec& spec, double gamma, double nbar, std::uint64_t seed) {
    ScanModel m;
    m.true_fwhm = gamma;
    m.mean_photons = nbar;
    m.photon_sigma = spec.photon_sigma;
    m.noise_mean = spec.noise_mean;
    m.window = spec.window;
    m.seed = seed;
    return m;
}

LinewidthSampleSet run_pipeline(const SweepSpec& spec, double gamma, double nbar,
                                std::size_t k, std::uint64_t seed) {
    const auto batch = fit_batch(synth_batch(cell_model(spec, gamma, nbar, seed), k), spec.rule,
                                 spec.fit);
    return collect_samples(batch);
}

/// Point estimate for the classical estimators; throws when the sample set
/// cannot support the estimator (treated as a dropped repetition upstream).
double classical_estimate(EstimatorKind kind, const LinewidthSampleSet& set) {
    switch (kind) {
        case EstimatorKind::median:
            return median_value(set.fwhms);
        case EstimatorKind::ivw: {
            LinewidthSampleSet weighted;
            weighted.source_scans = set.source_scans;
            for (std::size_t i = 0; i < set.fwhms.size(); ++i) {
                if (set.stderrs[i] > 0) {
                    weighted.fwhms.push_back(set.fwhms[i]);
                    weighted.stderrs.push_back(set.stderrs[i]);
                }
            }
            return ivw_estimate(weighted).value;
        }
        case EstimatorKind::lognormal:
            return lognormal_median(set);
        case EstimatorKind::mcm:
            throw std::logic_error("classical_estimate: mcm handled separately");
    }
    throw std::logic_error("classical_estimate: unknown estimator");
}

struct RepOutcome {
    double estimate = 0.0;
    double ci_rel_width = 0.0;
    bool covered = false;
};

McmModelConfig mcm_model_of(const SweepSpec& spec) {
    McmModelConfig m;
    m.photon_sigma = spec.photon_sigma;
    m.noise_mean = spec.noise_mean;
    m.window = spec.window;
    m.rule = spec.rule;
    m.fit = spec.fit;
    m.binning = spec.binning;
    return m;
}

} // namespace

StudyReport bias_sweep(const SweepSpec& spec) {
    spec.validate();

    StudyReport report;
    report.repetitions = spec.repetitions;
    report.scans_per_rep = spec.scans_per_rep;
    report.estimator = spec.estimator;

    // One expected table serves every cell and repetition: it depends on the
    // trial grid, not on the truth point generating the observed batch.
    std::optional<ExpectedTable> table;
    if (spec.estimator == EstimatorKind::mcm)
        table = build_expected_table(spec.mcm_grid, mcm_model_of(spec), spec.scans_per_rep,
                                     Rng::for_stream(spec.base_seed, 0xE0).next_u64(),
                                     spec.mcm_replicas, spec.n_threads);

    std::size_t cell_index = 0;
    for (double gamma : spec.gammas) {
        for (double nbar : spec.nbars) {
            StudyCell cell;
            cell.gamma = gamma;
            cell.nbar = nbar;

            std::vector<double> estimates;
            double ci_width_sum = 0.0;
            std::size_t covered = 0;
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                const std::uint64_t seed = rep_seed(spec.base_seed, cell_index, rep);
                try {
                    const auto set =
                        run_pipeline(spec, gamma, nbar, spec.scans_per_rep, seed);
                    if (spec.estimator == EstimatorKind::mcm) {
                        const auto hist = build_linewidth_histogram(set, spec.binning);
                        const auto grid = grid_search(hist, *table);
                        const auto res = confidence_region(grid);
                        estimates.push_back(res.best_gamma);
                        ci_width_sum += (res.gamma_ci_hi - res.gamma_ci_lo) / gamma;
                        covered += (res.gamma_ci_lo <= gamma && gamma <= res.gamma_ci_hi);
                    } else {
                        estimates.push_back(classical_estimate(spec.estimator, set));
                    }
                } catch (const std::exception&) {
                    ++cell.reps_dropped; // estimator failures are data, not fatal
                }
            }

            cell.reps_used = estimates.size();
            if (!estimates.empty()) {
                double mean = 0.0;
                for (double e : estimates) mean += e;
                mean /= static_cast<double>(estimates.size());
                cell.mean_estimate = mean;
                cell.bias_abs = std::fabs(mean - gamma);
                cell.bias_rel = cell.bias_abs / gamma;
                if (estimates.size() > 1) {
                    double ss = 0.0;
                    for (double e : estimates) ss += (e - mean) * (e - mean);
                    cell.std_dev = std::sqrt(ss / static_cast<double>(estimates.size() - 1));
                } else {
                    cell.degenerate_std = true;
                }
                if (spec.estimator == EstimatorKind::mcm) {
                    cell.mean_ci_rel_width = ci_width_sum / static_cast<double>(estimates.size());
                    cell.coverage =
                        static_cast<double>(covered) / static_cast<double>(estimates.size());
                }
            }
            cell.flagged = 5 * cell.reps_dropped > spec.repetitions; // > 20%
            report.cells.push_back(cell);
            ++cell_index;
        }
    }
    return report;
}

StabilityReport stability_curve(double gamma, const std::vector<double>& nbars,
                                const std::vector<std::size_t>& k_list, std::size_t repetitions,
                                const SweepSpec& pipeline) {
    if (nbars.empty() || k_list.empty())
        throw std::invalid_argument("stability_curve: empty axes");
    if (!std::is_sorted(k_list.begin(), k_list.end()))
        throw std::invalid_argument("stability_curve: k list must be increasing");
    if (repetitions < 1) throw std::invalid_argument("stability_curve: repetitions must be >= 1");

    const std::size_t k_max = k_list.back();

    StabilityReport report;
    report.gamma = gamma;
    report.repetitions = repetitions;

    for (std::size_t ni = 0; ni < nbars.size(); ++ni) {
        // medians[rep][ki]: median after the first k scans of one growing batch
        std::vector<std::vector<double>> medians(repetitions,
                                                 std::vector<double>(k_list.size(), 0.0));
        for (std::size_t rep = 0; rep < repetitions; ++rep) {
            const std::uint64_t seed = rep_seed(pipeline.base_seed, 0x5AB0 + ni, rep);
            const auto batch = fit_batch(
                synth_batch(cell_model(pipeline, gamma, nbars[ni], seed), k_max),
                pipeline.rule, pipeline.fit);
            std::vector<double> fwhms;
            std::size_t scan_idx = 0, ki = 0;
            for (const auto& r : batch.results) {
                if (r.accepted && r.converged) fwhms.push_back(r.fwhm);
                ++scan_idx;
                while (ki < k_list.size() && scan_idx == k_list[ki]) {
                    medians[rep][ki] = fwhms.empty() ? 0.0 : median_value(fwhms);
                    ++ki;
                }
            }
        }
        for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
            StabilityPoint pt;
            pt.nbar = nbars[ni];
            pt.k = k_list[ki];
            std::vector<double> vals;
            for (std::size_t rep = 0; rep < repetitions; ++rep)
                if (medians[rep][ki] > 0) vals.push_back(medians[rep][ki]);
            if (!vals.empty()) {
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= static_cast<double>(vals.size());
                pt.mean = mean;
                if (vals.size() > 1) {
                    double ss = 0.0;
                    for (double v : vals) ss += (v - mean) * (v - mean);
                    pt.std_abs = std::sqrt(ss / static_cast<double>(vals.size() - 1));
                }
                pt.std_rel = pt.std_abs / gamma;
            }
            report.points.push_back(pt);
        }
    }
    return report;
}

ThresholdResult consistency_threshold(double gamma, double precision, double confidence,
                                      const std::vector<double>& nbar_grid,
                                      const SweepSpec& pipeline) {
    if (nbar_grid.size() < 2)
        throw std::invalid_argument("consistency_threshold: need a search grid");
    if (!std::is_sorted(nbar_grid.begin(), nbar_grid.end()))
        throw std::invalid_argument("consistency_threshold: nbar grid must be increasing");

    ThresholdResult result;
    result.gamma = gamma;
    result.precision = precision;
    result.confidence = confidence;

    const std::size_t R = pipeline.repetitions;
    const auto needed = static_cast<std::size_t>(std::ceil(confidence * static_cast<double>(R)));

    std::vector<std::optional<bool>> passed(nbar_grid.size());
    auto evaluate = [&](std::size_t idx) {
        if (passed[idx]) return *passed[idx];
        std::size_t ok = 0;
        for (std::size_t rep = 0; rep < R; ++rep) {
            const std::uint64_t seed = rep_seed(pipeline.base_seed, 0x7E50 + idx, rep);
            try {
                const auto set = run_pipeline(pipeline, gamma, nbar_grid[idx],
                                              pipeline.scans_per_rep, seed);
                const double med = median_value(set.fwhms);
                ok += std::fabs(med - gamma) / gamma <= precision;
            } catch (const std::exception&) {
                // failed repetitions count against consistency
            }
        }
        result.evaluated.push_back(
            {nbar_grid[idx], static_cast<double>(ok) / static_cast<double>(R), R});
        passed[idx] = ok >= needed;
        return *passed[idx];
    };

    // Monotone bisection over the grid: find the first passing index.
    std::size_t lo = 0, hi = nbar_grid.size() - 1;
    if (!evaluate(hi)) {
        result.nbar_star = nbar_grid.back();
        result.resolved = false;
        return result;
    }
    if (evaluate(lo)) {
        result.nbar_star = nbar_grid.front();
        result.resolved = true;
        return result;
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (evaluate(mid) ? hi : lo) = mid;
    }
    result.nbar_star = nbar_grid[hi];
    result.resolved = true;
    return result;
}

McmQualityReport mcm_quality_sweep(const SweepSpec& spec, const std::vector<std::size_t>& k_list,
                                   double ci_half_width) {
    spec.validate();
    if (k_list.empty()) throw std::invalid_argument("mcm_quality_sweep: empty k list");
    if (!std::is_sorted(k_list.begin(), k_list.end()))
        throw std::invalid_argument("mcm_quality_sweep: k list must be increasing");

    const auto model = mcm_model_of(spec);
    const ExpectedTable table = build_expected_table(
        spec.mcm_grid, model, spec.scans_per_rep,
        Rng::for_stream(spec.base_seed, 0xE0).next_u64(), spec.mcm_replicas, spec.n_threads);

    McmQualityReport report;
    report.k_list = k_list;
    report.repetitions = spec.repetitions;

    std::size_t cell_index = 0;
    for (double gamma : spec.gammas) {
        for (double nbar : spec.nbars) {
            McmQualityCell cell;
            cell.gamma = gamma;
            cell.nbar = nbar;

            // bias / CI width / coverage at the spec's k
            std::vector<double> estimates;
            double ci_sum = 0.0;
            std::size_t covered = 0;
            for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                const std::uint64_t seed = rep_seed(spec.base_seed, cell_index, rep);
                try {
                    const auto set =
                        run_pipeline(spec, gamma, nbar, spec.scans_per_rep, seed);
                    const auto hist = build_linewidth_histogram(set, spec.binning);
                    const auto res = confidence_region(grid_search(hist, table));
                    estimates.push_back(res.best_gamma);
                    ci_sum += (res.gamma_ci_hi - res.gamma_ci_lo) / gamma;
                    covered += (res.gamma_ci_lo <= gamma && gamma <= res.gamma_ci_hi);
                } catch (const std::exception&) {
                    ++cell.reps_dropped;
                }
            }
            cell.reps_used = estimates.size();
            if (!estimates.empty()) {
                double mean = 0.0;
                for (double e : estimates) mean += e;
                mean /= static_cast<double>(estimates.size());
                cell.bias_abs = std::fabs(mean - gamma);
                cell.bias_rel = cell.bias_abs / gamma;
                if (estimates.size() > 1) {
                    double ss = 0.0;
                    for (double e : estimates) ss += (e - mean) * (e - mean);
                    cell.std_dev = std::sqrt(ss / static_cast<double>(estimates.size() - 1));
                }
                cell.mean_ci_rel_width = ci_sum / static_cast<double>(estimates.size());
                cell.coverage =
                    static_cast<double>(covered) / static_cast<double>(estimates.size());
            }
            cell.flagged = 5 * cell.reps_dropped > spec.repetitions;

            // scans needed: smallest k whose mean relative CI half-width fits
            for (std::size_t ki = 0; ki < k_list.size(); ++ki) {
                const std::size_t k = k_list[ki];
                double half_sum = 0.0;
                std::size_t used = 0;
                for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
                    const std::uint64_t seed =
                        rep_seed(spec.base_seed, 0x9000 + cell_index, rep * k_list.size() + ki);
                    try {
                        const auto set = run_pipeline(spec, gamma, nbar, k, seed);
                        const auto hist = build_linewidth_histogram(set, spec.binning);
                        const auto res = confidence_region(grid_search(hist, table));
                        half_sum += 0.5 * (res.gamma_ci_hi - res.gamma_ci_lo) / gamma;
                        ++used;
                    } catch (const std::exception&) {
                    }
                }
                if (used > 0 && half_sum / static_cast<double>(used) <= ci_half_width) {
                    cell.scans_needed = k;
                    break;
                }
            }
            report.cells.push_back(cell);
            ++cell_index;
        }
    }
    return report;
}

} // namespace plemc
