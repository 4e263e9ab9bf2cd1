#include "plemc/mcm.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "plemc/errors.hpp"
#include "plemc/rng.hpp"

namespace plemc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t derive_cell_seed(std::uint64_t seed, std::size_t cell_index) {
    return Rng::for_stream(seed, cell_index).next_u64();
}

} // namespace

CellExpected simulate_cell(double gamma_fwhm, double nbar, const McmModelConfig& model,
                           std::size_t k_observed, std::size_t m_replicas,
                           std::uint64_t cell_seed) {
    if (k_observed == 0) throw std::invalid_argument("simulate_cell: k_observed must be > 0");
    model.binning.validate();

    ScanModel scan_model;
    scan_model.true_fwhm = gamma_fwhm;
    scan_model.mean_photons = nbar;
    scan_model.photon_sigma = model.photon_sigma;
    scan_model.noise_mean = model.noise_mean;
    scan_model.window = model.window;
    scan_model.seed = cell_seed;

    CellExpected cell;
    cell.raw_hist.assign(model.binning.bin_count() + 1, 0.0);

    auto run_replicas = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            const Scan scan = synth_scan_at(scan_model, i);
            if (!accept_scan(scan, model.rule)) continue;
            const FitResult fit = fit_voigt_scan(scan, model.fit);
            if (!fit.converged) continue;
            ++cell.n_accepted;
            const std::size_t b = model.binning.bin_index(fit.fwhm);
            ++cell.raw_hist[b < model.binning.bin_count() ? b : cell.raw_hist.size() - 1];
        }
    };

    if (m_replicas > 0) {
        cell.m_replicas = m_replicas;
        run_replicas(0, m_replicas);
    } else {
        // Estimate the acceptance rate from the first k replicas, then extend
        // to max(k, 10 k / rate) so Monte Carlo noise in the expectation sits
        // well below the shot noise of the observed histogram.
        run_replicas(0, k_observed);
        std::size_t m = k_observed;
        if (cell.n_accepted > 0) {
            const double rate =
                static_cast<double>(cell.n_accepted) / static_cast<double>(k_observed);
            const auto target = static_cast<std::size_t>(
                std::ceil(10.0 * static_cast<double>(k_observed) / rate));
            const std::size_t capped = std::min(std::max(target, k_observed), model.replica_cap);
            if (capped > m) {
                run_replicas(m, capped);
                m = capped;
            }
        }
        cell.m_replicas = m;
    }

    if (cell.n_accepted == 0)
        throw DegenerateModelError("simulate_cell: no simulated scan passed the filter");
    return cell;
}

std::vector<double> expected_histogram(double gamma_fwhm, double nbar,
                                       const McmModelConfig& model, std::size_t k_observed,
                                       std::size_t m_replicas, std::uint64_t cell_seed) {
    const CellExpected cell =
        simulate_cell(gamma_fwhm, nbar, model, k_observed, m_replicas, cell_seed);
    const double scale =
        static_cast<double>(k_observed) / static_cast<double>(cell.m_replicas);
    std::vector<double> out = cell.raw_hist;
    for (double& v : out) v *= scale;
    return out;
}

ExpectedTable build_expected_table(const GridSpec& spec, const McmModelConfig& model,
                                   std::size_t k_observed, std::uint64_t seed,
                                   std::size_t m_replicas, unsigned n_threads) {
    spec.validate();
    const auto gammas = spec.gammas();
    const auto nbars = spec.nbars();
    const std::size_t n_cells = gammas.size() * nbars.size();

    ExpectedTable table;
    table.spec = spec;
    table.model = model;
    table.seed = seed;
    table.scans_hint = k_observed;
    table.cells.resize(n_cells);

    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(
        std::min<std::size_t>(n_threads, n_cells > 0 ? n_cells : 1));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t c = next.fetch_add(1); c < n_cells; c = next.fetch_add(1)) {
            const double g = gammas[c / nbars.size()];
            const double n = nbars[c % nbars.size()];
            try {
                table.cells[c] =
                    simulate_cell(g, n, model, k_observed, m_replicas, derive_cell_seed(seed, c));
            } catch (const DegenerateModelError&) {
                table.cells[c].masked = true;
            }
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return table;
}

double chi2_statistic(const std::vector<double>& observed, const std::vector<double>& expected) {
    if (observed.size() != expected.size())
        throw std::invalid_argument("chi2_statistic: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0))
            throw std::invalid_argument("chi2_statistic: non-positive expected count (binning bug)");
        const double d = observed[i] - expected[i];
        s += d * d / expected[i];
    }
    return s;
}

MCMGrid grid_search(const LinewidthHistogram& observed, const ExpectedTable& table) {
    observed.scheme.validate();
    if (!(observed.scheme == table.model.binning))
        throw std::invalid_argument("grid_search: observed histogram uses a different binning");
    if (observed.source_scans == 0)
        throw std::invalid_argument("grid_search: observed histogram lacks its scan count");

    MCMGrid grid;
    grid.gammas = table.spec.gammas();
    grid.nbars = table.spec.nbars();
    grid.k_observed = observed.source_scans;
    const std::size_t n_cells = grid.gammas.size() * grid.nbars.size();
    if (table.cells.size() != n_cells)
        throw std::invalid_argument("grid_search: table does not match its grid spec");
    grid.s_values.assign(n_cells, kInf);
    grid.masked.assign(n_cells, false);
    grid.scale.assign(n_cells, 0.0);

    const std::vector<double> obs = observed.with_overflow();

    std::size_t n_masked = 0;
    for (std::size_t c = 0; c < n_cells; ++c) {
        const CellExpected& cell = table.cells[c];
        if (cell.masked) {
            grid.masked[c] = true;
            ++n_masked;
            continue;
        }
        const double scale = static_cast<double>(observed.source_scans) /
                             static_cast<double>(cell.m_replicas);
        grid.scale[c] = scale;
        std::vector<double> exp_scaled = cell.raw_hist;
        for (double& v : exp_scaled) v *= scale;

        const MergedHistograms merged = merge_bins(obs, exp_scaled, observed.scheme);

        // Bins empty on both sides carry no information; an observed count
        // where the model predicts zero makes the cell impossible (S = inf).
        double s = 0.0;
        bool impossible = false;
        for (std::size_t i = 0; i < merged.expected.size(); ++i) {
            if (merged.expected[i] <= 0.0) {
                if (merged.observed[i] > 0.0) {
                    impossible = true;
                    break;
                }
                continue;
            }
            const double d = merged.observed[i] - merged.expected[i];
            s += d * d / merged.expected[i];
        }
        grid.s_values[c] = impossible ? kInf : s;
    }

    if (10 * n_masked > n_cells)
        throw DegenerateModelError("grid_search: more than 10% of grid cells are degenerate");
    return grid;
}

MCMGrid grid_search(const LinewidthHistogram& observed, const GridSpec& spec,
                    const McmModelConfig& model, std::uint64_t seed, std::size_t m_replicas,
                    unsigned n_threads) {
    if (!(observed.scheme == model.binning))
        throw std::invalid_argument("grid_search: observed histogram uses a different binning");
    const ExpectedTable table =
        build_expected_table(spec, model, observed.source_scans, seed, m_replicas, n_threads);
    return grid_search(observed, table);
}

MCMResult confidence_region(const MCMGrid& grid, double delta) {
    if (!(delta >= 0)) throw std::invalid_argument("confidence_region: delta must be >= 0");
    const std::size_t ng = grid.gammas.size();
    const std::size_t nn = grid.nbars.size();

    MCMResult res;
    res.s_min = kInf;
    std::size_t best_ig = 0, best_in = 0;
    for (std::size_t ig = 0; ig < ng; ++ig) {
        for (std::size_t in = 0; in < nn; ++in) {
            const std::size_t c = ig * nn + in;
            if (grid.masked[c]) continue;
            if (grid.s_values[c] < res.s_min) {
                res.s_min = grid.s_values[c];
                best_ig = ig;
                best_in = in;
            }
        }
    }
    if (!std::isfinite(res.s_min))
        throw DegenerateModelError("confidence_region: no grid cell has a finite statistic");

    res.best_gamma = grid.gammas[best_ig];
    res.best_nbar = grid.nbars[best_in];

    double glo = kInf, ghi = -kInf, nlo = kInf, nhi = -kInf;
    for (std::size_t ig = 0; ig < ng; ++ig) {
        for (std::size_t in = 0; in < nn; ++in) {
            const std::size_t c = ig * nn + in;
            if (grid.masked[c] || !(grid.s_values[c] <= res.s_min + delta)) continue;
            res.region.emplace_back(ig, in);
            glo = std::min(glo, grid.gammas[ig]);
            ghi = std::max(ghi, grid.gammas[ig]);
            nlo = std::min(nlo, grid.nbars[in]);
            nhi = std::max(nhi, grid.nbars[in]);
            if (ig == 0 || ig == ng - 1 || in == 0 || in == nn - 1) res.boundary_hit = true;
        }
    }
    res.gamma_ci_lo = glo;
    res.gamma_ci_hi = ghi;
    res.nbar_ci_lo = nlo;
    res.nbar_ci_hi = nhi;
    return res;
}

} // namespace plemc
