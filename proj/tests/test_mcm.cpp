#include <doctest.h>

#include <cmath>

#include "plemc/errors.hpp"
#include "plemc/estimators.hpp"
#include "plemc/mcm.hpp"
#include "plemc/synth.hpp"

using namespace plemc;

namespace {

McmModelConfig default_model() {
    McmModelConfig m;
    m.photon_sigma = 6.0;
    m.noise_mean = 2.0;
    return m;
}

LinewidthHistogram observed_histogram(double fwhm, double nbar, std::size_t k,
                                      std::uint64_t seed, const McmModelConfig& model) {
    ScanModel sm;
    sm.true_fwhm = fwhm;
    sm.mean_photons = nbar;
    sm.photon_sigma = model.photon_sigma;
    sm.noise_mean = model.noise_mean;
    sm.window = model.window;
    sm.seed = seed;
    const auto batch = fit_batch(synth_batch(sm, k), model.rule, model.fit);
    return build_linewidth_histogram(collect_samples(batch), model.binning);
}

} // namespace

TEST_SUITE("mcm") {

TEST_CASE("chi2 statistic arithmetic") {
    CHECK(chi2_statistic({5.0, 7.0}, {5.0, 7.0}) == 0.0);
    CHECK(chi2_statistic({10.0}, {5.0}) == doctest::Approx(5.0));
    CHECK(chi2_statistic({8.0, 2.0}, {5.0, 5.0}) == doctest::Approx(3.6));
    CHECK_THROWS_AS(chi2_statistic({1.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(chi2_statistic({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("expected histogram reproduces the observed batch at M = k, same seed") {
    const auto model = default_model();
    const std::size_t k = 400;
    const std::uint64_t seed = 77;
    const auto obs = observed_histogram(20.0, 25.0, k, seed, model);
    const auto exp = expected_histogram(20.0, 25.0, model, k, k, seed);

    const auto obs_vec = obs.with_overflow();
    REQUIRE(obs_vec.size() == exp.size());
    for (std::size_t i = 0; i < exp.size(); ++i) CHECK(exp[i] == obs_vec[i]);
}

TEST_CASE("expected histogram scales by k over M") {
    const auto model = default_model();
    const std::size_t k = 300;
    const auto cell = simulate_cell(20.0, 25.0, model, k, 3000, 42);
    const auto exp = expected_histogram(20.0, 25.0, model, k, 3000, 42);
    double sum_exp = 0.0, sum_raw = 0.0;
    for (double v : exp) sum_exp += v;
    for (double v : cell.raw_hist) sum_raw += v;
    CHECK(sum_exp == doctest::Approx(sum_raw * k / 3000.0));
    CHECK(sum_raw == doctest::Approx(static_cast<double>(cell.n_accepted)));
    // the sub-cutoff bin carries real probability mass in this regime
    CHECK(exp[0] > 0.0);
}

TEST_CASE("degenerate cells throw") {
    auto model = default_model();
    model.rule.min_counts_per_bin = 60; // unreachable at 5 photons per scan
    CHECK_THROWS_AS(simulate_cell(20.0, 5.0, model, 100, 200, 1), DegenerateModelError);
}

TEST_CASE("single-cell grid search") {
    const auto model = default_model();
    const auto obs = observed_histogram(20.0, 25.0, 300, 11, model);
    GridSpec spec;
    spec.gamma_min = spec.gamma_max = 20.0;
    spec.nbar_min = spec.nbar_max = 25.0;
    const auto grid = grid_search(obs, spec, model, 12, 1500);
    REQUIRE(grid.s_values.size() == 1);
    CHECK(std::isfinite(grid.s_values[0]));
    const auto res = confidence_region(grid);
    CHECK(res.best_gamma == 20.0);
    CHECK(res.best_nbar == 25.0);
    CHECK(res.s_min == grid.s_values[0]);
}

TEST_CASE("surface is deterministic and independent of thread count") {
    const auto model = default_model();
    const auto obs = observed_histogram(20.0, 25.0, 300, 21, model);
    GridSpec spec;
    spec.gamma_min = 16.0;
    spec.gamma_max = 24.0;
    spec.gamma_step = 4.0;
    spec.nbar_min = 20.0;
    spec.nbar_max = 30.0;
    spec.nbar_step = 5.0;
    const auto t1 = build_expected_table(spec, model, 300, 33, 800, 1);
    const auto t3 = build_expected_table(spec, model, 300, 33, 800, 3);
    const auto g1 = grid_search(obs, t1);
    const auto g3 = grid_search(obs, t3);
    CHECK(g1.s_values == g3.s_values);
}

TEST_CASE("confidence region basics") {
    MCMGrid grid;
    grid.gammas = {10.0, 20.0, 30.0};
    grid.nbars = {5.0, 15.0};
    grid.k_observed = 100;
    grid.masked.assign(6, false);
    grid.scale.assign(6, 1.0);

    SUBCASE("constant surface spans the whole grid and flags the boundary") {
        grid.s_values.assign(6, 3.0);
        const auto res = confidence_region(grid);
        CHECK(res.region.size() == 6);
        CHECK(res.boundary_hit);
        CHECK(res.gamma_ci_lo == 10.0);
        CHECK(res.gamma_ci_hi == 30.0);
    }

    SUBCASE("delta = 0 keeps only the argmin") {
        grid.s_values = {9.0, 8.0, 7.0, 1.0, 6.0, 5.0};
        const auto res = confidence_region(grid, 0.0);
        REQUIRE(res.region.size() == 1);
        CHECK(res.best_gamma == 20.0);
        CHECK(res.best_nbar == 15.0);
        CHECK(res.s_min == 1.0);
        CHECK(res.gamma_ci_lo == 20.0);
        CHECK(res.gamma_ci_hi == 20.0);
    }
}

TEST_CASE("synthetic closure: the search lands near the generating parameters") {
    const auto model = default_model();
    GridSpec spec;
    spec.gamma_min = 14.0;
    spec.gamma_max = 26.0;
    spec.gamma_step = 2.0;
    spec.nbar_min = 15.0;
    spec.nbar_max = 35.0;
    spec.nbar_step = 5.0;

    const std::size_t k = 500;
    const auto table = build_expected_table(spec, model, k, 909, 3000, 0);

    int gamma_hits = 0, region_hits = 0;
    const int reps = 10;
    for (int rep = 0; rep < reps; ++rep) {
        const auto obs = observed_histogram(20.0, 25.0, k, 1000 + rep, model);
        const auto grid = grid_search(obs, table);
        const auto res = confidence_region(grid);
        if (std::fabs(res.best_gamma - 20.0) <= 2.0 * spec.gamma_step) ++gamma_hits;
        if (res.gamma_ci_lo <= 20.0 && 20.0 <= res.gamma_ci_hi) ++region_hits;
    }
    CHECK(gamma_hits >= 8);  // argmin within two grid steps of truth
    CHECK(region_hits >= 8); // 99% region rarely misses at this scale
}

} // TEST_SUITE
