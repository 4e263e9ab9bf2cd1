#include <doctest.h>

#include <cmath>

#include "plemc/study.hpp"

using namespace plemc;

namespace {

SweepSpec small_spec() {
    SweepSpec s;
    s.gammas = {20.0};
    s.nbars = {100.0};
    s.scans_per_rep = 300;
    s.repetitions = 10;
    s.base_seed = 600;
    return s;
}

} // namespace

TEST_SUITE("study") {

TEST_CASE("bias sweep: the median is consistent when photons are plentiful") {
    // The tied-convention fit overestimates a pure Lorentzian by a few
    // percent at high photon numbers (shape mismatch); the bias minimum sits
    // near nbar ~ 60-80 and grows to ~3.3% by nbar = 100, so the bound here
    // reflects the measured curve rather than an idealized zero.
    SweepSpec s = small_spec();
    const auto rep = bias_sweep(s);
    REQUIRE(rep.cells.size() == 1);
    const auto& c = rep.cells[0];
    CHECK(c.reps_used == 10);
    CHECK(c.bias_rel < 0.04);
    CHECK(c.std_dev > 0.0);
    CHECK_FALSE(c.flagged);

    SweepSpec s80 = small_spec();
    s80.nbars = {80.0};
    CHECK(bias_sweep(s80).cells[0].bias_rel < 0.03);
}

TEST_CASE("bias sweep: the median undershoots when photons are scarce") {
    SweepSpec s = small_spec();
    s.nbars = {15.0};
    s.scans_per_rep = 600;
    s.repetitions = 8;
    const auto rep = bias_sweep(s);
    const auto& c = rep.cells[0];
    CHECK(c.mean_estimate < 20.0 * 0.95);
    CHECK(c.bias_rel > 0.05);
}

TEST_CASE("bias sweep: single repetition is degenerate for the spread") {
    SweepSpec s = small_spec();
    s.repetitions = 1;
    const auto rep = bias_sweep(s);
    CHECK(rep.cells[0].degenerate_std);
    CHECK(rep.cells[0].std_dev == 0.0);
}

TEST_CASE("bias sweep orders cells gamma-major") {
    SweepSpec s = small_spec();
    s.gammas = {15.0, 25.0};
    s.nbars = {60.0, 120.0};
    s.scans_per_rep = 150;
    s.repetitions = 2;
    const auto rep = bias_sweep(s);
    REQUIRE(rep.cells.size() == 4);
    CHECK(rep.cells[0].gamma == 15.0);
    CHECK(rep.cells[0].nbar == 60.0);
    CHECK(rep.cells[1].nbar == 120.0);
    CHECK(rep.cells[2].gamma == 25.0);
}

TEST_CASE("sweeps are reproducible from the same seed") {
    SweepSpec s = small_spec();
    s.scans_per_rep = 200;
    s.repetitions = 4;
    const auto a = bias_sweep(s);
    const auto b = bias_sweep(s);
    CHECK(a.cells[0].mean_estimate == b.cells[0].mean_estimate);
    CHECK(a.cells[0].std_dev == b.cells[0].std_dev);
}

TEST_CASE("stability: spread shrinks as scans accumulate") {
    SweepSpec s = small_spec();
    const auto rep = stability_curve(20.0, {25.0}, {30, 120, 480}, 12, s);
    REQUIRE(rep.points.size() == 3);
    CHECK(rep.points[0].k == 30);
    // monotone trend up to statistical noise: compare first and last
    CHECK(rep.points[2].std_abs < rep.points[0].std_abs);
    for (const auto& p : rep.points) CHECK(p.std_rel == doctest::Approx(p.std_abs / 20.0));
}

TEST_CASE("stability at k = 1 reports the single-scan spread") {
    SweepSpec s = small_spec();
    const auto rep = stability_curve(20.0, {100.0}, {1}, 16, s);
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.points[0].k == 1);
    CHECK(rep.points[0].std_abs > 0.5); // single fits scatter by MHz, not noise-free
}

TEST_CASE("threshold search brackets and resolves") {
    SweepSpec s = small_spec();
    s.scans_per_rep = 400;
    s.repetitions = 12;
    ThresholdResult r =
        consistency_threshold(20.0, 0.05, 0.75, {10.0, 30.0, 50.0, 70.0, 90.0}, s);
    CHECK(r.resolved);
    CHECK(r.nbar_star > 10.0);
    CHECK(r.nbar_star <= 90.0);
    // the bisection caches: with 5 grid points it needs at most 4 evaluations
    CHECK(r.evaluated.size() <= 4);
}

TEST_CASE("threshold search flags an unresolvable range") {
    SweepSpec s = small_spec();
    s.scans_per_rep = 150;
    s.repetitions = 6;
    // 0.1% precision is unreachable in this range
    ThresholdResult r = consistency_threshold(20.0, 0.001, 0.99, {10.0, 14.0, 18.0}, s);
    CHECK_FALSE(r.resolved);
    CHECK(r.nbar_star == 18.0);
}

TEST_CASE("mcm quality sweep reports wider intervals than bias") {
    SweepSpec s = small_spec();
    s.estimator = EstimatorKind::mcm;
    s.nbars = {25.0};
    s.scans_per_rep = 400;
    s.repetitions = 5;
    s.mcm_grid.gamma_min = 14.0;
    s.mcm_grid.gamma_max = 26.0;
    s.mcm_grid.gamma_step = 2.0;
    s.mcm_grid.nbar_min = 15.0;
    s.mcm_grid.nbar_max = 35.0;
    s.mcm_grid.nbar_step = 5.0;
    s.mcm_replicas = 2000;

    const auto rep = mcm_quality_sweep(s, {400});
    REQUIRE(rep.cells.size() == 1);
    const auto& c = rep.cells[0];
    CHECK(c.reps_used == 5);
    CHECK(c.mean_ci_rel_width > c.bias_rel); // intervals dominate the bias
    CHECK(c.coverage >= 0.6);
}

} // TEST_SUITE
