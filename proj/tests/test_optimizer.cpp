#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cka/optimizer.hpp"

#include <atomic>
#include <cmath>

using namespace cka;

namespace {

ExperimentParams table_params(double distance_km, double ed_prime = 0.01) {
    ExperimentParams ep;
    ep.total_distance_km = distance_km;
    ep.interference_misalignment = ed_prime;
    return ep;
}

OptimizerConfig small_cfg() {
    OptimizerConfig cfg;
    cfg.population = 48;
    cfg.generations = 80;
    cfg.grid_resolution = 120;
    return cfg;
}

} // namespace

TEST_CASE("config validation") {
    OptimizerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.population = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.grid_resolution = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.t_min = 0.9;
    cfg.t_max = 0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.mu_min = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("grid_argmax of a monotone objective is the corner") {
    OptimizerConfig cfg = small_cfg();
    const GridCell c = grid_argmax([](double t, double mu) { return t + mu; }, cfg);
    CHECK(c.t == doctest::Approx(cfg.t_max).epsilon(1e-12));
    CHECK(c.mu == doctest::Approx(cfg.mu_max).epsilon(1e-12));
}

TEST_CASE("grid_argmax evaluates resolution^2 cells") {
    OptimizerConfig cfg;
    cfg.grid_resolution = 2;
    std::atomic<int> calls{0};
    grid_argmax([&](double, double) { return double(++calls); }, cfg);
    CHECK(calls.load() == 4);
}

TEST_CASE("grid_argmax ties break toward smaller t then smaller mu") {
    OptimizerConfig cfg;
    cfg.grid_resolution = 5;
    const GridCell c = grid_argmax([](double, double) { return 1.0; }, cfg);
    CHECK(c.t == doctest::Approx(cfg.t_min).epsilon(1e-12));
    CHECK(c.mu == doctest::Approx(cfg.mu_min).epsilon(1e-12));
}

TEST_CASE("grid oracle finds a positive cell at L = 100") {
    const OptResult r = grid_oracle(table_params(100.0), small_cfg());
    CHECK(r.positive);
    CHECK(r.breakdown.rate > 0.0);
}

TEST_CASE("optimize is deterministic for a fixed seed") {
    const ExperimentParams ep = table_params(150.0);
    const OptimizerConfig cfg = small_cfg();
    const OptResult a = optimize(ep, cfg);
    const OptResult b = optimize(ep, cfg);
    CHECK(a.params.send_probability == b.params.send_probability);
    CHECK(a.params.intensity == b.params.intensity);
    CHECK(a.breakdown.rate == b.breakdown.rate);
}

TEST_CASE("optimize returned rate equals conference_key_rate at returned params") {
    const ExperimentParams ep = table_params(200.0);
    const OptResult r = optimize(ep, small_cfg());
    CHECK(r.breakdown.rate ==
          conference_key_rate(r.params, ep).rate);
}

TEST_CASE("optimize near zero distance matches the grid oracle within 0.5%") {
    const ExperimentParams ep = table_params(0.001);
    OptimizerConfig cfg = small_cfg();
    cfg.grid_resolution = 200;
    const OptResult ga = optimize(ep, cfg);
    const OptResult grid = grid_oracle(ep, cfg);
    CHECK(ga.breakdown.rate >= grid.breakdown.rate * (1.0 - 0.005));
}

TEST_CASE("zero-rate sentinel beyond the dark-count cutoff") {
    const ExperimentParams ep = table_params(700.0);
    const OptimizerConfig cfg = small_cfg();
    const OptResult ga = optimize(ep, cfg);
    CHECK_FALSE(ga.positive);
    CHECK(ga.breakdown.rate == 0.0);
    const OptResult grid = grid_oracle(ep, cfg);
    CHECK_FALSE(grid.positive);
}

TEST_CASE("sweep basics") {
    const ExperimentParams ep = table_params(0.0);
    const OptimizerConfig cfg = small_cfg();

    SUBCASE("single zero-distance row") {
        const double d[] = {0.0};
        const auto rows = sweep(ep, d, cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].eta_lim == doctest::Approx(0.56).epsilon(1e-15));
        CHECK(rows[0].rate > 0.0);
    }
    SUBCASE("empty distance list rejected") {
        CHECK_THROWS_AS((sweep(ep, {}, cfg)), std::invalid_argument);
    }
    SUBCASE("non-increasing distances rejected") {
        const double d[] = {10.0, 10.0};
        CHECK_THROWS_AS((sweep(ep, d, cfg)), std::invalid_argument);
    }
}

TEST_CASE("sweep output independent of worker count") {
    const ExperimentParams ep = table_params(0.0);
    OptimizerConfig cfg = small_cfg();
    cfg.population = 24;
    cfg.generations = 30;
    const double d[] = {0.0, 50.0, 100.0, 150.0, 200.0, 250.0};
    const auto serial = sweep(ep, d, cfg, 1);
    const auto parallel = sweep(ep, d, cfg, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].best_t == parallel[i].best_t);
        CHECK(serial[i].best_mu == parallel[i].best_mu);
        CHECK(serial[i].rate == parallel[i].rate);
    }
}

TEST_CASE("optimized rate nonincreasing over the sweep grid") {
    const ExperimentParams ep = table_params(0.0);
    const OptimizerConfig cfg = small_cfg();
    const double d[] = {0.0, 100.0, 200.0, 300.0, 400.0, 500.0};
    const auto rows = sweep(ep, d, cfg, 2);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].rate <= rows[i - 1].rate * 1.0001 + 1e-15);
}
