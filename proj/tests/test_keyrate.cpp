#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cka/keyrate.hpp"

#include <cmath>
#include <random>

using namespace cka;

namespace {

ExperimentParams table_params(double distance_km = 0.0, double ed_prime = 0.01) {
    ExperimentParams ep;
    ep.total_distance_km = distance_km;
    ep.interference_misalignment = ed_prime;
    return ep;
}

} // namespace

TEST_CASE("conference_key_rate frozen breakdown at t=0.5, mu=0.1, L=100") {
    const RateBreakdown b = conference_key_rate({0.5, 0.1}, table_params(100.0));
    CHECK(b.eta == doctest::Approx(0.08188192176957623).epsilon(1e-12));
    CHECK(b.q_0a == doctest::Approx(0.008154780079563051).epsilon(1e-12));
    CHECK(b.q_a0 == b.q_0a);
    CHECK(b.q_00 == doctest::Approx(1.9999999989472883e-08).epsilon(1e-12));
    CHECK(b.q_aa == doctest::Approx(0.016243040045840873).epsilon(1e-12));
    CHECK(b.e_t == doctest::Approx(0.0010012138421142203).epsilon(1e-12));
    CHECK(b.visibility == doctest::Approx(0.979988041489424).epsilon(1e-12));
    CHECK(b.zeta == doctest::Approx(0.7493753396161331).epsilon(1e-12));
    CHECK(b.q_mu == doctest::Approx(0.008138155051241741).epsilon(1e-12));
    CHECK(b.e_mu == doctest::Approx(0.24999091713879446).epsilon(1e-12));
    CHECK(b.rate_unclamped == doctest::Approx(-0.005406775485407827).epsilon(1e-10));
    CHECK(b.rate == 0.0);
}

TEST_CASE("conference_key_rate noiseless closed form") {
    ExperimentParams ep = table_params(50.0, 0.0);
    ep.dark_count_rate = 0.0;
    ep.time_misalignment = 0.0;
    const FreeParams fp{0.3, 0.15};
    const RateBreakdown b = conference_key_rate(fp, ep);
    CHECK(b.e_t == 0.0);
    CHECK(b.visibility == 1.0);
    const double t = fp.send_probability, mu = fp.intensity;
    const double expected_keep = 1.0 - binary_entropy((1.0 + std::exp(-mu)) / 2.0);
    const double expected =
        2.0 * t * (1.0 - t) * b.q_0a * expected_keep -
        b.q_mu * ep.error_correction_efficiency * binary_entropy(b.e_mu);
    CHECK(b.rate_unclamped == doctest::Approx(expected).epsilon(1e-12));
    CHECK(b.e_mu == doctest::Approx(0.5 * t * t * b.q_aa / b.q_mu).epsilon(1e-12));
}

TEST_CASE("rate is clamped at zero") {
    // far beyond cutoff: dark counts dominate
    const RateBreakdown b = conference_key_rate({0.5, 0.1}, table_params(800.0));
    CHECK(b.rate == 0.0);
    CHECK(b.rate_unclamped < 0.0);
}

TEST_CASE("gains never fall below the dark-count floor") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        ExperimentParams ep = table_params(600.0 * unit(rng), 0.05 * unit(rng));
        ep.dark_count_rate = 1e-8 + 1e-4 * unit(rng);
        const RateBreakdown b =
            conference_key_rate({0.01 + 0.98 * unit(rng), 0.01 + unit(rng)}, ep);
        const double floor =
            2.0 * ep.dark_count_rate * (1.0 - ep.dark_count_rate) - 1e-15;
        for (double q : {b.q_00, b.q_0a, b.q_a0, b.q_aa}) CHECK(q >= floor);
    }
}

TEST_CASE("R(L) nonincreasing at fixed free parameters") {
    const FreeParams fp{0.06, 0.11};
    double prev = 1.0;
    for (double L = 0.0; L <= 500.0; L += 20.0) {
        const double r = conference_key_rate(fp, table_params(L)).rate;
        CHECK(r <= prev + 1e-15);
        prev = r;
    }
}

TEST_CASE("cow_key_rate") {
    SUBCASE("noiseless substitution") {
        const CowInputs in{0.02, 0.0, 0.3, 1.0, 0.0};
        const double expected =
            0.02 * (1.0 - binary_entropy((1.0 + std::exp(-0.3)) / 2.0));
        CHECK(cow_key_rate(in) == doctest::Approx(expected).epsilon(1e-13));
    }
    SUBCASE("no sifted events") {
        CHECK(cow_key_rate({0.0, 0.1, 0.2, 0.95, 0.0}) == 0.0);
    }
    SUBCASE("frozen value") {
        CHECK(cow_key_rate({0.01, 0.02, 0.2, 0.97, 0.001}) ==
              doctest::Approx(0.001474995949588923).epsilon(1e-12));
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS((cow_key_rate({1.5, 0.0, 0.2, 0.9, 0.0})), std::invalid_argument);
        CHECK_THROWS_AS((cow_key_rate({0.1, 0.0, 0.2, 0.9, -0.1})), std::invalid_argument);
    }
}

TEST_CASE("cow rate equals the conference first term under substitution") {
    // structural identity between the two formulas, checked on random inputs
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const ExperimentParams ep = table_params(450.0 * unit(rng), 0.03 * unit(rng));
        const FreeParams fp{0.02 + 0.96 * unit(rng), 0.02 + 0.9 * unit(rng)};
        const RateBreakdown b = conference_key_rate(fp, ep);
        const CowInputs in{
            fp.send_probability * (1.0 - fp.send_probability) * (b.q_0a + b.q_a0),
            b.e_t, fp.intensity, b.visibility,
            b.q_mu * ep.error_correction_efficiency * binary_entropy(b.e_mu)};
        CHECK(cow_key_rate(in) == doctest::Approx(b.rate).epsilon(1e-12));
    }
}

TEST_CASE("bounds") {
    CHECK(eta_lim_bound(table_params(0.0)) == doctest::Approx(0.56).epsilon(1e-15));
    CHECK(eta_lim_bound(table_params(100.0)) ==
          doctest::Approx(0.011972587701212503).epsilon(1e-12));
    CHECK(eta_lim_bound(table_params(300.0)) ==
          doctest::Approx(5.472528437352543e-06).epsilon(1e-12));
    CHECK(repeaterless_bound(table_params(0.0)) ==
          doctest::Approx(1.1844245711374277).epsilon(1e-12));
    CHECK(repeaterless_bound(table_params(200.0)) ==
          doctest::Approx(0.01737702571010006).epsilon(1e-12));
    // asymptotic decay
    CHECK(repeaterless_bound(table_params(3000.0)) < 1e-20);
    CHECK(repeaterless_bound(table_params(3000.0)) > 0.0);
}

TEST_CASE("bounds strictly decrease with distance") {
    double prev_lim = 1.0, prev_rpl = 2.0;
    for (double L = 0.0; L <= 600.0; L += 10.0) {
        const BoundsRow r = bounds_at(table_params(), L);
        CHECK(r.eta_lim < prev_lim);
        CHECK(r.repeaterless < prev_rpl);
        prev_lim = r.eta_lim;
        prev_rpl = r.repeaterless;
    }
}
