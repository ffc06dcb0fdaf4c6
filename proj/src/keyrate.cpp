#include "cka/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cka {

namespace {

// (1 + zeta)/2 can stray outside [0, 1] by underflow at extreme inputs.
double entropy_of_zeta(double z) {
    return binary_entropy(std::clamp((1.0 + z) / 2.0, 0.0, 1.0));
}

} // namespace

void CowInputs::validate() const {
    if (sifted_gain < 0.0 || sifted_gain > 1.0)
        throw std::invalid_argument("sifted_gain must be in [0, 1]");
    if (qber < 0.0 || qber > 1.0)
        throw std::invalid_argument("qber must be in [0, 1]");
    if (intensity < 0.0)
        throw std::invalid_argument("intensity must be nonnegative");
    if (visibility < 0.0 || visibility > 1.0)
        throw std::invalid_argument("visibility must be in [0, 1]");
    if (leak_ec < 0.0)
        throw std::invalid_argument("leak_ec must be nonnegative");
}

RateBreakdown conference_key_rate(const FreeParams& fp, const ExperimentParams& ep) {
    fp.validate();
    const double t = fp.send_probability;
    const double mu = fp.intensity;
    const double eta = channel_efficiency(ep);
    const double p_d = ep.dark_count_rate;

    RateBreakdown b{};
    b.eta = eta;
    b.q_0a = pair_gain(0.0, mu, eta, p_d);
    b.q_a0 = pair_gain(mu, 0.0, eta, p_d);
    b.q_00 = pair_gain(0.0, 0.0, eta, p_d);
    b.q_aa = pair_gain(mu, mu, eta, p_d);
    b.e_t = time_basis_error(fp, ep);
    b.visibility = visibility(fp, ep);
    const SiftedGain sg = sifted_gain_and_reference_error(fp, ep);
    b.q_mu = sg.q_mu;
    b.e_mu = sg.e_mu;
    b.zeta = zeta(mu, b.visibility);

    const double keep = 1.0 - b.e_t - (1.0 - b.e_t) * entropy_of_zeta(b.zeta);
    const double leak = b.q_mu * ep.error_correction_efficiency * binary_entropy(b.e_mu);
    b.rate_unclamped = t * (1.0 - t) * (b.q_0a + b.q_a0) * keep - leak;
    b.rate = std::max(b.rate_unclamped, 0.0);
    return b;
}

double cow_key_rate(const CowInputs& in) {
    in.validate();
    const double z = zeta(in.intensity, in.visibility);
    const double r = in.sifted_gain *
                         (1.0 - in.qber - (1.0 - in.qber) * entropy_of_zeta(z)) -
                     in.leak_ec;
    return std::max(r, 0.0);
}

double eta_lim_bound(const ExperimentParams& ep) {
    ep.validate();
    return ep.detector_efficiency *
           std::pow(10.0, -ep.attenuation_db_per_km * ep.total_distance_km / 10.0);
}

double repeaterless_bound(const ExperimentParams& ep) {
    ep.validate();
    const double arm = ep.detector_efficiency *
        std::pow(10.0, -ep.attenuation_db_per_km * ep.total_distance_km / 20.0);
    // -log2(1 - arm) via log1p for small arm
    return -std::log1p(-arm) / std::numbers::ln2;
}

BoundsRow bounds_at(const ExperimentParams& ep, double distance_km) {
    ExperimentParams at = ep;
    at.total_distance_km = distance_km;
    return {distance_km, eta_lim_bound(at), repeaterless_bound(at)};
}

} // namespace cka
