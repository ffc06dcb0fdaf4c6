#include "cka/model.hpp"

#include <algorithm>
#include <cmath>

namespace cka {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

void require_domain(bool ok, const char* msg) {
    if (!ok) throw std::domain_error(msg);
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

} // namespace

void ExperimentParams::validate() const {
    require(detector_efficiency >= 0.0 && detector_efficiency <= 1.0,
            "detector_efficiency must be in [0, 1]");
    require(dark_count_rate >= 0.0 && dark_count_rate < 1.0,
            "dark_count_rate must be in [0, 1)");
    require(attenuation_db_per_km >= 0.0, "attenuation must be nonnegative");
    require(error_correction_efficiency >= 1.0,
            "error_correction_efficiency must be >= 1");
    require(time_misalignment >= 0.0 && time_misalignment <= 0.5,
            "time_misalignment must be in [0, 0.5]");
    require(interference_misalignment >= 0.0 && interference_misalignment <= 0.5,
            "interference_misalignment must be in [0, 0.5]");
    require(total_distance_km >= 0.0, "total_distance_km must be nonnegative");
}

void FreeParams::validate() const {
    require(send_probability > 0.0 && send_probability < 1.0,
            "send_probability must be in (0, 1)");
    require(intensity > 0.0, "intensity must be positive");
}

double channel_efficiency(const ExperimentParams& ep) {
    ep.validate();
    const double arm_km = ep.total_distance_km / 2.0;
    return ep.detector_efficiency *
           std::pow(10.0, -ep.attenuation_db_per_km * arm_km / 10.0);
}

double binary_entropy(double x) {
    require_domain(x >= 0.0 && x <= 1.0, "binary_entropy argument must be in [0, 1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double pair_gain(double intensity_a, double intensity_b, double eta, double p_d) {
    require_domain(intensity_a >= 0.0 && intensity_b >= 0.0,
                   "intensities must be nonnegative");
    require_domain(eta >= 0.0 && eta <= 1.0, "eta must be in [0, 1]");
    require_domain(p_d >= 0.0 && p_d < 0.5, "p_d must be in [0, 0.5)");
    const double exponent = (intensity_a + intensity_b) * eta;
    // 1 - (1 - 2 p_d) e^-x, written to stay exact when x or p_d is tiny
    return -std::expm1(-exponent) + 2.0 * p_d * std::exp(-exponent);
}

double pair_error_rate(double intensity_a, double intensity_b, double eta,
                       double p_d, double misalignment) {
    require_domain(misalignment >= 0.0 && misalignment <= 0.5,
                   "misalignment must be in [0, 0.5]");
    const double q = pair_gain(intensity_a, intensity_b, eta, p_d);
    if (q == 0.0) return misalignment;
    const double dark_fraction =
        2.0 * p_d * std::exp(-(intensity_a + intensity_b) * eta) / q;
    return misalignment + (kDarkClickErrorRate - misalignment) * dark_fraction;
}

double time_basis_error(const FreeParams& fp, const ExperimentParams& ep) {
    fp.validate();
    const double eta = channel_efficiency(ep);
    const double q_0a = pair_gain(0.0, fp.intensity, eta, ep.dark_count_rate);
    const double q_a0 = pair_gain(fp.intensity, 0.0, eta, ep.dark_count_rate);
    const double e_0a = pair_error_rate(0.0, fp.intensity, eta,
                                        ep.dark_count_rate, ep.time_misalignment);
    const double e_a0 = pair_error_rate(fp.intensity, 0.0, eta,
                                        ep.dark_count_rate, ep.time_misalignment);
    return (e_0a * q_0a + e_a0 * q_a0) / (q_0a + q_a0);
}

double visibility(const FreeParams& fp, const ExperimentParams& ep) {
    fp.validate();
    const double eta_v = channel_efficiency(ep) / kInterferenceLossFactor;
    const double e_v = pair_error_rate(fp.intensity, fp.intensity, eta_v,
                                       ep.dark_count_rate,
                                       ep.interference_misalignment);
    return clamp01(1.0 - 2.0 * e_v);
}

double zeta(double mu, double vis) {
    require_domain(mu >= 0.0, "mu must be nonnegative");
    require_domain(vis >= 0.0 && vis <= 1.0, "visibility must be in [0, 1]");
    const double one_minus_e2mu = -std::expm1(-2.0 * mu);
    return (2.0 * vis - 1.0) * std::exp(-mu) -
           2.0 * std::sqrt(one_minus_e2mu * vis * (1.0 - vis));
}

SiftedGain sifted_gain_and_reference_error(const FreeParams& fp,
                                           const ExperimentParams& ep) {
    fp.validate();
    const double t = fp.send_probability;
    const double mu = fp.intensity;
    const double eta = channel_efficiency(ep);
    const double p_d = ep.dark_count_rate;

    const double q_00 = pair_gain(0.0, 0.0, eta, p_d);
    const double q_0a = pair_gain(0.0, mu, eta, p_d);
    const double q_a0 = pair_gain(mu, 0.0, eta, p_d);
    const double q_aa = pair_gain(mu, mu, eta, p_d);
    const double e_0a = pair_error_rate(0.0, mu, eta, p_d, ep.time_misalignment);

    const double same_state = (1.0 - t) * (1.0 - t) * q_00 + t * t * q_aa;
    const double q_mu = same_state + t * (1.0 - t) * (q_0a + q_a0);
    const double e_mu =
        (0.5 * same_state + 2.0 * t * (1.0 - t) * e_0a * q_0a) / q_mu;
    return {q_mu, std::clamp(e_mu, 0.0, 0.5)};
}

} // namespace cka
