#pragma once

#include <stdexcept>

namespace cka {

/// Error rate of a click caused by a dark count: the bit is uncorrelated
/// with anything the senders did.
inline constexpr double kDarkClickErrorRate = 0.5;

/// Ratio between time-basis and interference-basis efficiency: pulses
/// routed to the interferometer see an extra factor-10 loss.
inline constexpr double kInterferenceLossFactor = 10.0;

/// Fixed hardware and channel parameters. Defaults are the ultralow-loss
/// fiber setting used throughout the simulations.
struct ExperimentParams {
    double detector_efficiency = 0.56;       // eta_d
    double dark_count_rate = 1e-8;           // p_d, per pulse per detector
    double attenuation_db_per_km = 0.167;    // alpha
    double error_correction_efficiency = 1.1; // f
    double time_misalignment = 0.001;        // e_d
    double interference_misalignment = 0.01; // e'_d
    double total_distance_km = 0.0;          // L; each sender arm is L/2

    // Throws std::invalid_argument if any field is out of range.
    void validate() const;
};

/// The protocol's optimizable knobs.
struct FreeParams {
    double send_probability; // t, probability a sender emits |alpha>
    double intensity;        // mu = |alpha|^2

    void validate() const;
};

/// Every intermediate quantity of one key-rate evaluation.
struct RateBreakdown {
    double eta;        // per-sender arm transmission * detection efficiency
    double q_0a, q_a0, q_00, q_aa; // gains per intensity pair
    double e_t;        // time-basis error rate
    double visibility; // V
    double q_mu;       // overall time-basis gain
    double e_mu;       // reference (Charlie) error rate
    double zeta;       // collective-attack coherence bound term
    double rate_unclamped;
    double rate;       // max(rate_unclamped, 0)
};

/// Per-sender arm efficiency: detector efficiency times the transmittance
/// of an L/2 fiber arm.
double channel_efficiency(const ExperimentParams& ep);

/// Binary Shannon entropy h(x), with h(0) = h(1) = 0.
double binary_entropy(double x);

/// Probability that at least one time-basis detector clicks when the
/// senders emit intensities (intensity_a, intensity_b):
///   Q = 1 - (1 - 2 p_d) exp(-(intensity_a + intensity_b) eta)
double pair_gain(double intensity_a, double intensity_b, double eta, double p_d);

/// Error rate conditioned on a click for one intensity pair. Photon-induced
/// clicks err at the misalignment rate, dark clicks at 1/2.
double pair_error_rate(double intensity_a, double intensity_b, double eta,
                       double p_d, double misalignment);

/// Gain-weighted time-basis error rate over the two encoding pairs
/// |0>|a> and |a>|0>.
double time_basis_error(const FreeParams& fp, const ExperimentParams& ep);

/// Interference visibility V = 1 - 2 E_V, with E_V the pair error rate of
/// |a>|a> events at the interference-basis efficiency eta/10 and
/// misalignment e'_d. Result clamped to [0, 1].
double visibility(const FreeParams& fp, const ExperimentParams& ep);

/// zeta(mu, V) = (2V-1) e^(-mu) - 2 sqrt((1 - e^(-2mu)) V (1-V))
double zeta(double mu, double vis);

struct SiftedGain {
    double q_mu; // expectation of the pair gain over the senders' choices
    double e_mu; // error rate against Charlie's reference key, in [0, 1/2]
};

/// Overall time-basis gain Q_mu and the reference error rate E_mu.
SiftedGain sifted_gain_and_reference_error(const FreeParams& fp,
                                           const ExperimentParams& ep);

} // namespace cka
