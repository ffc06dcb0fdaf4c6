#pragma once

#include "cka/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cka {

/// Raised when a Monte Carlo estimate has an empty denominator.
class InsufficientStatistics : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Disposition : std::uint8_t {
    key_bit_0,
    key_bit_1,
    random_tie,
    discarded_cross_basis,
    visibility_sample,
    no_click,
};

const char* to_string(Disposition d);

/// One simulated slot, exported in the optional transcript.
struct SlotOutcome {
    std::uint64_t index; // 1-based slot number
    double alice_intensity;
    double bob_intensity;
    bool d1_click, d2_click; // time basis: D1 = bit 1, D2 = bit 0
    bool d3_click, d4_click; // interference basis, any pair mapped to this slot
    Disposition disposition;
};

/// A point estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct CategoryCounts {
    std::uint64_t sent = 0;
    std::uint64_t clicked = 0;   // at least one time-basis detector fired
    std::uint64_t erroneous = 0; // Charlie's bit disagrees with Alice's
};

/// Empirical counters and estimates from one protocol run.
struct TranscriptStats {
    std::uint64_t n_slots = 0;
    FreeParams fp{0.5, 0.1};

    // Intensity-pair categories, indexed (alice, bob).
    CategoryCounts c_00, c_0a, c_a0, c_aa;

    // Interference clicks over announced |a>|a> neighbor pairs.
    std::uint64_t dt_count = 0;
    std::uint64_t df_count = 0;
    std::uint64_t interference_pairs_aa = 0;

    // Sifted key material: encoding slots (differing intensities) with an
    // undiscarded time-basis click. Bob's bits are post-flip.
    std::vector<std::uint8_t> alice_key, bob_key, charlie_key;

    std::uint64_t discarded_cross_basis = 0;
    std::uint64_t random_ties = 0;

    Estimate q_00, q_0a, q_a0, q_aa;
    Estimate e_t;        // errors over clicks in the encoding categories
    Estimate visibility; // (dt - df) / (dt + df)
    Estimate q_mu;       // clicked over all slots
    Estimate e_mu;       // Alice-vs-Charlie errors over all clicked slots
};

/// Simulates n_slots rounds of the protocol: intensity choice, lossy arms,
/// dark counts, time-basis misalignment, interference over neighboring
/// pulse pairs, sifting and tie-breaking. Deterministic in (fp, ep,
/// n_slots, seed) independent of the worker count.
TranscriptStats run_protocol(const FreeParams& fp, const ExperimentParams& ep,
                             std::uint64_t n_slots, std::uint64_t seed,
                             int workers = 1,
                             std::vector<SlotOutcome>* transcript = nullptr);

/// Conference rate formula evaluated on the empirical estimates.
/// Throws InsufficientStatistics when a required denominator is zero.
double empirical_key_rate(const TranscriptStats& stats, const ExperimentParams& ep);

/// Interference-click statistics of the three-party run against a matched
/// two-party coherent one-way run (one sender emitting the whole train).
struct EquivalenceStats {
    Estimate p_dt_cka, p_df_cka, v_cka;
    Estimate p_dt_cow, p_df_cow, v_cow;
    double v_difference = 0.0;
    double v_combined_std_error = 0.0;
};

EquivalenceStats folding_equivalence_stats(const FreeParams& fp,
                                           const ExperimentParams& ep,
                                           std::uint64_t n_slots,
                                           std::uint64_t seed);

} // namespace cka
