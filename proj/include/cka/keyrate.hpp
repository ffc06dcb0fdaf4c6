#pragma once

#include "cka/model.hpp"

namespace cka {

/// Benchmark bounds at one distance.
struct BoundsRow {
    double distance_km;
    double eta_lim;      // total efficiency among quantum channels
    double repeaterless; // generalized PLOB-style bound
};

/// Inputs of the two-party coherent one-way rate formula.
struct CowInputs {
    double sifted_gain; // R_s
    double qber;        // Q
    double intensity;   // mu
    double visibility;  // V
    double leak_ec;     // bits per pulse lost to error correction

    void validate() const;
};

/// Asymptotic conference key rate:
///   R = t(1-t)(Q_0a + Q_a0) [1 - E_T - (1-E_T) h((1+zeta)/2)] - Q_mu f h(E_mu)
/// Returns every intermediate alongside the clamped and unclamped rate.
RateBreakdown conference_key_rate(const FreeParams& fp, const ExperimentParams& ep);

/// Two-party coherent one-way rate
///   R = R_s [1 - Q - (1-Q) h((1+zeta(mu,V))/2)] - leak_EC, clamped at 0.
double cow_key_rate(const CowInputs& in);

/// eta_d * 10^(-alpha L / 10)
double eta_lim_bound(const ExperimentParams& ep);

/// -log2(1 - eta_d * 10^(-alpha L / 20))
double repeaterless_bound(const ExperimentParams& ep);

BoundsRow bounds_at(const ExperimentParams& ep, double distance_km);

} // namespace cka
