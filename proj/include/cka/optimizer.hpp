#pragma once

#include "cka/keyrate.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cka {

struct OptimizerConfig {
    double t_min = 0.001;
    double t_max = 0.999;
    double mu_min = 0.001;
    double mu_max = 1.0; // weak-coherent regime; rates collapse near mu = 1
    int population = 80;
    int generations = 150;
    std::uint64_t seed = 1;
    int grid_resolution = 200;

    void validate() const;
};

/// Result of one optimization run. `positive` is false when no evaluated
/// candidate had a nonzero rate (distance beyond cutoff); params then carry
/// the best-effort candidate.
struct OptResult {
    FreeParams params;
    RateBreakdown breakdown;
    bool positive;
};

/// One distance point of a Fig.-3-style sweep.
struct SweepRow {
    double distance_km;
    double best_t;
    double best_mu;
    double rate;
    double rate_unclamped;
    double eta_lim;
    double repeaterless;
};

using Objective = std::function<double(double t, double mu)>;

/// Exhaustive argmax over the (t, mu) grid. Ties break toward smaller t,
/// then smaller mu. Exposed separately so tests can inject objectives.
struct GridCell {
    double t, mu, value;
};
GridCell grid_argmax(const Objective& objective, const OptimizerConfig& cfg);

/// Real-valued genetic algorithm over (t, mu): tournament selection of
/// size 2, blend crossover, Gaussian mutation with decaying scale,
/// elitism of 1. Deterministic for a fixed seed.
GridCell ga_argmax(const Objective& objective, const OptimizerConfig& cfg);

/// GA maximization of the conference key rate.
OptResult optimize(const ExperimentParams& ep, const OptimizerConfig& cfg);

/// Exhaustive grid maximization, used as the optimizer's independent check.
OptResult grid_oracle(const ExperimentParams& ep, const OptimizerConfig& cfg);

/// Re-optimizes per distance; rows are independent. `workers` <= 0 means
/// hardware concurrency. Output does not depend on the worker count.
std::vector<SweepRow> sweep(const ExperimentParams& ep_template,
                            std::span<const double> distances,
                            const OptimizerConfig& cfg, int workers = 0);

} // namespace cka
