#include "cka/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace cka {

void OptimizerConfig::validate() const {
    if (!(t_min > 0.0 && t_min < t_max && t_max < 1.0))
        throw std::invalid_argument("t range must be nonempty inside (0, 1)");
    if (!(mu_min > 0.0 && mu_min < mu_max))
        throw std::invalid_argument("mu range must be nonempty with positive lower bound");
    if (population < 2)
        throw std::invalid_argument("population must be >= 2");
    if (generations < 1)
        throw std::invalid_argument("generations must be >= 1");
    if (grid_resolution < 2)
        throw std::invalid_argument("grid_resolution must be >= 2");
}

GridCell grid_argmax(const Objective& objective, const OptimizerConfig& cfg) {
    cfg.validate();
    const int n = cfg.grid_resolution;
    GridCell best{cfg.t_min, cfg.mu_min,
                  -std::numeric_limits<double>::infinity()};
    for (int i = 0; i < n; ++i) {
        const double t = cfg.t_min + (cfg.t_max - cfg.t_min) * i / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double mu = cfg.mu_min + (cfg.mu_max - cfg.mu_min) * j / (n - 1);
            const double v = objective(t, mu);
            if (v > best.value) best = {t, mu, v};
        }
    }
    return best;
}

namespace {

struct Candidate {
    double t, mu, fitness;
};

} // namespace

GridCell ga_argmax(const Objective& objective, const OptimizerConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double t_span = cfg.t_max - cfg.t_min;
    const double mu_span = cfg.mu_max - cfg.mu_min;

    auto clamp_t = [&](double t) { return std::clamp(t, cfg.t_min, cfg.t_max); };
    auto clamp_mu = [&](double mu) { return std::clamp(mu, cfg.mu_min, cfg.mu_max); };

    std::vector<Candidate> pop(static_cast<std::size_t>(cfg.population));
    for (auto& c : pop) {
        c.t = cfg.t_min + t_span * unit(rng);
        c.mu = cfg.mu_min + mu_span * unit(rng);
        c.fitness = objective(c.t, c.mu);
    }

    auto better = [](const Candidate& a, const Candidate& b) {
        return a.fitness > b.fitness;
    };
    Candidate best = *std::max_element(pop.begin(), pop.end(),
                                       [&](auto& a, auto& b) { return better(b, a); });

    auto tournament = [&]() -> const Candidate& {
        const auto& a = pop[rng() % pop.size()];
        const auto& b = pop[rng() % pop.size()];
        return better(a, b) ? a : b;
    };

    std::vector<Candidate> next(pop.size());
    for (int gen = 0; gen < cfg.generations; ++gen) {
        // Mutation scale decays so late generations refine locally.
        const double sigma = 0.3 * std::pow(0.02 / 0.3, double(gen) / cfg.generations);
        next[0] = best; // elitism
        for (std::size_t i = 1; i < pop.size(); ++i) {
            const Candidate& p1 = tournament();
            const Candidate& p2 = tournament();
            // Blend crossover, factor drawn per gene.
            double child_t = p1.t + (p2.t - p1.t) * unit(rng);
            double child_mu = p1.mu + (p2.mu - p1.mu) * unit(rng);
            std::normal_distribution<double> gauss(0.0, 1.0);
            if (unit(rng) < 0.5) child_t += gauss(rng) * sigma * t_span;
            if (unit(rng) < 0.5) child_mu += gauss(rng) * sigma * mu_span;
            Candidate c{clamp_t(child_t), clamp_mu(child_mu), 0.0};
            c.fitness = objective(c.t, c.mu);
            next[i] = c;
            if (better(c, best)) best = c;
        }
        pop.swap(next);
    }
    return {best.t, best.mu, best.fitness};
}

namespace {

OptResult finish(const ExperimentParams& ep, const GridCell& cell) {
    FreeParams fp{cell.t, cell.mu};
    OptResult r{fp, conference_key_rate(fp, ep), cell.value > 0.0};
    return r;
}

Objective rate_objective(const ExperimentParams& ep) {
    return [ep](double t, double mu) {
        return conference_key_rate(FreeParams{t, mu}, ep).rate;
    };
}

} // namespace

OptResult optimize(const ExperimentParams& ep, const OptimizerConfig& cfg) {
    ep.validate();
    return finish(ep, ga_argmax(rate_objective(ep), cfg));
}

OptResult grid_oracle(const ExperimentParams& ep, const OptimizerConfig& cfg) {
    ep.validate();
    return finish(ep, grid_argmax(rate_objective(ep), cfg));
}

std::vector<SweepRow> sweep(const ExperimentParams& ep_template,
                            std::span<const double> distances,
                            const OptimizerConfig& cfg, int workers) {
    ep_template.validate();
    cfg.validate();
    if (distances.empty())
        throw std::invalid_argument("distance list must be nonempty");
    for (std::size_t i = 1; i < distances.size(); ++i)
        if (!(distances[i] > distances[i - 1]))
            throw std::invalid_argument("distances must be strictly increasing");

    std::vector<SweepRow> rows(distances.size());
    auto run_row = [&](std::size_t i) {
        ExperimentParams ep = ep_template;
        ep.total_distance_km = distances[i];
        const OptResult r = optimize(ep, cfg);
        rows[i] = {distances[i], r.params.send_probability, r.params.intensity,
                   r.breakdown.rate, r.breakdown.rate_unclamped,
                   eta_lim_bound(ep), repeaterless_bound(ep)};
    };

    if (workers <= 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<int>(workers, static_cast<int>(distances.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < distances.size(); ++i) run_row(i);
    } else {
        std::atomic<std::size_t> cursor{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = cursor.fetch_add(1); i < distances.size();
                     i = cursor.fetch_add(1))
                    run_row(i);
            });
        for (auto& th : pool) th.join();
    }
    return rows;
}

} // namespace cka
