#include "cka/keyrate.hpp"
#include "cka/montecarlo.hpp"
#include "cka/optimizer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInsufficientStats = 3;

// All emitted floats go through a 12-significant-digit round so repeated
// runs and refactorings produce stable bytes.
double round12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::strtod(buf, nullptr);
}

std::string fmt12(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct RunConfig {
    cka::ExperimentParams ep;
    double t = 0.5;
    double mu = 0.1;
    cka::OptimizerConfig optimizer;
    std::uint64_t n_slots = 1000000;
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out;
    std::string format; // "csv" or "json"; empty = per-command default
    double dist_start = 0.0, dist_stop = 600.0, dist_step = 10.0;
};

json to_json(const RunConfig& c) {
    json j;
    j["detector_efficiency"] = c.ep.detector_efficiency;
    j["dark_count_rate"] = c.ep.dark_count_rate;
    j["attenuation"] = c.ep.attenuation_db_per_km;
    j["error_correction_efficiency"] = c.ep.error_correction_efficiency;
    j["time_misalignment"] = c.ep.time_misalignment;
    j["interference_misalignment"] = c.ep.interference_misalignment;
    j["total_distance_km"] = c.ep.total_distance_km;
    j["t"] = c.t;
    j["mu"] = c.mu;
    json opt;
    opt["t_min"] = c.optimizer.t_min;
    opt["t_max"] = c.optimizer.t_max;
    opt["mu_min"] = c.optimizer.mu_min;
    opt["mu_max"] = c.optimizer.mu_max;
    opt["population"] = c.optimizer.population;
    opt["generations"] = c.optimizer.generations;
    opt["seed"] = c.optimizer.seed;
    opt["grid_resolution"] = c.optimizer.grid_resolution;
    j["optimizer"] = opt;
    j["n_slots"] = c.n_slots;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["distances"] = {{"start", c.dist_start}, {"stop", c.dist_stop}, {"step", c.dist_step}};
    return j;
}

void from_json(const json& j, RunConfig& c) {
    auto get = [&](const json& o, const char* key, auto& field) {
        if (o.contains(key)) o.at(key).get_to(field);
    };
    get(j, "detector_efficiency", c.ep.detector_efficiency);
    get(j, "dark_count_rate", c.ep.dark_count_rate);
    get(j, "attenuation", c.ep.attenuation_db_per_km);
    get(j, "error_correction_efficiency", c.ep.error_correction_efficiency);
    get(j, "time_misalignment", c.ep.time_misalignment);
    get(j, "interference_misalignment", c.ep.interference_misalignment);
    get(j, "total_distance_km", c.ep.total_distance_km);
    get(j, "t", c.t);
    get(j, "mu", c.mu);
    if (j.contains("optimizer")) {
        const json& o = j.at("optimizer");
        get(o, "t_min", c.optimizer.t_min);
        get(o, "t_max", c.optimizer.t_max);
        get(o, "mu_min", c.optimizer.mu_min);
        get(o, "mu_max", c.optimizer.mu_max);
        get(o, "population", c.optimizer.population);
        get(o, "generations", c.optimizer.generations);
        get(o, "seed", c.optimizer.seed);
        get(o, "grid_resolution", c.optimizer.grid_resolution);
    }
    get(j, "n_slots", c.n_slots);
    get(j, "seed", c.seed);
    get(j, "workers", c.workers);
    if (j.contains("distances")) {
        const json& d = j.at("distances");
        get(d, "start", c.dist_start);
        get(d, "stop", c.dist_stop);
        get(d, "step", c.dist_step);
    }
}

std::vector<double> build_distances(const RunConfig& c) {
    std::vector<double> out;
    if (c.dist_step <= 0.0 || c.dist_stop < c.dist_start)
        throw std::invalid_argument("distance grid must have positive step and stop >= start");
    for (double d = c.dist_start; d <= c.dist_stop + 1e-9; d += c.dist_step)
        out.push_back(d);
    return out;
}

void emit(const RunConfig& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(c.out, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open output file: " + c.out);
        f << text;
    }
}

json breakdown_json(const cka::RateBreakdown& b) {
    json j;
    j["eta"] = round12(b.eta);
    j["q_0a"] = round12(b.q_0a);
    j["q_a0"] = round12(b.q_a0);
    j["q_00"] = round12(b.q_00);
    j["q_aa"] = round12(b.q_aa);
    j["e_t"] = round12(b.e_t);
    j["visibility"] = round12(b.visibility);
    j["q_mu"] = round12(b.q_mu);
    j["e_mu"] = round12(b.e_mu);
    j["zeta"] = round12(b.zeta);
    j["rate_unclamped"] = round12(b.rate_unclamped);
    j["rate"] = round12(b.rate);
    return j;
}

int cmd_rate(const RunConfig& c) {
    const cka::FreeParams fp{c.t, c.mu};
    const cka::RateBreakdown b = cka::conference_key_rate(fp, c.ep);
    json j;
    j["distance_km"] = round12(c.ep.total_distance_km);
    j["t"] = round12(c.t);
    j["mu"] = round12(c.mu);
    j["breakdown"] = breakdown_json(b);
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_bounds(const RunConfig& c, bool single_distance) {
    std::vector<double> distances;
    if (single_distance)
        distances.push_back(c.ep.total_distance_km);
    else
        distances = build_distances(c);
    if (c.format == "json") {
        json rows = json::array();
        for (double d : distances) {
            const cka::BoundsRow r = cka::bounds_at(c.ep, d);
            rows.push_back({{"distance_km", round12(d)},
                            {"eta_lim", round12(r.eta_lim)},
                            {"repeaterless", round12(r.repeaterless)}});
        }
        emit(c, rows.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "distance_km,eta_lim,repeaterless\n";
        for (double d : distances) {
            const cka::BoundsRow r = cka::bounds_at(c.ep, d);
            os << fmt12(d) << ',' << fmt12(r.eta_lim) << ',' << fmt12(r.repeaterless) << '\n';
        }
        emit(c, os.str());
    }
    return 0;
}

int cmd_optimize(const RunConfig& c) {
    const cka::OptResult r = cka::optimize(c.ep, c.optimizer);
    json j;
    j["distance_km"] = round12(c.ep.total_distance_km);
    j["t"] = round12(r.params.send_probability);
    j["mu"] = round12(r.params.intensity);
    j["positive"] = r.positive;
    j["breakdown"] = breakdown_json(r.breakdown);
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const RunConfig& c) {
    const std::vector<double> distances = build_distances(c);
    const auto rows = cka::sweep(c.ep, distances, c.optimizer, c.workers);
    std::ostringstream os;
    os << "distance_km,t,mu,rate,rate_unclamped,eta_lim,repeaterless\n";
    for (const auto& r : rows) {
        os << fmt12(r.distance_km) << ',' << fmt12(r.best_t) << ',' << fmt12(r.best_mu)
           << ',' << fmt12(r.rate) << ',' << fmt12(r.rate_unclamped) << ','
           << fmt12(r.eta_lim) << ',' << fmt12(r.repeaterless) << '\n';
    }
    emit(c, os.str());
    return 0;
}

json estimate_comparison(const cka::Estimate& emp, double analytic) {
    json j;
    j["empirical"] = round12(emp.value);
    j["std_error"] = round12(emp.std_error);
    j["analytic"] = round12(analytic);
    const double sigmas =
        emp.std_error > 0.0 ? std::abs(emp.value - analytic) / emp.std_error : 0.0;
    j["sigma_distance"] = round12(sigmas);
    j["pass_3_sigma"] = emp.std_error > 0.0 && sigmas <= 3.0;
    return j;
}

int cmd_simulate(const RunConfig& c, const std::string& transcript_path) {
    const cka::FreeParams fp{c.t, c.mu};
    std::vector<cka::SlotOutcome> transcript;
    const cka::TranscriptStats stats = cka::run_protocol(
        fp, c.ep, c.n_slots, c.seed, c.workers,
        transcript_path.empty() ? nullptr : &transcript);

    if (!transcript_path.empty()) {
        std::ofstream f(transcript_path, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open transcript file: " + transcript_path);
        f << "index alice_intensity bob_intensity d1 d2 d3 d4 disposition\n";
        for (const auto& o : transcript)
            f << o.index << ' ' << fmt12(o.alice_intensity) << ' '
              << fmt12(o.bob_intensity) << ' ' << o.d1_click << ' ' << o.d2_click
              << ' ' << o.d3_click << ' ' << o.d4_click << ' '
              << cka::to_string(o.disposition) << '\n';
    }

    const cka::RateBreakdown b = cka::conference_key_rate(fp, c.ep);
    json j;
    j["n_slots"] = stats.n_slots;
    j["seed"] = c.seed;
    j["t"] = round12(c.t);
    j["mu"] = round12(c.mu);
    j["distance_km"] = round12(c.ep.total_distance_km);
    json cmp;
    cmp["q_0a"] = estimate_comparison(stats.q_0a, b.q_0a);
    cmp["q_a0"] = estimate_comparison(stats.q_a0, b.q_a0);
    cmp["q_00"] = estimate_comparison(stats.q_00, b.q_00);
    cmp["q_aa"] = estimate_comparison(stats.q_aa, b.q_aa);
    cmp["e_t"] = estimate_comparison(stats.e_t, b.e_t);
    cmp["visibility"] = estimate_comparison(stats.visibility, b.visibility);
    cmp["q_mu"] = estimate_comparison(stats.q_mu, b.q_mu);
    cmp["e_mu"] = estimate_comparison(stats.e_mu, b.e_mu);
    j["comparison"] = cmp;
    j["sifted_bits"] = stats.alice_key.size();
    j["random_ties"] = stats.random_ties;
    j["discarded_cross_basis"] = stats.discarded_cross_basis;
    j["empirical_rate"] = round12(cka::empirical_key_rate(stats, c.ep));
    j["analytic_rate"] = round12(b.rate);
    bool all_pass = true;
    for (const auto& [k, v] : cmp.items())
        all_pass = all_pass && v.at("pass_3_sigma").get<bool>();
    j["all_pass_3_sigma"] = all_pass;
    emit(c, j.dump(2) + "\n");
    return 0;
}

int cmd_equivalence(const RunConfig& c) {
    const cka::FreeParams fp{c.t, c.mu};
    const cka::EquivalenceStats eq =
        cka::folding_equivalence_stats(fp, c.ep, c.n_slots, c.seed);
    if (eq.v_cka.std_error == 0.0 || eq.v_cow.std_error == 0.0)
        throw cka::InsufficientStatistics("no interference clicks in one of the runs");
    auto est = [](const cka::Estimate& e) {
        return json{{"value", round12(e.value)}, {"std_error", round12(e.std_error)}};
    };
    json j;
    j["cka"] = {{"p_dt", est(eq.p_dt_cka)}, {"p_df", est(eq.p_df_cka)}, {"visibility", est(eq.v_cka)}};
    j["cow"] = {{"p_dt", est(eq.p_dt_cow)}, {"p_df", est(eq.p_df_cow)}, {"visibility", est(eq.v_cow)}};
    j["v_difference"] = round12(eq.v_difference);
    j["v_combined_std_error"] = round12(eq.v_combined_std_error);
    j["pass_3_sigma"] =
        std::abs(eq.v_difference) <= 3.0 * eq.v_combined_std_error;
    emit(c, j.dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Three-party conference key agreement rate engine and simulator"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::string distances_spec;
    std::string transcript_path;
    bool dump_config = false;

    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_flag("--dump-config", dump_config, "Print the effective config as JSON and exit");

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--distance", cfg.ep.total_distance_km, "Total Alice-Bob distance L in km");
        sub->add_option("--distances", distances_spec, "Distance grid start:stop:step in km");
        sub->add_option("--t", cfg.t, "Send probability t");
        sub->add_option("--mu", cfg.mu, "Mean photon number mu");
        sub->add_option("--ed-prime", cfg.ep.interference_misalignment,
                        "Interference-basis misalignment e'_d");
        sub->add_option("--detector-efficiency", cfg.ep.detector_efficiency);
        sub->add_option("--dark-count-rate", cfg.ep.dark_count_rate);
        sub->add_option("--attenuation", cfg.ep.attenuation_db_per_km);
        sub->add_option("--error-correction-efficiency", cfg.ep.error_correction_efficiency);
        sub->add_option("--time-misalignment", cfg.ep.time_misalignment);
        sub->add_option("--n-slots", cfg.n_slots, "Monte Carlo slot count");
        sub->add_option("--seed", cfg.seed, "Simulation seed");
        sub->add_option("--ga-seed", cfg.optimizer.seed, "Optimizer seed");
        sub->add_option("--population", cfg.optimizer.population);
        sub->add_option("--generations", cfg.optimizer.generations);
        sub->add_option("--grid-resolution", cfg.optimizer.grid_resolution);
        sub->add_option("--workers", cfg.workers, "Worker threads (0 = hardware)");
        sub->add_option("--out", cfg.out, "Output path (default stdout)");
        sub->add_option("--format", cfg.format, "Output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
    };

    CLI::App* rate = app.add_subcommand("rate", "Conference key rate breakdown at fixed (t, mu)");
    CLI::App* sweepc = app.add_subcommand("sweep", "Optimized rate and bounds over a distance grid");
    CLI::App* optc = app.add_subcommand("optimize", "GA optimization of (t, mu) at one distance");
    CLI::App* simc = app.add_subcommand("simulate", "Pulse-level Monte Carlo run vs analytic model");
    CLI::App* eqc = app.add_subcommand("equivalence", "Folded two-party vs three-party interference statistics");
    CLI::App* boundsc = app.add_subcommand("bounds", "eta_lim and repeaterless bounds");
    for (CLI::App* sub : {rate, sweepc, optc, simc, eqc, boundsc}) {
        sub->fallthrough();
        add_common(sub);
    }
    simc->add_option("--transcript", transcript_path, "Write per-slot transcript to this path");

    bool distance_given = false;
    try {
        app.parse(argc, argv);
        // Config file first, then re-parse so flags win.
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw std::invalid_argument("cannot open config file: " + config_path);
            json j = json::parse(f);
            from_json(j, cfg);
            distances_spec.clear();
            transcript_path.clear();
            app.clear();
            app.parse(argc, argv);
        }
        if (!distances_spec.empty()) {
            double a, b, s;
            if (std::sscanf(distances_spec.c_str(), "%lf:%lf:%lf", &a, &b, &s) != 3)
                throw std::invalid_argument("--distances expects start:stop:step");
            cfg.dist_start = a;
            cfg.dist_stop = b;
            cfg.dist_step = s;
        }
        CLI::App* sub = app.get_subcommands().front();
        distance_given = sub->count("--distance") > 0;
        if (sub->count("--seed") > 0 && sub->count("--ga-seed") == 0)
            cfg.optimizer.seed = cfg.seed;

        if (dump_config) {
            std::cout << to_json(cfg).dump(2) << "\n";
            return 0;
        }
        cfg.ep.validate();
        if (sub == rate) return cmd_rate(cfg);
        if (sub == sweepc) return cmd_sweep(cfg);
        if (sub == optc) return cmd_optimize(cfg);
        if (sub == simc) return cmd_simulate(cfg, transcript_path);
        if (sub == eqc) return cmd_equivalence(cfg);
        if (sub == boundsc) return cmd_bounds(cfg, distance_given);
        return kExitValidation;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitValidation;
    } catch (const cka::InsufficientStatistics& e) {
        std::cerr << "insufficient statistics: " << e.what() << "\n";
        return kExitInsufficientStats;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
