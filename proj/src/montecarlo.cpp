#include "cka/montecarlo.hpp"
#include "cka/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace cka {

namespace {

// Counter-based per-slot randomness: every slot owns independent streams
// derived from (seed, slot, tag), so chunked execution and neighbor-slot
// lookups reproduce the same draws regardless of scheduling.
constexpr std::uint64_t kTagIntensity = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kTagDetection = 0xbf58476d1ce4e5b9ull;
constexpr std::uint64_t kTagCowTrain = 0x94d049bb133111ebull;
constexpr std::uint64_t kTagCowPorts = 0xd6e8feb86659fd93ull;

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag)
        : state_(mix64(seed ^ mix64(index ^ tag))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_unit() < p; }

private:
    std::uint64_t state_;
};

double click_probability(double mean_photons, double p_d) {
    return -std::expm1(-mean_photons) +
           p_d * std::exp(-mean_photons); // 1 - (1 - p_d) e^-mean
}

struct PortDraw {
    bool dt = false; // parity-correct port
    bool df = false; // parity-wrong port
};

// One neighboring pulse pair entering the interferometer. Interfering
// |a>|a> pairs steer (1 - e'_d) of the light to the correct port; pairs
// with a vacuum pulse split evenly and carry no phase information.
PortDraw interfere_pair(double left, double right, double eta_v, double p_d,
                        double e_d_prime, Stream& rng) {
    const double total = (left + right) * eta_v;
    double mean_t, mean_f;
    if (left > 0.0 && right > 0.0) {
        mean_t = total * (1.0 - e_d_prime);
        mean_f = total * e_d_prime;
    } else {
        mean_t = total / 2.0;
        mean_f = total / 2.0;
    }
    PortDraw out;
    out.dt = rng.bernoulli(click_probability(mean_t, p_d));
    out.df = rng.bernoulli(click_probability(mean_f, p_d));
    return out;
}

struct SlotDraw {
    double alice; // 0 or mu
    double bob;
};

SlotDraw draw_intensities(std::uint64_t seed, std::uint64_t slot,
                          const FreeParams& fp) {
    Stream s(seed, slot, kTagIntensity);
    SlotDraw d;
    d.alice = s.bernoulli(fp.send_probability) ? fp.intensity : 0.0;
    d.bob = s.bernoulli(fp.send_probability) ? fp.intensity : 0.0;
    return d;
}

struct ChunkAccumulator {
    CategoryCounts c_00, c_0a, c_a0, c_aa;
    std::uint64_t dt = 0, df = 0, pairs_aa = 0;
    std::uint64_t clicked_total = 0, ref_errors = 0;
    std::uint64_t encoding_clicked = 0, encoding_errors = 0;
    std::uint64_t discarded = 0, ties = 0;
    std::vector<std::uint8_t> alice_key, bob_key, charlie_key;

    void merge(const ChunkAccumulator& o) {
        auto add = [](CategoryCounts& a, const CategoryCounts& b) {
            a.sent += b.sent;
            a.clicked += b.clicked;
            a.erroneous += b.erroneous;
        };
        add(c_00, o.c_00);
        add(c_0a, o.c_0a);
        add(c_a0, o.c_a0);
        add(c_aa, o.c_aa);
        dt += o.dt;
        df += o.df;
        pairs_aa += o.pairs_aa;
        clicked_total += o.clicked_total;
        ref_errors += o.ref_errors;
        encoding_clicked += o.encoding_clicked;
        encoding_errors += o.encoding_errors;
        discarded += o.discarded;
        ties += o.ties;
        alice_key.insert(alice_key.end(), o.alice_key.begin(), o.alice_key.end());
        bob_key.insert(bob_key.end(), o.bob_key.begin(), o.bob_key.end());
        charlie_key.insert(charlie_key.end(), o.charlie_key.begin(), o.charlie_key.end());
    }
};

void simulate_chunk(const FreeParams& fp, const ExperimentParams& ep,
                    std::uint64_t first, std::uint64_t last, std::uint64_t seed,
                    double eta, ChunkAccumulator& acc,
                    std::vector<SlotOutcome>* transcript) {
    const double p_d = ep.dark_count_rate;
    const double e_d = ep.time_misalignment;
    const double eta_v = eta / kInterferenceLossFactor;

    SlotDraw prev{0.0, 0.0};
    if (first > 1) prev = draw_intensities(seed, first - 1, fp);

    for (std::uint64_t k = first; k <= last; ++k) {
        const SlotDraw cur = draw_intensities(seed, k, fp);
        Stream det(seed, k, kTagDetection);

        // Time basis. Each sender's photons route to the right detector
        // with probability 1 - e_d; both detectors can dark-count.
        const double mean_d1 = eta * (cur.alice * (1.0 - e_d) + cur.bob * e_d);
        const double mean_d2 = eta * (cur.bob * (1.0 - e_d) + cur.alice * e_d);
        const bool d1 = det.bernoulli(click_probability(mean_d1, p_d));
        const bool d2 = det.bernoulli(click_probability(mean_d2, p_d));

        // Interference pairs mapped to this slot: the within-slot pair
        // (a_k, b_k) and the straddling pair (b_{k-1}, a_k).
        const PortDraw within = interfere_pair(
            cur.alice, cur.bob, eta_v, p_d, ep.interference_misalignment, det);
        PortDraw cross{};
        if (k > 1)
            cross = interfere_pair(prev.bob, cur.alice, eta_v, p_d,
                                   ep.interference_misalignment, det);

        const bool time_click = d1 || d2;
        const bool intf_click = within.dt || within.df || cross.dt || cross.df;
        const bool discard = time_click && intf_click;

        // Eq. (1) samples: announced |a>|a> neighbor pairs. The cross-basis
        // discard removes key material only, so the samples stay in.
        const bool within_aa = cur.alice > 0.0 && cur.bob > 0.0;
        const bool cross_aa = k > 1 && prev.bob > 0.0 && cur.alice > 0.0;
        if (within_aa) {
            ++acc.pairs_aa;
            acc.dt += within.dt;
            acc.df += within.df;
        }
        if (cross_aa) {
            ++acc.pairs_aa;
            acc.dt += cross.dt;
            acc.df += cross.df;
        }

        // Charlie's bit for clicked slots; ties resolved by coin flip.
        int charlie_bit = -1;
        Disposition disp = Disposition::no_click;
        if (discard) {
            disp = Disposition::discarded_cross_basis;
            ++acc.discarded;
        } else if (d1 && d2) {
            disp = Disposition::random_tie;
            charlie_bit = det.bernoulli(0.5) ? 1 : 0;
            ++acc.ties;
        } else if (d1) {
            disp = Disposition::key_bit_1;
            charlie_bit = 1;
        } else if (d2) {
            disp = Disposition::key_bit_0;
            charlie_bit = 0;
        } else if (intf_click) {
            disp = Disposition::visibility_sample;
        }
        if (disp == Disposition::discarded_cross_basis) {
            // Charlie still measured a bit; it feeds the error counters but
            // never the key.
            charlie_bit = d1 && d2 ? (det.bernoulli(0.5) ? 1 : 0) : (d1 ? 1 : 0);
        }

        const int alice_bit = cur.alice > 0.0 ? 1 : 0;
        const int bob_bit = cur.bob > 0.0 ? 0 : 1; // post-flip

        CategoryCounts* cat;
        if (cur.alice > 0.0)
            cat = cur.bob > 0.0 ? &acc.c_aa : &acc.c_a0;
        else
            cat = cur.bob > 0.0 ? &acc.c_0a : &acc.c_00;
        ++cat->sent;
        const bool encoding = (cur.alice > 0.0) != (cur.bob > 0.0);
        if (time_click) {
            ++cat->clicked;
            ++acc.clicked_total;
            const bool error = charlie_bit != alice_bit;
            if (error) {
                ++cat->erroneous;
                ++acc.ref_errors;
            }
            if (encoding) {
                ++acc.encoding_clicked;
                if (error) ++acc.encoding_errors;
            }
        }

        if (encoding && time_click && !discard) {
            acc.alice_key.push_back(std::uint8_t(alice_bit));
            acc.bob_key.push_back(std::uint8_t(bob_bit));
            acc.charlie_key.push_back(std::uint8_t(charlie_bit));
        }

        if (transcript) {
            SlotOutcome& o = (*transcript)[k - 1];
            o.index = k;
            o.alice_intensity = cur.alice;
            o.bob_intensity = cur.bob;
            o.d1_click = d1;
            o.d2_click = d2;
            // Within-slot pairs land on even interferometer slots (D4 is the
            // parity-correct port there), straddling pairs on odd ones (D3).
            o.d3_click = within.df || cross.dt;
            o.d4_click = within.dt || cross.df;
            o.disposition = disp;
        }

        prev = cur;
    }
}

Estimate proportion(std::uint64_t hits, std::uint64_t n) {
    if (n == 0) return {};
    const double p = double(hits) / double(n);
    return {p, std::sqrt(p * (1.0 - p) / double(n))};
}

} // namespace

const char* to_string(Disposition d) {
    switch (d) {
    case Disposition::key_bit_0: return "key-bit-0";
    case Disposition::key_bit_1: return "key-bit-1";
    case Disposition::random_tie: return "random-tie";
    case Disposition::discarded_cross_basis: return "discarded-cross-basis";
    case Disposition::visibility_sample: return "visibility-sample";
    case Disposition::no_click: return "no-click";
    }
    return "?";
}

TranscriptStats run_protocol(const FreeParams& fp, const ExperimentParams& ep,
                             std::uint64_t n_slots, std::uint64_t seed,
                             int workers, std::vector<SlotOutcome>* transcript) {
    fp.validate();
    ep.validate();
    if (n_slots < 1) throw std::invalid_argument("n_slots must be >= 1");
    if (n_slots > (std::uint64_t(1) << 62))
        throw std::invalid_argument("n_slots overflows the slot counters");

    const double eta = channel_efficiency(ep);
    if (transcript) transcript->assign(n_slots, SlotOutcome{});

    if (workers <= 0) workers = int(std::max(1u, std::thread::hardware_concurrency()));
    const std::uint64_t min_chunk = 1u << 14;
    std::uint64_t n_chunks =
        std::min<std::uint64_t>(std::uint64_t(workers), (n_slots + min_chunk - 1) / min_chunk);
    n_chunks = std::max<std::uint64_t>(n_chunks, 1);

    std::vector<ChunkAccumulator> parts(n_chunks);
    auto run_part = [&](std::uint64_t c) {
        const std::uint64_t first = 1 + c * n_slots / n_chunks;
        const std::uint64_t last = (c + 1) * n_slots / n_chunks;
        simulate_chunk(fp, ep, first, last, seed, eta, parts[c], transcript);
    };
    if (n_chunks == 1) {
        run_part(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_chunks);
        for (std::uint64_t c = 0; c < n_chunks; ++c)
            pool.emplace_back(run_part, c);
        for (auto& th : pool) th.join();
    }

    ChunkAccumulator total;
    for (const auto& p : parts) total.merge(p);

    TranscriptStats s;
    s.n_slots = n_slots;
    s.fp = fp;
    s.c_00 = total.c_00;
    s.c_0a = total.c_0a;
    s.c_a0 = total.c_a0;
    s.c_aa = total.c_aa;
    s.dt_count = total.dt;
    s.df_count = total.df;
    s.interference_pairs_aa = total.pairs_aa;
    s.alice_key = std::move(total.alice_key);
    s.bob_key = std::move(total.bob_key);
    s.charlie_key = std::move(total.charlie_key);
    s.discarded_cross_basis = total.discarded;
    s.random_ties = total.ties;

    s.q_00 = proportion(total.c_00.clicked, total.c_00.sent);
    s.q_0a = proportion(total.c_0a.clicked, total.c_0a.sent);
    s.q_a0 = proportion(total.c_a0.clicked, total.c_a0.sent);
    s.q_aa = proportion(total.c_aa.clicked, total.c_aa.sent);
    s.e_t = proportion(total.encoding_errors, total.encoding_clicked);
    s.q_mu = proportion(total.clicked_total, n_slots);
    s.e_mu = proportion(total.ref_errors, total.clicked_total);
    if (total.dt + total.df > 0) {
        const Estimate e_v = proportion(total.df, total.dt + total.df);
        s.visibility = {1.0 - 2.0 * e_v.value, 2.0 * e_v.std_error};
    }
    return s;
}

double empirical_key_rate(const TranscriptStats& stats, const ExperimentParams& ep) {
    ep.validate();
    if (stats.n_slots == 0 || stats.c_0a.sent == 0 || stats.c_a0.sent == 0)
        throw InsufficientStatistics("no encoding pairs were sent");
    if (stats.c_0a.clicked + stats.c_a0.clicked == 0)
        throw InsufficientStatistics("no time-basis clicks in the encoding categories");
    if (stats.dt_count + stats.df_count == 0)
        throw InsufficientStatistics("no interference clicks: visibility undefined");
    const std::uint64_t clicked_total =
        stats.c_00.clicked + stats.c_0a.clicked + stats.c_a0.clicked + stats.c_aa.clicked;
    if (clicked_total == 0)
        throw InsufficientStatistics("no time-basis clicks at all");

    const double t = stats.fp.send_probability;
    const double mu = stats.fp.intensity;
    const double vis = std::clamp(stats.visibility.value, 0.0, 1.0);
    const double z = zeta(mu, vis);
    const double h_z = binary_entropy(std::clamp((1.0 + z) / 2.0, 0.0, 1.0));
    const double keep = 1.0 - stats.e_t.value - (1.0 - stats.e_t.value) * h_z;
    const double leak = stats.q_mu.value * ep.error_correction_efficiency *
                        binary_entropy(std::clamp(stats.e_mu.value, 0.0, 0.5));
    const double r =
        t * (1.0 - t) * (stats.q_0a.value + stats.q_a0.value) * keep - leak;
    return std::max(r, 0.0);
}

EquivalenceStats folding_equivalence_stats(const FreeParams& fp,
                                           const ExperimentParams& ep,
                                           std::uint64_t n_slots,
                                           std::uint64_t seed) {
    // (a) the three-party protocol run
    const TranscriptStats cka = run_protocol(fp, ep, n_slots, seed);

    // (b) folded two-party run: one sender emits the whole 2N-pulse train,
    // each pulse |a> with probability t; same interferometer model.
    fp.validate();
    ep.validate();
    const double eta_v = channel_efficiency(ep) / kInterferenceLossFactor;
    const std::uint64_t n_pulses = 2 * n_slots;
    auto pulse_intensity = [&](std::uint64_t j) {
        Stream s(seed, j, kTagCowTrain);
        return s.bernoulli(fp.send_probability) ? fp.intensity : 0.0;
    };
    std::uint64_t dt = 0, df = 0, pairs_aa = 0;
    double prev = pulse_intensity(1);
    for (std::uint64_t j = 2; j <= n_pulses; ++j) {
        const double cur = pulse_intensity(j);
        Stream ports(seed, j, kTagCowPorts);
        const PortDraw d = interfere_pair(prev, cur, eta_v, ep.dark_count_rate,
                                          ep.interference_misalignment, ports);
        if (prev > 0.0 && cur > 0.0) {
            ++pairs_aa;
            dt += d.dt;
            df += d.df;
        }
        prev = cur;
    }

    EquivalenceStats out;
    auto fill = [](Estimate& p_dt, Estimate& p_df, Estimate& v, std::uint64_t ndt,
                   std::uint64_t ndf, std::uint64_t pairs) {
        if (pairs == 0) return;
        p_dt = {double(ndt) / double(pairs),
                std::sqrt(double(ndt) / double(pairs) *
                          (1.0 - double(ndt) / double(pairs)) / double(pairs))};
        p_df = {double(ndf) / double(pairs),
                std::sqrt(double(ndf) / double(pairs) *
                          (1.0 - double(ndf) / double(pairs)) / double(pairs))};
        if (ndt + ndf > 0) {
            const double e = double(ndf) / double(ndt + ndf);
            v = {1.0 - 2.0 * e, 2.0 * std::sqrt(e * (1.0 - e) / double(ndt + ndf))};
        }
    };
    fill(out.p_dt_cka, out.p_df_cka, out.v_cka, cka.dt_count, cka.df_count,
         cka.interference_pairs_aa);
    fill(out.p_dt_cow, out.p_df_cow, out.v_cow, dt, df, pairs_aa);
    out.v_difference = out.v_cka.value - out.v_cow.value;
    out.v_combined_std_error = std::hypot(out.v_cka.std_error, out.v_cow.std_error);
    return out;
}

} // namespace cka
