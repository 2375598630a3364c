#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "rfiqkd/params.hpp"
#include "rfiqkd/security.hpp"
#include "rfiqkd/statmodel.hpp"
#include "rfiqkd/tally.hpp"

namespace rfiqkd {

// Pulse-level Monte Carlo simulation of a session. Detector clicks are drawn
// as independent Bernoulli trials on the per-detector click probabilities and
// every click is tallied, so the expectation reproduces the analytic gain
// Q = (sum of the four click probabilities) / 2 including its double-count
// convention; exclusive-outcome sampling would not.

struct SimConfig {
    std::uint64_t seed = 1;
    std::uint64_t pulses = 1;
    ChannelParams ch;
    ProtocolParams pp;

    void validate() const {
        if (pulses < 1) throw std::invalid_argument("SimConfig: pulses must be >= 1");
        ch.validate();
        pp.validate();
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Tiny counter-based generator: each (seed, batch) pair owns an independent
// stream, so merged results do not depend on scheduling.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t init = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL);
        for (auto& w : s_) w = splitmix64(init);
    }

    std::uint64_t next_u64() { // xoshiro256**
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

struct RawCounts {
    std::int64_t n[5][2] = {};
    std::int64_t m[5][2] = {};
};

// -1 when the bases are discarded in sifting.
inline int pair_index(int alice_basis, int bob_basis) {
    if (alice_basis == 0 || bob_basis == 0) return alice_basis == bob_basis ? 0 : -1; // ZZ
    if (alice_basis == 1) return bob_basis == 1 ? 1 : 2;                              // XX / XY
    return bob_basis == 1 ? 3 : 4;                                                    // YX / YY
}

inline void simulate_batch(const SimConfig& cfg, std::uint64_t batch, std::uint64_t count,
                           RawCounts& out) {
    Rng rng(cfg.seed, batch);
    const ProtocolParams& pp = cfg.pp;

    // Click probabilities per (pair, intensity), fixed over the batch.
    PairProbabilities probs[5][2];
    double e_d[5];
    for (int pi = 0; pi < 5; ++pi) {
        const BasisPair pair = kAllPairs[static_cast<std::size_t>(pi)];
        probs[pi][0] = pair_probabilities(cfg.ch, pair, pp.mu);
        probs[pi][1] = pair_probabilities(cfg.ch, pair, pp.nu);
        e_d[pi] = pair == BasisPair::ZZ ? cfg.ch.e_d_z : cfg.ch.e_d_xy;
    }

    const auto draw_basis = [&]() {
        const double u = rng.next_double();
        if (u < pp.p_z) return 0;
        return u < pp.p_z + pp.p_x ? 1 : 2;
    };

    for (std::uint64_t i = 0; i < count; ++i) {
        const int ki = rng.next_double() < pp.p_mu ? 0 : 1;
        const int alice = draw_basis();
        const int bob = draw_basis();
        const bool bit = rng.next_u64() & 1u;
        const int pi = pair_index(alice, bob);
        if (pi < 0) continue;

        const PairProbabilities& p = probs[pi][ki];
        const double p_correct = bit ? p.p11 : p.p00;
        const double p_wrong = bit ? p.p10 : p.p01;
        const bool click_correct = rng.next_double() < p_correct;
        const bool click_wrong = rng.next_double() < p_wrong;

        for (bool is_error : {false, true}) {
            const bool clicked = is_error ? click_wrong : click_correct;
            if (!clicked) continue;
            bool error = is_error;
            if (rng.next_double() < e_d[pi]) error = !error; // intrinsic optical flip
            out.n[pi][ki] += 1;
            if (error) out.m[pi][ki] += 1;
        }
    }
}

} // namespace detail

/// Simulate a full session and return integer-valued tallies. Pulses are
/// processed in fixed-size batches with per-batch RNG streams; the result
/// depends only on (seed, pulses), not on the thread count. As in the
/// analytic model, a basis pair whose observed error rate exceeds one half
/// has its bit assignment flipped (m -> n - m) during sifting.
inline TallyTable simulate_session(const SimConfig& cfg, unsigned n_threads = 0) {
    cfg.validate();
    constexpr std::uint64_t kBatch = 1u << 20;
    const std::uint64_t batches = (cfg.pulses + kBatch - 1) / kBatch;
    if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::uint64_t>(n_threads, batches));

    std::vector<detail::RawCounts> partial(n_threads);
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
        workers.emplace_back([&, w] {
            for (std::uint64_t b = w; b < batches; b += n_threads) {
                const std::uint64_t begin = b * kBatch;
                const std::uint64_t count = std::min(kBatch, cfg.pulses - begin);
                detail::simulate_batch(cfg, b, count, partial[w]);
            }
        });
    }
    for (auto& t : workers) t.join();

    detail::RawCounts total;
    for (const auto& pc : partial)
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 2; ++j) {
                total.n[i][j] += pc.n[i][j];
                total.m[i][j] += pc.m[i][j];
            }

    TallyTable t;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) {
            const BasisPair pair = kAllPairs[static_cast<std::size_t>(i)];
            const Intensity k = kIntensities[static_cast<std::size_t>(j)];
            std::int64_t n = total.n[i][j];
            std::int64_t m = total.m[i][j];
            if (2 * m > n) m = n - m;
            t.n(pair, k) = static_cast<double>(n);
            t.m(pair, k) = static_cast<double>(m);
        }
    return t;
}

/// Sampled-session secret key rate: simulate, then run the finite-key
/// analysis on the sampled tallies.
inline SecurityResult end_to_end_skr(const SimConfig& cfg, const EpsilonBudget& eb, double f,
                                     const SessionParams& sess, unsigned n_threads = 0) {
    return analyze_tallies(simulate_session(cfg, n_threads), cfg.pp, eb, sess, f);
}

} // namespace rfiqkd
