#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "rfiqkd/params.hpp"
#include "rfiqkd/security.hpp"
#include "rfiqkd/statmodel.hpp"

namespace rfiqkd {

// Search for the operating parameters that maximize the finite-key rate at
// fixed channel parameters: a seeded genetic algorithm, plus an exhaustive
// grid search kept as an independent quality anchor.

struct SearchSpace {
    std::array<double, 2> mu_range = {0.05, 1.0};
    std::array<double, 2> nu_range = {0.01, 0.5};
    std::array<double, 2> p_mu_range = {0.01, 0.99};
    std::array<double, 2> p_z_range = {0.01, 0.98};
    double min_gap = 0.01;    // minimum mu - nu separation
    double prob_floor = 0.01; // minimum value for any probability

    void validate() const {
        for (const auto& r : {mu_range, nu_range, p_mu_range, p_z_range})
            if (!(r[0] <= r[1]) || !(r[0] > 0.0) || !(r[1] <= 1.0))
                throw std::invalid_argument("SearchSpace: ranges must be ordered subsets of (0,1]");
        if (!(min_gap > 0.0)) throw std::invalid_argument("SearchSpace: min_gap must be positive");
        if (!(prob_floor > 0.0 && prob_floor < 0.5))
            throw std::invalid_argument("SearchSpace: prob_floor outside (0,0.5)");
        if (!(mu_range[0] > min_gap))
            throw std::invalid_argument("SearchSpace: mu range leaves no room for the decoy gap");
    }
};

struct GAConfig {
    int population = 64;
    int generations = 200;
    int tournament_size = 4;
    double crossover_rate = 0.9;
    double mutation_rate = 0.1;   // per gene
    double mutation_sigma = 0.05; // Gaussian scale, fraction of the gene range
    std::uint64_t seed = 1;
    int elitism = 2;

    void validate() const {
        if (population < 2) throw std::invalid_argument("GAConfig: population must be >= 2");
        if (generations < 1) throw std::invalid_argument("GAConfig: generations must be >= 1");
        if (tournament_size < 1 || tournament_size > population)
            throw std::invalid_argument("GAConfig: bad tournament size");
        for (double r : {crossover_rate, mutation_rate})
            if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("GAConfig: rates must lie in [0,1]");
        if (!(mutation_sigma > 0.0)) throw std::invalid_argument("GAConfig: mutation_sigma must be positive");
        if (elitism < 0 || elitism >= population) throw std::invalid_argument("GAConfig: bad elitism count");
    }
};

// Genes: mu, nu, p_mu, p_z, p_x. The decoy probability and p_y follow from
// normalization; repair additionally pins p_x = p_y, matching the symmetric
// basis choice of both parties.
struct Candidate {
    std::array<double, 5> genes = {};
    double fitness = 0;
};

namespace detail {

inline std::array<std::array<double, 2>, 5> gene_boxes(const SearchSpace& s) {
    const std::array<std::array<double, 2>, 5> boxes = {
        {s.mu_range,
         s.nu_range,
         {std::max(s.p_mu_range[0], s.prob_floor), std::min(s.p_mu_range[1], 1.0 - s.prob_floor)},
         {std::max(s.p_z_range[0], s.prob_floor), std::min(s.p_z_range[1], 1.0 - 2.0 * s.prob_floor)},
         {s.prob_floor, 0.5}}};
    for (const auto& box : boxes)
        if (box[0] > box[1])
            throw std::invalid_argument("SearchSpace: probability range conflicts with prob_floor");
    return boxes;
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
    std::uint64_t state = seed;
    state ^= 0x9e3779b97f4a7c15ULL + (generation << 32) + index;
    state *= 0xff51afd7ed558ccdULL;
    state ^= state >> 33;
    state *= 0xc4ceb9fe1a85ec53ULL;
    state ^= state >> 33;
    return std::mt19937_64(state);
}

} // namespace detail

/// Project a candidate onto the constraint set: clip every gene to its box,
/// shrink the decoy intensity to keep the gap, and renormalize the basis
/// probabilities with p_x = p_y. Repairing a feasible candidate is the
/// identity.
inline void repair(Candidate& c, const SearchSpace& space) {
    const auto boxes = detail::gene_boxes(space);
    for (std::size_t g = 0; g < c.genes.size(); ++g)
        c.genes[g] = std::clamp(c.genes[g], boxes[g][0], boxes[g][1]);
    c.genes[1] = std::min(c.genes[1], c.genes[0] - space.min_gap); // nu <= mu - gap
    c.genes[4] = (1.0 - c.genes[3]) / 2.0;                         // p_x = p_y
}

inline ProtocolParams decode(const Candidate& c) {
    ProtocolParams pp;
    pp.mu = c.genes[0];
    pp.nu = c.genes[1];
    pp.p_mu = c.genes[2];
    pp.p_nu = 1.0 - pp.p_mu;
    pp.p_z = c.genes[3];
    pp.p_x = c.genes[4];
    pp.p_y = 1.0 - pp.p_z - pp.p_x;
    return pp;
}

/// Fitness F = secret key rate in bit/s of the decoded parameters; any
/// invalid or infeasible intermediate state scores zero.
inline double fitness(const Candidate& c, const ChannelParams& ch, const SessionParams& sess,
                      const EpsilonBudget& eb, double f) {
    try {
        const ProtocolParams pp = decode(c);
        const TallyTable t = expected_tallies(ch, pp, sess);
        const double skr = analyze_tallies(t, pp, eb, sess, f).skr_bits_per_second;
        return std::isfinite(skr) ? std::max(skr, 0.0) : 0.0;
    } catch (const std::exception&) {
        return 0.0;
    }
}

struct OptimizeResult {
    ProtocolParams params;
    SecurityResult result;
    double best_fitness = 0;
};

namespace detail {

inline OptimizeResult finish(const Candidate& best, const ChannelParams& ch,
                             const SessionParams& sess, const EpsilonBudget& eb, double f) {
    if (!(best.fitness > 0.0))
        throw std::runtime_error("optimizer: no feasible operating point (link yields zero rate)");
    OptimizeResult out;
    out.params = decode(best);
    out.result = analyze_tallies(expected_tallies(ch, out.params, sess), out.params, eb, sess, f);
    out.best_fitness = best.fitness;
    return out;
}

} // namespace detail

/// Genetic search over the constrained parameter space. Deterministic for a
/// fixed seed: every stochastic decision draws from a stream derived from
/// (seed, generation, index), and fitness evaluation is pure, so the result
/// does not depend on evaluation order or parallelism. Optional warm-start
/// candidates are repaired and injected into the initial population.
inline OptimizeResult optimize(const ChannelParams& ch, const SessionParams& sess,
                               const EpsilonBudget& eb, double f, const SearchSpace& space,
                               const GAConfig& cfg, std::span<const Candidate> warm = {},
                               std::vector<double>* best_per_generation = nullptr) {
    ch.validate();
    sess.validate();
    space.validate();
    cfg.validate();
    const auto boxes = detail::gene_boxes(space);
    const std::size_t pop_size = static_cast<std::size_t>(cfg.population);

    std::vector<Candidate> pop(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) {
        if (i < warm.size()) {
            pop[i] = warm[i];
        } else {
            auto rng = detail::stream(cfg.seed, 0, i);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            for (std::size_t g = 0; g < 5; ++g)
                pop[i].genes[g] = boxes[g][0] + uni(rng) * (boxes[g][1] - boxes[g][0]);
        }
        repair(pop[i], space);
        pop[i].fitness = fitness(pop[i], ch, sess, eb, f);
    }

    const auto by_fitness = [](const Candidate& a, const Candidate& b) {
        return a.fitness > b.fitness;
    };
    const auto record_best = [&] {
        if (!best_per_generation) return;
        double best = 0.0;
        for (const Candidate& c : pop) best = std::max(best, c.fitness);
        best_per_generation->push_back(best);
    };
    record_best();

    for (int gen = 1; gen <= cfg.generations; ++gen) {
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        std::vector<Candidate> next(pop.begin(), pop.begin() + cfg.elitism);
        next.reserve(pop_size);
        for (std::size_t i = static_cast<std::size_t>(cfg.elitism); i < pop_size; ++i) {
            auto rng = detail::stream(cfg.seed, static_cast<std::uint64_t>(gen), i);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            std::normal_distribution<double> gauss(0.0, 1.0);

            const auto tournament = [&]() -> const Candidate& {
                std::size_t best = static_cast<std::size_t>(uni(rng) * pop_size) % pop_size;
                for (int t = 1; t < cfg.tournament_size; ++t) {
                    const std::size_t idx = static_cast<std::size_t>(uni(rng) * pop_size) % pop_size;
                    if (pop[idx].fitness > pop[best].fitness) best = idx;
                }
                return pop[best];
            };

            const Candidate& pa = tournament();
            const Candidate& pb = tournament();
            Candidate child = pa;
            if (uni(rng) < cfg.crossover_rate)
                for (std::size_t g = 0; g < 5; ++g)
                    if (uni(rng) < 0.5) child.genes[g] = pb.genes[g];
            for (std::size_t g = 0; g < 5; ++g)
                if (uni(rng) < cfg.mutation_rate)
                    child.genes[g] += gauss(rng) * cfg.mutation_sigma * (boxes[g][1] - boxes[g][0]);
            repair(child, space);
            child.fitness = fitness(child, ch, sess, eb, f);
            next.push_back(child);
        }
        pop = std::move(next);
        record_best();
    }

    const Candidate& best = *std::max_element(
        pop.begin(), pop.end(),
        [](const Candidate& a, const Candidate& b) { return a.fitness < b.fitness; });
    return detail::finish(best, ch, sess, eb, f);
}

/// Exhaustive Cartesian grid over the four free genes (p_x is fixed by the
/// repair rule), `resolution` points per axis. Deterministic; the quality
/// anchor for the genetic search.
inline OptimizeResult grid_search(const ChannelParams& ch, const SessionParams& sess,
                                  const EpsilonBudget& eb, double f, const SearchSpace& space,
                                  int resolution) {
    ch.validate();
    sess.validate();
    space.validate();
    if (resolution < 2) throw std::invalid_argument("grid_search: resolution must be >= 2");
    const auto boxes = detail::gene_boxes(space);
    const auto axis = [&](std::size_t g, int i) {
        return boxes[g][0] + (boxes[g][1] - boxes[g][0]) * i / (resolution - 1);
    };

    Candidate best;
    for (int a = 0; a < resolution; ++a)
        for (int b = 0; b < resolution; ++b)
            for (int c = 0; c < resolution; ++c)
                for (int d = 0; d < resolution; ++d) {
                    Candidate cand;
                    cand.genes = {axis(0, a), axis(1, b), axis(2, c), axis(3, d), 0.0};
                    repair(cand, space);
                    cand.fitness = fitness(cand, ch, sess, eb, f);
                    if (cand.fitness > best.fitness) best = cand;
                }
    return detail::finish(best, ch, sess, eb, f);
}

} // namespace rfiqkd
