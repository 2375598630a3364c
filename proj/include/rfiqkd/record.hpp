#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "rfiqkd/optimizer.hpp"
#include "rfiqkd/params.hpp"
#include "rfiqkd/tally.hpp"

namespace rfiqkd {

// JSON record and config formats shared by the CLI and the test suites.
// Tallies are keyed "ZZ.mu" ... "YY.nu".

struct ExperimentRecord {
    double fiber_km = 0;
    double loss_db = 0;
    ProtocolParams protocol;
    SessionParams session;
    TallyTable tallies;
    std::map<std::string, double> published; // reference values, never inputs

    void validate() const {
        protocol.validate();
        session.validate();
        tallies.validate();
        if (!tallies.is_integral())
            throw std::invalid_argument("ExperimentRecord: tallies must be integer counts");
        if (!(loss_db >= 0.0) || !(fiber_km >= 0.0))
            throw std::invalid_argument("ExperimentRecord: negative fiber length or loss");
        for (const auto& [key, value] : published)
            if (!(value > 0.0))
                throw std::invalid_argument("ExperimentRecord: published value '" + key +
                                            "' must be positive");
    }
};

using json = nlohmann::json;

inline void to_json(json& j, const ProtocolParams& pp) {
    j = json{{"mu", pp.mu},   {"nu", pp.nu},   {"p_mu", pp.p_mu}, {"p_nu", pp.p_nu},
             {"p_z", pp.p_z}, {"p_x", pp.p_x}, {"p_y", pp.p_y}};
}

inline void from_json(const json& j, ProtocolParams& pp) {
    j.at("mu").get_to(pp.mu);
    j.at("nu").get_to(pp.nu);
    j.at("p_mu").get_to(pp.p_mu);
    pp.p_nu = j.value("p_nu", 1.0 - pp.p_mu);
    j.at("p_z").get_to(pp.p_z);
    j.at("p_x").get_to(pp.p_x);
    pp.p_y = j.value("p_y", 1.0 - pp.p_z - pp.p_x);
}

inline void to_json(json& j, const SessionParams& s) {
    j = json{{"n_tot", s.n_tot}, {"rep_rate_hz", s.rep_rate_hz}};
}

inline void from_json(const json& j, SessionParams& s) {
    j.at("n_tot").get_to(s.n_tot);
    j.at("rep_rate_hz").get_to(s.rep_rate_hz);
}

inline void to_json(json& j, const ChannelParams& ch) {
    j = json{{"eta_d", ch.eta_d},     {"p_d", ch.p_d},         {"e_d_z", ch.e_d_z},
             {"e_d_xy", ch.e_d_xy},   {"loss_db", ch.loss_db}, {"theta", ch.theta}};
}

inline void from_json(const json& j, ChannelParams& ch) {
    j.at("eta_d").get_to(ch.eta_d);
    j.at("p_d").get_to(ch.p_d);
    j.at("e_d_z").get_to(ch.e_d_z);
    j.at("e_d_xy").get_to(ch.e_d_xy);
    j.at("loss_db").get_to(ch.loss_db);
    j.at("theta").get_to(ch.theta);
}

inline void to_json(json& j, const TallyTable& t) {
    json n = json::object(), m = json::object();
    for (BasisPair p : kAllPairs)
        for (Intensity k : kIntensities) {
            const std::string key = std::string(to_string(p)) + "." + to_string(k);
            n[key] = t.n(p, k);
            m[key] = t.m(p, k);
        }
    j = json{{"n", n}, {"m", m}};
}

inline void from_json(const json& j, TallyTable& t) {
    for (BasisPair p : kAllPairs)
        for (Intensity k : kIntensities) {
            const std::string key = std::string(to_string(p)) + "." + to_string(k);
            t.n(p, k) = j.at("n").at(key).get<double>();
            t.m(p, k) = j.at("m").at(key).get<double>();
        }
}

inline void to_json(json& j, const ExperimentRecord& r) {
    j = json{{"fiber_km", r.fiber_km},
             {"loss_db", r.loss_db},
             {"protocol", r.protocol},
             {"session", r.session},
             {"tallies", r.tallies}};
    if (!r.published.empty()) j["published"] = r.published;
}

inline void from_json(const json& j, ExperimentRecord& r) {
    j.at("fiber_km").get_to(r.fiber_km);
    j.at("loss_db").get_to(r.loss_db);
    j.at("protocol").get_to(r.protocol);
    j.at("session").get_to(r.session);
    j.at("tallies").get_to(r.tallies);
    if (j.contains("published"))
        r.published = j.at("published").get<std::map<std::string, double>>();
}

inline void to_json(json& j, const SearchSpace& s) {
    j = json{{"mu_range", s.mu_range},     {"nu_range", s.nu_range},
             {"p_mu_range", s.p_mu_range}, {"p_z_range", s.p_z_range},
             {"min_gap", s.min_gap},       {"prob_floor", s.prob_floor}};
}

inline void from_json(const json& j, SearchSpace& s) {
    s.mu_range = j.value("mu_range", s.mu_range);
    s.nu_range = j.value("nu_range", s.nu_range);
    s.p_mu_range = j.value("p_mu_range", s.p_mu_range);
    s.p_z_range = j.value("p_z_range", s.p_z_range);
    s.min_gap = j.value("min_gap", s.min_gap);
    s.prob_floor = j.value("prob_floor", s.prob_floor);
}

inline void to_json(json& j, const GAConfig& c) {
    j = json{{"population", c.population},
             {"generations", c.generations},
             {"tournament_size", c.tournament_size},
             {"crossover_rate", c.crossover_rate},
             {"mutation_rate", c.mutation_rate},
             {"mutation_sigma", c.mutation_sigma},
             {"seed", c.seed},
             {"elitism", c.elitism}};
}

inline void from_json(const json& j, GAConfig& c) {
    c.population = j.value("population", c.population);
    c.generations = j.value("generations", c.generations);
    c.tournament_size = j.value("tournament_size", c.tournament_size);
    c.crossover_rate = j.value("crossover_rate", c.crossover_rate);
    c.mutation_rate = j.value("mutation_rate", c.mutation_rate);
    c.mutation_sigma = j.value("mutation_sigma", c.mutation_sigma);
    c.seed = j.value("seed", c.seed);
    c.elitism = j.value("elitism", c.elitism);
}

namespace detail {

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("failed to parse '" + path + "': " + e.what());
    }
    return j;
}

} // namespace detail

inline ExperimentRecord read_record(const std::string& path) {
    ExperimentRecord rec = detail::read_json_file(path).get<ExperimentRecord>();
    rec.validate();
    return rec;
}

inline void write_record(const std::string& path, const ExperimentRecord& rec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << json(rec).dump(2) << '\n';
}

} // namespace rfiqkd
