// Command-line front end: secret-key-rate reports from tally records,
// regression checks against the bundled reference dataset, loss sweeps,
// parameter optimization and Monte Carlo session simulation.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rfiqkd/mcoracle.hpp"
#include "rfiqkd/optimizer.hpp"
#include "rfiqkd/record.hpp"
#include "rfiqkd/security.hpp"

namespace fs = std::filesystem;
using namespace rfiqkd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1; // verification failed or link infeasible
constexpr int kExitInput = 2;   // parse / validation errors

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

struct AnalysisFlags {
    double epsilon1 = EpsilonBudget{}.eps_1;
    double epsilon2 = EpsilonBudget{}.eps_2;
    double f = 1.16;

    EpsilonBudget budget() const {
        EpsilonBudget eb;
        eb.eps_1 = epsilon1;
        eb.eps_2 = epsilon2;
        return eb;
    }
};

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& fl) {
    cmd->add_option("--epsilon1", fl.epsilon1, "Hoeffding failure probability for counts");
    cmd->add_option("--epsilon2", fl.epsilon2, "Hoeffding failure probability for error counts");
    cmd->add_option("--f", fl.f, "error-correction efficiency (>= 1)");
}

json result_to_json(const SecurityResult& r) {
    return json{{"c", r.c_value},
                {"e_zz_1u", r.e_zz_1u},
                {"e_zz", r.e_zz},
                {"s0_lower", r.s0_lower},
                {"s1_lower", r.s1_lower},
                {"u", r.u_value},
                {"v", r.v_value},
                {"i_e_upper", r.i_e_upper},
                {"skr_per_pulse", r.skr_per_pulse},
                {"skr_bps", r.skr_bits_per_second}};
}

void print_result(const SecurityResult& r) {
    std::printf("C          = %s\n", num(r.c_value).c_str());
    std::printf("e_zz_1u    = %s\n", num(r.e_zz_1u).c_str());
    std::printf("E_zz       = %s\n", num(r.e_zz).c_str());
    std::printf("s0_lower   = %s\n", num(r.s0_lower).c_str());
    std::printf("s1_lower   = %s\n", num(r.s1_lower).c_str());
    std::printf("I_E_upper  = %s\n", num(r.i_e_upper).c_str());
    std::printf("R          = %s\n", num(r.skr_per_pulse).c_str());
    std::printf("SKR_bps    = %s\n", num(r.skr_bits_per_second).c_str());
}

int cmd_skr(const std::string& input, const std::string& output, const AnalysisFlags& fl) {
    const ExperimentRecord rec = read_record(input);
    const SecurityResult r =
        analyze_tallies(rec.tallies, rec.protocol, fl.budget(), rec.session, fl.f);
    print_result(r);
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw std::runtime_error("cannot write '" + output + "'");
        out << result_to_json(r).dump(2) << '\n';
    }
    return kExitOk;
}

struct VerifyTolerances {
    double e_zz_pp = 0.01;   // percentage points
    double c_abs = 0.03;
    double e1u_pp = 0.15;    // percentage points
    double s1_rel = 0.02;
    double skr_rel = 0.10;
};

int cmd_verify(const std::string& dataset_dir, const AnalysisFlags& fl) {
    std::vector<std::string> files;
    if (!fs::is_directory(dataset_dir))
        throw std::runtime_error("dataset directory '" + dataset_dir + "' does not exist");
    for (const auto& entry : fs::directory_iterator(dataset_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no record files in '" + dataset_dir + "'");

    const VerifyTolerances tol;
    bool all_ok = true;
    std::printf("%8s %10s %10s %10s %10s %10s   %s\n", "km", "dE_zz[pp]", "dC", "de1u[pp]",
                "ds1[%]", "dSKR[%]", "status");
    for (const std::string& file : files) {
        const ExperimentRecord rec = read_record(file);
        const SecurityResult r =
            analyze_tallies(rec.tallies, rec.protocol, fl.budget(), rec.session, fl.f);
        const auto pub = [&](const char* key) {
            const auto it = rec.published.find(key);
            if (it == rec.published.end())
                throw std::runtime_error(file + ": missing published value '" + key + "'");
            return it->second;
        };
        const double d_ezz = (r.e_zz - pub("e_zz")) * 100.0;
        const double d_c = r.c_value - pub("c");
        const double d_e1u = (r.e_zz_1u - pub("e_zz_1u")) * 100.0;
        const double d_s1 = r.s1_lower / pub("s1_lower") - 1.0;
        const double d_skr = r.skr_bits_per_second / pub("skr_bps") - 1.0;
        const bool ok = std::abs(d_ezz) <= tol.e_zz_pp && std::abs(d_c) <= tol.c_abs &&
                        std::abs(d_e1u) <= tol.e1u_pp && std::abs(d_s1) <= tol.s1_rel &&
                        std::abs(d_skr) <= tol.skr_rel;
        all_ok = all_ok && ok;
        std::printf("%8s %10.4f %10.4f %10.4f %10.3f %10.2f   %s\n", num(rec.fiber_km).c_str(),
                    d_ezz, d_c, d_e1u, d_s1 * 100.0, d_skr * 100.0, ok ? "PASS" : "FAIL");
    }
    std::printf("verify: %s\n", all_ok ? "all rows PASS" : "FAILURES present");
    return all_ok ? kExitOk : kExitFailure;
}

struct SweepConfig {
    ChannelParams channel;
    SessionParams session;
    std::optional<ProtocolParams> protocol;
    SearchSpace space;
    GAConfig ga;
};

SweepConfig read_sweep_config(const std::string& path) {
    const json j = rfiqkd::detail::read_json_file(path);
    SweepConfig cfg;
    j.at("channel").get_to(cfg.channel);
    j.at("session").get_to(cfg.session);
    if (j.contains("protocol")) cfg.protocol = j.at("protocol").get<ProtocolParams>();
    if (j.contains("space")) j.at("space").get_to(cfg.space);
    if (j.contains("ga")) j.at("ga").get_to(cfg.ga);
    return cfg;
}

int cmd_sweep(const std::string& input, const std::string& output, double from, double to,
              double step, bool do_optimize, std::uint64_t seed, const AnalysisFlags& fl) {
    if (!(step > 0.0)) throw std::runtime_error("sweep: step must be positive");
    SweepConfig cfg = read_sweep_config(input);
    cfg.channel.validate();
    cfg.session.validate();
    if (!do_optimize && !cfg.protocol)
        throw std::runtime_error("sweep: fixed-parameter sweep needs a 'protocol' block");

    std::vector<double> losses;
    for (std::size_t i = 0; from + static_cast<double>(i) * step <= to + 1e-9; ++i)
        losses.push_back(from + static_cast<double>(i) * step);
    if (losses.empty()) throw std::runtime_error("sweep: empty loss range");

    const EpsilonBudget eb = fl.budget();
    struct Row {
        double loss;
        ProtocolParams pp;
        double skr = 0;
    };
    std::vector<Row> rows(losses.size());

    const auto fallback_params = [&]() {
        if (cfg.protocol) return *cfg.protocol;
        Candidate mid;
        const auto boxes = rfiqkd::detail::gene_boxes(cfg.space);
        for (std::size_t g = 0; g < 5; ++g) mid.genes[g] = (boxes[g][0] + boxes[g][1]) / 2.0;
        repair(mid, cfg.space);
        return decode(mid);
    }();

    const auto run_point = [&](std::size_t i) {
        ChannelParams ch = cfg.channel;
        ch.loss_db = losses[i];
        Row& row = rows[i];
        row.loss = losses[i];
        row.pp = fallback_params;
        try {
            if (do_optimize) {
                GAConfig ga = cfg.ga;
                ga.seed = seed + i; // independent deterministic stream per point
                const OptimizeResult best = optimize(ch, cfg.session, eb, fl.f, cfg.space, ga);
                row.pp = best.params;
                row.skr = best.result.skr_bits_per_second;
            } else {
                const TallyTable t = expected_tallies(ch, *cfg.protocol, cfg.session);
                row.skr = analyze_tallies(t, *cfg.protocol, eb, cfg.session, fl.f)
                              .skr_bits_per_second;
            }
        } catch (const std::exception&) {
            row.skr = 0.0; // infeasible point: beyond the cutoff
        }
    };

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::size_t>(hw, losses.size()));
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < n_threads; ++w)
        workers.emplace_back([&, w] {
            for (std::size_t i = w; i < losses.size(); i += n_threads) run_point(i);
        });
    for (auto& t : workers) t.join();

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!output.empty() && output != "-") {
        file.open(output);
        if (!file) throw std::runtime_error("cannot write '" + output + "'");
        os = &file;
    }
    *os << "loss_db,mu,nu,p_mu,p_z,p_x,skr_bps\n";
    for (const Row& row : rows)
        *os << num(row.loss) << ',' << num(row.pp.mu) << ',' << num(row.pp.nu) << ','
            << num(row.pp.p_mu) << ',' << num(row.pp.p_z) << ',' << num(row.pp.p_x) << ','
            << num(row.skr) << '\n';
    return kExitOk;
}

struct OptimizeFile {
    ChannelParams channel;
    SessionParams session;
    SearchSpace space;
    GAConfig ga;
};

OptimizeFile read_optimize_config(const std::string& path) {
    const json j = rfiqkd::detail::read_json_file(path);
    OptimizeFile cfg;
    j.at("channel").get_to(cfg.channel);
    j.at("session").get_to(cfg.session);
    if (j.contains("space")) j.at("space").get_to(cfg.space);
    if (j.contains("ga")) j.at("ga").get_to(cfg.ga);
    return cfg;
}

int cmd_optimize(const std::string& input, const std::string& output, std::uint64_t seed,
                 bool seed_given, const AnalysisFlags& fl) {
    OptimizeFile cfg = read_optimize_config(input);
    if (seed_given) cfg.ga.seed = seed;
    const OptimizeResult best =
        optimize(cfg.channel, cfg.session, fl.budget(), fl.f, cfg.space, cfg.ga);
    std::printf("seed       = %" PRIu64 "\n", cfg.ga.seed);
    std::printf("mu         = %s\n", num(best.params.mu).c_str());
    std::printf("nu         = %s\n", num(best.params.nu).c_str());
    std::printf("p_mu       = %s\n", num(best.params.p_mu).c_str());
    std::printf("p_z        = %s\n", num(best.params.p_z).c_str());
    std::printf("p_x        = %s\n", num(best.params.p_x).c_str());
    print_result(best.result);
    if (!output.empty()) {
        std::ofstream out(output);
        if (!out) throw std::runtime_error("cannot write '" + output + "'");
        out << json{{"seed", cfg.ga.seed},
                    {"protocol", best.params},
                    {"result", result_to_json(best.result)}}
                   .dump(2)
            << '\n';
    }
    return kExitOk;
}

int cmd_simulate(const std::string& input, const std::string& output, std::uint64_t seed,
                 bool seed_given) {
    const json j = rfiqkd::detail::read_json_file(input);
    SimConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    if (seed_given) cfg.seed = seed;
    cfg.pulses = j.at("pulses").get<std::uint64_t>();
    j.at("channel").get_to(cfg.ch);
    j.at("protocol").get_to(cfg.pp);
    cfg.validate();

    ExperimentRecord rec;
    rec.fiber_km = j.value("fiber_km", 0.0);
    rec.loss_db = cfg.ch.loss_db;
    rec.protocol = cfg.pp;
    rec.session.n_tot = static_cast<double>(cfg.pulses);
    rec.session.rep_rate_hz = j.value("rep_rate_hz", SessionParams{}.rep_rate_hz);
    rec.tallies = simulate_session(cfg);

    std::printf("seed       = %" PRIu64 "\n", cfg.seed);
    for (BasisPair p : kAllPairs)
        for (Intensity k : kIntensities)
            std::printf("n[%s.%s] = %.0f  m[%s.%s] = %.0f\n", to_string(p), to_string(k),
                        rec.tallies.n(p, k), to_string(p), to_string(k), rec.tallies.m(p, k));
    if (!output.empty()) write_record(output, rec);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) try {
    CLI::App app{"Finite-key modeling and analysis for decoy-state RFI QKD"};
    app.require_subcommand(1);

    AnalysisFlags fl;
    std::string input, output;
    std::string dataset_dir = "data";
    double from = 0, to = 0, step = 1.0;
    bool do_optimize = false;
    std::uint64_t seed = 1;

    auto* skr = app.add_subcommand("skr", "finite-key analysis of a tally record");
    skr->add_option("--input", input, "experiment record (JSON)")->required();
    skr->add_option("--output", output, "write the report as JSON");
    add_analysis_flags(skr, fl);

    auto* verify = app.add_subcommand("verify", "check the bundled reference dataset");
    verify->add_option("--input", dataset_dir, "directory of record files");
    add_analysis_flags(verify, fl);

    auto* sweep = app.add_subcommand("sweep", "secret key rate vs total loss (CSV)");
    sweep->add_option("--input", input, "sweep template (JSON)")->required();
    sweep->add_option("--output", output, "CSV path ('-' for stdout)");
    sweep->add_option("--from", from, "first loss value, dB")->required();
    sweep->add_option("--to", to, "last loss value, dB")->required();
    sweep->add_option("--step", step, "loss step, dB");
    sweep->add_flag("--optimize", do_optimize, "re-optimize parameters at every point");
    sweep->add_option("--seed", seed, "optimizer seed");
    add_analysis_flags(sweep, fl);

    auto* optimize_cmd = app.add_subcommand("optimize", "search for optimal operating parameters");
    optimize_cmd->add_option("--input", input, "optimizer config (JSON)")->required();
    optimize_cmd->add_option("--output", output, "write the report as JSON");
    auto* opt_seed = optimize_cmd->add_option("--seed", seed, "override the config seed");
    add_analysis_flags(optimize_cmd, fl);

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo session -> tally record");
    simulate->add_option("--input", input, "simulation config (JSON)")->required();
    simulate->add_option("--output", output, "record path (consumable by 'skr')");
    auto* sim_seed = simulate->add_option("--seed", seed, "override the config seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (skr->parsed()) return cmd_skr(input, output, fl);
        if (verify->parsed()) return cmd_verify(dataset_dir, fl);
        if (sweep->parsed()) return cmd_sweep(input, output, from, to, step, do_optimize, seed, fl);
        if (optimize_cmd->parsed())
            return cmd_optimize(input, output, seed, !opt_seed->empty(), fl);
        if (simulate->parsed()) return cmd_simulate(input, output, seed, !sim_seed->empty());
    } catch (const std::runtime_error& e) {
        // runtime_error carries infeasibility (optimizer) and I/O problems;
        // distinguish infeasible links so scripts can branch on it.
        const std::string what = e.what();
        std::cerr << "error: " << what << '\n';
        return what.find("no feasible operating point") != std::string::npos ? kExitFailure
                                                                             : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
} catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
}
