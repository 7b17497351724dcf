// sastab: command-line front end for stabilized stochastic approximation runs.
//
// Exit codes: 0 success, 1 verification failure, 2 config error,
// 3 every seed overflowed.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sastab/analysis.hpp"
#include "sastab/config.hpp"
#include "sastab/engine.hpp"
#include "sastab/ode.hpp"
#include "sastab/stabilizer.hpp"
#include "sastab/trace_io.hpp"

namespace {

using namespace sastab;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 1;
constexpr int kExitConfig = 2;
constexpr int kExitOverflow = 3;

constexpr std::uint64_t kStabilizerSeed = 0x57AB1E;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::optional<std::size_t> horizon;
    std::string out;
    std::string mode;
    std::optional<unsigned> workers;
    std::vector<double> x0;
    std::optional<double> T;
    std::string trace;
};

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename T>
json nullable(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

ExperimentConfig load(const Options& opt) {
    ExperimentConfig cfg = load_config(opt.config);
    if (opt.seed) {
        cfg.seed = *opt.seed;
        cfg.seeds = {*opt.seed};
    }
    if (!opt.seeds.empty()) {
        cfg.seeds = parse_seed_list(opt.seeds);
    }
    if (opt.horizon) {
        if (*opt.horizon < 1) {
            throw ConfigError("--horizon must be >= 1");
        }
        cfg.horizon = *opt.horizon;
    }
    if (!opt.mode.empty()) {
        cfg.mode.kind = parse_mode(opt.mode);
        if (cfg.mode.kind == Mode::Projection && !(cfg.mode.radius > 0.0)) {
            throw ConfigError("projection mode needs run.radius in the config");
        }
    }
    if (opt.workers) {
        cfg.workers = *opt.workers;
    }
    if (!opt.x0.empty()) {
        if (opt.x0.size() != cfg.problem.dim) {
            throw ConfigError("--x0 must have " + std::to_string(cfg.problem.dim) + " component(s)");
        }
        cfg.x0 = opt.x0;
    }
    return cfg;
}

std::optional<StabilizerConfig> build_stabilizer(const ExperimentConfig& cfg) {
    Rng rng(kStabilizerSeed);
    std::optional<int> N = cfg.N;
    if (cfg.N_infinite) {
        N.reset();
    } else if (!N) {
        N = choose_N(cfg.problem, cfg.M, cfg.samples, cfg.box, rng);
    }
    return make_stabilizer(cfg.problem, cfg.M, N, cfg.margin, cfg.samples, cfg.box, rng, cfg.workers);
}

RunConfig run_config(const ExperimentConfig& cfg) {
    RunConfig rc;
    rc.problem = cfg.problem_name;
    rc.mode = cfg.mode;
    rc.x0 = cfg.x0;
    rc.horizon = cfg.horizon;
    rc.seed = cfg.seed;
    if (cfg.mode.kind == Mode::Adaptive) {
        rc.stabilizer = build_stabilizer(cfg);
    }
    return rc;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path + "' for writing");
    }
    out << text << '\n';
}

int cmd_run(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const RunConfig rc = run_config(cfg);
    const Trajectory traj = run(cfg.problem, rc);
    const std::string path = !opt.out.empty() ? opt.out : cfg.trace_path;
    if (!path.empty()) {
        write_trace(traj, std::filesystem::path(path));
    }
    const RunSummary s = summarize_run(traj, cfg.problem, &cfg.diagnostics);
    std::cerr << "problem=" << cfg.problem_name << " mode=" << to_string(cfg.mode.kind) << " seed=" << rc.seed
              << " steps=" << s.steps << " overflow=" << (s.overflow ? "yes" : "no")
              << " sup_norm=" << format_double(s.sup_norm)
              << " last_scaled=" << (s.last_scaled ? std::to_string(*s.last_scaled) : "none")
              << " terminal_W=" << format_double(s.terminal_W) << '\n';
    if (path.empty()) {
        write_trace(traj, std::cout);
    }
    return s.overflow ? kExitOverflow : kExitOk;
}

int cmd_ensemble(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const RunConfig rc = run_config(cfg);
    EnsembleOptions eo;
    eo.workers = cfg.workers;
    eo.diagnostics = &cfg.diagnostics;
    const EnsembleResult result = run_ensemble(cfg.problem, rc, cfg.seeds, eo);
    const std::string path = !opt.out.empty() ? opt.out : cfg.summary_path;
    emit(summary_json(result.summaries), path);

    std::size_t overflowed = 0;
    for (const auto& s : result.summaries) {
        overflowed += s.overflow ? 1 : 0;
    }
    std::cerr << "ensemble: " << result.summaries.size() << " runs, " << overflowed << " overflowed\n";
    return overflowed == result.summaries.size() ? kExitOverflow : kExitOk;
}

int cmd_verify(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const SAProblem& p = cfg.problem;
    Rng rng(kStabilizerSeed);
    bool ok = true;
    json report;

    std::vector<Vec> points;
    for (int i = 0; i < 100; ++i) {
        points.push_back(cfg.box.sample(rng));
    }
    const auto grad = gradient_check(p.lyapunov, points, 1e-5);
    report["gradient_check"] = {{"pass", grad.pass}, {"worst_discrepancy", grad.worst_discrepancy}};
    ok = ok && grad.pass;

    const auto descent = check_descent(p, cfg.M, cfg.diagnostics.m, cfg.samples, rng, cfg.box);
    report["check_descent"] = {{"pass", descent.pass},
                               {"sup_Wdot", nullable(descent.sup_Wdot)},
                               {"worst_point", descent.worst_point},
                               {"samples", descent.samples}};
    ok = ok && descent.pass;

    std::vector<Vec> audit_points{cfg.box.center(), cfg.box.sample(rng), cfg.box.sample(rng)};
    const auto audit = audit_noise(p.noise, audit_points, 20000, rng);
    report["noise_audit"] = {{"pass", audit.pass}};
    ok = ok && audit.pass;

    const double K = lipschitz_estimate(p.drift, cfg.box, 10000, rng);
    report["lipschitz_estimate"] = nullable(K);

    std::optional<int> N = cfg.N;
    if (!cfg.N_infinite && !N) {
        N = choose_N(p, cfg.M, cfg.samples, cfg.box, rng);
    }
    const StabilizerConfig stab = make_stabilizer(p, cfg.M, N, cfg.margin, cfg.samples, cfg.box, rng, cfg.workers);
    report["stabilizer"] = {{"M", stab.threshold_M},
                            {"N", nullable(stab.threshold_N)},
                            {"margin", stab.margin},
                            {"c_N", stab.c_N}};
    const auto wgc = verify_wgc(stab, p, cfg.samples, rng, cfg.workers);
    report["verify_wgc"] = {{"pass", wgc.pass()},
                            {"samples", wgc.samples},
                            {"violations", wgc.violations},
                            {"worst_ratio", nullable(wgc.worst_ratio)}};
    ok = ok && wgc.pass();

    const auto cinf = check_c_infinity(p, cfg.samples, cfg.box, rng);
    report["check_c_infinity"] = {
        {"estimate", nullable(cinf.estimate)},
        {"verdict", cinf.verdict == CInfinityVerdict::Pass ? "pass" : "inconclusive"},
        {"reason", cinf.reason}};

    report["pass"] = ok;
    emit(report.dump(2), opt.out);
    return ok ? kExitOk : kExitVerification;
}

int cmd_ode(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const double T = opt.T.value_or(cfg.diagnostics.T);
    const FlowResult flow = integrate(cfg.problem.drift, cfg.x0, T);
    std::string text = "t";
    for (std::size_t i = 0; i < cfg.problem.dim; ++i) {
        text += ",x" + std::to_string(i);
    }
    for (std::size_t k = 0; k < flow.times.size(); ++k) {
        text += '\n' + format_double(flow.times[k]);
        for (double v : flow.states[k]) {
            text += ',' + format_double(v);
        }
    }
    emit(text, opt.out);
    std::cerr << "ode: accepted=" << flow.accepted_steps << " rejected=" << flow.rejected_steps << '\n';
    return kExitOk;
}

int cmd_analyze(const Options& opt) {
    const ExperimentConfig cfg = load(opt);
    const std::string path = !opt.trace.empty() ? opt.trace : cfg.trace_path;
    if (path.empty()) {
        throw ConfigError("analyze needs --trace or output.trace");
    }
    Trajectory traj = read_trace(std::filesystem::path(path));
    traj.problem = cfg.problem_name;
    const StabilityReport report = analyze(traj, cfg.problem, cfg.diagnostics);

    json hits = json::object();
    for (const auto& [level, n] : report.hit_times) {
        hits[format_double(level)] = nullable(n);
    }
    json windows = json::array();
    for (const auto& w : report.descent.results) {
        windows.push_back({{"begin", w.begin}, {"end", w.end}, {"W_begin", w.W_begin}, {"W_end", w.W_end},
                           {"verdict", to_string(w.verdict)}});
    }
    json doc = {
        {"sup_norm", nullable(report.sup_norm)},
        {"hit_times", hits},
        {"last_scaled", nullable(report.last_scaled)},
        {"window_starts", report.descent.windows},
        {"diagnostics_start", nullable(report.descent.start_index)},
        {"windows", windows},
        {"descended", report.descent.count(WindowVerdict::Descended)},
        {"trapped", report.descent.count(WindowVerdict::Trapped)},
        {"violated", report.descent.count(WindowVerdict::Violated)},
        // CSV traces carry no noise column
        {"martingale", nullptr},
        {"martingale_note", "incomplete trace: noise draws are not stored in CSV traces"},
    };
    emit(doc.dump(2), opt.out);
    return report.descent.count(WindowVerdict::Violated) == 0 ? kExitOk : kExitVerification;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stabilized stochastic approximation toolkit"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Experiment config (TOML)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "Output path (stdout when omitted)");
        sub->add_option("--mode", opt.mode, "vanilla | adaptive | projection");
        sub->add_option("--workers", opt.workers, "Worker threads (0 = all cores)");
        sub->add_option("--x0", opt.x0, "Initial point")->expected(1, -1);
    };

    auto* run_cmd = app.add_subcommand("run", "Single trajectory; writes a CSV trace");
    add_common(run_cmd);
    run_cmd->add_option("--seed", opt.seed, "Seed");
    run_cmd->add_option("--horizon", opt.horizon, "Number of steps");

    auto* ens_cmd = app.add_subcommand("ensemble", "Multi-seed runs; writes a JSON summary");
    add_common(ens_cmd);
    ens_cmd->add_option("--seeds", opt.seeds, "Seeds: 0..99 or 1,2,3");
    ens_cmd->add_option("--horizon", opt.horizon, "Number of steps");

    auto* verify_cmd = app.add_subcommand("verify", "Audit the problem's assumptions and the stabilizer");
    add_common(verify_cmd);

    auto* ode_cmd = app.add_subcommand("ode", "Integrate the mean-field ODE from x0");
    add_common(ode_cmd);
    ode_cmd->add_option("--T", opt.T, "Integration horizon");

    auto* analyze_cmd = app.add_subcommand("analyze", "Recompute diagnostics from a stored trace");
    add_common(analyze_cmd);
    analyze_cmd->add_option("--trace", opt.trace, "CSV trace written by `run`");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run_cmd) {
            return cmd_run(opt);
        }
        if (*ens_cmd) {
            return cmd_ensemble(opt);
        }
        if (*verify_cmd) {
            return cmd_verify(opt);
        }
        if (*ode_cmd) {
            return cmd_ode(opt);
        }
        if (*analyze_cmd) {
            return cmd_analyze(opt);
        }
    } catch (const VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << '\n';
        return kExitVerification;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
