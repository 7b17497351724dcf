#include "sastab/engine.hpp"

#include <cmath>
#include <string>

#include "parallel.hpp"
#include "sastab/analysis.hpp"
#include "sastab/registry.hpp"

namespace sastab {

std::string to_string(Mode mode) {
    switch (mode) {
    case Mode::Vanilla:
        return "vanilla";
    case Mode::Adaptive:
        return "adaptive";
    case Mode::Projection:
        return "projection";
    }
    return "?";
}

Mode parse_mode(std::string_view text) {
    if (text == "vanilla") {
        return Mode::Vanilla;
    }
    if (text == "adaptive") {
        return Mode::Adaptive;
    }
    if (text == "projection") {
        return Mode::Projection;
    }
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected vanilla, adaptive or projection)");
}

void RunConfig::validate(const SAProblem& p) const {
    if (horizon < 1) {
        throw ConfigError("run.horizon must be >= 1");
    }
    if (x0.size() != p.dim) {
        throw ConfigError("run.x0 has dimension " + std::to_string(x0.size()) + ", problem has " +
                          std::to_string(p.dim));
    }
    if (!all_finite(x0)) {
        throw ConfigError("run.x0 must be finite");
    }
    if (mode.kind == Mode::Projection && !(mode.radius > 0.0)) {
        throw ConfigError("run.radius must be positive in projection mode");
    }
    if (mode.kind == Mode::Adaptive) {
        if (!stabilizer) {
            throw ConfigError("adaptive mode needs a stabilizer configuration");
        }
        stabilizer->validate();
    }
}

Vec project_to_ball(std::span<const double> y, double radius) {
    Vec out(y.begin(), y.end());
    const double r = norm(y);
    if (r > radius) {
        const double scale = radius / r;
        for (auto& v : out) {
            v *= scale;
        }
    }
    return out;
}

EngineState advance(const EngineState& state, const SAProblem& problem, const RunMode& mode,
                    const StabilizerConfig* stabilizer, std::span<const double> noise, StepRecord* record) {
    if (state.overflowed) {
        return state;
    }
    EngineState next = state;
    const double a = problem.schedule(state.n);
    double g = 1.0;
    if (mode.kind == Mode::Adaptive) {
        if (!stabilizer) {
            throw ConfigError("adaptive step without a stabilizer configuration");
        }
        g = scaling_factor(*stabilizer, problem, state.y);
    }
    const double a_eff = a / g;

    const Vec h = problem.drift(state.y);
    for (std::size_t i = 0; i < next.y.size(); ++i) {
        next.y[i] = state.y[i] + a_eff * (h[i] + noise[i]);
    }
    if (mode.kind == Mode::Projection && all_finite(next.y)) {
        next.y = project_to_ball(next.y, mode.radius);
    }
    next.n = state.n + 1;
    if (!all_finite(next.y) || !std::isfinite(problem.lyapunov.value(next.y))) {
        next.overflowed = true;
    }
    if (record) {
        record->a = a;
        record->g = g;
        record->a_eff = a_eff;
        record->noise.assign(noise.begin(), noise.end());
    }
    return next;
}

EngineState step(const EngineState& state, const SAProblem& problem, const RunMode& mode,
                 const StabilizerConfig* stabilizer, StepRecord* record) {
    if (state.overflowed) {
        return state;
    }
    EngineState drawn = state;
    // noise first; g depends only on y_n so the order does not change values
    const Vec noise = problem.noise.sample(state.y, drawn.rng);
    return advance(drawn, problem, mode, stabilizer, noise, record);
}

Trajectory run(const SAProblem& problem, const RunConfig& config) {
    config.validate(problem);
    const StabilizerConfig* stabilizer = config.stabilizer ? &*config.stabilizer : nullptr;

    Trajectory traj;
    traj.mode = config.mode.kind;
    traj.seed = config.seed;
    traj.problem = config.problem.empty() ? problem.name : config.problem;
    traj.rows.reserve(config.horizon);
    traj.noise.reserve(config.horizon);

    EngineState state;
    state.y = config.x0;
    state.rng = Rng(config.seed);

    StepRecord record;
    for (std::size_t k = 0; k < config.horizon; ++k) {
        const double w = problem.lyapunov.value(state.y);
        EngineState next = step(state, problem, config.mode, stabilizer, &record);
        traj.rows.push_back(TraceRow{state.n, record.a, record.g, record.a_eff, w, std::move(state.y)});
        traj.noise.push_back(std::move(record.noise));
        state = std::move(next);
        if (state.overflowed) {
            break;
        }
    }
    traj.terminal = std::move(state);
    return traj;
}

Trajectory run(const RunConfig& config) { return run(make_problem(config.problem), config); }

RunSummary summarize_run(const Trajectory& trajectory, const SAProblem& problem,
                         const DiagnosticsConfig* diagnostics) {
    RunSummary s;
    s.seed = trajectory.seed;
    s.overflow = trajectory.terminal.overflowed;
    s.sup_norm = sup_norm(trajectory);
    s.last_scaled = last_scaled_index(trajectory);
    s.terminal_y = trajectory.terminal.y;
    s.terminal_W = s.overflow ? kInfinity : problem.lyapunov.value(trajectory.terminal.y);
    s.steps = trajectory.rows.size();
    if (diagnostics) {
        s.descent_violations = window_descent_report(trajectory, problem, *diagnostics).count(WindowVerdict::Violated);
    }
    return s;
}

EnsembleResult run_ensemble(const SAProblem& problem, const RunConfig& config, std::span<const std::uint64_t> seeds,
                            const EnsembleOptions& options) {
    if (seeds.empty()) {
        throw ConfigError("run_ensemble needs at least one seed");
    }
    EnsembleResult result;
    result.summaries.resize(seeds.size());
    if (options.keep_trajectories) {
        result.trajectories.resize(seeds.size());
    }
    detail::parallel_for(seeds.size(), options.workers, [&](std::size_t i) {
        RunConfig local = config;
        local.seed = seeds[i];
        try {
            Trajectory traj = run(problem, local);
            result.summaries[i] = summarize_run(traj, problem, options.diagnostics);
            if (options.keep_trajectories) {
                result.trajectories[i] = std::move(traj);
            }
        } catch (const std::exception& e) {
            RunSummary failed;
            failed.seed = seeds[i];
            failed.error = e.what();
            failed.sup_norm = kInfinity;
            result.summaries[i] = std::move(failed);
        }
    });
    return result;
}

} // namespace sastab
