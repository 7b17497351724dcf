#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sastab/core.hpp"
#include "sastab/stabilizer.hpp"

namespace sastab {

enum class Mode { Vanilla, Adaptive, Projection };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct RunMode {
    Mode kind = Mode::Adaptive;
    /// Ball radius for Mode::Projection.
    double radius = 0.0;

    static RunMode vanilla() { return {Mode::Vanilla, 0.0}; }
    static RunMode adaptive() { return {Mode::Adaptive, 0.0}; }
    static RunMode projection(double radius) { return {Mode::Projection, radius}; }
};

/// Iterate, counter and generator. Frozen once `overflowed` is set.
struct EngineState {
    std::uint64_t n = 0;
    Vec y;
    Rng rng{0};
    bool overflowed = false;
};

struct TraceRow {
    std::uint64_t n = 0;
    double a = 0.0;
    double g = 1.0;
    double a_eff = 0.0;
    double W = 0.0;
    Vec y;

    bool scaled() const { return g > 1.0; }
};

/// Row n holds y_n and the step quantities used to move from y_n to
/// y_{n+1}; noise[n] is M_{n+1}. The state after the last row lives in
/// `terminal`.
struct Trajectory {
    std::vector<TraceRow> rows;
    std::vector<Vec> noise;
    EngineState terminal;
    Mode mode = Mode::Adaptive;
    std::uint64_t seed = 0;
    std::string problem;

    bool has_noise() const { return noise.size() == rows.size() && !rows.empty(); }
    std::size_t dim() const { return rows.empty() ? terminal.y.size() : rows.front().y.size(); }
};

struct RunConfig {
    std::string problem;
    RunMode mode;
    Vec x0;
    std::size_t horizon = 10000;
    std::uint64_t seed = 0;
    /// Required in adaptive mode.
    std::optional<StabilizerConfig> stabilizer;

    void validate(const SAProblem& problem) const;
};

/// Everything a single step computes, for recording.
struct StepRecord {
    double a = 0.0;
    double g = 1.0;
    double a_eff = 0.0;
    Vec noise;
};

/// Moves `state` one step with an explicit noise draw M_{n+1}.
/// Draw order inside `step`: noise first, then g(y_n).
EngineState advance(const EngineState& state, const SAProblem& problem, const RunMode& mode,
                    const StabilizerConfig* stabilizer, std::span<const double> noise, StepRecord* record = nullptr);

/// y' = y + (a(n)/g) [h(y) + M_{n+1}], projected in projection mode.
EngineState step(const EngineState& state, const SAProblem& problem, const RunMode& mode,
                 const StabilizerConfig* stabilizer, StepRecord* record = nullptr);

/// Euclidean projection onto the closed ball of radius `radius`.
Vec project_to_ball(std::span<const double> y, double radius);

/// Runs a registry problem; unknown names throw ConfigError.
Trajectory run(const RunConfig& config);
Trajectory run(const SAProblem& problem, const RunConfig& config);

struct DiagnosticsConfig;

struct RunSummary {
    std::uint64_t seed = 0;
    double sup_norm = 0.0;
    bool overflow = false;
    std::optional<std::size_t> last_scaled;
    Vec terminal_y;
    double terminal_W = 0.0;
    std::size_t steps = 0;
    std::optional<std::size_t> descent_violations;
    std::string error;
};

struct EnsembleOptions {
    /// 0 picks the hardware concurrency.
    unsigned workers = 1;
    bool keep_trajectories = false;
    /// When set, each summary carries its window-descent violation count.
    const DiagnosticsConfig* diagnostics = nullptr;
};

struct EnsembleResult {
    std::vector<RunSummary> summaries;
    std::vector<Trajectory> trajectories;
};

RunSummary summarize_run(const Trajectory& trajectory, const SAProblem& problem,
                         const DiagnosticsConfig* diagnostics = nullptr);

/// One run per seed (config.seed is replaced); output follows `seeds`
/// order regardless of scheduling. Per-seed failures are recorded in
/// RunSummary::error.
EnsembleResult run_ensemble(const SAProblem& problem, const RunConfig& config, std::span<const std::uint64_t> seeds,
                            const EnsembleOptions& options = {});

} // namespace sastab
