#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sastab/analysis.hpp"
#include "sastab/core.hpp"
#include "sastab/engine.hpp"

namespace sastab {

namespace toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<bool, std::int64_t, double, std::string, Array> data;
};

/// Flat table keyed by dotted path ("stabilizer.M").
using Table = std::map<std::string, Value>;

/// Parses the subset used by config files: [section] headers, key = value
/// with strings, integers, floats, booleans and flat arrays, # comments.
Table parse(std::string_view text);

} // namespace toml

struct ExperimentConfig {
    std::string problem_name;
    bool inline_problem = false;
    SAProblem problem;

    RunMode mode = RunMode::adaptive();

    int M = 1;
    /// Unset and not infinite: chosen by choose_N at run time.
    std::optional<int> N;
    bool N_infinite = false;
    double margin = 1.05;
    std::size_t samples = 10000;
    Box box = Box::cube(1, -10.0, 10.0);

    Vec x0;
    std::size_t horizon = 10000;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;
    unsigned workers = 1;

    DiagnosticsConfig diagnostics;

    std::string trace_path;
    std::string summary_path;
};

/// Builds and validates a config from file text. Inline problems must pass
/// gradient_check (else ConfigError) and check_descent (else
/// VerificationError).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "0..99" (inclusive), "1,2,5" or a single integer.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

} // namespace sastab
