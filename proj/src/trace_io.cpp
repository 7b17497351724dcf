#include "sastab/trace_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace sastab {

std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) {
        throw Error("format_double: conversion failed");
    }
    return std::string(buf.data(), ptr);
}

namespace {

double parse_double(std::string_view text, std::size_t line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw Error("trace line " + std::to_string(line) + ": malformed number '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

} // namespace

void write_trace(const Trajectory& trajectory, std::ostream& out) {
    const std::size_t d = trajectory.dim();
    out << "n,a,g,a_eff,W,scaled";
    for (std::size_t i = 0; i < d; ++i) {
        out << ",y" << i;
    }
    out << '\n';
    std::string line;
    for (const auto& row : trajectory.rows) {
        line.clear();
        line += std::to_string(row.n);
        for (double v : {row.a, row.g, row.a_eff, row.W}) {
            line += ',';
            line += format_double(v);
        }
        line += row.scaled() ? ",1" : ",0";
        for (double v : row.y) {
            line += ',';
            line += format_double(v);
        }
        line += '\n';
        out << line;
    }
}

void write_trace(const Trajectory& trajectory, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    write_trace(trajectory, out);
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

Trajectory read_trace(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) {
        throw Error("trace is empty");
    }
    const auto columns = split_csv(header);
    constexpr std::array<std::string_view, 6> kFixed{"n", "a", "g", "a_eff", "W", "scaled"};
    if (columns.size() < kFixed.size() + 1) {
        throw Error("trace header has too few columns");
    }
    for (std::size_t i = 0; i < kFixed.size(); ++i) {
        if (columns[i] != kFixed[i]) {
            throw Error("trace header column " + std::to_string(i) + " should be '" + std::string(kFixed[i]) + "'");
        }
    }
    const std::size_t d = columns.size() - kFixed.size();
    for (std::size_t i = 0; i < d; ++i) {
        if (columns[kFixed.size() + i] != "y" + std::to_string(i)) {
            throw Error("trace header: expected column y" + std::to_string(i));
        }
    }

    Trajectory traj;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != columns.size()) {
            throw Error("trace line " + std::to_string(line_no) + ": expected " + std::to_string(columns.size()) +
                        " fields");
        }
        TraceRow row;
        std::uint64_t n = 0;
        auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), n);
        if (ec != std::errc()) {
            throw Error("trace line " + std::to_string(line_no) + ": malformed step index");
        }
        row.n = n;
        row.a = parse_double(fields[1], line_no);
        row.g = parse_double(fields[2], line_no);
        row.a_eff = parse_double(fields[3], line_no);
        row.W = parse_double(fields[4], line_no);
        row.y.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            row.y[i] = parse_double(fields[kFixed.size() + i], line_no);
        }
        traj.rows.push_back(std::move(row));
    }
    if (!traj.rows.empty()) {
        traj.terminal.n = traj.rows.back().n + 1;
        traj.terminal.y = traj.rows.back().y;
    }
    return traj;
}

Trajectory read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return read_trace(in);
}

std::string summary_json(std::span<const RunSummary> summaries, int indent) {
    using nlohmann::json;
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };

    json runs = json::array();
    std::size_t overflowed = 0;
    double max_sup = 0.0;
    std::optional<std::size_t> max_last_scaled;
    std::optional<std::size_t> violations;
    for (const auto& s : summaries) {
        json entry = {
            {"seed", s.seed},
            {"sup_norm", finite_or_null(s.sup_norm)},
            {"overflow", s.overflow},
            {"last_scaled", s.last_scaled ? json(*s.last_scaled) : json(nullptr)},
            {"terminal_W", finite_or_null(s.terminal_W)},
        };
        if (s.descent_violations) {
            entry["descent_violations"] = *s.descent_violations;
            violations = violations.value_or(0) + *s.descent_violations;
        }
        if (!s.error.empty()) {
            entry["error"] = s.error;
        }
        runs.push_back(std::move(entry));
        overflowed += s.overflow ? 1 : 0;
        max_sup = std::max(max_sup, s.sup_norm);
        if (s.last_scaled) {
            max_last_scaled = std::max(max_last_scaled.value_or(0), *s.last_scaled);
        }
    }
    json doc = {
        {"runs", std::move(runs)},
        {"aggregates",
         {
             {"overflow_rate", summaries.empty() ? 0.0 : static_cast<double>(overflowed) / summaries.size()},
             {"max_sup_norm", finite_or_null(max_sup)},
             {"max_last_scaled", max_last_scaled ? json(*max_last_scaled) : json(nullptr)},
             {"descent_violations", violations ? json(*violations) : json(nullptr)},
         }},
    };
    return doc.dump(indent);
}

void summarize(std::span<const RunSummary> summaries, const std::filesystem::path& path) {
    if (summaries.empty()) {
        throw ConfigError("summarize needs at least one run summary");
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    out << summary_json(summaries) << '\n';
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

} // namespace sastab
