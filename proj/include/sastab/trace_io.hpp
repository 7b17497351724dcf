#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "sastab/engine.hpp"

namespace sastab {

/// Header: n,a,g,a_eff,W,scaled,y0,...,y{d-1}. Floats use the shortest
/// decimal that round-trips.
void write_trace(const Trajectory& trajectory, std::ostream& out);
void write_trace(const Trajectory& trajectory, const std::filesystem::path& path);

/// Reads rows back; the result has no noise record.
Trajectory read_trace(std::istream& in);
Trajectory read_trace(const std::filesystem::path& path);

/// JSON document with a per-seed array and aggregates.
std::string summary_json(std::span<const RunSummary> summaries, int indent = 2);
void summarize(std::span<const RunSummary> summaries, const std::filesystem::path& path);

std::string format_double(double value);

} // namespace sastab
