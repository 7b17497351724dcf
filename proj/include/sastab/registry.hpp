#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sastab/core.hpp"

namespace sastab {

/// Builtin problems:
///  - "example1": h(x) = -x e^{|x|}, M = h(x) xi with xi ~ N(0,1), W = x^2.
///  - "example2": h(x) = -tanh(x), uniform(-1,1) noise, W = x^2.
///  - "shifted-linear": h(x) = 5 - x, N(0,1) noise, W = (x - 5)^2.
/// All use the harmonic schedule and M = 1.
SAProblem make_problem(std::string_view name);

std::vector<std::string> registry_names();

} // namespace sastab
