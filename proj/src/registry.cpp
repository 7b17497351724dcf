#include "sastab/registry.hpp"

#include <cmath>
#include <string>

namespace sastab {

namespace {

LyapunovSpec squared_distance_to(double center) {
    LyapunovSpec spec;
    spec.value = [center](std::span<const double> x) {
        const double d = x[0] - center;
        return d * d;
    };
    spec.gradient = [center](std::span<const double> x) { return Vec{2.0 * (x[0] - center)}; };
    spec.hessian_bound = 2.0;
    spec.threshold_M = 1;
    return spec;
}

SAProblem example1() {
    SAProblem p;
    p.name = "example1";
    p.dim = 1;
    auto h = [](std::span<const double> x) { return Vec{-x[0] * std::exp(std::abs(x[0]))}; };
    p.drift = DriftField{1, h};
    // M_{n+1} = h(x) xi, so E|M|^2 = x^2 e^{2|x|}
    p.noise = NoiseModel::multiplicative_gaussian(1, h, [](std::span<const double> x) {
        return x[0] * x[0] * std::exp(2.0 * std::abs(x[0]));
    });
    p.lyapunov = squared_distance_to(0.0);
    return p;
}

SAProblem example2() {
    SAProblem p;
    p.name = "example2";
    p.dim = 1;
    p.drift = DriftField{1, [](std::span<const double> x) { return Vec{-std::tanh(x[0])}; }};
    p.noise = NoiseModel::additive_uniform(1, -1.0, 1.0);
    p.lyapunov = squared_distance_to(0.0);
    return p;
}

SAProblem shifted_linear() {
    SAProblem p;
    p.name = "shifted-linear";
    p.dim = 1;
    p.drift = DriftField{1, [](std::span<const double> x) { return Vec{5.0 - x[0]}; }};
    p.noise = NoiseModel::additive_gaussian(1, 1.0);
    p.lyapunov = squared_distance_to(5.0);
    return p;
}

} // namespace

SAProblem make_problem(std::string_view name) {
    if (name == "example1") {
        return example1();
    }
    if (name == "example2") {
        return example2();
    }
    if (name == "shifted-linear") {
        return shifted_linear();
    }
    throw ConfigError("unknown problem '" + std::string(name) + "'");
}

std::vector<std::string> registry_names() { return {"example1", "example2", "shifted-linear"}; }

} // namespace sastab
