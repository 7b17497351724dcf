#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sastab/core.hpp"

namespace sastab {

struct Trajectory;

struct FlowResult {
    Vec endpoint;
    std::vector<double> times;
    std::vector<Vec> states;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

/// Thrown when the step size underflows or the state becomes non-finite.
class IntegrationFailure : public Error {
public:
    IntegrationFailure(const std::string& message, FlowResult partial);
    const FlowResult& partial() const { return partial_; }

private:
    FlowResult partial_;
};

inline constexpr double kDefaultRelTol = 1e-8;
inline constexpr double kDefaultAbsTol = 1e-10;

/// Dormand-Prince 5(4) solution of x' = h(x), x(0) = u on [0, T] with PI
/// step-size control.
FlowResult integrate(const DriftField& field, std::span<const double> u, double T, double rel_tol = kDefaultRelTol,
                     double abs_tol = kDefaultAbsTol);

struct DescentReport {
    double sup_Wdot = 0.0;
    Vec worst_point;
    std::size_t samples = 0;
    bool pass = false;
};

/// Sampled sup of h . grad W over the annulus {M <= W <= m} of `box`.
DescentReport check_descent(const SAProblem& problem, double M, double m, std::size_t samples, Rng& rng,
                            const Box& box);
/// Same, over the problem's default domain.
DescentReport check_descent(const SAProblem& problem, double M, double m, std::size_t samples, Rng& rng);

/// Roots of a scalar field on [lo, hi] found by sign changes on a uniform
/// grid of `grid` nodes, each refined by bisection to 1e-10.
std::vector<double> equilibria_1d(const DriftField& field, double lo, double hi, std::size_t grid);

struct FlowComparison {
    double max_deviation = 0.0;
    std::size_t worst_index = 0;
};

/// Max over j in (first, last] of |y_j - flow(y_first, sum_{first}^{j-1} a_eff)|.
FlowComparison flow_compare(const Trajectory& trajectory, const SAProblem& problem, std::size_t first,
                            std::size_t last, double rel_tol = kDefaultRelTol);

} // namespace sastab
