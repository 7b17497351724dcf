#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sastab/rng.hpp"
#include "sastab/types.hpp"

namespace sastab {

using VectorFn = std::function<Vec(std::span<const double>)>;
using ScalarFn = std::function<double(std::span<const double>)>;

// ---------------------------------------------------------------------------
// Step schedule a(n)
// ---------------------------------------------------------------------------

class StepSchedule {
public:
    enum class Family { Harmonic, Polynomial, Table };

    /// a(n) = 1 / (n + 1).
    static StepSchedule harmonic();
    /// a(n) = a0 / (n + b)^gamma.
    static StepSchedule polynomial(double a0, double b, double gamma);
    /// a(n) = values[n]; running past the end throws ScheduleExhausted.
    static StepSchedule table(std::vector<double> values);

    double operator()(std::uint64_t n) const;

    Family family() const { return family_; }
    double a0() const { return a0_; }
    double b() const { return b_; }
    double gamma() const { return gamma_; }
    const std::vector<double>& values() const { return table_; }

    /// Whether sum a(n) = inf and sum a(n)^2 < inf hold analytically.
    /// Tables are finite and cannot be classified; they return false.
    bool satisfies_step_conditions() const;

private:
    StepSchedule() = default;

    Family family_ = Family::Harmonic;
    double a0_ = 1.0;
    double b_ = 1.0;
    double gamma_ = 1.0;
    std::vector<double> table_;
};

double schedule_value(const StepSchedule& schedule, std::uint64_t n);

// ---------------------------------------------------------------------------
// Drift, noise and Lyapunov contracts
// ---------------------------------------------------------------------------

/// Mean field h : R^d -> R^d. Must be pure.
struct DriftField {
    std::size_t dim = 1;
    VectorFn eval;

    Vec operator()(std::span<const double> x) const { return eval(x); }
};

/// Martingale-difference noise M_{n+1} given the current state, with its
/// declared conditional second-moment bound f.
class NoiseModel {
public:
    enum class Kind { MultiplicativeGaussian, AdditiveUniform, AdditiveGaussian };

    /// M = scale(x) .* xi with xi ~ N(0, I). `var_bound` is the declared f.
    static NoiseModel multiplicative_gaussian(std::size_t dim, VectorFn scale, ScalarFn var_bound);
    /// iid uniform(lo, hi) per coordinate; requires lo < hi and lo + hi = 0.
    static NoiseModel additive_uniform(std::size_t dim, double lo, double hi);
    /// iid N(mean, sigma^2) per coordinate; requires mean = 0, sigma >= 0.
    static NoiseModel additive_gaussian(std::size_t dim, double sigma, double mean = 0.0);

    /// Replaces the declared bound f (the default for additive kinds is the
    /// exact second moment).
    NoiseModel with_var_bound(ScalarFn var_bound) const;

    Vec sample(std::span<const double> x, Rng& rng) const;
    double var_bound(std::span<const double> x) const { return var_bound_(x); }

    Kind kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double sigma() const { return sigma_; }

private:
    NoiseModel() = default;

    Kind kind_ = Kind::AdditiveGaussian;
    std::size_t dim_ = 1;
    VectorFn scale_;
    ScalarFn var_bound_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double sigma_ = 0.0;
};

struct LyapunovSpec {
    ScalarFn value;
    VectorFn gradient;
    /// Uniform bound on |second derivatives| of W.
    double hessian_bound = 0.0;
    /// Level M outside of which h . grad W < 0.
    int threshold_M = 1;
};

struct SAProblem {
    std::string name;
    std::size_t dim = 1;
    DriftField drift;
    NoiseModel noise = NoiseModel::additive_gaussian(1, 0.0);
    LyapunovSpec lyapunov;
    StepSchedule schedule = StepSchedule::harmonic();
    /// Default region for sampling-based checks.
    Box domain = Box::cube(1, -10.0, 10.0);

    /// Throws ConfigError if the components disagree on dimension.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// h(x) . grad W(x). Throws NumericOverflow on a non-finite intermediate.
double drift_dot_grad(const SAProblem& problem, std::span<const double> x);

Vec sample_noise(const NoiseModel& model, std::span<const double> x, Rng& rng);

/// Largest sampled ratio |h(u) - h(v)| / |u - v| over uniform pairs in `box`.
/// A lower bound on the Lipschitz constant of h on the box.
double lipschitz_estimate(const DriftField& field, const Box& box, std::size_t pairs, Rng& rng);

struct GradientCheckPoint {
    Vec point;
    Vec analytic;
    Vec finite_difference;
    double discrepancy = 0.0;  // max over coordinates, relative or absolute
    bool pass = true;
};

struct GradientCheckReport {
    bool pass = true;
    double worst_discrepancy = 0.0;
    std::vector<GradientCheckPoint> points;
};

inline constexpr double kGradientRelTol = 1e-6;
inline constexpr double kGradientAbsTol = 1e-9;

/// Compares grad W against central differences of W with the given step.
GradientCheckReport gradient_check(const LyapunovSpec& spec, std::span<const Vec> points, double step);

struct NoiseAuditPoint {
    Vec point;
    Vec mean;
    double second_moment = 0.0;
    double declared_bound = 0.0;
    bool pass = true;
};

struct NoiseAuditReport {
    bool pass = true;
    std::vector<NoiseAuditPoint> points;
};

/// Empirical check of E[M | x] = 0 and E|M|^2 <= f(x) at each point, with a
/// `z`-standard-error tolerance band.
NoiseAuditReport audit_noise(const NoiseModel& model, std::span<const Vec> points, std::size_t draws, Rng& rng,
                             double z = 5.0);

/// Samples `count` points of `box` satisfying `accept`, using at most
/// `budget` draws. May return fewer than `count` points.
std::vector<Vec> sample_region(const Box& box, std::size_t count, std::size_t budget,
                               const std::function<bool(std::span<const double>)>& accept, Rng& rng);

} // namespace sastab
