#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sastab {

/// State vector in R^d.
using Vec = std::vector<double>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ScheduleExhausted : public Error {
public:
    using Error::Error;
};

class NumericOverflow : public Error {
public:
    using Error::Error;
};

class InvalidRegion : public Error {
public:
    using Error::Error;
};

/// Rejection sampling found no point in the requested region.
class EmptyRegion : public Error {
public:
    using Error::Error;
};

class IncompleteTrace : public Error {
public:
    using Error::Error;
};

class VerificationError : public Error {
public:
    using Error::Error;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_squared(std::span<const double> v);
double norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> v);

class Rng;

/// Axis-aligned box [lo_0, hi_0] x ... x [lo_{d-1}, hi_{d-1}].
class Box {
public:
    Box() = default;
    Box(Vec lo, Vec hi);

    /// The cube [lo, hi]^dim.
    static Box cube(std::size_t dim, double lo, double hi);

    std::size_t dim() const { return lo_.size(); }
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }
    Vec center() const;
    bool contains(std::span<const double> x) const;
    /// Box shrunk about its center by `factor` in every coordinate.
    Box scaled(double factor) const;

    /// Throws InvalidRegion when any side has zero (or negative) length.
    void require_volume() const;

    Vec sample(Rng& rng) const;

private:
    Vec lo_;
    Vec hi_;
};

} // namespace sastab
