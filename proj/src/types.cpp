#include "sastab/types.hpp"

#include <cmath>
#include <string>

#include "sastab/rng.hpp"

namespace sastab {

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double norm_squared(std::span<const double> v) { return dot(v, v); }

double norm(std::span<const double> v) {
    if (v.size() == 1) {
        return std::abs(v[0]);
    }
    return std::sqrt(norm_squared(v));
}

double distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() == 1) {
        return std::abs(a[0] - b[0]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

Box::Box(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || lo_.empty()) {
        throw InvalidRegion("box bounds must have equal, nonzero dimension");
    }
    for (std::size_t i = 0; i < lo_.size(); ++i) {
        if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || lo_[i] > hi_[i]) {
            throw InvalidRegion("box side " + std::to_string(i) + " is not a finite interval");
        }
    }
}

Box Box::cube(std::size_t dim, double lo, double hi) { return Box(Vec(dim, lo), Vec(dim, hi)); }

Vec Box::center() const {
    Vec c(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        c[i] = 0.5 * (lo_[i] + hi_[i]);
    }
    return c;
}

bool Box::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lo_[i] || x[i] > hi_[i]) {
            return false;
        }
    }
    return true;
}

Box Box::scaled(double factor) const {
    Vec lo(dim());
    Vec hi(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        const double mid = 0.5 * (lo_[i] + hi_[i]);
        const double half = 0.5 * (hi_[i] - lo_[i]) * factor;
        lo[i] = mid - half;
        hi[i] = mid + half;
    }
    return Box(std::move(lo), std::move(hi));
}

void Box::require_volume() const {
    if (dim() == 0) {
        throw InvalidRegion("empty box");
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        if (!(hi_[i] > lo_[i])) {
            throw InvalidRegion("degenerate box: side " + std::to_string(i) + " has zero length");
        }
    }
}

Vec Box::sample(Rng& rng) const {
    Vec x(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        x[i] = rng.uniform(lo_[i], hi_[i]);
    }
    return x;
}

} // namespace sastab
