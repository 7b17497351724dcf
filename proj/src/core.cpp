#include "sastab/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sastab {

// ---------------------------------------------------------------------------
// StepSchedule

StepSchedule StepSchedule::harmonic() { return StepSchedule(); }

StepSchedule StepSchedule::polynomial(double a0, double b, double gamma) {
    if (!(a0 > 0.0) || !(b > 0.0) || !(gamma >= 0.0) || !std::isfinite(a0) || !std::isfinite(b) ||
        !std::isfinite(gamma)) {
        throw ConfigError("polynomial schedule needs a0 > 0, b > 0, gamma >= 0");
    }
    StepSchedule s;
    s.family_ = Family::Polynomial;
    s.a0_ = a0;
    s.b_ = b;
    s.gamma_ = gamma;
    return s;
}

StepSchedule StepSchedule::table(std::vector<double> values) {
    if (values.empty()) {
        throw ConfigError("schedule table is empty");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
            throw ConfigError("schedule table entry " + std::to_string(i) + " is not a positive finite number");
        }
    }
    StepSchedule s;
    s.family_ = Family::Table;
    s.table_ = std::move(values);
    return s;
}

double StepSchedule::operator()(std::uint64_t n) const {
    switch (family_) {
    case Family::Harmonic:
        return 1.0 / (static_cast<double>(n) + 1.0);
    case Family::Polynomial:
        return a0_ / std::pow(static_cast<double>(n) + b_, gamma_);
    case Family::Table:
        if (n >= table_.size()) {
            throw ScheduleExhausted("step schedule table has " + std::to_string(table_.size()) +
                                    " entries; requested n = " + std::to_string(n));
        }
        return table_[n];
    }
    return 0.0;
}

bool StepSchedule::satisfies_step_conditions() const {
    switch (family_) {
    case Family::Harmonic:
        return true;
    case Family::Polynomial:
        return gamma_ > 0.5 && gamma_ <= 1.0;
    case Family::Table:
        return false;
    }
    return false;
}

double schedule_value(const StepSchedule& schedule, std::uint64_t n) { return schedule(n); }

// ---------------------------------------------------------------------------
// NoiseModel

NoiseModel NoiseModel::multiplicative_gaussian(std::size_t dim, VectorFn scale, ScalarFn var_bound) {
    if (dim == 0 || !scale || !var_bound) {
        throw ConfigError("multiplicative noise needs a dimension, a scale and a declared variance bound");
    }
    NoiseModel model;
    model.kind_ = Kind::MultiplicativeGaussian;
    model.dim_ = dim;
    model.scale_ = std::move(scale);
    model.var_bound_ = std::move(var_bound);
    return model;
}

NoiseModel NoiseModel::additive_uniform(std::size_t dim, double lo, double hi) {
    if (dim == 0 || !(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw ConfigError("uniform noise needs finite lo < hi");
    }
    if (lo + hi != 0.0) {
        throw ConfigError("uniform noise must have zero mean (lo = -hi)");
    }
    NoiseModel model;
    model.kind_ = Kind::AdditiveUniform;
    model.dim_ = dim;
    model.lo_ = lo;
    model.hi_ = hi;
    const double bound = static_cast<double>(dim) * (hi - lo) * (hi - lo) / 12.0;
    model.var_bound_ = [bound](std::span<const double>) { return bound; };
    return model;
}

NoiseModel NoiseModel::additive_gaussian(std::size_t dim, double sigma, double mean) {
    if (dim == 0 || !(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("gaussian noise needs sigma >= 0");
    }
    if (mean != 0.0) {
        throw ConfigError("gaussian noise must have zero mean");
    }
    NoiseModel model;
    model.kind_ = Kind::AdditiveGaussian;
    model.dim_ = dim;
    model.sigma_ = sigma;
    const double bound = static_cast<double>(dim) * sigma * sigma;
    model.var_bound_ = [bound](std::span<const double>) { return bound; };
    return model;
}

NoiseModel NoiseModel::with_var_bound(ScalarFn var_bound) const {
    if (!var_bound) {
        throw ConfigError("variance bound must be callable");
    }
    NoiseModel copy = *this;
    copy.var_bound_ = std::move(var_bound);
    return copy;
}

Vec NoiseModel::sample(std::span<const double> x, Rng& rng) const {
    Vec out(dim_);
    switch (kind_) {
    case Kind::MultiplicativeGaussian: {
        const Vec s = scale_(x);
        for (std::size_t i = 0; i < dim_; ++i) {
            const double xi = rng.normal();
            // skip the product when the scale vanishes so 0 * inf stays 0
            out[i] = s[i] == 0.0 ? 0.0 : s[i] * xi;
        }
        break;
    }
    case Kind::AdditiveUniform:
        for (auto& v : out) {
            v = rng.uniform(lo_, hi_);
        }
        break;
    case Kind::AdditiveGaussian:
        for (auto& v : out) {
            v = sigma_ * rng.normal();
        }
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SAProblem

void SAProblem::validate() const {
    if (dim == 0) {
        throw ConfigError("problem '" + name + "': dimension must be >= 1");
    }
    if (drift.dim != dim || noise.dim() != dim || domain.dim() != dim) {
        throw ConfigError("problem '" + name + "': drift, noise and domain must share dimension " +
                          std::to_string(dim));
    }
    if (!drift.eval || !lyapunov.value || !lyapunov.gradient) {
        throw ConfigError("problem '" + name + "': drift and Lyapunov functions must be set");
    }
    if (lyapunov.threshold_M < 1) {
        throw ConfigError("problem '" + name + "': threshold M must be a positive integer");
    }
}

// ---------------------------------------------------------------------------
// Operations

double drift_dot_grad(const SAProblem& problem, std::span<const double> x) {
    const Vec h = problem.drift(x);
    const Vec grad = problem.lyapunov.gradient(x);
    if (!all_finite(h) || !all_finite(grad)) {
        throw NumericOverflow("non-finite drift or gradient");
    }
    const double value = dot(h, grad);
    if (!std::isfinite(value)) {
        throw NumericOverflow("non-finite h . grad W");
    }
    return value;
}

Vec sample_noise(const NoiseModel& model, std::span<const double> x, Rng& rng) { return model.sample(x, rng); }

double lipschitz_estimate(const DriftField& field, const Box& box, std::size_t pairs, Rng& rng) {
    box.require_volume();
    if (pairs == 0) {
        throw ConfigError("lipschitz_estimate needs at least one pair");
    }
    double best = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const Vec u = box.sample(rng);
        const Vec v = box.sample(rng);
        const double du = distance(u, v);
        if (du == 0.0) {
            continue;
        }
        const double dh = distance(field(u), field(v));
        best = std::max(best, dh / du);
    }
    return best;
}

GradientCheckReport gradient_check(const LyapunovSpec& spec, std::span<const Vec> points, double step) {
    if (!(step > 0.0)) {
        throw ConfigError("gradient_check step must be positive");
    }
    GradientCheckReport report;
    for (const Vec& x : points) {
        GradientCheckPoint entry;
        entry.point = x;
        entry.analytic = spec.gradient(x);
        entry.finite_difference.resize(x.size());
        Vec probe = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
            probe[i] = x[i] + step;
            const double up = spec.value(probe);
            probe[i] = x[i] - step;
            const double down = spec.value(probe);
            probe[i] = x[i];
            const double fd = (up - down) / (2.0 * step);
            entry.finite_difference[i] = fd;

            const double diff = std::abs(entry.analytic[i] - fd);
            const double scale = std::max(std::abs(entry.analytic[i]), std::abs(fd));
            const bool ok = std::isfinite(diff) && (diff <= kGradientAbsTol || diff <= kGradientRelTol * scale);
            const double measure = scale > 0.0 ? diff / scale : diff;
            entry.discrepancy = std::max(entry.discrepancy, std::isfinite(measure) ? measure : kInfinity);
            entry.pass = entry.pass && ok;
        }
        report.pass = report.pass && entry.pass;
        report.worst_discrepancy = std::max(report.worst_discrepancy, entry.discrepancy);
        report.points.push_back(std::move(entry));
    }
    return report;
}

NoiseAuditReport audit_noise(const NoiseModel& model, std::span<const Vec> points, std::size_t draws, Rng& rng,
                             double z) {
    if (draws < 2) {
        throw ConfigError("audit_noise needs at least two draws per point");
    }
    NoiseAuditReport report;
    const double count = static_cast<double>(draws);
    for (const Vec& x : points) {
        NoiseAuditPoint entry;
        entry.point = x;
        entry.mean.assign(model.dim(), 0.0);
        Vec mean_sq(model.dim(), 0.0);
        double sum_sq = 0.0;
        double sum_sq2 = 0.0;
        for (std::size_t k = 0; k < draws; ++k) {
            const Vec m = model.sample(x, rng);
            const double s = norm_squared(m);
            for (std::size_t i = 0; i < m.size(); ++i) {
                entry.mean[i] += m[i];
                mean_sq[i] += m[i] * m[i];
            }
            sum_sq += s;
            sum_sq2 += s * s;
        }
        bool ok = true;
        for (std::size_t i = 0; i < entry.mean.size(); ++i) {
            entry.mean[i] /= count;
            const double var = mean_sq[i] / count - entry.mean[i] * entry.mean[i];
            const double se = std::sqrt(std::max(var, 0.0) / count);
            ok = ok && std::abs(entry.mean[i]) <= z * se + 1e-300;
        }
        entry.second_moment = sum_sq / count;
        const double var_s = std::max(sum_sq2 / count - entry.second_moment * entry.second_moment, 0.0);
        entry.declared_bound = model.var_bound(x);
        ok = ok && entry.second_moment <= entry.declared_bound + z * std::sqrt(var_s / count);
        entry.pass = ok;
        report.pass = report.pass && ok;
        report.points.push_back(std::move(entry));
    }
    return report;
}

std::vector<Vec> sample_region(const Box& box, std::size_t count, std::size_t budget,
                               const std::function<bool(std::span<const double>)>& accept, Rng& rng) {
    std::vector<Vec> out;
    out.reserve(count);
    for (std::size_t attempt = 0; attempt < budget && out.size() < count; ++attempt) {
        Vec x = box.sample(rng);
        if (accept(x)) {
            out.push_back(std::move(x));
        }
    }
    return out;
}

} // namespace sastab
