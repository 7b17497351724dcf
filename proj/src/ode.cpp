#include "sastab/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "sastab/engine.hpp"

namespace sastab {

IntegrationFailure::IntegrationFailure(const std::string& message, FlowResult partial)
    : Error(message), partial_(std::move(partial)) {}

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// error weights: b - b_hat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// PI controller exponents (Hairer-Wanner, order 5)
constexpr double kAlpha = 0.7 / 5.0;
constexpr double kBeta = 0.4 / 5.0;
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;
constexpr std::size_t kMaxSteps = 10'000'000;

Vec axpy(std::span<const double> y, double h, std::initializer_list<std::pair<double, const Vec*>> terms) {
    Vec out(y.begin(), y.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double acc = 0.0;
        for (const auto& [coef, k] : terms) {
            acc += coef * (*k)[i];
        }
        out[i] += h * acc;
    }
    return out;
}

double error_norm(std::span<const double> y, std::span<const double> y_new, std::span<const double> err,
                  double rel_tol, double abs_tol) {
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        const double r = err[i] / scale;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(y.size()));
}

} // namespace

FlowResult integrate(const DriftField& field, std::span<const double> u, double T, double rel_tol, double abs_tol) {
    if (!(T > 0.0) || !std::isfinite(T)) {
        throw ConfigError("integrate: horizon T must be positive and finite");
    }
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw ConfigError("integrate: tolerances must be positive");
    }

    FlowResult result;
    Vec y(u.begin(), u.end());
    result.times.push_back(0.0);
    result.states.push_back(y);

    double t = 0.0;
    Vec k1 = field(y);
    if (!all_finite(k1)) {
        result.endpoint = y;
        throw IntegrationFailure("integrate: drift is not finite at the initial point", std::move(result));
    }

    // initial step from the drift scale
    const double d0 = norm(y);
    const double d1 = norm(k1);
    double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-3 : 0.01 * d0 / d1;
    h = std::min(h, T);
    double err_prev = 1e-4;

    std::size_t steps = 0;
    while (t < T) {
        if (++steps > kMaxSteps) {
            result.endpoint = y;
            throw IntegrationFailure("integrate: step budget exhausted at t = " + std::to_string(t),
                                     std::move(result));
        }
        const bool last = t + h >= T;
        if (last) {
            h = T - t;
        }
        const double min_step = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
        if (h < min_step) {
            result.endpoint = y;
            throw IntegrationFailure("integrate: step size underflow at t = " + std::to_string(t),
                                     std::move(result));
        }

        const Vec k2 = field(axpy(y, h, {{a21, &k1}}));
        const Vec k3 = field(axpy(y, h, {{a31, &k1}, {a32, &k2}}));
        const Vec k4 = field(axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        const Vec k5 = field(axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        const Vec k6 = field(axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        Vec y_new = axpy(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        const Vec k7 = field(y_new);

        Vec err(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        }
        const double err_norm = error_norm(y, y_new, err, rel_tol, abs_tol);

        if (!std::isfinite(err_norm) || !all_finite(y_new) || !all_finite(k7)) {
            ++result.rejected_steps;
            h *= kMinFactor;
            continue;
        }

        if (err_norm <= 1.0) {
            t = last ? T : t + h;
            y = std::move(y_new);
            k1 = k7;  // FSAL
            result.times.push_back(t);
            result.states.push_back(y);
            ++result.accepted_steps;

            double factor = err_norm == 0.0
                                ? kMaxFactor
                                : kSafety * std::pow(err_norm, -kAlpha) * std::pow(err_prev, kBeta);
            factor = std::clamp(factor, kMinFactor, kMaxFactor);
            h *= factor;
            err_prev = std::max(err_norm, 1e-4);
        } else {
            ++result.rejected_steps;
            const double factor = std::max(kMinFactor, kSafety * std::pow(err_norm, -kAlpha));
            h *= factor;
        }
    }
    result.endpoint = y;
    return result;
}

DescentReport check_descent(const SAProblem& problem, double M, double m, std::size_t samples, Rng& rng,
                            const Box& box) {
    if (!(m > M)) {
        throw ConfigError("check_descent needs m > M");
    }
    if (samples == 0) {
        throw ConfigError("check_descent needs at least one sample");
    }
    box.require_volume();
    const auto& W = problem.lyapunov.value;
    const auto points = sample_region(
        box, samples, samples * 1000,
        [&](std::span<const double> x) {
            const double w = W(x);
            return w >= M && w <= m;
        },
        rng);
    if (points.empty()) {
        throw EmptyRegion("check_descent: no sample landed in the annulus {" + std::to_string(M) +
                          " <= W <= " + std::to_string(m) + "}");
    }
    DescentReport report;
    report.sup_Wdot = -kInfinity;
    for (const Vec& x : points) {
        double wdot;
        try {
            wdot = drift_dot_grad(problem, x);
        } catch (const NumericOverflow&) {
            wdot = kInfinity;
        }
        if (wdot > report.sup_Wdot) {
            report.sup_Wdot = wdot;
            report.worst_point = x;
        }
    }
    report.samples = points.size();
    report.pass = report.sup_Wdot < 0.0;
    return report;
}

DescentReport check_descent(const SAProblem& problem, double M, double m, std::size_t samples, Rng& rng) {
    return check_descent(problem, M, m, samples, rng, problem.domain);
}

std::vector<double> equilibria_1d(const DriftField& field, double lo, double hi, std::size_t grid) {
    if (field.dim != 1) {
        throw ConfigError("equilibria_1d needs a scalar field");
    }
    if (grid < 2 || !(hi > lo)) {
        throw ConfigError("equilibria_1d needs grid >= 2 and lo < hi");
    }
    auto h = [&](double x) { return field(std::span<const double>(&x, 1))[0]; };

    std::vector<double> nodes(grid);
    std::vector<double> values(grid);
    for (std::size_t i = 0; i < grid; ++i) {
        nodes[i] = i + 1 == grid ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
        values[i] = h(nodes[i]);
    }

    std::vector<double> roots;
    for (std::size_t i = 0; i < grid; ++i) {
        if (values[i] == 0.0) {
            roots.push_back(nodes[i]);
            continue;
        }
        if (i + 1 < grid && values[i + 1] != 0.0 && std::signbit(values[i]) != std::signbit(values[i + 1])) {
            double a = nodes[i];
            double b = nodes[i + 1];
            double fa = values[i];
            while (b - a > 1e-10) {
                const double mid = 0.5 * (a + b);
                const double fm = h(mid);
                if (fm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
    }
    return roots;
}

FlowComparison flow_compare(const Trajectory& trajectory, const SAProblem& problem, std::size_t first,
                            std::size_t last, double rel_tol) {
    const auto& rows = trajectory.rows;
    if (first > last || last >= rows.size()) {
        throw ConfigError("flow_compare: window [" + std::to_string(first) + ", " + std::to_string(last) +
                          "] is outside the trajectory");
    }
    FlowComparison out;
    Vec flow = rows[first].y;
    for (std::size_t j = first + 1; j <= last; ++j) {
        // advance the flow by the algorithmic time of step j - 1
        const double dt = rows[j - 1].a_eff;
        if (dt > 0.0) {
            flow = integrate(problem.drift, flow, dt, rel_tol, kDefaultAbsTol).endpoint;
        }
        const double dev = distance(rows[j].y, flow);
        if (dev > out.max_deviation) {
            out.max_deviation = dev;
            out.worst_index = j;
        }
    }
    return out;
}

} // namespace sastab
