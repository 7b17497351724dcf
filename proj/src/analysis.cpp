#include "sastab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sastab {

void DiagnosticsConfig::validate(int threshold_M) const {
    if (!(T > 0.0) || !(delta > 0.0) || !(epsilon > 0.0)) {
        throw ConfigError("diagnostics.T, diagnostics.delta and diagnostics.epsilon must be positive");
    }
    if (!(m >= threshold_M + 1.0)) {
        throw ConfigError("diagnostics.m must be at least M + 1");
    }
}

double sup_norm(const Trajectory& trajectory) {
    if (trajectory.terminal.overflowed) {
        return kInfinity;
    }
    double best = 0.0;
    for (const auto& row : trajectory.rows) {
        best = std::max(best, norm(row.y));
    }
    return best;
}

std::optional<std::size_t> hitting_time(std::span<const double> W, std::size_t k, double m) {
    for (std::size_t n = k; n < W.size(); ++n) {
        if (W[n] < m) {
            return n;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> hitting_time(const Trajectory& trajectory, std::size_t k, double m) {
    for (std::size_t n = k; n < trajectory.rows.size(); ++n) {
        if (trajectory.rows[n].W < m) {
            return n;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> last_scaled_index(const Trajectory& trajectory) {
    for (std::size_t n = trajectory.rows.size(); n-- > 0;) {
        if (trajectory.rows[n].g > 1.0) {
            return n;
        }
    }
    return std::nullopt;
}

std::vector<std::size_t> window_indices(std::span<const double> a_eff, std::size_t n0, double T) {
    std::vector<std::size_t> out;
    if (n0 >= a_eff.size()) {
        return out;
    }
    out.push_back(n0);
    std::size_t start = n0;
    double sum = a_eff[start];
    for (std::size_t n = start + 1; n < a_eff.size(); ++n) {
        sum += a_eff[n];
        if (sum >= T) {
            out.push_back(n);
            start = n;
            sum = a_eff[n];
        }
    }
    return out;
}

std::vector<std::size_t> window_indices(const Trajectory& trajectory, std::size_t n0, double T) {
    std::vector<double> a_eff(trajectory.rows.size());
    for (std::size_t i = 0; i < a_eff.size(); ++i) {
        a_eff[i] = trajectory.rows[i].a_eff;
    }
    return window_indices(a_eff, n0, T);
}

const char* to_string(WindowVerdict verdict) {
    switch (verdict) {
    case WindowVerdict::Descended:
        return "descended";
    case WindowVerdict::Trapped:
        return "trapped";
    case WindowVerdict::Violated:
        return "violated";
    }
    return "?";
}

std::size_t WindowDescentReport::count(WindowVerdict verdict) const {
    return static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [&](const WindowResult& r) { return r.verdict == verdict; }));
}

WindowDescentReport window_descent_report(std::span<const double> W, std::span<const double> a_eff, int threshold_M,
                                          const DiagnosticsConfig& diagnostics) {
    diagnostics.validate(threshold_M);
    WindowDescentReport report;
    report.windows = window_indices(a_eff, 0, diagnostics.T);
    const double trap_level = threshold_M + 0.5 * diagnostics.epsilon;

    for (std::size_t i = 0; i + 1 < report.windows.size(); ++i) {
        const std::size_t begin = report.windows[i];
        const std::size_t end = report.windows[i + 1];
        if (!(W[begin] < diagnostics.m)) {
            continue;
        }
        if (!report.start_index) {
            report.start_index = begin;
        }
        WindowResult r;
        r.begin = begin;
        r.end = end;
        r.W_begin = W[begin];
        r.W_end = W[end];
        if (r.W_end < r.W_begin - 0.5 * diagnostics.epsilon) {
            r.verdict = WindowVerdict::Descended;
        } else if (r.W_end < trap_level) {
            r.verdict = WindowVerdict::Trapped;
        } else {
            r.verdict = WindowVerdict::Violated;
        }
        report.results.push_back(r);
    }
    return report;
}

WindowDescentReport window_descent_report(const Trajectory& trajectory, const SAProblem& problem,
                                          const DiagnosticsConfig& diagnostics) {
    std::vector<double> W(trajectory.rows.size());
    std::vector<double> a_eff(trajectory.rows.size());
    for (std::size_t i = 0; i < W.size(); ++i) {
        W[i] = trajectory.rows[i].W;
        a_eff[i] = trajectory.rows[i].a_eff;
    }
    return window_descent_report(W, a_eff, problem.lyapunov.threshold_M, diagnostics);
}

MartingaleSums martingale_partial_sums(std::span<const Vec> noise, std::span<const double> a_eff,
                                       const std::vector<bool>& active) {
    if (noise.size() != a_eff.size() || active.size() != a_eff.size()) {
        throw IncompleteTrace("martingale_partial_sums: noise record does not cover every step");
    }
    MartingaleSums out;
    const std::size_t count = noise.size();
    if (count == 0) {
        return out;
    }
    const std::size_t d = noise.front().size();
    out.partials.reserve(count);
    Vec sum(d, 0.0);
    for (std::size_t n = 0; n < count; ++n) {
        if (active[n]) {
            for (std::size_t i = 0; i < d; ++i) {
                sum[i] += a_eff[n] * noise[n][i];
            }
        }
        out.partials.push_back(sum);
    }
    const Vec& last = out.partials.back();
    out.sup_tail.assign(count, 0.0);
    double running = 0.0;
    for (std::size_t k = count; k-- > 0;) {
        running = std::max(running, distance(out.partials[k], last));
        out.sup_tail[k] = running;
    }
    return out;
}

MartingaleSums martingale_partial_sums(const Trajectory& trajectory, const SAProblem& problem,
                                       const DiagnosticsConfig& diagnostics) {
    if (!trajectory.has_noise()) {
        throw IncompleteTrace("trajectory '" + trajectory.problem + "' has no noise record");
    }
    diagnostics.validate(problem.lyapunov.threshold_M);
    const double level = diagnostics.m + 0.5 * diagnostics.epsilon;
    const std::size_t count = trajectory.rows.size();
    std::vector<double> a_eff(count);
    std::vector<bool> active(count);
    for (std::size_t n = 0; n < count; ++n) {
        a_eff[n] = trajectory.rows[n].a_eff;
        active[n] = trajectory.rows[n].W < level;
    }
    return martingale_partial_sums(trajectory.noise, a_eff, active);
}

std::vector<double> ensemble_lyapunov_moment(std::span<const Trajectory> trajectories, std::size_t k, double M) {
    if (trajectories.empty()) {
        throw ConfigError("ensemble_lyapunov_moment needs at least one trajectory");
    }
    std::size_t length = 0;
    for (const auto& t : trajectories) {
        length = std::max(length, t.rows.size());
    }
    if (k >= length) {
        throw ConfigError("ensemble_lyapunov_moment: k = " + std::to_string(k) + " is beyond every trajectory");
    }
    std::vector<double> mean(length - k, 0.0);
    for (const auto& t : trajectories) {
        const auto tau = hitting_time(t, k, M);
        for (std::size_t n = k; n < length; ++n) {
            const std::size_t stopped = tau ? std::min(n, *tau) : n;
            const double w = stopped < t.rows.size() ? t.rows[stopped].W : kInfinity;
            mean[n - k] += w;
        }
    }
    for (auto& v : mean) {
        v /= static_cast<double>(trajectories.size());
    }
    return mean;
}

StabilityReport analyze(const Trajectory& trajectory, const SAProblem& problem, const DiagnosticsConfig& diagnostics) {
    StabilityReport report;
    report.overflow = trajectory.terminal.overflowed;
    report.sup_norm = sup_norm(trajectory);
    report.last_scaled = last_scaled_index(trajectory);
    const double M = problem.lyapunov.threshold_M;
    for (double level : {M, diagnostics.m}) {
        report.hit_times[level] = hitting_time(trajectory, 0, level);
    }
    report.descent = window_descent_report(trajectory, problem, diagnostics);
    if (trajectory.has_noise()) {
        report.martingale_sup_tail = martingale_partial_sums(trajectory, problem, diagnostics).sup_tail;
    }
    return report;
}

} // namespace sastab
