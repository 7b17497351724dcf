#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "sastab/core.hpp"
#include "sastab/engine.hpp"

namespace sastab {

struct DiagnosticsConfig {
    /// Algorithmic-time window length.
    double T = 1.0;
    /// Level m >= M + 1 of the set H^m = {W < m}.
    double m = 4.0;
    double delta = 0.05;
    double epsilon = 0.05;
    /// Lipschitz estimate of h on the neighbourhood of H^m.
    double K = 0.0;

    void validate(int threshold_M) const;
};

/// max over rows of |y_n|; +inf for an overflowed trajectory.
double sup_norm(const Trajectory& trajectory);

/// First n >= k with W(y_n) < m; empty means never (infinity).
std::optional<std::size_t> hitting_time(const Trajectory& trajectory, std::size_t k, double m);
std::optional<std::size_t> hitting_time(std::span<const double> W, std::size_t k, double m);

/// Largest n with g_n > 1; empty if no step was scaled.
std::optional<std::size_t> last_scaled_index(const Trajectory& trajectory);

/// n_0 < n_1 < ... with n_{i+1} = inf{n > n_i : sum_{n_i}^{n} a_eff >= T},
/// truncated when the remaining steps cannot reach T.
std::vector<std::size_t> window_indices(std::span<const double> a_eff, std::size_t n0, double T);
std::vector<std::size_t> window_indices(const Trajectory& trajectory, std::size_t n0, double T);

enum class WindowVerdict { Descended, Trapped, Violated };

const char* to_string(WindowVerdict verdict);

struct WindowResult {
    std::size_t begin = 0;
    std::size_t end = 0;
    double W_begin = 0.0;
    double W_end = 0.0;
    WindowVerdict verdict = WindowVerdict::Violated;
};

struct WindowDescentReport {
    std::vector<std::size_t> windows;
    /// First window start lying in H^m; empty if none does.
    std::optional<std::size_t> start_index;
    /// One entry per window at or after the start whose begin lies in H^m.
    std::vector<WindowResult> results;

    std::size_t count(WindowVerdict verdict) const;
};

/// Classifies each window [n_i, n_{i+1}] that starts in H^m: descended if
/// W drops by more than epsilon/2, trapped if the end lies in
/// {W < M + epsilon/2} (the W-surrogate of the delta-neighbourhood of H^M),
/// violated otherwise.
WindowDescentReport window_descent_report(const Trajectory& trajectory, const SAProblem& problem,
                                          const DiagnosticsConfig& diagnostics);
/// Same on raw W and a_eff columns.
WindowDescentReport window_descent_report(std::span<const double> W, std::span<const double> a_eff, int threshold_M,
                                          const DiagnosticsConfig& diagnostics);

struct MartingaleSums {
    /// S_q = sum_{n <= q} 1{y_n in N^delta(H^m)} a_eff(n) M_{n+1}.
    std::vector<Vec> partials;
    /// sup_{q >= k} |S_q - S_last|: distance of the tail from the final
    /// recorded partial sum. Nonincreasing in k.
    std::vector<double> sup_tail;
};

/// Membership in N^delta(H^m) is decided by W(y) < m + epsilon/2.
MartingaleSums martingale_partial_sums(const Trajectory& trajectory, const SAProblem& problem,
                                       const DiagnosticsConfig& diagnostics);

/// Raw form: terms a_eff(n) M_{n+1}, gated by `active`.
MartingaleSums martingale_partial_sums(std::span<const Vec> noise, std::span<const double> a_eff,
                                       const std::vector<bool>& active);

/// For n >= k, the ensemble mean of W(y_{n ^ tau_k^M}). A trajectory that
/// ends (overflow) before n without having stopped contributes +inf.
std::vector<double> ensemble_lyapunov_moment(std::span<const Trajectory> trajectories, std::size_t k, double M);

struct StabilityReport {
    double sup_norm = 0.0;
    std::map<double, std::optional<std::size_t>> hit_times;
    std::optional<std::size_t> last_scaled;
    WindowDescentReport descent;
    std::vector<double> martingale_sup_tail;
    bool overflow = false;
};

/// Collects every diagnostic; the martingale part is skipped when the
/// trajectory has no noise record.
StabilityReport analyze(const Trajectory& trajectory, const SAProblem& problem, const DiagnosticsConfig& diagnostics);

} // namespace sastab
