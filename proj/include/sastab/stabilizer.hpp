#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "sastab/core.hpp"

namespace sastab {

/// Parameters of the step-size scaling g(y).
///
/// `threshold_N` empty means N = infinity, in which case g == 1.
struct StabilizerConfig {
    int threshold_M = 1;
    std::optional<int> threshold_N = 4;
    double margin = 1.05;
    double c_N = 0.0;
    std::size_t annulus_samples = 10000;
    Box sample_box = Box::cube(1, -10.0, 10.0);

    void validate() const;
};

inline constexpr double kDefaultMargin = 1.05;

struct CnEstimate {
    double c_N = 0.0;
    /// Sampled sup of (|h|^2 + f) / W over {M <= W <= N}.
    double sampled_sup = 0.0;
    Vec worst_point;
    std::size_t samples = 0;
    std::size_t attempts = 0;
};

/// margin * max(1, sampled sup over the annulus {M <= W <= N} of
/// (|h|^2 + f)/W). Sampling is by rejection from `box`; shards use
/// independent streams so the result does not depend on `workers`.
CnEstimate estimate_cN(const SAProblem& problem, int M, int N, std::size_t samples, double margin, const Box& box,
                       Rng& rng, unsigned workers = 1);
CnEstimate estimate_cN(const SAProblem& problem, int M, int N, std::size_t samples, double margin, Rng& rng);

/// Estimates c_N and assembles a validated config.
StabilizerConfig make_stabilizer(const SAProblem& problem, int M, std::optional<int> N, double margin,
                                 std::size_t samples, const Box& box, Rng& rng, unsigned workers = 1);

/// Smallest N > M whose annulus sup estimate agrees within `tolerance`
/// (relative) between `samples` and 2*`samples` draws.
int choose_N(const SAProblem& problem, int M, std::size_t samples, const Box& box, Rng& rng, int max_N = 0,
             double tolerance = 0.01);

/// g(y) = max(1, margin * 1{W(y) > N} * sqrt((|h(y)|^2 + f(y)) / W(y))).
double scaling_factor(const StabilizerConfig& config, const SAProblem& problem, std::span<const double> y);

/// a(n) / g(y).
double adaptive_step(const StabilizerConfig& config, const SAProblem& problem, std::uint64_t n,
                     std::span<const double> y);

struct WgcReport {
    std::size_t samples = 0;
    std::size_t violations = 0;
    /// max of ((|h|^2 + f) / g^2) / (c_N W); a violation is ratio >= 1.
    double worst_ratio = 0.0;
    Vec worst_point;
    bool pass() const { return violations == 0; }
};

/// Audits c_N W(y) > (|h(y)|^2 + f(y)) / g(y)^2 on {W >= M} within the
/// config's sample box.
WgcReport verify_wgc(const StabilizerConfig& config, const SAProblem& problem, std::size_t samples, Rng& rng,
                     unsigned workers = 1);

enum class CInfinityVerdict { Pass, Inconclusive };

struct CInfinityReport {
    /// Sampled sup of (|h|^2 + f) / min(1, W); +inf when W = 0 with a
    /// positive numerator was hit.
    double estimate = 0.0;
    /// Same sup restricted to the box shrunk by 10% about its center.
    double inner_estimate = 0.0;
    Vec worst_point;
    CInfinityVerdict verdict = CInfinityVerdict::Inconclusive;
    std::string reason;
};

/// Evidence (never proof) that sup (|h|^2 + f) / (1 ^ W) is finite.
/// Evaluates an odd-sized tensor grid (which contains the center) plus
/// uniform samples. Inconclusive when the sup is infinite or when the
/// outer shell of the box dominates the inner box.
CInfinityReport check_c_infinity(const SAProblem& problem, std::size_t samples, const Box& box, Rng& rng);

} // namespace sastab
