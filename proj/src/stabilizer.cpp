#include "sastab/stabilizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parallel.hpp"

namespace sastab {

namespace {

constexpr std::size_t kShardSize = 1024;
constexpr std::size_t kBudgetFactor = 500;

double drift_plus_noise(const SAProblem& problem, std::span<const double> y) {
    return norm_squared(problem.drift(y)) + problem.noise.var_bound(y);
}

struct ShardMax {
    double value = -kInfinity;
    Vec point;
    std::size_t accepted = 0;
    std::size_t attempts = 0;
};

/// Max of `objective` over rejection samples of `region` within `box`.
/// Sample quota is split into fixed-size shards, each with its own stream,
/// so the result is independent of the worker count.
template <typename Region, typename Objective>
ShardMax sharded_max(const Box& box, std::size_t samples, Rng& rng, unsigned workers, Region&& region,
                     Objective&& objective) {
    const Rng base = rng.split(rng.next_u64());
    const std::size_t shards = (samples + kShardSize - 1) / kShardSize;
    std::vector<ShardMax> results(shards);
    detail::parallel_for(shards, workers, [&](std::size_t s) {
        Rng local = base.split(s);
        const std::size_t quota = std::min(kShardSize, samples - s * kShardSize);
        ShardMax& out = results[s];
        const std::size_t budget = quota * kBudgetFactor;
        while (out.accepted < quota && out.attempts < budget) {
            ++out.attempts;
            Vec y = box.sample(local);
            if (!region(y)) {
                continue;
            }
            ++out.accepted;
            const double v = objective(y);
            if (v > out.value || std::isnan(v)) {
                out.value = std::isnan(v) ? kInfinity : v;
                out.point = std::move(y);
            }
        }
    });
    ShardMax total;
    for (auto& r : results) {
        total.accepted += r.accepted;
        total.attempts += r.attempts;
        if (r.accepted > 0 && r.value > total.value) {
            total.value = r.value;
            total.point = r.point;
        }
    }
    return total;
}

double annulus_sup(const SAProblem& problem, int M, int N, std::size_t samples, const Box& box, Rng& rng,
                   unsigned workers, CnEstimate* detail) {
    const auto& W = problem.lyapunov.value;
    auto in_annulus = [&](std::span<const double> y) {
        const double w = W(y);
        return w >= M && w <= N;
    };
    auto ratio = [&](std::span<const double> y) { return drift_plus_noise(problem, y) / W(y); };
    ShardMax best = sharded_max(box, samples, rng, workers, in_annulus, ratio);
    if (best.accepted == 0) {
        throw EmptyRegion("no sample landed in the annulus {" + std::to_string(M) + " <= W <= " +
                          std::to_string(N) + "} after " + std::to_string(best.attempts) + " attempts");
    }
    if (detail) {
        detail->sampled_sup = best.value;
        detail->worst_point = best.point;
        detail->samples = best.accepted;
        detail->attempts = best.attempts;
    }
    return best.value;
}

} // namespace

void StabilizerConfig::validate() const {
    if (threshold_M < 1) {
        throw ConfigError("stabilizer.M must be a positive integer");
    }
    if (threshold_N && *threshold_N <= threshold_M) {
        throw ConfigError("stabilizer.N must exceed stabilizer.M");
    }
    if (!(margin > 1.0)) {
        throw ConfigError("stabilizer.margin must exceed 1");
    }
    if (!(c_N > 1.0) || !std::isfinite(c_N)) {
        throw ConfigError("stabilizer c_N must be a finite number > 1");
    }
}

CnEstimate estimate_cN(const SAProblem& problem, int M, int N, std::size_t samples, double margin, const Box& box,
                       Rng& rng, unsigned workers) {
    if (!(M < N)) {
        throw ConfigError("stabilizer.N must exceed stabilizer.M");
    }
    if (samples == 0) {
        throw ConfigError("estimate_cN needs at least one sample");
    }
    if (!(margin > 1.0)) {
        throw ConfigError("stabilizer.margin must exceed 1");
    }
    box.require_volume();
    CnEstimate est;
    const double sup = annulus_sup(problem, M, N, samples, box, rng, workers, &est);
    est.c_N = margin * std::max(1.0, sup);
    return est;
}

CnEstimate estimate_cN(const SAProblem& problem, int M, int N, std::size_t samples, double margin, Rng& rng) {
    return estimate_cN(problem, M, N, samples, margin, problem.domain, rng);
}

StabilizerConfig make_stabilizer(const SAProblem& problem, int M, std::optional<int> N, double margin,
                                 std::size_t samples, const Box& box, Rng& rng, unsigned workers) {
    StabilizerConfig config;
    config.threshold_M = M;
    config.threshold_N = N;
    config.margin = margin;
    config.annulus_samples = samples;
    config.sample_box = box;
    if (N) {
        config.c_N = estimate_cN(problem, M, *N, samples, margin, box, rng, workers).c_N;
    } else {
        // N = infinity: g == 1 everywhere and the annulus is unbounded, so
        // c_N only carries the floor.
        config.c_N = margin;
    }
    config.validate();
    return config;
}

int choose_N(const SAProblem& problem, int M, std::size_t samples, const Box& box, Rng& rng, int max_N,
             double tolerance) {
    if (max_N <= M) {
        max_N = M + 64;
    }
    for (int N = M + 1; N <= max_N; ++N) {
        try {
            const double coarse = annulus_sup(problem, M, N, samples, box, rng, 1, nullptr);
            const double fine = annulus_sup(problem, M, N, 2 * samples, box, rng, 1, nullptr);
            if (std::isfinite(fine) && std::abs(fine - coarse) <= tolerance * std::abs(fine)) {
                return N;
            }
        } catch (const EmptyRegion&) {
            continue;
        }
    }
    throw VerificationError("no N in (" + std::to_string(M) + ", " + std::to_string(max_N) +
                            "] gave a stable annulus estimate");
}

double scaling_factor(const StabilizerConfig& config, const SAProblem& problem, std::span<const double> y) {
    if (!config.threshold_N) {
        return 1.0;
    }
    const double w = problem.lyapunov.value(y);
    if (!(w > *config.threshold_N)) {
        return 1.0;
    }
    const double candidate = config.margin * std::sqrt(drift_plus_noise(problem, y) / w);
    if (std::isnan(candidate)) {
        return kInfinity;
    }
    return std::max(1.0, candidate);
}

double adaptive_step(const StabilizerConfig& config, const SAProblem& problem, std::uint64_t n,
                     std::span<const double> y) {
    return problem.schedule(n) / scaling_factor(config, problem, y);
}

WgcReport verify_wgc(const StabilizerConfig& config, const SAProblem& problem, std::size_t samples, Rng& rng,
                     unsigned workers) {
    config.sample_box.require_volume();
    const auto& W = problem.lyapunov.value;
    const double M = config.threshold_M;
    const Rng base = rng.split(rng.next_u64());
    const std::size_t shards = (samples + kShardSize - 1) / kShardSize;

    struct Shard {
        std::size_t samples = 0;
        std::size_t violations = 0;
        double worst = -kInfinity;
        Vec point;
    };
    std::vector<Shard> results(shards);
    detail::parallel_for(shards, workers, [&](std::size_t s) {
        Rng local = base.split(s);
        const std::size_t quota = std::min(kShardSize, samples - s * kShardSize);
        Shard& out = results[s];
        for (std::size_t attempt = 0; attempt < quota * kBudgetFactor && out.samples < quota; ++attempt) {
            Vec y = config.sample_box.sample(local);
            const double w = W(y);
            if (!(w >= M)) {
                continue;
            }
            ++out.samples;
            const double g = scaling_factor(config, problem, y);
            const double rhs = drift_plus_noise(problem, y) / (g * g);
            const double lhs = config.c_N * w;
            const double ratio = rhs / lhs;
            if (!(lhs > rhs)) {
                ++out.violations;
            }
            if (ratio > out.worst || std::isnan(ratio)) {
                out.worst = std::isnan(ratio) ? kInfinity : ratio;
                out.point = std::move(y);
            }
        }
    });

    WgcReport report;
    report.worst_ratio = -kInfinity;
    for (auto& r : results) {
        report.samples += r.samples;
        report.violations += r.violations;
        if (r.samples > 0 && r.worst > report.worst_ratio) {
            report.worst_ratio = r.worst;
            report.worst_point = r.point;
        }
    }
    if (report.samples == 0) {
        throw EmptyRegion("verify_wgc: no sample of the box satisfies W >= M");
    }
    return report;
}

CInfinityReport check_c_infinity(const SAProblem& problem, std::size_t samples, const Box& box, Rng& rng) {
    if (samples == 0) {
        throw ConfigError("check_c_infinity needs at least one sample");
    }
    box.require_volume();
    const Box inner = box.scaled(0.9);
    const std::size_t d = box.dim();

    CInfinityReport report;
    auto visit = [&](const Vec& x) {
        const double num = drift_plus_noise(problem, x);
        const double den = std::min(1.0, problem.lyapunov.value(x));
        double value;
        if (den == 0.0) {
            value = num > 0.0 ? kInfinity : 0.0;
        } else {
            value = num / den;
        }
        if (std::isnan(value)) {
            value = kInfinity;
        }
        if (value > report.estimate || report.worst_point.empty()) {
            report.estimate = std::max(report.estimate, value);
            report.worst_point = x;
        }
        if (inner.contains(x)) {
            report.inner_estimate = std::max(report.inner_estimate, value);
        }
    };

    // odd tensor grid, so the box center is a node
    std::size_t per_axis = 3;
    while (std::pow(static_cast<double>(per_axis + 2), static_cast<double>(d)) <= static_cast<double>(samples)) {
        per_axis += 2;
    }
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        Vec x(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double t = static_cast<double>(idx[i]) / static_cast<double>(per_axis - 1);
            x[i] = box.lo()[i] + t * (box.hi()[i] - box.lo()[i]);
        }
        visit(x);
        std::size_t axis = 0;
        while (axis < d && ++idx[axis] == per_axis) {
            idx[axis++] = 0;
        }
        if (axis == d) {
            break;
        }
    }
    for (std::size_t i = 0; i < samples; ++i) {
        visit(box.sample(rng));
    }

    if (!std::isfinite(report.estimate)) {
        report.verdict = CInfinityVerdict::Inconclusive;
        report.reason = "ratio unbounded: W vanishes where |h|^2 + f > 0";
    } else if (report.estimate > report.inner_estimate * 1.01) {
        report.verdict = CInfinityVerdict::Inconclusive;
        report.reason = "sup attained in the outer shell of the box; it grows with the region";
    } else {
        report.verdict = CInfinityVerdict::Pass;
        report.reason = "sampled sup is finite and interior (evidence on the box only)";
    }
    return report;
}

} // namespace sastab
