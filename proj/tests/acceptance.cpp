// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sastab/analysis.hpp"
#include "sastab/engine.hpp"
#include "sastab/ode.hpp"
#include "sastab/registry.hpp"
#include "sastab/stabilizer.hpp"
#include "sastab/trace_io.hpp"

using namespace sastab;

namespace {

constexpr std::uint64_t kStabilizerSeed = 0x57AB1E;
constexpr std::size_t kSeeds = 100;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::uint64_t> seed_range(std::size_t count) {
    std::vector<std::uint64_t> s(count);
    for (std::size_t i = 0; i < count; ++i) {
        s[i] = i;
    }
    return s;
}

StabilizerConfig stabilizer(const SAProblem& p, int M, int N) {
    Rng rng(kStabilizerSeed);
    return make_stabilizer(p, M, N, 1.05, 10000, p.domain, rng);
}

RunConfig config(const SAProblem& p, RunMode mode, double x0, std::size_t horizon,
                 std::optional<StabilizerConfig> stab = std::nullopt) {
    RunConfig rc;
    rc.problem = p.name;
    rc.mode = mode;
    rc.x0 = {x0};
    rc.horizon = horizon;
    rc.stabilizer = std::move(stab);
    return rc;
}

unsigned many_workers() { return std::max(4u, std::thread::hardware_concurrency()); }

// The example1 adaptive ensemble shared by several criteria.
struct Example1Ensemble {
    SAProblem problem = make_problem("example1");
    std::vector<Trajectory> runs;
    double seconds = 0.0;

    Example1Ensemble() {
        const auto rc = config(problem, RunMode::adaptive(), 3.0, 10000, stabilizer(problem, 1, 4));
        EnsembleOptions eo;
        eo.workers = 0;
        eo.keep_trajectories = true;
        const auto start = std::chrono::steady_clock::now();
        runs = run_ensemble(problem, rc, seed_range(kSeeds), eo).trajectories;
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

std::string fmt(const char* format, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

Outcome stabilization(const Example1Ensemble& e) {
    std::size_t overflows = 0;
    std::size_t tail_ok = 0;
    double worst_tail = 0.0;
    for (const auto& t : e.runs) {
        overflows += t.terminal.overflowed ? 1 : 0;
        // y_9001 .. y_10000
        double tail = std::abs(t.terminal.y[0]);
        for (std::size_t n = t.rows.size() > 999 ? t.rows.size() - 999 : 0; n < t.rows.size(); ++n) {
            tail = std::max(tail, norm(t.rows[n].y));
        }
        worst_tail = std::max(worst_tail, tail);
        tail_ok += (!t.terminal.overflowed && t.rows.size() == 10000 && tail <= 1.2) ? 1 : 0;
    }
    return {overflows == 0 && tail_ok == kSeeds && e.seconds < 30.0,
            fmt("overflows=%zu/100 tail_bounded=%zu/100 max_tail=%.4g runtime=%.2fs", overflows, tail_ok, worst_tail,
                e.seconds)};
}

Outcome divergence() {
    const auto p = make_problem("example1");
    const auto rc = config(p, RunMode::vanilla(), 3.0, 50);
    const auto r = run_ensemble(p, rc, seed_range(kSeeds), {});
    std::size_t overflows = 0;
    for (const auto& s : r.summaries) {
        overflows += s.overflow ? 1 : 0;
    }
    return {overflows >= 95, fmt("overflows=%zu/100 (need >= 95)", overflows)};
}

Outcome eventually_unscaled(const Example1Ensemble& e) {
    std::size_t finite = 0;
    std::size_t quiet = 0;
    std::size_t latest = 0;
    for (const auto& t : e.runs) {
        const auto last = last_scaled_index(t);
        if (!t.terminal.overflowed) {
            ++finite;
        }
        const std::size_t at = last.value_or(0);
        latest = std::max(latest, at);
        quiet += (!last || *last <= 1000) ? 1 : 0;
    }
    return {finite == kSeeds && quiet >= 95,
            fmt("finite=%zu/100 no_scaling_after_1000=%zu/100 latest=%zu", finite, quiet, latest)};
}

Outcome recovery() {
    const auto p = make_problem("example2");
    const auto stab = stabilizer(p, 1, 2);
    std::size_t identical = 0;
    std::size_t scaled_rows = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto rc = config(p, RunMode::adaptive(), 3.0, 1000, stab);
        rc.seed = seed;
        auto vc = config(p, RunMode::vanilla(), 3.0, 1000);
        vc.seed = seed;
        const auto a = run(p, rc);
        const auto v = run(p, vc);
        bool same = a.rows.size() == v.rows.size() && a.terminal.y == v.terminal.y;
        for (std::size_t n = 0; same && n < a.rows.size(); ++n) {
            same = a.rows[n].y == v.rows[n].y && a.rows[n].a_eff == v.rows[n].a_eff && a.rows[n].W == v.rows[n].W;
        }
        for (const auto& r : a.rows) {
            scaled_rows += r.g != 1.0 ? 1 : 0;
            scaled_rows += scaling_factor(stab, p, r.y) != 1.0 ? 1 : 0;
        }
        identical += same ? 1 : 0;
    }
    return {identical == 10 && scaled_rows == 0, fmt("bit_identical=%zu/10 rows_with_g_ne_1=%zu", identical, scaled_rows)};
}

Outcome chain_transitive(const Example1Ensemble& e) {
    std::size_t near = 0;
    double worst = 0.0;
    for (const auto& t : e.runs) {
        const double d = t.terminal.overflowed ? kInfinity : norm(t.terminal.y);
        worst = std::max(worst, d);
        near += d < 0.2 ? 1 : 0;
    }
    const auto eq = equilibria_1d(e.problem.drift, -10.0, 10.0, 2001);
    const bool unique_zero = eq.size() == 1 && std::abs(eq[0]) < 1e-9;
    return {near >= 90 && unique_zero,
            fmt("terminal_within_0.2=%zu/100 max=%.3g equilibria=%zu at %.3g", near, worst, eq.size(),
                eq.empty() ? std::nan("") : eq[0])};
}

Outcome key_inequality() {
    std::string detail;
    bool pass = true;
    for (auto [name, N] : {std::pair{"example1", 4}, std::pair{"example2", 2}}) {
        const auto p = make_problem(name);
        const auto stab = stabilizer(p, 1, N);
        Rng rng(2024);
        const auto r = verify_wgc(stab, p, 10000, rng);
        pass = pass && r.pass() && r.samples == 10000;
        detail += fmt("%s: violations=%zu samples=%zu worst_ratio=%.4g c_N=%.6g; ", name, r.violations, r.samples,
                      r.worst_ratio, stab.c_N);
    }
    return {pass, detail};
}

Outcome descent() {
    Rng rng(31);
    std::string detail;
    bool pass = true;
    for (const char* name : {"example1", "example2", "shifted-linear"}) {
        const auto r = check_descent(make_problem(name), 1, 4, 10000, rng);
        pass = pass && r.pass && r.sup_Wdot < 0.0;
        detail += fmt("%s sup=%.5g; ", name, r.sup_Wdot);
    }
    SAProblem flipped = make_problem("example2");
    flipped.name = "flipped";
    flipped.drift = DriftField{1, [](std::span<const double> x) { return Vec{x[0]}; }};
    const auto f = check_descent(flipped, 1, 4, 10000, rng);
    pass = pass && !f.pass && f.sup_Wdot > 0.0;
    detail += fmt("flipped sup=%.5g; ", f.sup_Wdot);

    const double target = -2.0 * std::numbers::e;
    const auto e1 = check_descent(make_problem("example1"), 1, 4, 10000, rng);
    const double rel = std::abs(e1.sup_Wdot - target) / std::abs(target);
    pass = pass && rel <= 0.05;
    detail += fmt("example1 vs -2e rel=%.2e", rel);
    return {pass, detail};
}

Outcome window_descent(const Example1Ensemble& e) {
    DiagnosticsConfig d;
    d.T = 1.0;
    d.m = 4.0;
    d.delta = 0.05;
    d.epsilon = 0.05;
    std::size_t violated = 0;
    std::size_t judged = 0;
    std::size_t unstarted = 0;
    for (const auto& t : e.runs) {
        const auto r = window_descent_report(t, e.problem, d);
        violated += r.count(WindowVerdict::Violated);
        judged += r.results.size();
        unstarted += r.start_index ? 0 : 1;
    }
    return {violated == 0 && judged > 0,
            fmt("violated=%zu judged_windows=%zu runs_without_start=%zu", violated, judged, unstarted)};
}

Outcome martingale(const Example1Ensemble& e) {
    const DiagnosticsConfig d;
    std::size_t monotone = 0;
    std::size_t decayed = 0;
    for (const auto& t : e.runs) {
        const auto s = martingale_partial_sums(t, e.problem, d);
        if (s.sup_tail.size() <= 5000) {
            continue;
        }
        bool mono = true;
        for (std::size_t k = 1; k < s.sup_tail.size() && mono; ++k) {
            mono = s.sup_tail[k] <= s.sup_tail[k - 1];
        }
        monotone += mono ? 1 : 0;
        decayed += (mono && s.sup_tail[5000] < s.sup_tail[0]) ? 1 : 0;
    }
    return {monotone == kSeeds && decayed >= 95, fmt("nonincreasing=%zu/100 tail5000_below_tail0=%zu/100", monotone, decayed)};
}

Outcome projection_pitfall() {
    const auto p = make_problem("shifted-linear");
    const auto proj = run_ensemble(p, config(p, RunMode::projection(3.0), 0.0, 10000), seed_range(kSeeds), {});
    const auto adapt =
        run_ensemble(p, config(p, RunMode::adaptive(), 0.0, 10000, stabilizer(p, 1, 4)), seed_range(kSeeds), {});
    std::size_t at_boundary = 0;
    std::size_t at_root = 0;
    double worst_proj = 0.0;
    double worst_adapt = 0.0;
    for (const auto& s : proj.summaries) {
        const double d = std::abs(s.terminal_y[0] - 3.0);
        worst_proj = std::max(worst_proj, d);
        at_boundary += d <= 0.05 ? 1 : 0;
    }
    for (const auto& s : adapt.summaries) {
        const double d = std::abs(s.terminal_y[0] - 5.0);
        worst_adapt = std::max(worst_adapt, d);
        at_root += d <= 0.2 ? 1 : 0;
    }
    return {at_boundary >= 95 && at_root >= 90,
            fmt("projection_at_3=%zu/100 (max dev %.2g) adaptive_at_5=%zu/100 (max dev %.2g)", at_boundary, worst_proj,
                at_root, worst_adapt)};
}

Outcome numerics() {
    const DriftField linear{1, [](std::span<const double> x) { return Vec{-x[0]}; }};
    const auto lin = integrate(linear, Vec{1.0}, 1.0);
    const double rel = std::abs(lin.endpoint[0] - std::exp(-1.0)) / std::exp(-1.0);

    const DriftField rotation{2, [](std::span<const double> x) { return Vec{-x[1], x[0]}; }};
    const auto rot = integrate(rotation, Vec{1.0, 0.0}, 2.0 * std::numbers::pi);
    double drift = 0.0;
    for (const auto& s : rot.states) {
        drift = std::max(drift, std::abs(norm(s) - 1.0));
    }

    Rng rng(11);
    const Box box = Box::cube(1, -10.0, 10.0);
    std::vector<Vec> pts;
    for (int i = 0; i < 100; ++i) {
        pts.push_back(box.sample(rng));
    }
    std::size_t grad_ok = 0;
    for (const auto& name : registry_names()) {
        grad_ok += gradient_check(make_problem(name).lyapunov, pts, 1e-5).pass ? 1 : 0;
    }

    const auto p = make_problem("example1");
    const auto rc = config(p, RunMode::adaptive(), 3.0, 10000, stabilizer(p, 1, 4));
    DiagnosticsConfig diag;
    EnsembleOptions one;
    one.workers = 1;
    one.diagnostics = &diag;
    EnsembleOptions many = one;
    many.workers = many_workers();
    const auto seeds = seed_range(16);
    const bool same =
        summary_json(run_ensemble(p, rc, seeds, one).summaries) == summary_json(run_ensemble(p, rc, seeds, many).summaries);

    return {rel < 1e-6 && drift < 1e-6 && grad_ok == registry_names().size() && same,
            fmt("exp(-1) rel=%.2e rotation_norm_drift=%.2e gradient_checks=%zu/%zu deterministic=%s", rel, drift,
                grad_ok, registry_names().size(), same ? "yes" : "no")};
}

} // namespace

int main() {
    const Example1Ensemble ensemble;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"stabilization", [&] { return stabilization(ensemble); }},
        {"divergence without scaling", divergence},
        {"eventually unscaled steps", [&] { return eventually_unscaled(ensemble); }},
        {"scheme recovery", recovery},
        {"chain-transitive limit", [&] { return chain_transitive(ensemble); }},
        {"key inequality audit", key_inequality},
        {"descent verification", descent},
        {"per-window descent", [&] { return window_descent(ensemble); }},
        {"martingale diagnostic", [&] { return martingale(ensemble); }},
        {"projection pitfall", projection_pitfall},
        {"numerics", numerics},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
