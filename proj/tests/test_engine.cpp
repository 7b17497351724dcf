#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sastab/analysis.hpp"
#include "sastab/engine.hpp"
#include "sastab/registry.hpp"
#include "sastab/trace_io.hpp"

using namespace sastab;

namespace {

StabilizerConfig stabilizer_for(const SAProblem& p, int N) {
    Rng rng(0x57AB1E);
    return make_stabilizer(p, 1, N, 1.05, 10000, p.domain, rng);
}

RunConfig adaptive_config(const SAProblem& p, double x0, std::size_t horizon, std::uint64_t seed, int N = 4) {
    RunConfig rc;
    rc.problem = p.name;
    rc.mode = RunMode::adaptive();
    rc.x0 = {x0};
    rc.horizon = horizon;
    rc.seed = seed;
    rc.stabilizer = stabilizer_for(p, N);
    return rc;
}

SAProblem noiseless_linear() {
    SAProblem p = make_problem("example2");
    p.name = "linear";
    p.drift = DriftField{1, [](std::span<const double> x) { return Vec{-x[0]}; }};
    p.noise = NoiseModel::additive_gaussian(1, 0.0);
    return p;
}

} // namespace

TEST_CASE("one vanilla step with zero noise lands on the root") {
    const auto p = noiseless_linear();
    EngineState s;
    s.y = {1.0};
    const auto next = step(s, p, RunMode::vanilla(), nullptr);
    CHECK(next.y == Vec{0.0});
    CHECK(next.n == 1);
    CHECK_FALSE(next.overflowed);
}

TEST_CASE("adaptive step from y = 3 with a zero draw") {
    const auto p = make_problem("example1");
    const auto stab = stabilizer_for(p, 4);
    EngineState s;
    s.y = {3.0};
    StepRecord rec;
    const auto next = advance(s, p, RunMode::adaptive(), &stab, Vec{0.0}, &rec);
    const double h3 = -3.0 * std::exp(3.0);
    CHECK(h3 == doctest::Approx(-60.257).epsilon(1e-5));
    CHECK(rec.g == doctest::Approx(29.826).epsilon(1e-4));
    CHECK(rec.a == 1.0);
    CHECK(rec.a_eff == rec.a / rec.g);
    CHECK(next.y[0] == doctest::Approx(3.0 + rec.a_eff * h3).epsilon(1e-15));
    CHECK(next.y[0] == doctest::Approx(0.9797).epsilon(1e-3));
}

TEST_CASE("projection returns a point on the sphere") {
    const Vec p = project_to_ball(Vec{6.0, 8.0}, 3.0);
    CHECK(norm(p) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(project_to_ball(Vec{1.0, 1.0}, 3.0) == Vec{1.0, 1.0});

    const auto lin = noiseless_linear();
    EngineState s;
    s.y = {-10.0};
    // y' = -10 + 1 * 10 = 0 would stay inside; push outward with a large draw instead
    const auto next = advance(s, lin, RunMode::projection(3.0), nullptr, Vec{-20.0});
    CHECK(std::abs(next.y[0]) == 3.0);
}

TEST_CASE("run config validation") {
    const auto p = make_problem("example1");
    RunConfig rc;
    rc.mode = RunMode::adaptive();
    rc.x0 = {1.0};
    CHECK_THROWS_AS(rc.validate(p), ConfigError);
    rc.mode = RunMode::projection(0.0);
    CHECK_THROWS_AS(rc.validate(p), ConfigError);
    rc.mode = RunMode::vanilla();
    rc.horizon = 0;
    CHECK_THROWS_AS(rc.validate(p), ConfigError);
    rc.horizon = 5;
    rc.x0 = {1.0, 2.0};
    CHECK_THROWS_AS(rc.validate(p), ConfigError);
    CHECK_THROWS_AS(parse_mode("turbo"), ConfigError);
    CHECK(parse_mode("projection") == Mode::Projection);
    CHECK(to_string(Mode::Vanilla) == "vanilla");
}

TEST_CASE("trajectory row invariants") {
    const auto p = make_problem("example1");
    const auto t = run(p, adaptive_config(p, 3.0, 2000, 42));
    REQUIRE(t.rows.size() == 2000);
    REQUIRE(t.noise.size() == 2000);
    CHECK(t.has_noise());
    for (std::size_t n = 0; n < t.rows.size(); ++n) {
        const auto& r = t.rows[n];
        CHECK(r.n == n);
        CHECK(r.g >= 1.0);
        CHECK(r.a_eff <= r.a);
        CHECK(r.a_eff == r.a / r.g);
        CHECK(r.W == r.y[0] * r.y[0]);
    }
    CHECK(t.terminal.n == 2000);
    CHECK(t.rows.front().y == Vec{3.0});
    CHECK(t.seed == 42);
    CHECK(t.problem == "example1");
}

TEST_CASE("replaying recorded noise reproduces the iterates") {
    const auto p = make_problem("example1");
    const auto rc = adaptive_config(p, 3.0, 500, 7);
    const auto t = run(p, rc);
    EngineState s;
    s.y = t.rows.front().y;
    for (std::size_t n = 0; n < t.rows.size(); ++n) {
        REQUIRE(s.y == t.rows[n].y);
        s = advance(s, p, rc.mode, &*rc.stabilizer, t.noise[n]);
    }
    CHECK(s.y == t.terminal.y);
}

TEST_CASE("vanilla example1 overflows and stops recording") {
    const auto p = make_problem("example1");
    RunConfig rc;
    rc.mode = RunMode::vanilla();
    rc.x0 = {3.0};
    rc.horizon = 50;
    std::size_t overflowed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        rc.seed = seed;
        const auto t = run(p, rc);
        if (t.terminal.overflowed) {
            ++overflowed;
            CHECK(t.rows.size() < 50);
            CHECK(std::isinf(sup_norm(t)));
            for (const auto& r : t.rows) {
                CHECK(std::isfinite(r.W));
            }
            // frozen once overflowed
            const auto again = step(t.terminal, p, rc.mode, nullptr);
            CHECK(again.n == t.terminal.n);
            CHECK(again.overflowed);
        }
    }
    CHECK(overflowed >= 18);
}

TEST_CASE("example2 with N = 2 recovers the unscaled scheme bit for bit") {
    const auto p = make_problem("example2");
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto rc = adaptive_config(p, 3.0, 1000, seed, 2);
        RunConfig vc = rc;
        vc.mode = RunMode::vanilla();
        vc.stabilizer.reset();
        const auto a = run(p, rc);
        const auto v = run(p, vc);
        REQUIRE(a.rows.size() == v.rows.size());
        for (std::size_t n = 0; n < a.rows.size(); ++n) {
            CHECK(a.rows[n].g == 1.0);
            CHECK(a.rows[n].y == v.rows[n].y);
            CHECK(a.rows[n].a_eff == v.rows[n].a_eff);
        }
    }
}

TEST_CASE("N = infinity matches vanilla") {
    const auto p = make_problem("example1");
    Rng rng(1);
    RunConfig rc;
    rc.mode = RunMode::adaptive();
    rc.x0 = {0.5};
    rc.horizon = 300;
    rc.seed = 5;
    rc.stabilizer = make_stabilizer(p, 1, std::nullopt, 1.05, 10, p.domain, rng);
    RunConfig vc = rc;
    vc.mode = RunMode::vanilla();
    const auto a = run(p, rc);
    const auto v = run(p, vc);
    REQUIRE(a.rows.size() == v.rows.size());
    for (std::size_t n = 0; n < a.rows.size(); ++n) {
        CHECK(a.rows[n].y == v.rows[n].y);
    }
    CHECK(a.terminal.y == v.terminal.y);
}

TEST_CASE("run by registry name") {
    const auto p = make_problem("example2");
    RunConfig rc;
    rc.problem = "example2";
    rc.mode = RunMode::vanilla();
    rc.x0 = {1.0};
    rc.horizon = 10;
    rc.seed = 3;
    CHECK(run(rc).terminal.y == run(p, rc).terminal.y);
    rc.problem = "missing";
    CHECK_THROWS_AS(run(rc), ConfigError);
}

TEST_CASE("ensemble determinism across worker counts") {
    const auto p = make_problem("example1");
    const auto rc = adaptive_config(p, 3.0, 3000, 0);
    const std::vector<std::uint64_t> seeds{1, 2, 3, 10, 11};
    DiagnosticsConfig diag;
    EnsembleOptions one;
    one.workers = 1;
    one.diagnostics = &diag;
    EnsembleOptions many = one;
    many.workers = 4;
    const auto a = run_ensemble(p, rc, seeds, one);
    const auto b = run_ensemble(p, rc, seeds, many);
    CHECK(summary_json(a.summaries) == summary_json(b.summaries));
    REQUIRE(a.summaries.size() == seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CHECK(a.summaries[i].seed == seeds[i]);
    }
}

TEST_CASE("singleton ensemble matches a direct run") {
    const auto p = make_problem("example1");
    auto rc = adaptive_config(p, 3.0, 2000, 0);
    const std::vector<std::uint64_t> seeds{9};
    EnsembleOptions eo;
    eo.keep_trajectories = true;
    const auto e = run_ensemble(p, rc, seeds, eo);
    rc.seed = 9;
    const auto t = run(p, rc);
    const auto s = summarize_run(t, p);
    REQUIRE(e.trajectories.size() == 1);
    CHECK(e.trajectories[0].terminal.y == t.terminal.y);
    CHECK(e.summaries[0].sup_norm == s.sup_norm);
    CHECK(e.summaries[0].last_scaled == s.last_scaled);
    CHECK(e.summaries[0].terminal_W == s.terminal_W);
    CHECK(s.sup_norm == sup_norm(t));
}
