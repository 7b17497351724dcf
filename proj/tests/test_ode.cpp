#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sastab/engine.hpp"
#include "sastab/ode.hpp"
#include "sastab/registry.hpp"

using namespace sastab;

namespace {

DriftField linear_field(double slope) {
    return DriftField{1, [slope](std::span<const double> x) { return Vec{slope * x[0]}; }};
}

const DriftField rotation{2, [](std::span<const double> x) { return Vec{-x[1], x[0]}; }};

SAProblem linear_problem(double slope) {
    SAProblem p = make_problem("example2");
    p.name = "linear";
    p.drift = linear_field(slope);
    p.noise = NoiseModel::additive_gaussian(1, 0.0);
    return p;
}

} // namespace

TEST_CASE("linear decay matches exp(-1)") {
    const auto r = integrate(linear_field(-1.0), Vec{1.0}, 1.0, 1e-9, 1e-12);
    CHECK(std::abs(r.endpoint[0] - std::exp(-1.0)) / std::exp(-1.0) < 1e-6);
    CHECK(r.times.back() == 1.0);
    CHECK(r.times.front() == 0.0);
    CHECK(r.states.size() == r.times.size());
    const auto d = integrate(linear_field(-1.0), Vec{1.0}, 1.0);
    CHECK(std::abs(d.endpoint[0] - std::exp(-1.0)) / std::exp(-1.0) < 1e-6);
}

TEST_CASE("constant flow leaves the point unchanged") {
    const DriftField zero{2, [](std::span<const double>) { return Vec{0.0, 0.0}; }};
    const auto r = integrate(zero, Vec{1.25, -3.5}, 7.0);
    CHECK(r.endpoint == Vec{1.25, -3.5});
}

TEST_CASE("rotation field closes the orbit and conserves the norm") {
    const double T = 2.0 * std::numbers::pi;
    const auto r = integrate(rotation, Vec{1.0, 0.0}, T);
    CHECK(distance(r.endpoint, Vec{1.0, 0.0}) < 1e-5);
    double worst = 0.0;
    for (const auto& s : r.states) {
        worst = std::max(worst, std::abs(norm(s) - 1.0));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("tighter tolerance reduces the error") {
    const double exact = std::exp(-2.0);
    double previous = kInfinity;
    for (double tol : {1e-4, 1e-6, 1e-8}) {
        const auto r = integrate(linear_field(-1.0), Vec{1.0}, 2.0, tol, tol * 1e-2);
        const double err = std::abs(r.endpoint[0] - exact);
        CHECK(err <= previous);
        previous = err;
    }
    CHECK(previous < 1e-8);
}

TEST_CASE("integration failure carries the partial result") {
    // x' = x^2 from 1 blows up at t = 1
    const DriftField blowup{1, [](std::span<const double> x) { return Vec{x[0] * x[0]}; }};
    try {
        integrate(blowup, Vec{1.0}, 2.0);
        FAIL("expected IntegrationFailure");
    } catch (const IntegrationFailure& f) {
        CHECK_FALSE(f.partial().times.empty());
        CHECK(f.partial().times.back() < 1.0 + 1e-6);
    }
    CHECK_THROWS_AS(integrate(linear_field(-1.0), Vec{1.0}, -1.0), ConfigError);
}

TEST_CASE("check_descent") {
    Rng rng(1);
    const auto p1 = make_problem("example1");
    const auto r1 = check_descent(p1, 1, 4, 10000, rng);
    CHECK(r1.pass);
    CHECK(r1.sup_Wdot < 0.0);
    CHECK(r1.sup_Wdot == doctest::Approx(-2.0 * std::numbers::e).epsilon(0.05));

    CHECK(check_descent(make_problem("example2"), 1, 4, 10000, rng).pass);
    CHECK(check_descent(make_problem("shifted-linear"), 1, 4, 10000, rng).pass);

    const auto flipped = check_descent(linear_problem(1.0), 1, 4, 10000, rng);
    CHECK_FALSE(flipped.pass);
    CHECK(flipped.sup_Wdot == doctest::Approx(8.0).epsilon(0.01));

    const auto lin = check_descent(linear_problem(-1.0), 1, 4, 10000, rng);
    CHECK(lin.pass);
    CHECK(lin.sup_Wdot == doctest::Approx(-2.0).epsilon(0.01));
}

TEST_CASE("equilibria_1d") {
    const auto p2 = make_problem("example2");
    const auto z = equilibria_1d(p2.drift, -3.0, 3.0, 1001);
    REQUIRE(z.size() == 1);
    CHECK(std::abs(z[0]) < 1e-9);

    const auto s = equilibria_1d(make_problem("shifted-linear").drift, 0.0, 10.0, 1000);
    REQUIRE(s.size() == 1);
    CHECK(s[0] == doctest::Approx(5.0).epsilon(1e-10));

    const DriftField positive{1, [](std::span<const double> x) { return Vec{x[0] * x[0] + 1.0}; }};
    CHECK(equilibria_1d(positive, -3.0, 3.0, 1001).empty());

    const auto e1 = equilibria_1d(make_problem("example1").drift, -10.0, 10.0, 2000);
    REQUIRE(e1.size() == 1);
    CHECK(std::abs(e1[0]) < 1e-9);
}

TEST_CASE("flow along W decreases outside the threshold") {
    for (const char* name : {"example1", "example2", "shifted-linear"}) {
        const auto p = make_problem(name);
        for (double u : {-1.8, -1.2, 1.3, 1.9}) {
            const Vec x0{u + (p.name == "shifted-linear" ? 5.0 : 0.0)};
            if (p.lyapunov.value(x0) < p.lyapunov.threshold_M) {
                continue;
            }
            const auto r = integrate(p.drift, x0, 0.5);
            CHECK(p.lyapunov.value(r.endpoint) <= p.lyapunov.value(x0));
        }
    }
}

namespace {

Trajectory noiseless_linear_run(double step, std::size_t horizon) {
    SAProblem p = linear_problem(-1.0);
    p.schedule = StepSchedule::table(std::vector<double>(horizon + 1, step));
    RunConfig rc;
    rc.mode = RunMode::vanilla();
    rc.x0 = {1.0};
    rc.horizon = horizon;
    return run(p, rc);
}

} // namespace

TEST_CASE("flow_compare on noiseless small steps") {
    SAProblem p = linear_problem(-1.0);
    const auto t = noiseless_linear_run(1e-3, 101);
    const auto c = flow_compare(t, p, 0, 100);
    CHECK(c.max_deviation <= 1e-4);
    CHECK(c.max_deviation > 0.0);
    CHECK(flow_compare(t, p, 50, 50).max_deviation == 0.0);

    const auto half = noiseless_linear_run(5e-4, 201);
    const double finer = flow_compare(half, p, 0, 200).max_deviation;
    CHECK(finer < 0.6 * c.max_deviation);
    CHECK(finer > 0.4 * c.max_deviation);
}
