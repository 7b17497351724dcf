#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sastab/analysis.hpp"
#include "sastab/config.hpp"
#include "sastab/core.hpp"
#include "sastab/engine.hpp"
#include "sastab/expression.hpp"
#include "sastab/ode.hpp"
#include "sastab/registry.hpp"
#include "sastab/stabilizer.hpp"
#include "sastab/trace_io.hpp"

namespace py = pybind11;
using namespace sastab;

namespace {

py::array_t<double> column(const Trajectory& t, double TraceRow::*field) {
    py::array_t<double> out(static_cast<py::ssize_t>(t.rows.size()));
    auto view = out.mutable_unchecked<1>();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        view(static_cast<py::ssize_t>(i)) = t.rows[i].*field;
    }
    return out;
}

py::array_t<double> states(const std::vector<Vec>& rows, std::size_t dim) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(dim)});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            view(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = rows[i][j];
        }
    }
    return out;
}

Box make_box(const std::vector<double>& lo, const std::vector<double>& hi) { return Box(lo, hi); }

} // namespace

PYBIND11_MODULE(_sastab, m) {
    m.doc() = "Step-size-scaled stochastic approximation: runs, audits and diagnostics.";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<EmptyRegion>(m, "EmptyRegion", PyExc_RuntimeError);
    py::register_exception<IncompleteTrace>(m, "IncompleteTrace", PyExc_RuntimeError);

    py::class_<StepSchedule>(m, "StepSchedule")
        .def_static("harmonic", &StepSchedule::harmonic)
        .def_static("polynomial", &StepSchedule::polynomial, py::arg("a0"), py::arg("b"), py::arg("gamma"))
        .def_static("table", &StepSchedule::table, py::arg("values"))
        .def("__call__", &StepSchedule::operator(), py::arg("n"));

    m.def("schedule_value", &schedule_value, py::arg("schedule"), py::arg("n"));

    py::class_<Box>(m, "Box")
        .def(py::init(&make_box), py::arg("lo"), py::arg("hi"))
        .def_static("cube", &Box::cube, py::arg("dim"), py::arg("lo"), py::arg("hi"))
        .def_property_readonly("lo", &Box::lo)
        .def_property_readonly("hi", &Box::hi);

    py::class_<SAProblem>(m, "Problem")
        .def_readonly("name", &SAProblem::name)
        .def_readonly("dim", &SAProblem::dim)
        .def("drift", [](const SAProblem& p, const Vec& x) { return p.drift(x); })
        .def("lyapunov", [](const SAProblem& p, const Vec& x) { return p.lyapunov.value(x); })
        .def("var_bound", [](const SAProblem& p, const Vec& x) { return p.noise.var_bound(x); })
        .def_property_readonly("threshold_M", [](const SAProblem& p) { return p.lyapunov.threshold_M; });

    m.def("problem", &make_problem, py::arg("name"), "Builtin problem by name.");
    m.def("problem_names", &registry_names);
    m.def("drift_dot_grad", [](const SAProblem& p, const Vec& x) { return drift_dot_grad(p, x); });

    py::class_<StabilizerConfig>(m, "StabilizerConfig")
        .def_readwrite("threshold_M", &StabilizerConfig::threshold_M)
        .def_readwrite("threshold_N", &StabilizerConfig::threshold_N)
        .def_readwrite("margin", &StabilizerConfig::margin)
        .def_readwrite("c_N", &StabilizerConfig::c_N);

    m.def(
        "make_stabilizer",
        [](const SAProblem& p, int M, std::optional<int> N, double margin, std::size_t samples, std::uint64_t seed) {
            Rng rng(seed);
            return make_stabilizer(p, M, N, margin, samples, p.domain, rng);
        },
        py::arg("problem"), py::arg("M") = 1, py::arg("N") = 4, py::arg("margin") = kDefaultMargin,
        py::arg("samples") = 10000, py::arg("seed") = 0);
    m.def(
        "estimate_cN",
        [](const SAProblem& p, int M, int N, std::size_t samples, double margin, std::uint64_t seed) {
            Rng rng(seed);
            return estimate_cN(p, M, N, samples, margin, rng).c_N;
        },
        py::arg("problem"), py::arg("M"), py::arg("N"), py::arg("samples") = 10000,
        py::arg("margin") = kDefaultMargin, py::arg("seed") = 0);
    m.def("scaling_factor", [](const StabilizerConfig& c, const SAProblem& p, const Vec& y) {
        return scaling_factor(c, p, y);
    });
    m.def("adaptive_step", [](const StabilizerConfig& c, const SAProblem& p, std::uint64_t n, const Vec& y) {
        return adaptive_step(c, p, n, y);
    });
    m.def(
        "verify_wgc",
        [](const StabilizerConfig& c, const SAProblem& p, std::size_t samples, std::uint64_t seed) {
            Rng rng(seed);
            const auto r = verify_wgc(c, p, samples, rng);
            return py::dict(py::arg("samples") = r.samples, py::arg("violations") = r.violations,
                            py::arg("worst_ratio") = r.worst_ratio);
        },
        py::arg("config"), py::arg("problem"), py::arg("samples") = 10000, py::arg("seed") = 0);
    m.def(
        "check_descent",
        [](const SAProblem& p, double M, double mlevel, std::size_t samples, std::uint64_t seed) {
            Rng rng(seed);
            const auto r = check_descent(p, M, mlevel, samples, rng);
            return py::dict(py::arg("sup_Wdot") = r.sup_Wdot, py::arg("pass") = r.pass,
                            py::arg("samples") = r.samples);
        },
        py::arg("problem"), py::arg("M"), py::arg("m"), py::arg("samples") = 10000, py::arg("seed") = 0);

    m.def(
        "integrate",
        [](const SAProblem& p, const Vec& u, double T, double rel_tol, double abs_tol) {
            const auto r = integrate(p.drift, u, T, rel_tol, abs_tol);
            return py::dict(py::arg("endpoint") = r.endpoint, py::arg("times") = r.times,
                            py::arg("states") = states(r.states, u.size()),
                            py::arg("accepted_steps") = r.accepted_steps,
                            py::arg("rejected_steps") = r.rejected_steps);
        },
        py::arg("problem"), py::arg("u"), py::arg("T"), py::arg("rel_tol") = kDefaultRelTol,
        py::arg("abs_tol") = kDefaultAbsTol);
    m.def(
        "equilibria_1d", [](const SAProblem& p, double lo, double hi, std::size_t grid) {
            return equilibria_1d(p.drift, lo, hi, grid);
        },
        py::arg("problem"), py::arg("lo"), py::arg("hi"), py::arg("grid") = 1001);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("seed", &Trajectory::seed)
        .def_readonly("problem", &Trajectory::problem)
        .def_property_readonly("mode", [](const Trajectory& t) { return to_string(t.mode); })
        .def_property_readonly("overflowed", [](const Trajectory& t) { return t.terminal.overflowed; })
        .def_property_readonly("terminal", [](const Trajectory& t) { return t.terminal.y; })
        .def_property_readonly("a", [](const Trajectory& t) { return column(t, &TraceRow::a); })
        .def_property_readonly("g", [](const Trajectory& t) { return column(t, &TraceRow::g); })
        .def_property_readonly("a_eff", [](const Trajectory& t) { return column(t, &TraceRow::a_eff); })
        .def_property_readonly("W", [](const Trajectory& t) { return column(t, &TraceRow::W); })
        .def_property_readonly("y",
                               [](const Trajectory& t) {
                                   std::vector<Vec> ys;
                                   ys.reserve(t.rows.size());
                                   for (const auto& r : t.rows) {
                                       ys.push_back(r.y);
                                   }
                                   return states(ys, t.dim());
                               })
        .def("__len__", [](const Trajectory& t) { return t.rows.size(); })
        .def("write_trace", [](const Trajectory& t, const std::string& path) {
            write_trace(t, std::filesystem::path(path));
        });

    auto run_fn = [](const SAProblem& p, const std::string& mode, const Vec& x0, std::size_t horizon,
                     std::uint64_t seed, std::optional<StabilizerConfig> stabilizer, double radius) {
        RunConfig rc;
        rc.problem = p.name;
        rc.mode = RunMode{parse_mode(mode), radius};
        rc.x0 = x0;
        rc.horizon = horizon;
        rc.seed = seed;
        rc.stabilizer = std::move(stabilizer);
        return rc;
    };

    m.def(
        "run",
        [run_fn](const SAProblem& p, const std::string& mode, const Vec& x0, std::size_t horizon, std::uint64_t seed,
                 std::optional<StabilizerConfig> stabilizer, double radius) {
            const RunConfig rc = run_fn(p, mode, x0, horizon, seed, std::move(stabilizer), radius);
            py::gil_scoped_release release;
            return run(p, rc);
        },
        py::arg("problem"), py::arg("mode"), py::arg("x0"), py::arg("horizon") = 10000, py::arg("seed") = 0,
        py::arg("stabilizer") = py::none(), py::arg("radius") = 0.0);

    m.def(
        "run_ensemble",
        [run_fn](const SAProblem& p, const std::string& mode, const Vec& x0, std::size_t horizon,
                 const std::vector<std::uint64_t>& seeds, std::optional<StabilizerConfig> stabilizer, double radius,
                 unsigned workers) {
            const RunConfig rc = run_fn(p, mode, x0, horizon, 0, std::move(stabilizer), radius);
            EnsembleOptions eo;
            eo.workers = workers;
            EnsembleResult result;
            {
                py::gil_scoped_release release;
                result = run_ensemble(p, rc, seeds, eo);
            }
            return summary_json(result.summaries);
        },
        py::arg("problem"), py::arg("mode"), py::arg("x0"), py::arg("horizon"), py::arg("seeds"),
        py::arg("stabilizer") = py::none(), py::arg("radius") = 0.0, py::arg("workers") = 1,
        "Returns the JSON summary document.");

    py::class_<DiagnosticsConfig>(m, "DiagnosticsConfig")
        .def(py::init([](double T, double mlevel, double delta, double epsilon) {
                 return DiagnosticsConfig{T, mlevel, delta, epsilon, 0.0};
             }),
             py::arg("T") = 1.0, py::arg("m") = 4.0, py::arg("delta") = 0.05, py::arg("epsilon") = 0.05)
        .def_readwrite("T", &DiagnosticsConfig::T)
        .def_readwrite("m", &DiagnosticsConfig::m)
        .def_readwrite("delta", &DiagnosticsConfig::delta)
        .def_readwrite("epsilon", &DiagnosticsConfig::epsilon);

    m.def("sup_norm", [](const Trajectory& t) { return sup_norm(t); });
    m.def("hitting_time", [](const Trajectory& t, std::size_t k, double level) { return hitting_time(t, k, level); });
    m.def("last_scaled_index", [](const Trajectory& t) { return last_scaled_index(t); });
    m.def("window_indices", [](const Trajectory& t, std::size_t n0, double T) { return window_indices(t, n0, T); });
    m.def("window_descent_report", [](const Trajectory& t, const SAProblem& p, const DiagnosticsConfig& d) {
        const auto r = window_descent_report(t, p, d);
        std::vector<std::string> verdicts;
        for (const auto& w : r.results) {
            verdicts.emplace_back(to_string(w.verdict));
        }
        return py::dict(py::arg("start_index") = r.start_index, py::arg("windows") = r.windows,
                        py::arg("verdicts") = verdicts);
    });
    m.def("martingale_sup_tail", [](const Trajectory& t, const SAProblem& p, const DiagnosticsConfig& d) {
        return martingale_partial_sums(t, p, d).sup_tail;
    });

    m.def(
        "parse_expression", [](const std::string& text, std::size_t dim) { return parse_expression(text, dim).to_string(); },
        py::arg("text"), py::arg("dim") = 1, "Parses and returns the canonical form.");
    m.def(
        "evaluate", [](const std::string& text, const Vec& x) { return parse_expression(text, x.size()).evaluate(x); },
        py::arg("text"), py::arg("x"));
}
