#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "brw/config.hpp"
#include "brw/experiment.hpp"
#include "brw/feynman_kac.hpp"
#include "brw/hierarchy.hpp"
#include "brw/lyapunov.hpp"
#include "brw/moments.hpp"
#include "brw/simulator.hpp"

namespace py = pybind11;
using namespace brw;

namespace {

ModelParams make_model(double kappa, double mu, std::map<int, double> b, double k, int dimension,
                       const std::string& init, double init_value)
{
    ModelParams p;
    p.kernel = simple_random_walk(dimension, kappa);
    p.law.mu = mu;
    p.law.b = std::move(b);
    p.k = k;
    if (init == "constant")
        p.init.kind = InitialCondition::Kind::constant;
    else if (init == "poisson")
        p.init.kind = InitialCondition::Kind::poisson;
    else
        throw InvalidArgument("init must be 'constant' or 'poisson'");
    p.init.value = init_value;
    return p;
}

} // namespace

PYBIND11_MODULE(pybrw, m)
{
    m.doc() = "Branching random walks with immigration on a torus";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<NumericalFailure>(m, "NumericalFailure", PyExc_RuntimeError);

    py::class_<TorusGrid>(m, "TorusGrid")
        .def(py::init<std::vector<int>>(), py::arg("sides"))
        .def_property_readonly("size", &TorusGrid::size)
        .def_property_readonly("sides", &TorusGrid::sides)
        .def("site_of", [](const TorusGrid& g, std::vector<int> u) { return g.site_of(LatticeOffset{u}); });

    py::class_<KernelSpec>(m, "KernelSpec")
        .def_readonly("dimension", &KernelSpec::dimension)
        .def_readonly("kappa", &KernelSpec::kappa);

    py::class_<ModelParams>(m, "ModelParams")
        .def_readonly("kernel", &ModelParams::kernel)
        .def_readwrite("k", &ModelParams::k)
        .def("decay_rate", &ModelParams::decay_rate)
        .def("stationary_mean", &ModelParams::stationary_mean);

    m.def("model", &make_model, py::arg("kappa"), py::arg("mu"), py::arg("b"), py::arg("k"),
          py::arg("dimension") = 1, py::arg("init") = "constant", py::arg("init_value") = 1.0,
          "Homogeneous model with a nearest-neighbour kernel.");

    m.def("criticality", [](const ModelParams& p) { return to_string(classify_criticality(p.law)); });
    m.def("m1_closed_form", &m1_closed_form, py::arg("k"), py::arg("mu"), py::arg("beta"), py::arg("u0"),
          py::arg("t"));

    py::class_<SecondMomentField>(m, "SecondMomentField")
        .def_readonly("t", &SecondMomentField::t)
        .def_readonly("m2", &SecondMomentField::m2)
        .def_readonly("m21", &SecondMomentField::m21)
        .def_readonly("m22", &SecondMomentField::m22)
        .def_readonly("m23", &SecondMomentField::m23);
    m.def("m2_transient", &m2_transient, py::arg("params"), py::arg("grid"), py::arg("t"));
    m.def(
        "m2_steady_state_series",
        [](const ModelParams& p, const TorusGrid& g, double tol) { return m2_steady_state_series(p, g, tol).values; },
        py::arg("params"), py::arg("grid"), py::arg("tol") = 1e-14);
    m.def("m2_steady_state_fourier", &m2_steady_state_fourier, py::arg("params"), py::arg("grid"));
    m.def("steady_covariance", &steady_covariance, py::arg("params"), py::arg("grid"));

    m.def(
        "ensemble_moments",
        [](const ModelParams& p, const TorusGrid& g, double horizon, std::vector<double> snapshots,
           std::size_t replicas, std::uint64_t seed, std::vector<std::vector<int>> offsets) {
            const EnsembleResult r = run_ensemble(p, g, horizon, snapshots, replicas, seed);
            py::list out;
            for (double t : snapshots) {
                const StatEstimate m1 = estimate_moment(r.ensemble, t, {});
                py::dict row;
                row["t"] = t;
                row["m1"] = py::make_tuple(m1.mean, m1.se);
                py::list m2;
                for (const auto& u : offsets) {
                    const LatticeOffset off{u};
                    const StatEstimate e = estimate_moment(r.ensemble, t, std::span(&off, 1));
                    m2.append(py::make_tuple(e.mean, e.se));
                }
                row["m2"] = m2;
                out.append(row);
            }
            return out;
        },
        py::arg("params"), py::arg("grid"), py::arg("horizon"), py::arg("snapshots"), py::arg("replicas"),
        py::arg("seed"), py::arg("offsets") = std::vector<std::vector<int>>{},
        "Monte Carlo m1 and m2 (mean, se) per snapshot.");

    m.def(
        "hierarchy",
        [](int order, const ModelParams& p, const TorusGrid& g, std::vector<double> times) {
            const auto op = HierarchyOperator::assemble(order, p, g);
            const auto tr = integrate(op, op.initial_state(p.init), times);
            py::list out;
            for (std::size_t i = 0; i < times.size(); ++i) {
                py::list tensors;
                for (int j = 1; j <= order; ++j) tensors.append(tr.tensor(j, i).values);
                out.append(tensors);
            }
            return out;
        },
        py::arg("order"), py::arg("params"), py::arg("grid"), py::arg("times"),
        "Per time, the flattened tensors m_1..m_order (row-major over site tuples).");

    m.def(
        "transition_matrix",
        [](const ModelParams& p, const TorusGrid& g, double t) { return transition_matrix(p.kernel, g, t); },
        py::arg("params"), py::arg("grid"), py::arg("t"));

    m.def(
        "solve_direct",
        [](const ModelParams& p, const TorusGrid& g, double scale, std::vector<double> v, std::vector<double> f,
           std::vector<double> u0, double t) {
            return solve_direct(ParabolicProblem(p.kernel, g, scale, v, SourceTerm::constant(f), u0), t);
        },
        py::arg("params"), py::arg("grid"), py::arg("scale"), py::arg("v"), py::arg("f"), py::arg("u0"),
        py::arg("t"));
    m.def(
        "solve_fk_mc",
        [](const ModelParams& p, const TorusGrid& g, double scale, std::vector<double> v, std::vector<double> f,
           std::vector<double> u0, double t, Site x, std::size_t paths, std::uint64_t seed) {
            const PathEstimate e =
                solve_fk_mc(ParabolicProblem(p.kernel, g, scale, v, SourceTerm::constant(f), u0), t, x, paths, seed);
            return py::make_tuple(e.mean, e.se);
        },
        py::arg("params"), py::arg("grid"), py::arg("scale"), py::arg("v"), py::arg("f"), py::arg("u0"),
        py::arg("t"), py::arg("x"), py::arg("paths"), py::arg("seed"));

    py::class_<PerturbationEnvelope>(m, "PerturbationEnvelope")
        .def(py::init([](double v0, double k0, double u0, double u0_pair, double eps) {
                 PerturbationEnvelope e{v0, k0, u0, u0_pair, eps};
                 e.validate();
                 return e;
             }),
             py::arg("v0"), py::arg("k0"), py::arg("u0"), py::arg("u0_pair"), py::arg("epsilon"));
    m.def(
        "m1_envelope",
        [](const PerturbationEnvelope& env, double t) {
            const Interval i = m1_envelope(env, env.u0, t);
            return py::make_tuple(i.lower, i.upper);
        },
        py::arg("envelope"), py::arg("t"));
    m.def(
        "m2_bounds",
        [](const PerturbationEnvelope& env, double kappa, double t) {
            const Interval i = EnvelopeBounds(env, kappa).m2(t);
            return py::make_tuple(i.lower, i.upper);
        },
        py::arg("envelope"), py::arg("kappa"), py::arg("t"), "(A(t), B(t))");

    m.def(
        "run",
        [](const std::string& task, const std::string& config, const std::string& out) {
            std::ostringstream log;
            const int code = run(RunRequest{task, config, out, std::nullopt, std::nullopt}, log);
            return py::make_tuple(code, log.str());
        },
        py::arg("task"), py::arg("config"), py::arg("out"), "Runs a CLI task; returns (exit_code, log).");
}
