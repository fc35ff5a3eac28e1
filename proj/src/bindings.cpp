#include "ccsim/errors.hpp"
#include "ccsim/saturation.hpp"
#include "ccsim/sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ccsim;

namespace {

py::object json_to_py(const nlohmann::ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "constrained-consensus simulation core";

    py::register_exception<NotStronglyConnected>(m, "NotStronglyConnectedError");
    py::register_exception<NoSpanningTree>(m, "NoSpanningTreeError");
    py::register_exception<AssumptionViolated>(m, "AssumptionViolatedError");
    py::register_exception<InfeasibleProblem>(m, "InfeasibleProblemError");

    // graph layer
    py::class_<DirectedGraph>(m, "DirectedGraph")
        .def(py::init<Eigen::MatrixXd>(), py::arg("weights"))
        .def_property_readonly("n", &DirectedGraph::size)
        .def_property_readonly("weights", &DirectedGraph::weights)
        .def_static("from_json",
                    [](const std::string& text) {
                        return graph_from_json(nlohmann::ordered_json::parse(text));
                    })
        .def("to_json", [](const DirectedGraph& g) { return json_to_py(graph_to_json(g)); });
    m.def("laplacian", &laplacian);
    m.def("in_degrees", &in_degrees);
    m.def("is_strongly_connected", &is_strongly_connected);
    m.def("has_spanning_tree", &has_spanning_tree);
    m.def("left_eigenvector", &left_eigenvector);
    m.def("lhat", &lhat);
    m.def("is_nonsingular_m_matrix", &is_nonsingular_m_matrix);
    m.def("strongly_connected_components", &strongly_connected_components);
    m.def("perron_frobenius_form", [](const DirectedGraph& g) {
        const GraphDecomposition d = perron_frobenius_form(g);
        py::dict out;
        out["permutation"] = d.permutation;
        out["blocks"] = d.blocks;
        py::list kinds;
        for (BlockKind k : d.block_kinds) {
            kinds.append(k == BlockKind::RootScc ? "root_scc" : "m_matrix");
        }
        out["block_kinds"] = kinds;
        return out;
    });

    // saturation primitives
    m.def("signed_power", &signed_power, py::arg("x"), py::arg("gamma"));
    m.def("sigma", &sigma, py::arg("e"), py::arg("z"), py::arg("gamma"));
    m.def("tanh_reference", &tanh_reference, py::arg("eta"), py::arg("k"), py::arg("m"));
    m.def("varrho", &varrho, py::arg("s"), py::arg("k"), py::arg("m"));
    m.def("varrho_derivative", &varrho_derivative, py::arg("s"), py::arg("k"), py::arg("m"));

    // controller layer
    py::class_<ConstraintSpec>(m, "ConstraintSpec")
        .def(py::init([](double v_min, double v_max, double u_max) {
                 ConstraintSpec c{v_min, v_max, u_max};
                 c.validate();
                 return c;
             }),
             py::arg("v_min"), py::arg("v_max"), py::arg("u_max"))
        .def_readonly("v_min", &ConstraintSpec::v_min)
        .def_readonly("v_max", &ConstraintSpec::v_max)
        .def_readonly("u_max", &ConstraintSpec::u_max)
        .def_property_readonly("v_r", &ConstraintSpec::v_r)
        .def_property_readonly("v_bar", &ConstraintSpec::v_bar);

    py::class_<UncertaintyBounds>(m, "UncertaintyBounds")
        .def(py::init([](double b_min, double tau_max, double phi_max) {
                 UncertaintyBounds b{b_min, tau_max, phi_max};
                 b.validate();
                 return b;
             }),
             py::arg("b_min"), py::arg("tau_max"), py::arg("phi_max") = 0.0)
        .def_readonly("b_min", &UncertaintyBounds::b_min)
        .def_readonly("tau_max", &UncertaintyBounds::tau_max)
        .def_readonly("phi_max", &UncertaintyBounds::phi_max);

    py::class_<AgentControllerParams>(m, "AgentControllerParams")
        .def(py::init([](double m_, double alpha, double z, double k, double gamma) {
                 AgentControllerParams p{m_, alpha, z, k, gamma};
                 p.validate();
                 return p;
             }),
             py::arg("m"), py::arg("alpha"), py::arg("z"), py::arg("k"), py::arg("gamma"))
        .def_readonly("m", &AgentControllerParams::m)
        .def_readonly("alpha", &AgentControllerParams::alpha)
        .def_readonly("z", &AgentControllerParams::z)
        .def_readonly("k", &AgentControllerParams::k)
        .def_readonly("gamma", &AgentControllerParams::gamma)
        .def_property_readonly("lam", &AgentControllerParams::lambda);

    m.def("control", &control, py::arg("e"), py::arg("params"), py::arg("u_max"));
    m.def("tracking_error", &tracking_error, py::arg("v"), py::arg("r"));
    m.def(
        "reference_from_coupling",
        [](const std::string& variant, double coupling, const AgentControllerParams& p,
           const ConstraintSpec& c) {
            return reference_from_coupling(variant_from_name(variant), coupling, p, c);
        },
        py::arg("variant"), py::arg("coupling"), py::arg("params"), py::arg("constraints"));
    m.def("filter_derivative", &filter_derivative, py::arg("x_hat"), py::arg("neighbor_positions"),
          py::arg("m"));
    m.def(
        "check_feasibility",
        [](const std::string& variant, const AgentControllerParams& p, const UncertaintyBounds& b,
           const ConstraintSpec& c, double d_i) {
            return json_to_py(
                feasibility_to_json(check_feasibility(variant_from_name(variant), p, b, c, d_i)));
        },
        py::arg("variant"), py::arg("params"), py::arg("bounds"), py::arg("constraints"),
        py::arg("degree"));
    m.def(
        "suggest_params",
        [](const std::string& variant, const UncertaintyBounds& b, const ConstraintSpec& c,
           double d_i, double safety) {
            return suggest_params(variant_from_name(variant), b, c, d_i, safety);
        },
        py::arg("variant"), py::arg("bounds"), py::arg("constraints"), py::arg("degree"),
        py::arg("safety") = 0.5);
    m.def(
        "settling_bounds",
        [](const AgentControllerParams& p, const UncertaintyBounds& b, const ConstraintSpec& c,
           double d_i) {
            const SettlingBounds s = settling_bounds(p, b, c, d_i);
            return py::make_tuple(s.t1, s.t2);
        },
        py::arg("params"), py::arg("bounds"), py::arg("constraints"), py::arg("degree"));

    // scenarios and simulation
    py::class_<Scenario>(m, "Scenario")
        .def_property_readonly("name", [](const Scenario& s) { return s.name; })
        .def_property_readonly("n", &Scenario::n)
        .def_property_readonly("velocity_tolerance", &Scenario::velocity_tolerance)
        .def_property_readonly("tracking_epsilon", &Scenario::tracking_epsilon)
        .def("to_json", [](const Scenario& s) { return json_to_py(scenario_to_json(s)); });
    m.def("load_scenario", &load_scenario, py::arg("path"));
    m.def("scenario_from_json", [](const std::string& text) {
        return scenario_from_json(nlohmann::ordered_json::parse(text));
    });
    m.def("reproduction_scenario", &reproduction_scenario, py::arg("case_name"));

    py::class_<TrajectoryTrace>(m, "TrajectoryTrace")
        .def_readonly("n", &TrajectoryTrace::n)
        .def_readonly("times", &TrajectoryTrace::times)
        .def_readonly("x", &TrajectoryTrace::x)
        .def_readonly("v", &TrajectoryTrace::v)
        .def_readonly("u", &TrajectoryTrace::u)
        .def_readonly("r", &TrajectoryTrace::r)
        .def_readonly("e", &TrajectoryTrace::e)
        .def_readonly("zeta", &TrajectoryTrace::zeta)
        .def_readonly("lyapunov", &TrajectoryTrace::lyapunov)
        .def_readonly("spread", &TrajectoryTrace::spread);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("trace", &RunResult::trace)
        .def_readonly("omega", &RunResult::omega)
        .def_property_readonly(
            "monitors",
            [](const RunResult& r) { return json_to_py(monitor_report_to_json(r.monitors)); })
        .def_property_readonly("feasibility", [](const RunResult& r) {
            py::list out;
            for (const auto& rep : r.feasibility) out.append(json_to_py(feasibility_to_json(rep)));
            return out;
        });
    m.def("run", &run, py::arg("scenario"), py::call_guard<py::gil_scoped_release>());
    m.def("spread", &spread, py::arg("positions"));
    m.def("lyapunov_v", &lyapunov_v, py::arg("positions"), py::arg("graph"), py::arg("omega"),
          py::arg("params"));
}
