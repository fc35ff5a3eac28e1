#include "ccsim/scenario.hpp"

#include "ccsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ccsim {

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (!(dt <= t_end)) throw std::invalid_argument("dt must not exceed t_end");
    if (record_stride < 1) throw std::invalid_argument("record_stride must be >= 1");
    if (!(consensus_epsilon > 0.0)) throw std::invalid_argument("consensus_epsilon must be positive");
}

bool Scenario::uses_manipulator_plants() const {
    return !plants.empty() && std::holds_alternative<ManipulatorParams>(plants.front());
}

double Scenario::realized_b_max() const {
    double out = 0.0;
    for (const auto& plant : plants) {
        if (const auto* m = std::get_if<UncertaintyModel>(&plant)) {
            out = std::max(out, m->b_upper());
        } else {
            out = std::max(out, std::get<ManipulatorParams>(plant).b());
        }
    }
    return out;
}

double Scenario::realized_tau_max() const {
    double out = 0.0;
    for (const auto& plant : plants) {
        if (const auto* m = std::get_if<UncertaintyModel>(&plant)) {
            out = std::max(out, m->tau_upper_abs());
        } else {
            out = std::max(out, std::get<ManipulatorParams>(plant).tau());
        }
    }
    return out;
}

double Scenario::realized_phi_max() const {
    double out = 0.0;
    for (const auto& plant : plants) {
        if (const auto* m = std::get_if<ManipulatorParams>(&plant)) {
            out = std::max(out, m->phi());
        }
    }
    return out;
}

double Scenario::velocity_tolerance() const {
    return sim.dt * (realized_b_max() * constraints.u_max + realized_tau_max() +
                     realized_phi_max() * constraints.v_bar());
}

double Scenario::tracking_epsilon() const {
    return sim.dt * (realized_b_max() * constraints.u_max + realized_tau_max());
}

void Scenario::validate() const {
    const size_t count = static_cast<size_t>(graph.size());
    if (params.size() != count || plants.size() != count || initial_states.size() != count) {
        throw std::invalid_argument("params, plants and initial_states must all have graph.n entries");
    }
    constraints.validate();
    bounds.validate();
    sim.validate();
    for (const auto& p : params) p.validate();
    for (const auto& p : params) {
        if (p.m != params.front().m) {
            throw std::invalid_argument("the saturation level m is shared by all agents");
        }
    }

    const bool manipulator_plants = uses_manipulator_plants();
    for (const auto& plant : plants) {
        if (std::holds_alternative<ManipulatorParams>(plant) != manipulator_plants) {
            throw std::invalid_argument("plants must all be of the same family");
        }
        if (const auto* mp = std::get_if<ManipulatorParams>(&plant)) mp->validate();
    }
    if (variant == ControllerVariant::Manipulator) {
        if (!(bounds.b_min * constraints.u_max - bounds.tau_max -
                  bounds.phi_max * constraints.v_bar() >
              0.0)) {
            throw std::invalid_argument(
                "controllability margin b_min*u_max - tau_max - phi_max*v_bar must be positive");
        }
    } else {
        if (!(bounds.tau_max < bounds.b_min * constraints.u_max)) {
            throw std::invalid_argument("controllability requires tau_max < b_min*u_max");
        }
    }

    if (variant_requires_symmetric_band(variant)) {
        const double scale = std::max(1.0, std::abs(constraints.v_max));
        if (std::abs(constraints.v_min + constraints.v_max) > 1e-12 * scale) {
            throw AssumptionViolated(std::string(variant_name(variant)) +
                                     " requires a symmetric velocity band (v_min = -v_max)");
        }
    }
    if (variant_requires_strong_connectivity(variant)) {
        if (!is_strongly_connected(graph)) {
            throw AssumptionViolated(std::string(variant_name(variant)) +
                                     " requires a strongly connected graph");
        }
    } else if (!has_spanning_tree(graph)) {
        throw AssumptionViolated("piecewise_sat requires a graph with a spanning tree");
    }

    for (size_t i = 0; i < initial_states.size(); ++i) {
        const double v0 = initial_states[i].v;
        if (!(v0 >= constraints.v_min && v0 <= constraints.v_max)) {
            std::ostringstream msg;
            msg << "initial velocity of agent " << (i + 1) << " (" << v0
                << ") violates the velocity constraint [" << constraints.v_min << ", "
                << constraints.v_max << "]; initial velocities are assumed to satisfy it";
            throw std::invalid_argument(msg.str());
        }
    }
}

std::vector<FeasibilityReport> Scenario::feasibility_reports() const {
    const Eigen::VectorXd degrees = in_degrees(graph);
    std::vector<FeasibilityReport> reports;
    reports.reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
        reports.push_back(
            check_feasibility(variant, params[i], bounds, constraints, degrees(static_cast<int>(i))));
    }
    return reports;
}

namespace {

const char* method_name(IntegratorMethod m) {
    return m == IntegratorMethod::Rk4 ? "rk4" : "euler";
}

IntegratorMethod method_from_name(const std::string& name) {
    if (name == "rk4") return IntegratorMethod::Rk4;
    if (name == "euler") return IntegratorMethod::Euler;
    throw std::invalid_argument("unknown integrator method: " + name);
}

} // namespace

Scenario scenario_from_json(const nlohmann::ordered_json& j) {
    Scenario s;
    s.name = j.value("name", std::string{});
    s.seed = j.value("seed", std::uint64_t{0});
    s.variant = variant_from_name(j.at("variant").get<std::string>());
    s.graph = graph_from_json(j.at("graph"));

    const auto& jc = j.at("constraints");
    s.constraints.v_min = jc.at("v_min").get<double>();
    s.constraints.v_max = jc.at("v_max").get<double>();
    s.constraints.u_max = jc.at("u_max").get<double>();

    const auto& jb = j.at("bounds");
    s.bounds.b_min = jb.at("b_min").get<double>();
    s.bounds.tau_max = jb.at("tau_max").get<double>();
    s.bounds.phi_max = jb.value("phi_max", 0.0);

    const double shared_m = j.at("m").get<double>();
    for (const auto& jp : j.at("params")) {
        AgentControllerParams p;
        p.m = shared_m;
        p.alpha = jp.at("alpha").get<double>();
        p.z = jp.at("z").get<double>();
        p.k = jp.at("k").get<double>();
        p.gamma = jp.at("gamma").get<double>();
        s.params.push_back(p);
    }

    const auto& js = j.at("sim");
    s.sim.dt = js.at("dt_seconds").get<double>();
    s.sim.t_end = js.at("t_end_seconds").get<double>();
    s.sim.record_stride = js.value("record_stride", 1);
    s.sim.consensus_epsilon = js.value("consensus_epsilon", 1e-2);
    s.sim.method = method_from_name(js.value("method", "rk4"));

    std::uint64_t agent_index = 0;
    for (const auto& jp : j.at("plants")) {
        if (jp.value("kind", std::string{}) == "manipulator") {
            s.plants.emplace_back(manipulator_from_json(jp));
        } else {
            auto model = uncertainty_from_json(jp, s.seed * 1000003ull + agent_index);
            if (model.kind() == UncertaintyModel::Kind::Noise && !jp.contains("hold_dt_seconds")) {
                model.set_hold_dt(s.sim.dt);
            }
            s.plants.emplace_back(std::move(model));
        }
        ++agent_index;
    }

    for (const auto& jst : j.at("initial_states")) {
        AgentState st;
        st.x = jst.at("x").get<double>();
        st.v = jst.at("v").get<double>();
        if (jst.contains("x_hat")) st.x_hat = jst.at("x_hat").get<double>();
        s.initial_states.push_back(st);
    }

    s.validate();
    return s;
}

nlohmann::ordered_json scenario_to_json(const Scenario& s) {
    nlohmann::ordered_json j;
    j["name"] = s.name;
    j["seed"] = s.seed;
    j["variant"] = variant_name(s.variant);
    j["graph"] = graph_to_json(s.graph);
    j["constraints"] = {{"v_min", s.constraints.v_min},
                        {"v_max", s.constraints.v_max},
                        {"u_max", s.constraints.u_max}};
    j["bounds"] = {{"b_min", s.bounds.b_min},
                   {"tau_max", s.bounds.tau_max},
                   {"phi_max", s.bounds.phi_max}};
    j["m"] = s.params.empty() ? 0.0 : s.params.front().m;
    auto params = nlohmann::ordered_json::array();
    for (const auto& p : s.params) {
        params.push_back({{"alpha", p.alpha}, {"z", p.z}, {"k", p.k}, {"gamma", p.gamma}});
    }
    j["params"] = std::move(params);
    auto plants = nlohmann::ordered_json::array();
    for (const auto& plant : s.plants) {
        if (const auto* m = std::get_if<UncertaintyModel>(&plant)) {
            plants.push_back(uncertainty_to_json(*m));
        } else {
            plants.push_back(manipulator_to_json(std::get<ManipulatorParams>(plant)));
        }
    }
    j["plants"] = std::move(plants);
    auto states = nlohmann::ordered_json::array();
    for (const auto& st : s.initial_states) {
        nlohmann::ordered_json jst{{"x", st.x}, {"v", st.v}};
        if (st.x_hat) jst["x_hat"] = *st.x_hat;
        states.push_back(std::move(jst));
    }
    j["initial_states"] = std::move(states);
    j["sim"] = {{"dt_seconds", s.sim.dt},
                {"t_end_seconds", s.sim.t_end},
                {"record_stride", s.sim.record_stride},
                {"consensus_epsilon", s.sim.consensus_epsilon},
                {"method", method_name(s.sim.method)}};
    return j;
}

namespace {

nlohmann::ordered_json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        size_t line = 1, col = 1;
        const size_t stop = std::min(err.byte, text.size());
        for (size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << path << ":" << line << ":" << col << ": " << err.what();
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

Scenario load_scenario(const std::string& path) {
    return scenario_from_json(parse_file(path));
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write file: " + path);
    out << scenario_to_json(s).dump(2) << "\n";
}

DirectedGraph load_graph(const std::string& path) {
    return graph_from_json(parse_file(path));
}

Scenario reproduction_scenario(const std::string& case_name) {
    const bool symmetric = case_name == "symmetric";
    if (!symmetric && case_name != "asymmetric") {
        throw std::invalid_argument("reproduction case must be \"symmetric\" or \"asymmetric\"");
    }

    const int n = 7;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) w((i + 1) % n, i) = 1.0;  // ring 1->2->...->7->1
    w(3, 0) = 1.0;                                        // chord 1->4

    Scenario s;
    s.name = symmetric ? "reproduction-symmetric" : "reproduction-asymmetric";
    s.seed = 1;
    s.variant = ControllerVariant::Manipulator;
    s.graph = DirectedGraph(w);
    s.constraints.v_min = symmetric ? -1.0 : 0.5;
    s.constraints.v_max = symmetric ? 1.0 : 1.5;
    s.constraints.u_max = 2.0;

    // I = 1, B = 0.8, M g l = 0.5 in normalized units (g = 1), so the
    // effective plant coefficients are b = 1, phi = 0.8, tau = 0.5.
    ManipulatorParams arm;
    arm.inertia = 1.0;
    arm.damping = 0.8;
    arm.mass = 0.5;
    arm.gravity = 1.0;
    arm.length = 1.0;

    s.bounds.b_min = arm.b();
    s.bounds.tau_max = arm.tau();
    s.bounds.phi_max = arm.phi();

    AgentControllerParams p;
    p.m = symmetric ? 0.9 : 0.4;
    p.alpha = 1.8;
    p.z = 0.1;
    p.k = 0.5;
    p.gamma = 1.5;

    for (int i = 0; i < n; ++i) {
        s.params.push_back(p);
        s.plants.emplace_back(arm);
        AgentState st;
        st.x = static_cast<double>(i) - 3.0;  // (-3, -2, -1, 0, 1, 2, 3)
        st.v = symmetric ? 0.0 : 0.5;
        s.initial_states.push_back(st);
    }

    s.sim.dt = 1e-3;
    s.sim.t_end = 60.0;
    s.sim.record_stride = 10;
    s.validate();
    return s;
}

} // namespace ccsim
