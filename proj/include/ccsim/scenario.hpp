#pragma once

#include "ccsim/controller.hpp"
#include "ccsim/graph.hpp"
#include "ccsim/plant.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ccsim {

struct AgentState {
    double x = 0.0;
    double v = 0.0;
    std::optional<double> x_hat;
};

enum class IntegratorMethod { Rk4, Euler };

struct SimConfig {
    double dt = 1e-3;              // seconds
    double t_end = 60.0;           // seconds
    int record_stride = 1;
    double consensus_epsilon = 1e-2;
    IntegratorMethod method = IntegratorMethod::Rk4;

    void validate() const;
};

using PlantModel = std::variant<UncertaintyModel, ManipulatorParams>;

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    ControllerVariant variant = ControllerVariant::SymmetricTanh;
    DirectedGraph graph;
    ConstraintSpec constraints;
    UncertaintyBounds bounds;
    std::vector<AgentControllerParams> params;   // shared m, per-agent rest
    std::vector<PlantModel> plants;
    std::vector<AgentState> initial_states;
    SimConfig sim;

    int n() const { return graph.size(); }
    bool uses_manipulator_plants() const;

    // Envelope values realized by the plants (not the declared bounds).
    double realized_b_max() const;
    double realized_tau_max() const;
    double realized_phi_max() const;

    // dt * (b_max * u_max + tau_max + phi_max * v_bar): the per-step
    // velocity overshoot a fixed-step integrator can introduce.
    double velocity_tolerance() const;
    // dt * (b_max * u_max + tau_max): residual tracking-error band left
    // by sgn chattering.
    double tracking_epsilon() const;

    // Checks sizes, parameter sanity, graph assumptions for the variant,
    // initial velocities inside the band, and shared m.
    // Throws std::invalid_argument or AssumptionViolated.
    void validate() const;

    std::vector<FeasibilityReport> feasibility_reports() const;
};

Scenario scenario_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json scenario_to_json(const Scenario& s);

// Parse errors are rethrown as std::invalid_argument with line/column info.
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

DirectedGraph load_graph(const std::string& path);

// The 7-manipulator study: directed ring 1->2->...->7->1 plus chord 1->4,
// unit weights; case_name is "symmetric" or "asymmetric".
Scenario reproduction_scenario(const std::string& case_name);

} // namespace ccsim
