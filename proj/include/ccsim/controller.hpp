#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ccsim {

// Velocity band [v_min, v_max] and input bound |u| <= u_max.
struct ConstraintSpec {
    double v_min = -1.0;
    double v_max = 1.0;
    double u_max = 1.0;

    double v_r() const { return 0.5 * (v_max + v_min); }
    double half_range() const { return 0.5 * (v_max - v_min); }
    double v_bar() const;
    void validate() const;
};

// Declared envelopes of the unknown plant terms. phi_max only matters for
// the manipulator variant.
struct UncertaintyBounds {
    double b_min = 1.0;
    double tau_max = 0.0;
    double phi_max = 0.0;

    void validate() const;
};

struct AgentControllerParams {
    double m = 0.9;
    double alpha = 1.0;
    double z = 0.1;
    double k = 0.5;
    double gamma = 1.5;

    double lambda() const;
    void validate() const;
};

enum class ControllerVariant {
    SymmetricTanh,   // r = -m tanh(k eta / m), symmetric band
    AsymmetricTanh,  // r = v_r - m tanh(k eta / m)
    FilterBased,     // r = -m tanh(k (x - x_hat) / m), filter estimates consensus
    PiecewiseSat,    // r = v_r - varrho(eta), spanning-tree graphs
    Manipulator,     // AsymmetricTanh reference with damping/gravity-aware bounds
};

const char* variant_name(ControllerVariant v);
ControllerVariant variant_from_name(const std::string& name);

// Symmetric variants require v_min = -v_max and a strongly connected
// graph; PiecewiseSat only needs a spanning tree.
bool variant_requires_strong_connectivity(ControllerVariant v);
bool variant_requires_symmetric_band(ControllerVariant v);
// Target velocity at consensus: 0 or v_r.
double variant_velocity_target(ControllerVariant v, const ConstraintSpec& c);

// What one agent is allowed to see: its own state and neighbor positions.
// Neighbor velocities are deliberately not representable here.
struct NeighborView {
    double own_position = 0.0;
    double own_velocity = 0.0;
    std::vector<std::pair<double, double>> neighbor_positions;  // (a_ij, x_j)
    std::optional<double> filter_state;
};

// eta_i = sum_j a_ij (x_i - x_j)
double relative_position_sum(const NeighborView& view);

// Reference velocity from the scalar coupling term (eta, or x - x_hat for
// the filter variant). Single source of truth for all variants.
double reference_from_coupling(ControllerVariant variant, double coupling,
                               const AgentControllerParams& p, const ConstraintSpec& c);

double reference_velocity(ControllerVariant variant, const NeighborView& view,
                          const AgentControllerParams& p, const ConstraintSpec& c);

double tracking_error(double v, double r);

// Saturated robust control: u = -[(u_max - alpha) sigma(e) + lambda alpha sgn(e)] / lambda.
// |u| <= u_max exactly, u = 0 iff e = 0, and |e| >= z pins u at -sgn(e) u_max.
double control(double e, const AgentControllerParams& p, double u_max);

// d/dt of the consensus estimate: -m tanh(sum_j a_ij (x_hat - x_j)).
double filter_derivative(double x_hat, const std::vector<std::pair<double, double>>& neighbor_positions,
                         double m);

struct FeasibilityCondition {
    std::string condition;
    double lhs = 0.0;
    double rhs = 0.0;
    bool strict = true;   // strict: lhs < rhs, else lhs <= rhs
    bool pass = false;
    double margin = 0.0;  // rhs - lhs
};

struct FeasibilityReport {
    std::vector<FeasibilityCondition> conditions;
    bool all_pass() const;
};

// Evaluates the variant's sufficient parameter inequalities. Infeasibility
// is report content, never an exception.
FeasibilityReport check_feasibility(ControllerVariant variant, const AgentControllerParams& p,
                                    const UncertaintyBounds& bounds, const ConstraintSpec& c,
                                    double d_i);

// Places each bound at fraction `safety` of its admissible interval
// (alpha at the midpoint of its own bounds). Throws InfeasibleProblem when
// the alpha interval is empty.
AgentControllerParams suggest_params(ControllerVariant variant, const UncertaintyBounds& bounds,
                                     const ConstraintSpec& c, double d_i, double safety);

struct SettlingBounds {
    double t1 = 0.0;  // reach |e| <= z
    double t2 = 0.0;  // reach e = 0 from |e| <= z
};

// Throws NonpositiveMu when mu = b_min alpha - tau_max - 2 k d v_max <= 0
// or alpha >= u_max.
SettlingBounds settling_bounds(const AgentControllerParams& p, const UncertaintyBounds& bounds,
                               const ConstraintSpec& c, double d_i);

nlohmann::ordered_json feasibility_to_json(const FeasibilityReport& report);

} // namespace ccsim
