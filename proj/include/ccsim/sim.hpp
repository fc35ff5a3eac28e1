#pragma once

#include "ccsim/scenario.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace ccsim {

struct TrajectoryTrace {
    int n = 0;
    std::vector<double> times;
    // series indexed [agent][sample]
    std::vector<std::vector<double>> x, v, u, r, e, zeta;
    std::vector<double> lyapunov;  // NaN when no left eigenvector exists
    std::vector<double> spread;

    size_t samples() const { return times.size(); }
};

// max_i x_i - min_i x_i
double spread(const std::vector<double>& positions);

// V = sum_i (omega_i / k_i) ln cosh(k_i eta_i / m); zero exactly at consensus.
double lyapunov_v(const std::vector<double>& positions, const DirectedGraph& g,
                  const Eigen::VectorXd& omega, const std::vector<AgentControllerParams>& params);

// Scratch buffers for the fixed-step integrators.
struct StepScratch {
    std::vector<double> k1, k2, k3, k4, tmp;
    void resize(size_t n);
};

// Classical RK4: y1 = y0 + dt/6 (k1 + 2 k2 + 2 k3 + k4),
// f(t, y, dy) evaluates the derivative into dy.
template <class F>
void rk4_step(double t, double dt, const std::vector<double>& y0, std::vector<double>& y1,
              StepScratch& s, F&& f) {
    const size_t n = y0.size();
    s.resize(n);
    f(t, y0, s.k1);
    for (size_t i = 0; i < n; ++i) s.tmp[i] = y0[i] + 0.5 * dt * s.k1[i];
    f(t + 0.5 * dt, s.tmp, s.k2);
    for (size_t i = 0; i < n; ++i) s.tmp[i] = y0[i] + 0.5 * dt * s.k2[i];
    f(t + 0.5 * dt, s.tmp, s.k3);
    for (size_t i = 0; i < n; ++i) s.tmp[i] = y0[i] + dt * s.k3[i];
    f(t + dt, s.tmp, s.k4);
    y1.resize(n);
    for (size_t i = 0; i < n; ++i) {
        y1[i] = y0[i] + dt / 6.0 * (s.k1[i] + 2.0 * s.k2[i] + 2.0 * s.k3[i] + s.k4[i]);
    }
}

template <class F>
void euler_step(double t, double dt, const std::vector<double>& y0, std::vector<double>& y1,
                StepScratch& s, F&& f) {
    const size_t n = y0.size();
    s.resize(n);
    f(t, y0, s.k1);
    y1.resize(n);
    for (size_t i = 0; i < n; ++i) y1[i] = y0[i] + dt * s.k1[i];
}

// The fixed parts of a closed-loop simulation, decoupled from initial
// conditions and horizon.
struct ClosedLoop {
    DirectedGraph graph;
    ControllerVariant variant = ControllerVariant::SymmetricTanh;
    ConstraintSpec constraints;
    std::vector<AgentControllerParams> params;
    std::vector<PlantModel> plants;
};

ClosedLoop make_closed_loop(const Scenario& scenario);

// One integrator step of the coupled system. The controller is
// re-evaluated at every stage; noise-kind uncertainty is frozen at
// the step start time t. Throws NonFiniteState if the result leaves
// the finite range.
std::vector<AgentState> step(const std::vector<AgentState>& states, double t, const ClosedLoop& loop,
                             double dt, IntegratorMethod method = IntegratorMethod::Rk4);

struct ConstraintSection {
    long input_violations = 0;  // samples with |u| > u_max, zero-tolerance
    double max_abs_u = 0.0;
    double u_max = 0.0;
    double velocity_excess = 0.0;  // worst overshoot of [v_min, v_max]
    double velocity_tolerance = 0.0;
    bool input_ok = true;
    bool velocity_ok = true;
};

ConstraintSection verify_constraints(const TrajectoryTrace& trace, const ConstraintSpec& c, double tol);

struct TrackingAgentReport {
    int agent = 0;
    std::optional<double> entry_time;  // first recorded t with |e| <= z
    std::optional<double> t1;
    std::optional<double> t2;
    double max_e_after_settle = 0.0;  // max |e| over t >= t1 + t2
    bool entry_by_t1 = false;
    bool within_band_after_settle = false;
    bool asserted = false;  // feasible params: failures gate the run
};

std::vector<TrackingAgentReport> tracking_monitor(const TrajectoryTrace& trace,
                                                  ControllerVariant variant,
                                                  const std::vector<AgentControllerParams>& params,
                                                  const UncertaintyBounds& bounds,
                                                  const ConstraintSpec& c,
                                                  const Eigen::VectorXd& degrees, double epsilon_e);

struct LyapunovReport {
    bool applicable = false;
    double after = 0.0;
    double slack = 0.0;
    double max_increase = 0.0;
    std::optional<double> first_violation_time;
    bool monotone = true;
};

// Checks V(t_{k+1}) <= V(t_k) + slack for recorded samples with t_k >= after,
// slack = 1e-8 * max(1, V(after)).
LyapunovReport lyapunov_monitor(const TrajectoryTrace& trace, const DirectedGraph& g,
                                const Eigen::VectorXd& omega,
                                const std::vector<AgentControllerParams>& params, double after);

struct PlantBoundsReport {
    bool pass = true;
    double worst_b_margin = 0.0;
    double worst_tau_margin = 0.0;
    std::vector<int> violating_agents;
};

struct MonitorReport {
    ConstraintSection constraints;
    std::vector<TrackingAgentReport> tracking;
    LyapunovReport lyapunov;
    bool lyapunov_asserted = false;
    PlantBoundsReport plant_bounds;
    std::optional<double> consensus_time;  // spread stays below epsilon from here on
    // Spanning-tree runs: settle time of each cumulative block prefix of
    // the component decomposition (root first). Descriptive only.
    std::vector<std::optional<double>> block_settle_times;
    double consensus_epsilon = 0.0;
    double final_spread = 0.0;
    double v_target = 0.0;
    double final_velocity_error = 0.0;
    double tracking_epsilon = 0.0;
    bool feasibility_all_pass = false;
    bool all_pass = false;
};

struct RunResult {
    TrajectoryTrace trace;
    MonitorReport monitors;
    std::vector<FeasibilityReport> feasibility;
    Eigen::VectorXd omega;  // size 0 when the graph is not strongly connected
};

// Validates, integrates, and applies every monitor to the recorded trace.
RunResult run(const Scenario& scenario);

nlohmann::ordered_json monitor_report_to_json(const MonitorReport& report);

// CSV: t, x_1..x_n, v_1..v_n, u_1..u_n, r_1..r_n, e_1..e_n, V, spread
// with 17 significant digits.
void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out);

} // namespace ccsim
