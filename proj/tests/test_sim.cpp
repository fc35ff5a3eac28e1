#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ccsim/errors.hpp"
#include "ccsim/sim.hpp"

#include <cmath>

using namespace ccsim;

namespace {

DirectedGraph bidirectional_pair() {
    Eigen::MatrixXd w(2, 2);
    w << 0.0, 1.0, 1.0, 0.0;
    return DirectedGraph(w);
}

DirectedGraph single_node() { return DirectedGraph(); }

AgentControllerParams smoke_params() { return AgentControllerParams{0.15, 0.08, 0.04, 0.19, 1.5}; }

// Two agents pulling toward each other with no disturbance. The drive
// term alpha is kept small: the sgn relay leaves a residual orbit of
// order dt*b*alpha, and this scenario doubles as the reference-integrator
// agreement check.
Scenario smoke_scenario() {
    Scenario s;
    s.name = "smoke-2-agent";
    s.variant = ControllerVariant::SymmetricTanh;
    s.graph = bidirectional_pair();
    s.constraints = ConstraintSpec{-0.2, 0.2, 2.0};
    s.bounds = UncertaintyBounds{1.0, 0.0, 0.0};
    s.params = {smoke_params(), smoke_params()};
    s.plants = {UncertaintyModel::constant(1.0, 0.0, 1.0, 0.0),
                UncertaintyModel::constant(1.0, 0.0, 1.0, 0.0)};
    s.initial_states = {AgentState{0.5, 0.0, {}}, AgentState{-0.5, 0.0, {}}};
    s.sim.dt = 1e-3;
    s.sim.t_end = 60.0;
    s.sim.record_stride = 1;
    return s;
}

ClosedLoop still_loop(double b_gain) {
    ClosedLoop loop;
    loop.graph = single_node();
    loop.variant = ControllerVariant::SymmetricTanh;
    loop.constraints = ConstraintSpec{-10.0, 10.0, 2.0};
    loop.params = {smoke_params()};
    loop.plants = {UncertaintyModel::constant(b_gain, 0.0, 1.0, 0.0)};
    return loop;
}

} // namespace

TEST_CASE("step leaves a resting consensus untouched") {
    const std::vector<AgentState> states = {AgentState{1.0, 0.0, {}}};
    for (double b : {1.0, 0.0}) {
        const auto next = step(states, 0.0, still_loop(b), 0.1);
        CHECK(next[0].x == 1.0);
        CHECK(next[0].v == 0.0);
    }
}

TEST_CASE("step reproduces constant-input kinematics exactly") {
    // far from the reference, the input saturates at -u_max, so one step
    // of the double integrator is a polynomial RK4 integrates exactly
    const std::vector<AgentState> states = {AgentState{0.0, 5.0, {}}};
    const auto next = step(states, 0.0, still_loop(1.0), 0.1);
    CHECK(next[0].v == doctest::Approx(5.0 - 2.0 * 0.1).epsilon(1e-15));
    CHECK(next[0].x == doctest::Approx(5.0 * 0.1 - 0.01).epsilon(1e-15));
}

TEST_CASE("one RK4 step of exponential decay is fifth-order accurate") {
    std::vector<double> y = {1.0, 1.0};  // x, v with v' = -v, x' = v
    std::vector<double> y1;
    StepScratch scratch;
    rk4_step(0.0, 0.1, y, y1, scratch,
             [](double, const std::vector<double>& yy, std::vector<double>& dy) {
                 dy.resize(2);
                 dy[0] = yy[1];
                 dy[1] = -yy[1];
             });
    CHECK(std::abs(y1[1] - std::exp(-0.1)) < 1e-7);
}

TEST_CASE("RK4 halving dt cuts the error ~16x on exponential decay") {
    auto final_error = [](double dt) {
        std::vector<double> y = {1.0}, y1;
        StepScratch scratch;
        const long steps = std::lround(1.0 / dt);
        for (long i = 0; i < steps; ++i) {
            rk4_step(i * dt, dt, y, y1, scratch,
                     [](double, const std::vector<double>& yy, std::vector<double>& dy) {
                         dy.resize(1);
                         dy[0] = -yy[0];
                     });
            y.swap(y1);
        }
        return std::abs(y[0] - std::exp(-1.0));
    };
    const double e1 = final_error(0.1);
    const double e2 = final_error(0.05);
    const double e3 = final_error(0.025);
    CHECK(e1 / e2 >= 12.0);
    CHECK(e1 / e2 <= 20.0);
    CHECK(e2 / e3 >= 12.0);
    CHECK(e2 / e3 <= 20.0);
}

TEST_CASE("spread") {
    CHECK(spread({1.0, 1.0, 1.0}) == 0.0);
    CHECK(spread({1.0, 3.0, 2.0}) == 2.0);
    CHECK(spread({7.0}) == 0.0);
    CHECK_THROWS_AS((void)spread({}), std::invalid_argument);
}

TEST_CASE("lyapunov_v") {
    const DirectedGraph g = bidirectional_pair();
    const Eigen::VectorXd omega = left_eigenvector(g);
    const std::vector<AgentControllerParams> params = {
        AgentControllerParams{0.9, 1.8, 0.1, 0.5, 1.5}, AgentControllerParams{0.9, 1.8, 0.1, 0.5, 1.5}};
    CHECK(lyapunov_v({2.0, 2.0}, g, omega, params) == 0.0);
    CHECK(lyapunov_v({1.0, 0.0}, g, omega, params) ==
          doctest::Approx(0.29396071396376390).epsilon(1e-13));
    CHECK(lyapunov_v({-1.0, 0.0}, g, omega, params) ==
          doctest::Approx(lyapunov_v({1.0, 0.0}, g, omega, params)).epsilon(1e-15));
    CHECK(lyapunov_v({5.0, -5.0}, g, omega, params) > 0.0);
    CHECK_THROWS_AS((void)lyapunov_v({1.0}, g, omega, params), DimensionMismatch);
}

TEST_CASE("verify_constraints counts injected violations") {
    TrajectoryTrace trace;
    trace.n = 1;
    trace.times = {0.0, 1.0};
    trace.x = {{0.0, 0.0}};
    trace.v = {{0.5, 1.0}};  // second sample exactly at v_max
    trace.u = {{2.5, 1.0}};  // first sample beyond u_max
    trace.r = {{0.0, 0.0}};
    trace.e = {{0.5, 1.0}};
    trace.zeta = {{0.0, 0.0}};
    trace.lyapunov = {0.0, 0.0};
    trace.spread = {0.0, 0.0};

    const ConstraintSection section = verify_constraints(trace, ConstraintSpec{-1.0, 1.0, 2.0}, 1e-3);
    CHECK(section.input_violations == 1);
    CHECK_FALSE(section.input_ok);
    CHECK(section.velocity_excess == 0.0);  // boundary value is inclusive
    CHECK(section.velocity_ok);
}

TEST_CASE("tracking_monitor reports truthfully without asserting infeasible setups") {
    TrajectoryTrace trace;
    trace.n = 1;
    trace.times = {0.0, 1.0, 2.0};
    trace.x = {{0.0, 0.0, 0.0}};
    trace.v = {{5.0, 5.0, 5.0}};
    trace.u = {{-2.0, -2.0, -2.0}};
    trace.r = {{0.0, 0.0, 0.0}};
    trace.e = {{5.0, 5.0, 5.0}};  // never enters the band
    trace.zeta = {{0.0, 0.0, 0.0}};
    trace.lyapunov = {0.0, 0.0, 0.0};
    trace.spread = {0.0, 0.0, 0.0};

    Eigen::VectorXd degrees(1);
    degrees << 1.0;

    // feasible params: the monitor asserts and the late entry is visible
    const auto feasible = tracking_monitor(trace, ControllerVariant::SymmetricTanh,
                                           {AgentControllerParams{0.9, 1.8, 0.1, 0.2, 1.5}},
                                           UncertaintyBounds{1.0, 0.5, 0.0},
                                           ConstraintSpec{-1.0, 1.0, 2.0}, degrees, 1e-3);
    REQUIRE(feasible.size() == 1);
    CHECK(feasible[0].asserted);
    CHECK_FALSE(feasible[0].entry_time.has_value());
    CHECK_FALSE(feasible[0].entry_by_t1);
    CHECK(feasible[0].t1.has_value());

    // infeasible k: descriptive only
    AgentControllerParams loose{0.9, 1.8, 0.1, 5.0, 1.5};
    const auto infeasible = tracking_monitor(trace, ControllerVariant::SymmetricTanh, {loose},
                                             UncertaintyBounds{1.0, 0.5, 0.0},
                                             ConstraintSpec{-1.0, 1.0, 2.0}, degrees, 1e-3);
    CHECK_FALSE(infeasible[0].asserted);
    CHECK_FALSE(infeasible[0].t1.has_value());
}

TEST_CASE("run rejects broken setups") {
    Scenario s = smoke_scenario();
    s.initial_states[0].v = 1.5;
    CHECK_THROWS_AS((void)run(s), std::invalid_argument);

    Scenario asym = smoke_scenario();
    asym.constraints.v_min = -0.5;
    CHECK_THROWS_AS((void)run(asym), AssumptionViolated);

    Scenario chain = smoke_scenario();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 2);
    w(1, 0) = 1.0;
    chain.graph = DirectedGraph(w);
    CHECK_THROWS_AS((void)run(chain), AssumptionViolated);

    Scenario split = smoke_scenario();
    split.variant = ControllerVariant::PiecewiseSat;
    split.constraints = ConstraintSpec{0.5, 1.5, 2.0};
    split.initial_states[0].v = 0.5;
    split.initial_states[1].v = 0.5;
    split.graph = DirectedGraph(Eigen::MatrixXd::Zero(2, 2));
    CHECK_THROWS_AS((void)run(split), AssumptionViolated);

    Scenario weak = smoke_scenario();
    weak.bounds.tau_max = 2.5;  // more disturbance than authority
    CHECK_THROWS_AS((void)run(weak), std::invalid_argument);
}

TEST_CASE("step flags non-finite states") {
    ClosedLoop loop = still_loop(1.0);
    loop.plants = {UncertaintyModel::constant(1.0, 1e308, 1.0, 0.0)};
    const std::vector<AgentState> states = {AgentState{0.0, 0.0, {}}};
    CHECK_THROWS_AS((void)step(states, 0.0, loop, 10.0), NonFiniteState);
}

TEST_CASE("single agent settles to rest") {
    Scenario s = smoke_scenario();
    s.graph = single_node();
    s.params = {AgentControllerParams{0.9, 1.8, 0.1, 0.2, 1.5}};
    s.constraints = ConstraintSpec{-1.0, 1.0, 2.0};
    s.bounds = UncertaintyBounds{1.0, 0.5, 0.0};
    s.plants = {UncertaintyModel::constant(1.0, 0.0, 1.0, 0.5)};
    s.initial_states = {AgentState{2.0, 0.8, {}}};
    s.sim.t_end = 20.0;
    s.sim.record_stride = 10;
    const RunResult result = run(s);

    for (double r : result.trace.r[0]) CHECK(r == 0.0);  // no neighbors: eta stays 0
    // the relay leaves an oscillation of order dt*b*alpha around rest
    CHECK(std::abs(result.trace.v[0].back()) < s.tracking_epsilon());
    // position essentially frozen once tracking is done
    const size_t half = result.trace.samples() / 2;
    CHECK(std::abs(result.trace.x[0].back() - result.trace.x[0][half]) < 1e-4);
    for (double sp : result.trace.spread) CHECK(sp == 0.0);
    CHECK(result.monitors.all_pass);
}

TEST_CASE("two runs of a seeded noise scenario are bit-identical") {
    Scenario s = smoke_scenario();
    s.plants = {UncertaintyModel::noise({0.9, 1.1}, {-0.4, 0.4}, 1e-3, 0, 0.9, 0.4),
                UncertaintyModel::noise({0.9, 1.1}, {-0.4, 0.4}, 1e-3, 1, 0.9, 0.4)};
    s.bounds = UncertaintyBounds{0.9, 0.4, 0.0};
    s.sim.t_end = 5.0;
    s.sim.record_stride = 7;
    const RunResult a = run(s);
    const RunResult b = run(s);
    CHECK(a.trace.times == b.trace.times);
    CHECK(a.trace.x == b.trace.x);
    CHECK(a.trace.v == b.trace.v);
    CHECK(a.trace.u == b.trace.u);
    CHECK(a.trace.lyapunov == b.trace.lyapunov);
}

TEST_CASE("derived tolerances") {
    const Scenario repro = reproduction_scenario("asymmetric");
    // dt * (b u_max + tau + phi v_bar) with b = 1, tau = 0.5, phi = 0.8, v_bar = 1.5
    CHECK(repro.velocity_tolerance() == doctest::Approx(1e-3 * 3.7).epsilon(1e-12));
    CHECK(repro.tracking_epsilon() == doctest::Approx(1e-3 * 2.5).epsilon(1e-12));
}

TEST_CASE("asymmetric band drives velocities to the band center") {
    const int n = 3;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) w((i + 1) % n, i) = 1.0;
    Scenario s;
    s.variant = ControllerVariant::AsymmetricTanh;
    s.graph = DirectedGraph(w);
    s.constraints = ConstraintSpec{0.5, 1.5, 2.0};
    s.bounds = UncertaintyBounds{1.0, 0.5, 0.0};
    for (int i = 0; i < n; ++i) {
        s.params.push_back(AgentControllerParams{0.4, 1.8, 0.1, 0.5, 1.5});
        s.plants.emplace_back(
            UncertaintyModel::sinusoid({1.0, 0.0, 1.0, 0.0}, {0.0, 0.5, 1.1, 0.7}, 1.0, 0.5));
        s.initial_states.push_back(AgentState{0.7 * i, 0.5, {}});
    }
    s.sim.dt = 1e-3;
    s.sim.t_end = 30.0;
    s.sim.record_stride = 10;
    const RunResult r = run(s);
    CHECK(r.monitors.all_pass);
    CHECK(r.monitors.v_target == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.trace.spread.back() < 1e-2);
    CHECK(r.monitors.final_velocity_error < 1e-2);
    // velocities never leave the band beyond the discretization allowance
    CHECK(r.monitors.constraints.velocity_excess <= r.monitors.constraints.velocity_tolerance);
}

TEST_CASE("trace length follows the recording stride") {
    Scenario s = smoke_scenario();
    s.sim.t_end = 2.0;
    s.sim.record_stride = 7;  // 2000 steps -> samples at 0, 7, ..., 1995
    const RunResult r = run(s);
    CHECK(r.trace.samples() == 1 + 2000 / 7);
    CHECK(r.trace.times[1] == doctest::Approx(7e-3).epsilon(1e-12));
    for (const auto& series : {r.trace.x, r.trace.v, r.trace.u, r.trace.r, r.trace.e, r.trace.zeta}) {
        for (const auto& row : series) CHECK(row.size() == r.trace.samples());
    }
    CHECK(r.trace.lyapunov.size() == r.trace.samples());
    CHECK(r.trace.spread.size() == r.trace.samples());
}

TEST_CASE("spanning-tree runs report block settle order") {
    const int n = 4;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    w(1, 0) = 1.0;
    w(2, 1) = 1.0;
    w(0, 2) = 1.0;  // ring {1,2,3}
    w(3, 2) = 1.0;  // sink 4
    Scenario s;
    s.variant = ControllerVariant::PiecewiseSat;
    s.graph = DirectedGraph(w);
    s.constraints = ConstraintSpec{0.5, 1.5, 2.0};
    s.bounds = UncertaintyBounds{1.0, 0.5, 0.0};
    for (int i = 0; i < n; ++i) {
        s.params.push_back(AgentControllerParams{0.4, 1.8, 0.08, 0.5, 1.5});
        s.plants.emplace_back(UncertaintyModel::constant(1.0, 0.0, 1.0, 0.5));
        s.initial_states.push_back(AgentState{static_cast<double>(2 * i) - 3.0, 0.5, {}});
    }
    s.sim.dt = 1e-3;
    s.sim.t_end = 60.0;
    s.sim.record_stride = 10;
    const RunResult r = run(s);
    REQUIRE(r.monitors.block_settle_times.size() == 2);
    REQUIRE(r.monitors.block_settle_times[0].has_value());
    REQUIRE(r.monitors.block_settle_times[1].has_value());
    // the root component can only settle no later than the whole graph
    CHECK(*r.monitors.block_settle_times[0] <= *r.monitors.block_settle_times[1]);
    CHECK(r.trace.spread.back() < 1e-2);
}

TEST_CASE("smoke run reaches consensus and matches a tiny-step Euler oracle") {
    Scenario s = smoke_scenario();
    const RunResult rk4 = run(s);

    CHECK(rk4.monitors.all_pass);
    CHECK(rk4.monitors.constraints.input_violations == 0);
    CHECK(rk4.trace.spread.back() < 1e-3);
    CHECK(rk4.monitors.consensus_time.has_value());

    Scenario euler = smoke_scenario();
    euler.sim.method = IntegratorMethod::Euler;
    euler.sim.dt = 1e-5;
    euler.sim.record_stride = 100;
    const RunResult ref = run(euler);

    REQUIRE(ref.trace.samples() == rk4.trace.samples());
    double worst = 0.0;
    for (int agent = 0; agent < 2; ++agent) {
        for (size_t i = 0; i < rk4.trace.samples(); ++i) {
            worst = std::max(worst, std::abs(rk4.trace.x[agent][i] - ref.trace.x[agent][i]));
            worst = std::max(worst, std::abs(rk4.trace.v[agent][i] - ref.trace.v[agent][i]));
        }
    }
    CHECK(worst < 1e-4);

    // Lyapunov value decays along the way and the velocity ends near zero
    CHECK(rk4.trace.lyapunov.front() > rk4.trace.lyapunov.back());
    CHECK(std::abs(rk4.trace.v[0].back()) < 1e-3);
}
