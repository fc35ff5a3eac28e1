#include "ccsim/sim.hpp"

#include "ccsim/errors.hpp"
#include "ccsim/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace ccsim {

void StepScratch::resize(size_t n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
}

double spread(const std::vector<double>& positions) {
    if (positions.empty()) throw std::invalid_argument("spread of an empty position set");
    const auto [lo, hi] = std::minmax_element(positions.begin(), positions.end());
    return *hi - *lo;
}

namespace {

// ln cosh without overflow for large |y|.
double log_cosh(double y) {
    const double a = std::abs(y);
    return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

} // namespace

double lyapunov_v(const std::vector<double>& positions, const DirectedGraph& g,
                  const Eigen::VectorXd& omega, const std::vector<AgentControllerParams>& params) {
    const int n = g.size();
    if (static_cast<int>(positions.size()) != n || omega.size() != n ||
        static_cast<int>(params.size()) != n) {
        throw DimensionMismatch("lyapunov_v inputs must all have one entry per node");
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double eta = 0.0;
        for (const auto& [j, w] : g.in_neighbors(i)) {
            eta += w * (positions[static_cast<size_t>(i)] - positions[static_cast<size_t>(j)]);
        }
        const auto& p = params[static_cast<size_t>(i)];
        total += omega(i) / p.k * log_cosh(p.k * eta / p.m);
    }
    return total;
}

namespace {

// Flat state layout: [x_0..x_{n-1}, v_0..v_{n-1}, (x_hat_0..x_hat_{n-1})].
class Engine {
public:
    explicit Engine(const ClosedLoop& loop)
        : loop_(loop),
          n_(loop.graph.size()),
          has_filter_(loop.variant == ControllerVariant::FilterBased),
          frozen_b_(static_cast<size_t>(n_), 1.0),
          frozen_tau_(static_cast<size_t>(n_), 0.0) {}

    int dim() const { return has_filter_ ? 3 * n_ : 2 * n_; }
    bool has_filter() const { return has_filter_; }

    std::vector<double> pack(const std::vector<AgentState>& states) const {
        std::vector<double> y(static_cast<size_t>(dim()));
        for (int i = 0; i < n_; ++i) {
            const auto& st = states[static_cast<size_t>(i)];
            y[static_cast<size_t>(i)] = st.x;
            y[static_cast<size_t>(n_ + i)] = st.v;
            if (has_filter_) {
                y[static_cast<size_t>(2 * n_ + i)] = st.x_hat.value_or(st.x);
            }
        }
        return y;
    }

    std::vector<AgentState> unpack(const std::vector<double>& y) const {
        std::vector<AgentState> states(static_cast<size_t>(n_));
        for (int i = 0; i < n_; ++i) {
            auto& st = states[static_cast<size_t>(i)];
            st.x = y[static_cast<size_t>(i)];
            st.v = y[static_cast<size_t>(n_ + i)];
            if (has_filter_) st.x_hat = y[static_cast<size_t>(2 * n_ + i)];
        }
        return states;
    }

    // Freeze noise-kind uncertainty for the step starting at t.
    void freeze_uncertainty(double t) {
        for (int i = 0; i < n_; ++i) {
            const auto* model = std::get_if<UncertaintyModel>(&loop_.plants[static_cast<size_t>(i)]);
            if (model && model->kind() == UncertaintyModel::Kind::Noise) {
                frozen_b_[static_cast<size_t>(i)] = model->b(t);
                frozen_tau_[static_cast<size_t>(i)] = model->tau(t);
            }
        }
    }

    double coupling(int i, const std::vector<double>& y) const {
        if (has_filter_) {
            return y[static_cast<size_t>(i)] - y[static_cast<size_t>(2 * n_ + i)];
        }
        double eta = 0.0;
        for (const auto& [j, w] : loop_.graph.in_neighbors(i)) {
            eta += w * (y[static_cast<size_t>(i)] - y[static_cast<size_t>(j)]);
        }
        return eta;
    }

    double accel(int i, double t, double x, double v, double u) const {
        const auto& plant = loop_.plants[static_cast<size_t>(i)];
        if (const auto* model = std::get_if<UncertaintyModel>(&plant)) {
            if (model->kind() == UncertaintyModel::Kind::Noise) {
                return frozen_b_[static_cast<size_t>(i)] * u + frozen_tau_[static_cast<size_t>(i)];
            }
            return accel_double_integrator(t, u, *model);
        }
        return accel_manipulator(x, v, u, std::get<ManipulatorParams>(plant));
    }

    void rhs(double t, const std::vector<double>& y, std::vector<double>& dy) const {
        dy.resize(y.size());
        for (int i = 0; i < n_; ++i) {
            const auto& p = loop_.params[static_cast<size_t>(i)];
            const double x = y[static_cast<size_t>(i)];
            const double v = y[static_cast<size_t>(n_ + i)];
            const double r = reference_from_coupling(loop_.variant, coupling(i, y), p, loop_.constraints);
            const double u = control(v - r, p, loop_.constraints.u_max);
            dy[static_cast<size_t>(i)] = v;
            dy[static_cast<size_t>(n_ + i)] = accel(i, t, x, v, u);
            if (has_filter_) {
                double s = 0.0;
                for (const auto& [j, w] : loop_.graph.in_neighbors(i)) {
                    s += w * (y[static_cast<size_t>(2 * n_ + i)] - y[static_cast<size_t>(j)]);
                }
                dy[static_cast<size_t>(2 * n_ + i)] = bounded_tanh(s, p.m);
            }
        }
    }

    void advance(double t, double dt, IntegratorMethod method, std::vector<double>& y,
                 std::vector<double>& y_next, StepScratch& scratch) {
        freeze_uncertainty(t);
        auto f = [this](double tt, const std::vector<double>& yy, std::vector<double>& dd) {
            rhs(tt, yy, dd);
        };
        if (method == IntegratorMethod::Rk4) {
            rk4_step(t, dt, y, y_next, scratch, f);
        } else {
            euler_step(t, dt, y, y_next, scratch, f);
        }
        for (double value : y_next) {
            if (!std::isfinite(value)) {
                throw NonFiniteState("simulation state left the finite range at t = " +
                                     std::to_string(t + dt));
            }
        }
        y.swap(y_next);
    }

    const ClosedLoop& loop() const { return loop_; }
    int n() const { return n_; }

private:
    ClosedLoop loop_;
    int n_;
    bool has_filter_;
    std::vector<double> frozen_b_, frozen_tau_;
};

} // namespace

ClosedLoop make_closed_loop(const Scenario& scenario) {
    return ClosedLoop{scenario.graph, scenario.variant, scenario.constraints, scenario.params,
                      scenario.plants};
}

std::vector<AgentState> step(const std::vector<AgentState>& states, double t, const ClosedLoop& loop,
                             double dt, IntegratorMethod method) {
    Engine engine(loop);
    std::vector<double> y = engine.pack(states);
    std::vector<double> y_next;
    StepScratch scratch;
    engine.advance(t, dt, method, y, y_next, scratch);
    return engine.unpack(y);
}

ConstraintSection verify_constraints(const TrajectoryTrace& trace, const ConstraintSpec& c, double tol) {
    ConstraintSection section;
    section.u_max = c.u_max;
    section.velocity_tolerance = tol;
    for (int i = 0; i < trace.n; ++i) {
        for (size_t s = 0; s < trace.samples(); ++s) {
            const double u = trace.u[static_cast<size_t>(i)][s];
            section.max_abs_u = std::max(section.max_abs_u, std::abs(u));
            if (std::abs(u) > c.u_max) ++section.input_violations;
            const double v = trace.v[static_cast<size_t>(i)][s];
            const double excess = std::max(v - c.v_max, c.v_min - v);
            section.velocity_excess = std::max(section.velocity_excess, excess);
        }
    }
    section.velocity_excess = std::max(section.velocity_excess, 0.0);
    section.input_ok = section.input_violations == 0;
    section.velocity_ok = section.velocity_excess <= tol;
    return section;
}

std::vector<TrackingAgentReport> tracking_monitor(const TrajectoryTrace& trace,
                                                  ControllerVariant variant,
                                                  const std::vector<AgentControllerParams>& params,
                                                  const UncertaintyBounds& bounds,
                                                  const ConstraintSpec& c,
                                                  const Eigen::VectorXd& degrees, double epsilon_e) {
    std::vector<TrackingAgentReport> reports;
    for (int i = 0; i < trace.n; ++i) {
        const auto& p = params[static_cast<size_t>(i)];
        TrackingAgentReport rep;
        rep.agent = i;
        for (size_t s = 0; s < trace.samples(); ++s) {
            if (std::abs(trace.e[static_cast<size_t>(i)][s]) <= p.z) {
                rep.entry_time = trace.times[s];
                break;
            }
        }
        const bool feasible = check_feasibility(variant, p, bounds, c, degrees(i)).all_pass();
        try {
            const SettlingBounds sb = settling_bounds(p, bounds, c, degrees(i));
            rep.t1 = sb.t1;
            rep.t2 = sb.t2;
        } catch (const NonpositiveMu&) {
            // bounds not computable; report stays descriptive
        }
        rep.asserted = feasible && rep.t1.has_value();
        rep.entry_by_t1 = rep.entry_time && rep.t1 && *rep.entry_time <= *rep.t1;
        if (rep.t1 && rep.t2) {
            const double settle = *rep.t1 + *rep.t2;
            double worst = 0.0;
            for (size_t s = 0; s < trace.samples(); ++s) {
                if (trace.times[s] >= settle) {
                    worst = std::max(worst, std::abs(trace.e[static_cast<size_t>(i)][s]));
                }
            }
            rep.max_e_after_settle = worst;
            // vacuously true when the horizon ends before the settle bound
            rep.within_band_after_settle = worst <= epsilon_e;
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

LyapunovReport lyapunov_monitor(const TrajectoryTrace& trace, const DirectedGraph& g,
                                const Eigen::VectorXd& omega,
                                const std::vector<AgentControllerParams>& params, double after) {
    LyapunovReport rep;
    rep.after = after;
    if (omega.size() != g.size()) return rep;
    rep.applicable = true;

    std::vector<double> positions(static_cast<size_t>(trace.n));
    std::vector<double> values(trace.samples());
    for (size_t s = 0; s < trace.samples(); ++s) {
        for (int i = 0; i < trace.n; ++i) {
            positions[static_cast<size_t>(i)] = trace.x[static_cast<size_t>(i)][s];
        }
        values[s] = lyapunov_v(positions, g, omega, params);
    }

    size_t start = trace.samples();
    for (size_t s = 0; s < trace.samples(); ++s) {
        if (trace.times[s] >= after) {
            start = s;
            break;
        }
    }
    if (start >= trace.samples()) return rep;  // nothing recorded past `after`

    rep.slack = 1e-8 * std::max(1.0, values[start]);
    for (size_t s = start; s + 1 < trace.samples(); ++s) {
        const double increase = values[s + 1] - values[s];
        rep.max_increase = std::max(rep.max_increase, increase);
        if (increase > rep.slack && !rep.first_violation_time) {
            rep.first_violation_time = trace.times[s + 1];
            rep.monotone = false;
        }
    }
    return rep;
}

namespace {

PlantBoundsReport check_plant_bounds(const Scenario& scenario) {
    PlantBoundsReport rep;
    rep.worst_b_margin = std::numeric_limits<double>::infinity();
    rep.worst_tau_margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < scenario.plants.size(); ++i) {
        double b_margin, tau_margin;
        bool ok;
        if (const auto* model = std::get_if<UncertaintyModel>(&scenario.plants[i])) {
            const int samples = 2001;
            const BoundsCheckResult r = bounds_check(*model, scenario.sim.t_end, samples);
            b_margin = r.b_margin;
            tau_margin = r.tau_margin;
            ok = r.pass;
        } else {
            const auto& mp = std::get<ManipulatorParams>(scenario.plants[i]);
            b_margin = mp.b() - scenario.bounds.b_min;
            tau_margin = scenario.bounds.tau_max - mp.tau();
            const double phi_margin = scenario.bounds.phi_max - mp.phi();
            ok = b_margin >= 0.0 && tau_margin >= 0.0 && phi_margin >= 0.0;
        }
        rep.worst_b_margin = std::min(rep.worst_b_margin, b_margin);
        rep.worst_tau_margin = std::min(rep.worst_tau_margin, tau_margin);
        if (!ok) {
            rep.pass = false;
            rep.violating_agents.push_back(static_cast<int>(i));
        }
    }
    return rep;
}

// First recorded time from which max_i |e_i| stays within the band.
double observed_settle_time(const TrajectoryTrace& trace, double band) {
    size_t last_bad = trace.samples();  // sentinel: none
    for (size_t s = trace.samples(); s-- > 0;) {
        double worst = 0.0;
        for (int i = 0; i < trace.n; ++i) {
            worst = std::max(worst, std::abs(trace.e[static_cast<size_t>(i)][s]));
        }
        if (worst > band) {
            last_bad = s;
            break;
        }
    }
    if (last_bad == trace.samples()) return trace.times.front();
    if (last_bad + 1 >= trace.samples()) return trace.times.back();
    return trace.times[last_bad + 1];
}

} // namespace

RunResult run(const Scenario& scenario) {
    scenario.validate();

    RunResult out;
    out.feasibility = scenario.feasibility_reports();
    const bool feasible_all = std::all_of(out.feasibility.begin(), out.feasibility.end(),
                                          [](const FeasibilityReport& r) { return r.all_pass(); });

    const bool sc = is_strongly_connected(scenario.graph);
    if (sc) out.omega = left_eigenvector(scenario.graph);

    Engine engine(make_closed_loop(scenario));
    const int n = scenario.n();
    const double dt = scenario.sim.dt;
    const long n_steps = static_cast<long>(std::floor(scenario.sim.t_end / dt + 1e-9));
    const int stride = scenario.sim.record_stride;
    const size_t n_samples = 1 + static_cast<size_t>(n_steps / stride);

    TrajectoryTrace& trace = out.trace;
    trace.n = n;
    trace.times.reserve(n_samples);
    auto series = [&] {
        std::vector<std::vector<double>> s(static_cast<size_t>(n));
        for (auto& row : s) row.reserve(n_samples);
        return s;
    };
    trace.x = series();
    trace.v = series();
    trace.u = series();
    trace.r = series();
    trace.e = series();
    trace.zeta = series();
    trace.lyapunov.reserve(n_samples);
    trace.spread.reserve(n_samples);

    std::vector<double> y = engine.pack(scenario.initial_states);
    std::vector<double> y_next, positions(static_cast<size_t>(n));
    StepScratch scratch;

    auto record = [&](double t) {
        engine.freeze_uncertainty(t);
        for (int i = 0; i < n; ++i) {
            const auto& p = scenario.params[static_cast<size_t>(i)];
            const double x = y[static_cast<size_t>(i)];
            const double v = y[static_cast<size_t>(n + i)];
            const double r = reference_from_coupling(scenario.variant, engine.coupling(i, y), p,
                                                     scenario.constraints);
            const double e = v - r;
            const double u = control(e, p, scenario.constraints.u_max);
            double zeta = 0.0;
            for (const auto& [j, w] : scenario.graph.in_neighbors(i)) {
                zeta += w * (v - y[static_cast<size_t>(n + j)]);
            }
            trace.x[static_cast<size_t>(i)].push_back(x);
            trace.v[static_cast<size_t>(i)].push_back(v);
            trace.u[static_cast<size_t>(i)].push_back(u);
            trace.r[static_cast<size_t>(i)].push_back(r);
            trace.e[static_cast<size_t>(i)].push_back(e);
            trace.zeta[static_cast<size_t>(i)].push_back(zeta);
            positions[static_cast<size_t>(i)] = x;
        }
        trace.times.push_back(t);
        trace.spread.push_back(spread(positions));
        trace.lyapunov.push_back(sc ? lyapunov_v(positions, scenario.graph, out.omega, scenario.params)
                                    : std::numeric_limits<double>::quiet_NaN());
    };

    record(0.0);
    for (long k = 1; k <= n_steps; ++k) {
        const double t = static_cast<double>(k - 1) * dt;
        engine.advance(t, dt, scenario.sim.method, y, y_next, scratch);
        if (k % stride == 0) record(static_cast<double>(k) * dt);
    }

    // monitors
    MonitorReport& mon = out.monitors;
    mon.feasibility_all_pass = feasible_all;
    mon.constraints = verify_constraints(trace, scenario.constraints, scenario.velocity_tolerance());
    mon.tracking_epsilon = scenario.tracking_epsilon();
    const Eigen::VectorXd degrees = in_degrees(scenario.graph);
    mon.tracking = tracking_monitor(trace, scenario.variant, scenario.params, scenario.bounds,
                                    scenario.constraints, degrees, mon.tracking_epsilon);
    mon.plant_bounds = check_plant_bounds(scenario);

    const bool tanh_reference_variant = scenario.variant == ControllerVariant::SymmetricTanh ||
                                        scenario.variant == ControllerVariant::AsymmetricTanh ||
                                        scenario.variant == ControllerVariant::Manipulator;
    double after = 0.0;
    bool formula_after = true;
    for (const auto& rep : mon.tracking) {
        if (rep.t1 && rep.t2) {
            after = std::max(after, *rep.t1 + *rep.t2);
        } else {
            formula_after = false;
        }
    }
    if (!formula_after) after = observed_settle_time(trace, mon.tracking_epsilon);
    if (sc) {
        mon.lyapunov = lyapunov_monitor(trace, scenario.graph, out.omega, scenario.params, after);
        mon.lyapunov_asserted = tanh_reference_variant && feasible_all && formula_after;
    }

    mon.consensus_epsilon = scenario.sim.consensus_epsilon;
    auto settle_time_of = [&](const std::vector<int>& members) -> std::optional<double> {
        std::vector<double> xs(members.size());
        size_t last_wide = trace.samples();
        for (size_t s = trace.samples(); s-- > 0;) {
            for (size_t i = 0; i < members.size(); ++i) {
                xs[i] = trace.x[static_cast<size_t>(members[i])][s];
            }
            if (spread(xs) >= scenario.sim.consensus_epsilon) {
                last_wide = s;
                break;
            }
        }
        if (last_wide == trace.samples()) return trace.times.front();
        if (last_wide + 1 < trace.samples()) return trace.times[last_wide + 1];
        return std::nullopt;
    };
    {
        std::vector<int> everyone(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) everyone[static_cast<size_t>(i)] = i;
        mon.consensus_time = settle_time_of(everyone);
    }
    if (scenario.variant == ControllerVariant::PiecewiseSat) {
        const GraphDecomposition d = perron_frobenius_form(scenario.graph);
        std::vector<int> prefix;
        for (const auto& block : d.blocks) {
            prefix.insert(prefix.end(), block.begin(), block.end());
            mon.block_settle_times.push_back(settle_time_of(prefix));
        }
    }
    mon.final_spread = trace.spread.back();
    mon.v_target = variant_velocity_target(scenario.variant, scenario.constraints);
    double verr = 0.0;
    for (int i = 0; i < n; ++i) {
        verr = std::max(verr, std::abs(trace.v[static_cast<size_t>(i)].back() - mon.v_target));
    }
    mon.final_velocity_error = verr;

    bool tracking_ok = true;
    for (const auto& rep : mon.tracking) {
        if (rep.asserted && !(rep.entry_by_t1 && (!rep.t2 || rep.within_band_after_settle))) {
            tracking_ok = false;
        }
    }
    mon.all_pass = mon.constraints.input_ok && mon.constraints.velocity_ok && mon.plant_bounds.pass &&
                   tracking_ok && (!mon.lyapunov_asserted || mon.lyapunov.monotone);
    return out;
}

namespace {

nlohmann::ordered_json opt_json(const std::optional<double>& value) {
    return value ? nlohmann::ordered_json(*value) : nlohmann::ordered_json(nullptr);
}

} // namespace

nlohmann::ordered_json monitor_report_to_json(const MonitorReport& report) {
    nlohmann::ordered_json j;
    j["all_pass"] = report.all_pass;
    j["feasibility_all_pass"] = report.feasibility_all_pass;
    j["constraints"] = {{"input_violations", report.constraints.input_violations},
                        {"max_abs_u", report.constraints.max_abs_u},
                        {"u_max", report.constraints.u_max},
                        {"input_ok", report.constraints.input_ok},
                        {"velocity_excess", report.constraints.velocity_excess},
                        {"velocity_tolerance", report.constraints.velocity_tolerance},
                        {"velocity_ok", report.constraints.velocity_ok}};
    auto tracking = nlohmann::ordered_json::array();
    for (const auto& rep : report.tracking) {
        nlohmann::ordered_json jt;
        jt["agent"] = rep.agent + 1;
        jt["entry_time"] = opt_json(rep.entry_time);
        jt["t1"] = opt_json(rep.t1);
        jt["t2"] = opt_json(rep.t2);
        jt["entry_by_t1"] = rep.entry_by_t1;
        jt["max_e_after_settle"] = rep.max_e_after_settle;
        jt["within_band_after_settle"] = rep.within_band_after_settle;
        jt["asserted"] = rep.asserted;
        tracking.push_back(std::move(jt));
    }
    j["tracking"] = std::move(tracking);
    j["tracking_epsilon"] = report.tracking_epsilon;
    j["lyapunov"] = {{"applicable", report.lyapunov.applicable},
                     {"asserted", report.lyapunov_asserted},
                     {"after", report.lyapunov.after},
                     {"slack", report.lyapunov.slack},
                     {"max_increase", report.lyapunov.max_increase},
                     {"first_violation_time", opt_json(report.lyapunov.first_violation_time)},
                     {"monotone", report.lyapunov.monotone}};
    auto violating = nlohmann::ordered_json::array();
    for (int agent : report.plant_bounds.violating_agents) violating.push_back(agent + 1);
    j["plant_bounds"] = {{"pass", report.plant_bounds.pass},
                         {"worst_b_margin", report.plant_bounds.worst_b_margin},
                         {"worst_tau_margin", report.plant_bounds.worst_tau_margin},
                         {"violating_agents", std::move(violating)}};
    j["consensus_time"] = opt_json(report.consensus_time);
    if (!report.block_settle_times.empty()) {
        auto blocks = nlohmann::ordered_json::array();
        for (const auto& t : report.block_settle_times) blocks.push_back(opt_json(t));
        j["block_settle_times"] = std::move(blocks);
    }
    j["consensus_epsilon"] = report.consensus_epsilon;
    j["final_spread"] = report.final_spread;
    j["v_target"] = report.v_target;
    j["final_velocity_error"] = report.final_velocity_error;
    return j;
}

void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out) {
    out << "t";
    const char* names[] = {"x", "v", "u", "r", "e"};
    for (const char* name : names) {
        for (int i = 1; i <= trace.n; ++i) out << "," << name << "_" << i;
    }
    out << ",V,spread\n";
    char buf[32];
    auto emit = [&](double value) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        out << "," << buf;
    };
    for (size_t s = 0; s < trace.samples(); ++s) {
        std::snprintf(buf, sizeof(buf), "%.17g", trace.times[s]);
        out << buf;
        const std::vector<std::vector<double>>* series[] = {&trace.x, &trace.v, &trace.u, &trace.r,
                                                            &trace.e};
        for (const auto* block : series) {
            for (int i = 0; i < trace.n; ++i) emit((*block)[static_cast<size_t>(i)][s]);
        }
        emit(trace.lyapunov[s]);
        emit(trace.spread[s]);
        out << "\n";
    }
}

} // namespace ccsim
