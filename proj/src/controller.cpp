#include "ccsim/controller.hpp"

#include "ccsim/errors.hpp"
#include "ccsim/saturation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccsim {

double ConstraintSpec::v_bar() const {
    return std::max(std::abs(v_max), std::abs(v_min));
}

void ConstraintSpec::validate() const {
    if (!(v_min < v_max)) throw std::invalid_argument("constraint requires v_min < v_max");
    if (!(u_max > 0.0)) throw std::invalid_argument("constraint requires u_max > 0");
}

void UncertaintyBounds::validate() const {
    if (!(b_min > 0.0)) throw std::invalid_argument("b_min must be positive");
    if (!(tau_max >= 0.0)) throw std::invalid_argument("tau_max must be nonnegative");
    if (!(phi_max >= 0.0)) throw std::invalid_argument("phi_max must be nonnegative");
}

double AgentControllerParams::lambda() const {
    return std::pow(z, gamma);
}

void AgentControllerParams::validate() const {
    SatParams{m, k, z, gamma}.validate();
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

const char* variant_name(ControllerVariant v) {
    switch (v) {
    case ControllerVariant::SymmetricTanh: return "symmetric_tanh";
    case ControllerVariant::AsymmetricTanh: return "asymmetric_tanh";
    case ControllerVariant::FilterBased: return "filter_based";
    case ControllerVariant::PiecewiseSat: return "piecewise_sat";
    case ControllerVariant::Manipulator: return "manipulator";
    }
    return "unknown";
}

ControllerVariant variant_from_name(const std::string& name) {
    if (name == "symmetric_tanh") return ControllerVariant::SymmetricTanh;
    if (name == "asymmetric_tanh") return ControllerVariant::AsymmetricTanh;
    if (name == "filter_based") return ControllerVariant::FilterBased;
    if (name == "piecewise_sat") return ControllerVariant::PiecewiseSat;
    if (name == "manipulator") return ControllerVariant::Manipulator;
    throw std::invalid_argument("unknown controller variant: " + name);
}

bool variant_requires_strong_connectivity(ControllerVariant v) {
    return v != ControllerVariant::PiecewiseSat;
}

bool variant_requires_symmetric_band(ControllerVariant v) {
    return v == ControllerVariant::SymmetricTanh || v == ControllerVariant::FilterBased;
}

double variant_velocity_target(ControllerVariant v, const ConstraintSpec& c) {
    return variant_requires_symmetric_band(v) ? 0.0 : c.v_r();
}

double relative_position_sum(const NeighborView& view) {
    double eta = 0.0;
    for (const auto& [weight, x_j] : view.neighbor_positions) {
        eta += weight * (view.own_position - x_j);
    }
    return eta;
}

double reference_from_coupling(ControllerVariant variant, double coupling,
                               const AgentControllerParams& p, const ConstraintSpec& c) {
    switch (variant) {
    case ControllerVariant::SymmetricTanh:
    case ControllerVariant::FilterBased:
        return tanh_reference(coupling, p.k, p.m);
    case ControllerVariant::AsymmetricTanh:
    case ControllerVariant::Manipulator:
        return c.v_r() + tanh_reference(coupling, p.k, p.m);
    case ControllerVariant::PiecewiseSat:
        return c.v_r() - varrho(coupling, p.k, p.m);
    }
    throw std::logic_error("unhandled controller variant");
}

double reference_velocity(ControllerVariant variant, const NeighborView& view,
                          const AgentControllerParams& p, const ConstraintSpec& c) {
    double coupling;
    if (variant == ControllerVariant::FilterBased) {
        if (!view.filter_state) {
            throw MissingFilterState("filter variant requires the filter state x_hat");
        }
        coupling = view.own_position - *view.filter_state;
    } else {
        coupling = relative_position_sum(view);
    }
    return reference_from_coupling(variant, coupling, p, c);
}

double tracking_error(double v, double r) {
    return v - r;
}

double control(double e, const AgentControllerParams& p, double u_max) {
    if (!(p.alpha < u_max)) {
        throw InfeasibleParams("control law requires alpha < u_max");
    }
    if (e == 0.0) return 0.0;
    const double sgn = e > 0.0 ? 1.0 : -1.0;
    const double mag = std::abs(e);
    if (mag >= p.z) return -sgn * u_max;
    // sigma(e)/lambda = (|e|/z)^gamma; the min keeps |u| <= u_max even
    // under worst-case rounding.
    const double ratio = std::pow(mag / p.z, p.gamma);
    return -sgn * std::min((u_max - p.alpha) * ratio + p.alpha, u_max);
}

double filter_derivative(double x_hat, const std::vector<std::pair<double, double>>& neighbor_positions,
                         double m) {
    double s = 0.0;
    for (const auto& [weight, x_j] : neighbor_positions) {
        s += weight * (x_hat - x_j);
    }
    return bounded_tanh(s, m);
}

bool FeasibilityReport::all_pass() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [](const FeasibilityCondition& c) { return c.pass; });
}

namespace {

FeasibilityCondition make_condition(std::string name, double lhs, double rhs, bool strict) {
    FeasibilityCondition c;
    c.condition = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.strict = strict;
    c.pass = strict ? (lhs < rhs) : (lhs <= rhs);
    c.margin = rhs - lhs;
    return c;
}

double alpha_lower_bound(ControllerVariant variant, const UncertaintyBounds& b, const ConstraintSpec& c) {
    if (variant == ControllerVariant::Manipulator) {
        return (b.tau_max + b.phi_max * c.v_bar()) / b.b_min;
    }
    return b.tau_max / b.b_min;
}

double m_limit(ControllerVariant variant, const ConstraintSpec& c) {
    return variant_requires_symmetric_band(variant) ? c.v_max : c.half_range();
}

// Right-hand side of the k inequality; +inf when the in-degree term vanishes.
double k_limit(ControllerVariant variant, double alpha, const UncertaintyBounds& b,
               const ConstraintSpec& c, double d_i) {
    const double drive = b.b_min * alpha - b.tau_max -
                         (variant == ControllerVariant::Manipulator ? b.phi_max * c.v_bar() : 0.0);
    double denom = 0.0;
    switch (variant) {
    case ControllerVariant::SymmetricTanh:
        denom = 2.0 * d_i * c.v_max;
        break;
    case ControllerVariant::FilterBased:
        denom = 2.0 * c.v_max;
        break;
    case ControllerVariant::AsymmetricTanh:
    case ControllerVariant::PiecewiseSat:
    case ControllerVariant::Manipulator:
        denom = d_i * (c.v_max - c.v_min);
        break;
    }
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    return drive / denom;
}

const char* k_condition_name(ControllerVariant variant) {
    switch (variant) {
    case ControllerVariant::SymmetricTanh:
        return "k < (b_min*alpha - tau_max)/(2*d*v_max)";
    case ControllerVariant::FilterBased:
        return "k < (b_min*alpha - tau_max)/(2*v_max)";
    case ControllerVariant::AsymmetricTanh:
    case ControllerVariant::PiecewiseSat:
        return "k < (b_min*alpha - tau_max)/(d*(v_max - v_min))";
    case ControllerVariant::Manipulator:
        return "k < (b_min*alpha - tau_max - phi_max*v_bar)/(d*(v_max - v_min))";
    }
    return "k bound";
}

} // namespace

FeasibilityReport check_feasibility(ControllerVariant variant, const AgentControllerParams& p,
                                    const UncertaintyBounds& bounds, const ConstraintSpec& c,
                                    double d_i) {
    FeasibilityReport report;
    const double ml = m_limit(variant, c);
    const char* ml_name = variant_requires_symmetric_band(variant)
                              ? "m < v_max"
                              : "m < (v_max - v_min)/2";
    report.conditions.push_back(make_condition(ml_name, p.m, ml, true));
    report.conditions.push_back(make_condition(
        variant == ControllerVariant::Manipulator ? "alpha > (tau_max + phi_max*v_bar)/b_min"
                                                  : "alpha > tau_max/b_min",
        alpha_lower_bound(variant, bounds, c), p.alpha, true));
    report.conditions.push_back(make_condition("alpha < u_max", p.alpha, c.u_max, true));
    // stated as m + z <= limit so exact boundary choices survive rounding
    report.conditions.push_back(make_condition(
        variant_requires_symmetric_band(variant) ? "m + z <= v_max" : "m + z <= (v_max - v_min)/2",
        p.m + p.z, ml, false));
    report.conditions.push_back(
        make_condition(k_condition_name(variant), p.k, k_limit(variant, p.alpha, bounds, c, d_i), true));
    return report;
}

AgentControllerParams suggest_params(ControllerVariant variant, const UncertaintyBounds& bounds,
                                     const ConstraintSpec& c, double d_i, double safety) {
    if (!(safety > 0.0 && safety < 1.0)) {
        throw std::invalid_argument("safety must lie in (0, 1)");
    }
    c.validate();
    bounds.validate();
    const double lo = alpha_lower_bound(variant, bounds, c);
    if (!(lo < c.u_max)) {
        throw InfeasibleProblem("alpha interval is empty: uncertainty bounds exceed the control authority");
    }
    AgentControllerParams p;
    p.alpha = 0.5 * (lo + c.u_max);
    const double ml = m_limit(variant, c);
    p.m = safety * ml;
    p.z = safety * (ml - p.m);
    p.gamma = 1.5;
    double kl = k_limit(variant, p.alpha, bounds, c, d_i);
    if (!std::isfinite(kl)) {
        // isolated node: fall back to unit degree for a finite suggestion
        kl = k_limit(variant, p.alpha, bounds, c, 1.0);
    }
    p.k = safety * kl;
    p.validate();
    return p;
}

SettlingBounds settling_bounds(const AgentControllerParams& p, const UncertaintyBounds& bounds,
                               const ConstraintSpec& c, double d_i) {
    if (!(c.u_max - p.alpha > 0.0)) {
        throw NonpositiveMu("settling bounds require alpha < u_max");
    }
    const double mu = bounds.b_min * p.alpha - bounds.tau_max - 2.0 * p.k * d_i * c.v_max;
    if (!(mu > 0.0)) {
        throw NonpositiveMu("mu = b_min*alpha - tau_max - 2*k*d*v_max is not positive");
    }
    SettlingBounds s;
    const double reach_rate = bounds.b_min * (c.u_max - p.alpha);
    s.t1 = (c.v_max + p.m - p.z) / reach_rate;
    s.t2 = p.lambda() / (std::pow(2.0, (p.gamma - 1.0) / 2.0) * reach_rate * (p.gamma - 1.0)) +
           1.0 / (std::pow(2.0, -0.5) * mu);
    return s;
}

nlohmann::ordered_json feasibility_to_json(const FeasibilityReport& report) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : report.conditions) {
        arr.push_back({{"condition", c.condition},
                       {"lhs", c.lhs},
                       {"rhs", c.rhs},
                       {"pass", c.pass},
                       {"margin", c.margin}});
    }
    return arr;
}

} // namespace ccsim
