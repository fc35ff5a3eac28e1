#include "ccsim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic sample in [lo, hi] for (seed, step index, channel).
double noise_sample(std::uint64_t seed, std::int64_t idx, std::uint64_t channel, double lo, double hi) {
    const std::uint64_t h = splitmix64(splitmix64(seed ^ (channel * 0x9e3779b97f4a7c15ull)) +
                                       static_cast<std::uint64_t>(idx));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    return lo + (hi - lo) * u;
}

std::int64_t hold_index(double t, double hold_dt) {
    if (!(hold_dt > 0.0)) return 0;
    const double idx = std::floor(t / hold_dt);
    return idx <= 0.0 ? 0 : static_cast<std::int64_t>(idx);
}

} // namespace

double UncertaintyModel::Wave::operator()(double t) const {
    return offset + amplitude * std::sin(frequency * t + phase);
}

double UncertaintyModel::Wave::max_abs() const {
    return std::max(std::abs(min_value()), std::abs(max_value()));
}

namespace {

// First t >= 0 with sin(freq t + phase) = target (+1 or -1).
double first_extremum_time(double frequency, double phase, double target_sign) {
    if (frequency == 0.0) return 0.0;
    const double two_pi = 2.0 * M_PI;
    double t = ((target_sign > 0.0 ? 0.5 : 1.5) * M_PI - phase) / frequency;
    const double period = two_pi / std::abs(frequency);
    while (t < 0.0) t += period;
    while (t >= period) t -= period;
    return t;
}

} // namespace

double UncertaintyModel::Wave::max_abs_time() const {
    if (amplitude == 0.0) return 0.0;
    const bool want_peak = std::abs(max_value()) >= std::abs(min_value());
    const double sign_at_extreme = (want_peak == (amplitude > 0.0)) ? 1.0 : -1.0;
    return first_extremum_time(frequency, phase, sign_at_extreme);
}

double UncertaintyModel::Wave::min_value_time() const {
    if (amplitude == 0.0) return 0.0;
    return first_extremum_time(frequency, phase, amplitude > 0.0 ? -1.0 : 1.0);
}

UncertaintyModel UncertaintyModel::constant(double b, double tau, double declared_b_min,
                                            double declared_tau_max) {
    UncertaintyModel m;
    m.kind_ = Kind::Constant;
    m.b_wave_ = Wave{b, 0.0, 1.0, 0.0};
    m.tau_wave_ = Wave{tau, 0.0, 1.0, 0.0};
    m.declared_b_min_ = declared_b_min;
    m.declared_tau_max_ = declared_tau_max;
    return m;
}

UncertaintyModel UncertaintyModel::sinusoid(Wave b, Wave tau, double declared_b_min,
                                            double declared_tau_max) {
    UncertaintyModel m;
    m.kind_ = Kind::Sinusoid;
    m.b_wave_ = b;
    m.tau_wave_ = tau;
    m.declared_b_min_ = declared_b_min;
    m.declared_tau_max_ = declared_tau_max;
    return m;
}

UncertaintyModel UncertaintyModel::noise(NoiseRange b, NoiseRange tau, double hold_dt,
                                         std::uint64_t seed, double declared_b_min,
                                         double declared_tau_max) {
    if (!(b.lo <= b.hi) || !(tau.lo <= tau.hi)) {
        throw std::invalid_argument("noise range must satisfy lo <= hi");
    }
    UncertaintyModel m;
    m.kind_ = Kind::Noise;
    m.b_range_ = b;
    m.tau_range_ = tau;
    m.hold_dt_ = hold_dt;
    m.seed_ = seed;
    m.declared_b_min_ = declared_b_min;
    m.declared_tau_max_ = declared_tau_max;
    return m;
}

double UncertaintyModel::b(double t) const {
    if (kind_ == Kind::Noise) {
        return noise_sample(seed_, hold_index(t, hold_dt_), 1, b_range_.lo, b_range_.hi);
    }
    return b_wave_(t);
}

double UncertaintyModel::tau(double t) const {
    if (kind_ == Kind::Noise) {
        return noise_sample(seed_, hold_index(t, hold_dt_), 2, tau_range_.lo, tau_range_.hi);
    }
    return tau_wave_(t);
}

double UncertaintyModel::b_lower() const {
    return kind_ == Kind::Noise ? b_range_.lo : b_wave_.min_value();
}

double UncertaintyModel::b_upper() const {
    return kind_ == Kind::Noise ? b_range_.hi : b_wave_.max_value();
}

double UncertaintyModel::tau_upper_abs() const {
    if (kind_ == Kind::Noise) {
        return std::max(std::abs(tau_range_.lo), std::abs(tau_range_.hi));
    }
    return tau_wave_.max_abs();
}

void ManipulatorParams::validate() const {
    if (!(inertia > 0.0)) throw std::invalid_argument("inertia must be positive");
    if (!(damping >= 0.0)) throw std::invalid_argument("damping must be nonnegative");
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(gravity > 0.0)) throw std::invalid_argument("gravity must be positive");
    if (!(length > 0.0)) throw std::invalid_argument("length must be positive");
}

double accel_double_integrator(double t, double u, const UncertaintyModel& model) {
    return model.b(t) * u + model.tau(t);
}

double accel_manipulator(double x, double v, double u, const ManipulatorParams& p) {
    return p.b() * u - p.phi() * v - p.tau() * std::sin(x);
}

BoundsCheckResult bounds_check(const UncertaintyModel& model, double horizon, int samples) {
    if (samples < 2) throw std::invalid_argument("bounds check needs at least 2 samples");
    if (!(horizon > 0.0)) throw std::invalid_argument("bounds check horizon must be positive");

    BoundsCheckResult result;
    double min_b = model.b_lower();
    double max_abs_tau = model.tau_upper_abs();

    for (int i = 0; i < samples; ++i) {
        const double t = horizon * static_cast<double>(i) / static_cast<double>(samples - 1);
        const double bt = model.b(t);
        const double taut = std::abs(model.tau(t));
        min_b = std::min(min_b, bt);
        max_abs_tau = std::max(max_abs_tau, taut);
        if (bt < model.declared_b_min() || taut > model.declared_tau_max()) {
            result.violation_times.push_back(t);
        }
    }

    result.b_margin = min_b - model.declared_b_min();
    result.tau_margin = model.declared_tau_max() - max_abs_tau;
    result.pass = result.b_margin >= 0.0 && result.tau_margin >= 0.0;
    if (!result.pass && result.violation_times.empty()) {
        // the grid missed the analytic extremum; report where it occurs
        if (model.kind() == UncertaintyModel::Kind::Sinusoid) {
            if (model.tau_wave().max_abs() > model.declared_tau_max()) {
                result.violation_times.push_back(model.tau_wave().max_abs_time());
            }
            if (model.b_wave().min_value() < model.declared_b_min()) {
                result.violation_times.push_back(model.b_wave().min_value_time());
            }
        }
    }
    return result;
}

UncertaintyModel uncertainty_from_json(const nlohmann::ordered_json& j, std::uint64_t fallback_seed) {
    const std::string kind = j.at("kind").get<std::string>();
    const double declared_b_min = j.at("declared_b_min").get<double>();
    const double declared_tau_max = j.at("declared_tau_max").get<double>();
    if (!(declared_b_min > 0.0)) throw std::invalid_argument("declared_b_min must be positive");
    if (!(declared_tau_max >= 0.0)) throw std::invalid_argument("declared_tau_max must be nonnegative");

    if (kind == "constant") {
        return UncertaintyModel::constant(j.at("b").at("value").get<double>(),
                                          j.at("tau").at("value").get<double>(), declared_b_min,
                                          declared_tau_max);
    }
    if (kind == "sinusoid") {
        auto wave = [](const nlohmann::ordered_json& w) {
            UncertaintyModel::Wave out;
            out.offset = w.value("offset", 0.0);
            out.amplitude = w.value("amplitude", 0.0);
            out.frequency = w.value("frequency_rad_s", 1.0);
            out.phase = w.value("phase_rad", 0.0);
            return out;
        };
        return UncertaintyModel::sinusoid(wave(j.at("b")), wave(j.at("tau")), declared_b_min,
                                          declared_tau_max);
    }
    if (kind == "noise") {
        auto range = [](const nlohmann::ordered_json& r) {
            return UncertaintyModel::NoiseRange{r.at("min").get<double>(), r.at("max").get<double>()};
        };
        const std::uint64_t seed = j.contains("seed") ? j.at("seed").get<std::uint64_t>() : fallback_seed;
        const double hold_dt = j.value("hold_dt_seconds", 1e-3);
        return UncertaintyModel::noise(range(j.at("b")), range(j.at("tau")), hold_dt, seed,
                                       declared_b_min, declared_tau_max);
    }
    throw std::invalid_argument("unknown uncertainty kind: " + kind);
}

nlohmann::ordered_json uncertainty_to_json(const UncertaintyModel& model) {
    nlohmann::ordered_json out;
    switch (model.kind()) {
    case UncertaintyModel::Kind::Constant:
        out["kind"] = "constant";
        out["b"] = {{"value", model.b_wave().offset}};
        out["tau"] = {{"value", model.tau_wave().offset}};
        break;
    case UncertaintyModel::Kind::Sinusoid: {
        auto wave = [](const UncertaintyModel::Wave& w) {
            return nlohmann::ordered_json{{"offset", w.offset},
                                          {"amplitude", w.amplitude},
                                          {"frequency_rad_s", w.frequency},
                                          {"phase_rad", w.phase}};
        };
        out["kind"] = "sinusoid";
        out["b"] = wave(model.b_wave());
        out["tau"] = wave(model.tau_wave());
        break;
    }
    case UncertaintyModel::Kind::Noise:
        out["kind"] = "noise";
        out["b"] = {{"min", model.b_range().lo}, {"max", model.b_range().hi}};
        out["tau"] = {{"min", model.tau_range().lo}, {"max", model.tau_range().hi}};
        out["seed"] = model.seed();
        out["hold_dt_seconds"] = model.hold_dt();
        break;
    }
    out["declared_b_min"] = model.declared_b_min();
    out["declared_tau_max"] = model.declared_tau_max();
    return out;
}

ManipulatorParams manipulator_from_json(const nlohmann::ordered_json& j) {
    ManipulatorParams p;
    p.inertia = j.at("inertia_kg_m2").get<double>();
    p.damping = j.at("damping_n_m_s").get<double>();
    p.mass = j.at("mass_kg").get<double>();
    p.gravity = j.at("gravity_m_s2").get<double>();
    p.length = j.at("length_m").get<double>();
    p.validate();
    return p;
}

nlohmann::ordered_json manipulator_to_json(const ManipulatorParams& p) {
    return nlohmann::ordered_json{{"kind", "manipulator"},
                                  {"inertia_kg_m2", p.inertia},
                                  {"damping_n_m_s", p.damping},
                                  {"mass_kg", p.mass},
                                  {"gravity_m_s2", p.gravity},
                                  {"length_m", p.length}};
}

} // namespace ccsim
