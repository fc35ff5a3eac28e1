#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace ccsim {

// Time-dependent input gain b(t) and disturbance tau(t) with declared
// envelopes. Three shapes: constant, sinusoid, and seeded bounded noise
// held piecewise-constant over integrator steps.
class UncertaintyModel {
public:
    enum class Kind { Constant, Sinusoid, Noise };

    struct Wave {
        double offset = 0.0;
        double amplitude = 0.0;
        double frequency = 1.0;  // rad/s
        double phase = 0.0;      // rad

        double operator()(double t) const;
        double min_value() const { return offset - std::abs(amplitude); }
        double max_value() const { return offset + std::abs(amplitude); }
        double max_abs() const;
        // First t >= 0 at which |value| attains max_abs().
        double max_abs_time() const;
        // First t >= 0 at which the value attains min_value().
        double min_value_time() const;
    };

    struct NoiseRange {
        double lo = 0.0;
        double hi = 0.0;
    };

    static UncertaintyModel constant(double b, double tau, double declared_b_min,
                                     double declared_tau_max);
    static UncertaintyModel sinusoid(Wave b, Wave tau, double declared_b_min,
                                     double declared_tau_max);
    static UncertaintyModel noise(NoiseRange b, NoiseRange tau, double hold_dt, std::uint64_t seed,
                                  double declared_b_min, double declared_tau_max);

    Kind kind() const { return kind_; }
    double b(double t) const;
    double tau(double t) const;

    // Analytic envelopes of the realized signals (by construction).
    double b_lower() const;
    double b_upper() const;
    double tau_upper_abs() const;

    double declared_b_min() const { return declared_b_min_; }
    double declared_tau_max() const { return declared_tau_max_; }

    double hold_dt() const { return hold_dt_; }
    void set_hold_dt(double dt) { hold_dt_ = dt; }
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    const Wave& b_wave() const { return b_wave_; }
    const Wave& tau_wave() const { return tau_wave_; }
    const NoiseRange& b_range() const { return b_range_; }
    const NoiseRange& tau_range() const { return tau_range_; }

private:
    Kind kind_ = Kind::Constant;
    Wave b_wave_;
    Wave tau_wave_;
    NoiseRange b_range_;
    NoiseRange tau_range_;
    double hold_dt_ = 1e-3;
    std::uint64_t seed_ = 0;
    double declared_b_min_ = 1.0;
    double declared_tau_max_ = 0.0;
};

// Single-link arm: the motor torque acts through the total inertia against
// viscous damping and gravity.
struct ManipulatorParams {
    double inertia = 1.0;  // kg m^2
    double damping = 0.0;  // N m s
    double mass = 1.0;     // kg
    double gravity = 9.81; // m/s^2
    double length = 1.0;   // m

    double b() const { return 1.0 / inertia; }
    double phi() const { return damping / inertia; }
    double tau() const { return mass * gravity * length / inertia; }
    void validate() const;
};

// v_dot = b(t) u + tau(t)
double accel_double_integrator(double t, double u, const UncertaintyModel& model);

// v_dot = b u - phi v - tau sin(x)
double accel_manipulator(double x, double v, double u, const ManipulatorParams& p);

struct BoundsCheckResult {
    bool pass = true;
    double b_margin = 0.0;    // min b(t) - declared_b_min
    double tau_margin = 0.0;  // declared_tau_max - max |tau(t)|
    std::vector<double> violation_times;
};

// Samples b/tau on a uniform grid over [0, horizon] and folds in the
// analytic extrema of the model kind.
BoundsCheckResult bounds_check(const UncertaintyModel& model, double horizon, int samples);

UncertaintyModel uncertainty_from_json(const nlohmann::ordered_json& j, std::uint64_t fallback_seed);
nlohmann::ordered_json uncertainty_to_json(const UncertaintyModel& model);
ManipulatorParams manipulator_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json manipulator_to_json(const ManipulatorParams& p);

} // namespace ccsim
