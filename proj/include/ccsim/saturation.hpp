#pragma once

#include <stdexcept>

namespace ccsim {

// Parameters shared by the saturated reference/control nonlinearities.
// lambda is always derived from z and gamma, never stored.
struct SatParams {
    double m = 1.0;      // saturation level (velocity units)
    double k = 1.0;      // slope gain (1/s)
    double z = 0.1;      // tracking-error threshold (velocity units)
    double gamma = 1.5;  // power exponent, > 1

    double lambda() const;
    void validate() const;  // throws std::invalid_argument
};

// |x|^gamma * sgn(x), with sgn(0) = 0.
double signed_power(double x, double gamma);

// Power-law saturation: clips signed_power(e, gamma) at +/- z^gamma.
double sigma(double e, double z, double gamma);

// -m * tanh(arg). Output is strictly inside (-m, m) for finite arg.
double bounded_tanh(double arg, double m);

// -m * tanh(k * eta / m). Output is strictly inside (-m, m) for finite eta.
double tanh_reference(double eta, double k, double m);

// Piecewise C^1 saturation: linear slope k up to 2m/(3k), quadratic
// blend up to 4m/(3k), constant +/- m beyond. Odd in s.
double varrho(double s, double k, double m);

// Analytic derivative of varrho; ranges over [0, k].
double varrho_derivative(double s, double k, double m);

} // namespace ccsim
