#include "ccsim/saturation.hpp"

#include <algorithm>
#include <cmath>

namespace ccsim {

double SatParams::lambda() const {
    return std::pow(z, gamma);
}

void SatParams::validate() const {
    if (!(m > 0.0)) throw std::invalid_argument("saturation level m must be positive");
    if (!(k > 0.0)) throw std::invalid_argument("slope gain k must be positive");
    if (!(z > 0.0)) throw std::invalid_argument("error threshold z must be positive");
    if (!(gamma > 1.0)) throw std::invalid_argument("power exponent gamma must exceed 1");
}

double signed_power(double x, double gamma) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(x), gamma), x);
}

double sigma(double e, double z, double gamma) {
    const double lambda = std::pow(z, gamma);
    if (e >= z) return lambda;
    if (e <= -z) return -lambda;
    return signed_power(e, gamma);
}

double bounded_tanh(double arg, double m) {
    // Large arguments would round tanh to exactly 1; the nudge keeps the
    // output strictly inside (-m, m).
    double r = -m * std::tanh(std::clamp(arg, -40.0, 40.0));
    if (r >= m) {
        r = std::nextafter(m, 0.0);
    } else if (r <= -m) {
        r = std::nextafter(-m, 0.0);
    }
    return r;
}

double tanh_reference(double eta, double k, double m) {
    return bounded_tanh(k * eta / m, m);
}

double varrho(double s, double k, double m) {
    const double c1 = 2.0 * m / (3.0 * k);
    const double c2 = 2.0 * c1;
    const double a = std::abs(s);
    double value;
    if (a >= c2) {
        value = m;
    } else if (a >= c1) {
        // the blend tops out at m with zero slope; the min trims rounding spill
        value = std::min(2.0 * k * a - 3.0 / (4.0 * m) * k * k * a * a - m / 3.0, m);
    } else {
        value = k * a;
    }
    return std::copysign(value, s);
}

double varrho_derivative(double s, double k, double m) {
    const double c1 = 2.0 * m / (3.0 * k);
    const double c2 = 2.0 * c1;
    const double a = std::abs(s);
    if (a >= c2) return 0.0;
    if (a <= c1) return k;
    return 2.0 * k - 3.0 / (2.0 * m) * k * k * a;
}

} // namespace ccsim
