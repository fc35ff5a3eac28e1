#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ccsim/saturation.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace ccsim;

TEST_CASE("signed_power basics") {
    CHECK(signed_power(0.0, 1.5) == 0.0);
    CHECK(signed_power(0.05, 1.5) == doctest::Approx(0.011180339887498949).epsilon(1e-14));
    CHECK(signed_power(-2.0, 2.0) == doctest::Approx(-4.0).epsilon(1e-15));
}

TEST_CASE("signed_power is odd and monotone on a grid") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> gamma_dist(0.2, 4.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double gamma = gamma_dist(rng);
        double prev = -std::numeric_limits<double>::infinity();
        for (int i = -100; i <= 100; ++i) {
            const double x = 0.07 * i;
            const double y = signed_power(x, gamma);
            CHECK(y == -signed_power(-x, gamma));
            CHECK(y >= prev);
            prev = y;
        }
    }
}

TEST_CASE("sigma branch values and continuity") {
    CHECK(sigma(0.0, 0.1, 1.5) == 0.0);
    CHECK(sigma(0.1, 0.1, 1.5) == doctest::Approx(0.031622776601683791).epsilon(1e-14));
    CHECK(sigma(0.05, 0.1, 1.5) == doctest::Approx(0.011180339887498949).epsilon(1e-14));
    CHECK(sigma(5.0, 0.1, 1.5) == sigma(0.1, 0.1, 1.5));
    CHECK(sigma(-5.0, 0.1, 1.5) == -sigma(0.1, 0.1, 1.5));

    // interior formula agrees with the clipped branch at the breakpoint
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> z_dist(0.05, 1.0);
    std::uniform_real_distribution<double> g_dist(1.05, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double z = z_dist(rng);
        const double gamma = g_dist(rng);
        const double lambda = std::pow(z, gamma);
        CHECK(std::abs(signed_power(z, gamma) - lambda) <= 1e-12 * std::max(1.0, lambda));

        // approach from inside: difference shrinks with the offset
        const double big = std::abs(sigma(z - 1e-6, z, gamma) - sigma(z, z, gamma));
        const double small = std::abs(sigma(z - 1e-9, z, gamma) - sigma(z, z, gamma));
        const double slope = gamma * std::pow(z, gamma - 1.0);
        CHECK(big <= 10.0 * slope * 1e-6);
        CHECK(small <= 10.0 * slope * 1e-9);
        CHECK(small <= big);
    }
}

TEST_CASE("sigma is odd and bounded on a dense grid") {
    std::mt19937 rng(13);
    std::uniform_real_distribution<double> z_dist(0.05, 1.0);
    std::uniform_real_distribution<double> g_dist(1.05, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double z = z_dist(rng);
        const double gamma = g_dist(rng);
        const double lambda = std::pow(z, gamma);
        for (int i = -500; i <= 500; ++i) {
            const double e = 10.0 * z * i / 500.0;
            CHECK(sigma(e, z, gamma) == -sigma(-e, z, gamma));
            CHECK(std::abs(sigma(e, z, gamma)) <= lambda);
        }
    }
}

TEST_CASE("tanh_reference values") {
    CHECK(tanh_reference(0.0, 0.5, 0.9) == 0.0);
    CHECK(tanh_reference(10.0, 0.5, 0.9) == doctest::Approx(-0.89997309879270304).epsilon(1e-14));
    CHECK(tanh_reference(-10.0, 0.5, 0.9) == -tanh_reference(10.0, 0.5, 0.9));
}

TEST_CASE("tanh_reference stays strictly inside the band and decreases") {
    const double k = 0.5, m = 0.9;
    double prev = m;
    for (double eta : {-1e18, -1e6, -100.0, -1.0, 0.0, 1.0, 100.0, 1e6, 1e18}) {
        const double r = tanh_reference(eta, k, m);
        CHECK(std::abs(r) < m);
        CHECK(r <= prev);
        prev = r;
    }
}

TEST_CASE("varrho breakpoints for k=0.5, m=0.4") {
    const double k = 0.5, m = 0.4;
    CHECK(varrho(0.0, k, m) == 0.0);
    CHECK(varrho(8.0 / 15.0, k, m) == doctest::Approx(4.0 / 15.0).epsilon(1e-14));
    CHECK(varrho(16.0 / 15.0, k, m) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(varrho(100.0, k, m) == 0.4);
    CHECK(varrho(-100.0, k, m) == -0.4);
}

TEST_CASE("varrho_derivative branch values") {
    const double k = 0.5, m = 0.4;
    CHECK(varrho_derivative(0.0, k, m) == k);
    CHECK(varrho_derivative(16.0 / 15.0, k, m) == 0.0);
    CHECK(varrho_derivative(5.0, k, m) == 0.0);
    // quadratic branch meets the linear slope at the inner breakpoint
    const double c1 = 2.0 * m / (3.0 * k);
    CHECK(2.0 * k - 3.0 / (2.0 * m) * k * k * c1 == doctest::Approx(k).epsilon(1e-14));
}

TEST_CASE("varrho branch formulas agree at every breakpoint") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double k = dist(rng);
        const double m = dist(rng);
        const double c1 = 2.0 * m / (3.0 * k);
        const double c2 = 2.0 * c1;
        auto quad_pos = [&](double s) { return 2.0 * k * s - 3.0 / (4.0 * m) * k * k * s * s - m / 3.0; };
        auto quad_neg = [&](double s) { return 2.0 * k * s + 3.0 / (4.0 * m) * k * k * s * s + m / 3.0; };
        CHECK(std::abs(k * c1 - quad_pos(c1)) <= 1e-12);
        CHECK(std::abs(quad_pos(c2) - m) <= 1e-12);
        CHECK(std::abs(k * -c1 - quad_neg(-c1)) <= 1e-12);
        CHECK(std::abs(quad_neg(-c2) + m) <= 1e-12);
        // derivative continuity
        CHECK(std::abs(varrho_derivative(std::nextafter(c1, 2.0 * c2), k, m) - k) <= 1e-9 * k);
        CHECK(std::abs(varrho_derivative(std::nextafter(c2, 0.0), k, m)) <= 1e-9 * k);
    }
}

TEST_CASE("varrho bounded, odd, with derivative in [0, k]") {
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double k = dist(rng);
        const double m = dist(rng);
        const double c2 = 4.0 * m / (3.0 * k);
        for (int i = -400; i <= 400; ++i) {
            const double s = 2.0 * c2 * i / 400.0;
            CHECK(std::abs(varrho(s, k, m)) <= m);
            CHECK(varrho(s, k, m) == -varrho(-s, k, m));
            const double d = varrho_derivative(s, k, m);
            CHECK(d >= 0.0);
            CHECK(d <= k);
        }
    }
}

TEST_CASE("varrho finite differences match the analytic derivative") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(0.1, 3.0);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const double k = dist(rng);
        const double m = dist(rng);
        const double c1 = 2.0 * m / (3.0 * k);
        const double c2 = 2.0 * c1;
        const double breakpoints[] = {-c2, -c1, c1, c2};
        for (int i = -300; i <= 300; ++i) {
            const double s = 1.8 * c2 * i / 300.0;
            bool near_kink = false;
            for (double b : breakpoints) {
                if (std::abs(s - b) < 10.0 * h) near_kink = true;
            }
            if (near_kink) continue;  // second derivative jumps there
            const double fd = (varrho(s + h, k, m) - varrho(s - h, k, m)) / (2.0 * h);
            CHECK(std::abs(fd - varrho_derivative(s, k, m)) <= 1e-6);
        }
    }
}

TEST_CASE("SatParams validation") {
    SatParams good{0.9, 0.5, 0.1, 1.5};
    CHECK_NOTHROW(good.validate());
    CHECK(good.lambda() == doctest::Approx(0.031622776601683791).epsilon(1e-14));
    CHECK_THROWS_AS((SatParams{0.0, 0.5, 0.1, 1.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SatParams{0.9, -0.5, 0.1, 1.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SatParams{0.9, 0.5, 0.0, 1.5}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((SatParams{0.9, 0.5, 0.1, 1.0}.validate()), std::invalid_argument);
}
