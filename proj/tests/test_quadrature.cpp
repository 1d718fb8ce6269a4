#include <cmath>

#include "doctest.h"

#include "modekit/error.hpp"
#include "modekit/quadrature.hpp"

using namespace modekit;

TEST_SUITE("quadrature") {

TEST_CASE("Gauss-Legendre integrates polynomials up to degree 2n-1 exactly") {
    for (int n : {1, 2, 5, 16, 64}) {
        const QuadratureRule r = gauss_legendre(n);
        for (int deg = 0; deg <= 2 * n - 1 && deg <= 40; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], deg);
            const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            CHECK(s == doctest::Approx(exact).epsilon(1e-12));
        }
    }
}

TEST_CASE("mapped rule integrates a Gaussian") {
    const QuadratureRule r = gauss_legendre(128, -8.0, 8.0);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::exp(-r.nodes[i] * r.nodes[i]);
    CHECK(s == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-13));
}

TEST_CASE("nodes are ascending and symmetric") {
    const QuadratureRule r = gauss_legendre(9);
    for (std::size_t i = 1; i < r.nodes.size(); ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) CHECK(r.nodes[i] == doctest::Approx(-r.nodes[8 - i]));
    CHECK_THROWS_AS(gauss_legendre(0), RangeError);
}

}
