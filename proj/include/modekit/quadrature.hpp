#pragma once

#include <vector>

namespace modekit {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (exact for polynomials of degree 2n-1).
QuadratureRule gauss_legendre(int n);

/// Gauss-Legendre rule mapped onto [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

}  // namespace modekit
