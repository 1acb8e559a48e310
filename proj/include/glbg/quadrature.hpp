#pragma once

#include <vector>

namespace glbg {

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

// 80-point Gauss-Legendre on [a, b].
QuadRule gauss_legendre(double a, double b);
// Probabilists' Gauss-Hermite: E[g(Z)], Z ~ N(0,1), weights sum to 1.
QuadRule gauss_hermite(int n);

}  // namespace glbg
