#include "glbg/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

namespace glbg {

QuadRule gauss_legendre(double a, double b) {
  using G = boost::math::quadrature::gauss<double, 80>;
  const auto& ab = G::abscissa();
  const auto& wt = G::weights();
  QuadRule r;
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (std::size_t i = 0; i < ab.size(); ++i) {
    if (ab[i] == 0.0) {
      r.x.push_back(c);
      r.w.push_back(h * wt[i]);
      continue;
    }
    r.x.push_back(c - h * ab[i]);
    r.w.push_back(h * wt[i]);
    r.x.push_back(c + h * ab[i]);
    r.w.push_back(h * wt[i]);
  }
  return r;
}

QuadRule gauss_hermite(int n) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  QuadRule r;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(es.eigenvalues()(i));
    double v = es.eigenvectors()(0, i);
    r.w.push_back(v * v);
  }
  cache[n] = r;
  return r;
}

}  // namespace glbg
