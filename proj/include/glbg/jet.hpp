#pragma once

#include <cmath>
#include <vector>

namespace glbg {

// Second-order forward-mode jet: value, gradient and Hessian with respect to
// n seed variables. Hessian stored dense row-major.
struct Jet {
  double v = 0.0;
  int n = 0;
  std::vector<double> g;
  std::vector<double> h;

  Jet() = default;
  Jet(double value, int dim) : v(value), n(dim), g(dim, 0.0), h(dim * dim, 0.0) {}
  static Jet variable(int i, int dim, double value) {
    Jet j(value, dim);
    j.g[i] = 1.0;
    return j;
  }
  double hess(int i, int k) const { return h[i * n + k]; }
};

namespace jet_detail {
// f(a) given f(a.v), f'(a.v), f''(a.v)
inline Jet chain(const Jet& a, double f0, double f1, double f2) {
  Jet r(f0, a.n);
  for (int i = 0; i < a.n; ++i) r.g[i] = f1 * a.g[i];
  for (int i = 0; i < a.n; ++i)
    for (int k = 0; k < a.n; ++k) r.h[i * a.n + k] = f1 * a.h[i * a.n + k] + f2 * a.g[i] * a.g[k];
  return r;
}
}  // namespace jet_detail

inline Jet operator+(const Jet& a, const Jet& b) {
  Jet r = a;
  r.v += b.v;
  for (int i = 0; i < a.n; ++i) r.g[i] += b.g[i];
  for (std::size_t i = 0; i < r.h.size(); ++i) r.h[i] += b.h[i];
  return r;
}
inline Jet operator-(const Jet& a) {
  Jet r = a;
  r.v = -r.v;
  for (auto& x : r.g) x = -x;
  for (auto& x : r.h) x = -x;
  return r;
}
inline Jet operator-(const Jet& a, const Jet& b) { return a + (-b); }
inline Jet operator*(const Jet& a, const Jet& b) {
  Jet r(a.v * b.v, a.n);
  for (int i = 0; i < a.n; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
  for (int i = 0; i < a.n; ++i)
    for (int k = 0; k < a.n; ++k) {
      int ik = i * a.n + k;
      r.h[ik] = a.v * b.h[ik] + b.v * a.h[ik] + a.g[i] * b.g[k] + b.g[i] * a.g[k];
    }
  return r;
}
inline Jet inv(const Jet& a) {
  double x = 1.0 / a.v;
  return jet_detail::chain(a, x, -x * x, 2 * x * x * x);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * inv(b); }

inline Jet operator+(const Jet& a, double c) { Jet r = a; r.v += c; return r; }
inline Jet operator+(double c, const Jet& a) { return a + c; }
inline Jet operator-(const Jet& a, double c) { return a + (-c); }
inline Jet operator-(double c, const Jet& a) { return (-a) + c; }
inline Jet operator*(const Jet& a, double c) {
  Jet r = a;
  r.v *= c;
  for (auto& x : r.g) x *= c;
  for (auto& x : r.h) x *= c;
  return r;
}
inline Jet operator*(double c, const Jet& a) { return a * c; }
inline Jet operator/(const Jet& a, double c) { return a * (1.0 / c); }
inline Jet operator/(double c, const Jet& a) { return c * inv(a); }

inline Jet sin(const Jet& a) {
  return jet_detail::chain(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v));
}
inline Jet cos(const Jet& a) {
  return jet_detail::chain(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v));
}
inline Jet exp(const Jet& a) {
  double e = std::exp(a.v);
  return jet_detail::chain(a, e, e, e);
}
inline Jet log(const Jet& a) {
  return jet_detail::chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
inline Jet sqrt(const Jet& a) {
  double s = std::sqrt(a.v);
  return jet_detail::chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
inline Jet tanh(const Jet& a) {
  double t = std::tanh(a.v);
  double d = 1 - t * t;
  return jet_detail::chain(a, t, d, -2 * t * d);
}

// Scalar overloads so generic observable bodies can call sin(x) etc. unqualified.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double tanh(double x) { return std::tanh(x); }

}  // namespace glbg
