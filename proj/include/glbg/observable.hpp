#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glbg/field.hpp"
#include "glbg/jet.hpp"

namespace glbg {

// Local function f(eta(lo..hi)). The body is a generic callable
// `T f(const T* w)` with w[i] = eta(lo+i), instantiated for double and Jet, so
// partials come from forward-mode differentiation of the same code.
class Observable {
 public:
  using DoubleFn = std::function<double(const double*)>;
  using JetFn = std::function<Jet(const Jet*)>;

  template <class F>
  static Observable make(std::string name, int lo, int hi, F body) {
    return Observable(std::move(name), lo, hi,
                      [body](const double* w) { return body(w); },
                      [body](const Jet* w) { return body(w); });
  }

  int lo() const { return lo_; }
  int hi() const { return hi_; }
  int size() const { return hi_ - lo_ + 1; }
  const std::string& name() const { return name_; }

  double eval(std::span<const double> window) const { return fd_(window.data()); }
  Jet eval_jet(std::span<const double> window) const;
  double eval_at(const TorusField& eta, long x = 0) const;
  Jet jet_at(const TorusField& eta, long x = 0) const;
  double eval_at(const LocalField& eta) const;
  Jet jet_at(const LocalField& eta) const;

  // Pointwise product and affine combination; supports are merged.
  Observable operator*(const Observable& o) const;
  Observable combine(double a, const Observable& o, double b) const;
  Observable plus_constant(double c) const;

  std::optional<double> mean_zero_at;
  std::optional<int> poly_degree;

  // Same body at jet level, applied to arbitrary jet inputs (used for composition).
  const JetFn& jet_body() const { return fj_; }
  const DoubleFn& double_body() const { return fd_; }

 private:
  Observable(std::string name, int lo, int hi, DoubleFn fd, JetFn fj);
  std::string name_;
  int lo_, hi_;
  DoubleFn fd_;
  JetFn fj_;
};

// Shipped observables, addressed by id in configs:
//   eta0             eta(0) - u0
//   pair             (eta(0)-u0)(eta(1)-u0)
//   centered_square  (eta(0)-u0)^2 - c            (param "c", default 1)
//   block_mean       block average over [-ell, ell-1] (param "ell")
//   sin_pair         sin(eta(0)) * eta(1)
//   cos0             cos(eta(0))
//   mixed3           eta(-1) * exp(0.3 eta(0)) + eta(1)^2 / 2
Observable make_observable(const std::string& id, double u0, const nlohmann::json& params = {});

// Relative check of the forward-mode partials against central differences.
double partials_fd_error(const Observable& f, std::span<const double> window, double h = 1e-5);

}  // namespace glbg
