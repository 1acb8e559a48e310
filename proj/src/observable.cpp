#include "glbg/observable.hpp"

#include <algorithm>
#include <cmath>

#include "glbg/error.hpp"

namespace glbg {

Observable::Observable(std::string name, int lo, int hi, DoubleFn fd, JetFn fj)
    : name_(std::move(name)), lo_(lo), hi_(hi), fd_(std::move(fd)), fj_(std::move(fj)) {
  if (hi < lo) throw InvalidArgument("observable support is empty");
}

Jet Observable::eval_jet(std::span<const double> window) const {
  int n = size();
  std::vector<Jet> w;
  w.reserve(n);
  for (int i = 0; i < n; ++i) w.push_back(Jet::variable(i, n, window[i]));
  return fj_(w.data());
}

double Observable::eval_at(const TorusField& eta, long x) const {
  std::vector<double> w(size());
  for (int i = 0; i < size(); ++i) w[i] = eta.at(x + lo_ + i);
  return fd_(w.data());
}

Jet Observable::jet_at(const TorusField& eta, long x) const {
  if (size() > eta.N()) throw InvalidArgument("observable support wider than the torus");
  std::vector<double> w(size());
  for (int i = 0; i < size(); ++i) w[i] = eta.at(x + lo_ + i);
  return eval_jet(w);
}

double Observable::eval_at(const LocalField& eta) const {
  std::vector<double> w(size());
  for (int i = 0; i < size(); ++i) w[i] = eta.at(lo_ + i);
  return fd_(w.data());
}

Jet Observable::jet_at(const LocalField& eta) const {
  std::vector<double> w(size());
  for (int i = 0; i < size(); ++i) w[i] = eta.at(lo_ + i);
  return eval_jet(w);
}

Observable Observable::operator*(const Observable& o) const {
  int lo = std::min(lo_, o.lo_), hi = std::max(hi_, o.hi_);
  int da = lo_ - lo, db = o.lo_ - lo;
  auto fa = fd_, fb = o.fd_;
  auto ja = fj_, jb = o.fj_;
  Observable r(name_ + "*" + o.name_, lo, hi,
               [=](const double* w) { return fa(w + da) * fb(w + db); },
               [=](const Jet* w) { return ja(w + da) * jb(w + db); });
  return r;
}

Observable Observable::combine(double a, const Observable& o, double b) const {
  int lo = std::min(lo_, o.lo_), hi = std::max(hi_, o.hi_);
  int da = lo_ - lo, db = o.lo_ - lo;
  auto fa = fd_, fb = o.fd_;
  auto ja = fj_, jb = o.fj_;
  return Observable(name_ + "+" + o.name_, lo, hi,
                    [=](const double* w) { return a * fa(w + da) + b * fb(w + db); },
                    [=](const Jet* w) { return a * ja(w + da) + b * jb(w + db); });
}

Observable Observable::plus_constant(double c) const {
  auto fa = fd_;
  auto ja = fj_;
  return Observable(name_ + "+c", lo_, hi_, [=](const double* w) { return fa(w) + c; },
                    [=](const Jet* w) { return ja(w) + c; });
}

Observable make_observable(const std::string& id, double u0, const nlohmann::json& params_in) {
  const nlohmann::json params = params_in.is_object() ? params_in : nlohmann::json::object();
  if (id == "eta0") {
    auto f = Observable::make("eta0", 0, 0, [u0](const auto* w) { return w[0] - u0; });
    f.poly_degree = 1;
    f.mean_zero_at = u0;
    return f;
  }
  if (id == "pair") {
    auto f = Observable::make("pair", 0, 1,
                              [u0](const auto* w) { return (w[0] - u0) * (w[1] - u0); });
    f.poly_degree = 2;
    f.mean_zero_at = u0;
    return f;
  }
  if (id == "centered_square") {
    double c = params.value("c", 1.0);
    auto f = Observable::make("centered_square", 0, 0, [u0, c](const auto* w) {
      return (w[0] - u0) * (w[0] - u0) - c;
    });
    f.poly_degree = 2;
    return f;
  }
  if (id == "block_mean") {
    int ell = params.value("ell", 1);
    if (ell < 1) throw InvalidArgument("block_mean needs ell >= 1");
    int n = 2 * ell;
    auto f = Observable::make("block_mean", -ell, ell - 1, [n](const auto* w) {
      auto s = w[0];
      for (int i = 1; i < n; ++i) s = s + w[i];
      return s / static_cast<double>(n);
    });
    f.poly_degree = 1;
    return f;
  }
  if (id == "sin_pair")
    return Observable::make("sin_pair", 0, 1, [](const auto* w) { return sin(w[0]) * w[1]; });
  if (id == "cos0") return Observable::make("cos0", 0, 0, [](const auto* w) { return cos(w[0]); });
  if (id == "mixed3")
    return Observable::make("mixed3", -1, 1, [](const auto* w) {
      return w[0] * exp(0.3 * w[1]) + 0.5 * w[2] * w[2];
    });
  throw InvalidArgument("unknown observable id: " + id);
}

double partials_fd_error(const Observable& f, std::span<const double> window, double h) {
  int n = f.size();
  Jet j = f.eval_jet(window);
  std::vector<double> w(window.begin(), window.end());
  double worst = 0.0;
  auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); };
  for (int i = 0; i < n; ++i) {
    double wi = w[i];
    w[i] = wi + h;
    double fp = f.eval(w);
    Jet jp = f.eval_jet(w);
    w[i] = wi - h;
    double fm = f.eval(w);
    Jet jm = f.eval_jet(w);
    w[i] = wi;
    worst = std::max(worst, rel((fp - fm) / (2 * h), j.g[i]));
    for (int k = 0; k < n; ++k) worst = std::max(worst, rel((jp.g[k] - jm.g[k]) / (2 * h), j.hess(i, k)));
  }
  return worst;
}

}  // namespace glbg
