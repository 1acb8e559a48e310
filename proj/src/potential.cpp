#include "glbg/potential.hpp"

#include <cmath>
#include <utility>

#include "glbg/error.hpp"

namespace glbg {

namespace {

double log_cosh(double z) {
  double a = std::fabs(z);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

Potential Potential::quadratic() {
  Potential p;
  p.family_ = Family::Quadratic;
  p.name_ = "quadratic";
  p.c_minus_ = p.c_plus_ = 1.0;
  p.validate();
  return p;
}

Potential Potential::quadratic_cos(double a) {
  if (!(std::fabs(a) < 1.0)) throw InvalidArgument("quadratic_cos needs |a| < 1");
  Potential p;
  p.family_ = Family::Cosine;
  p.param_ = a;
  p.name_ = "quadratic_cos";
  p.c_minus_ = 1.0 - std::fabs(a);
  p.c_plus_ = 1.0 + std::fabs(a);
  p.validate();
  return p;
}

Potential Potential::quadratic_logcosh(double b) {
  if (!(b > -1.0)) throw InvalidArgument("quadratic_logcosh needs b > -1");
  Potential p;
  p.family_ = Family::LogCosh;
  p.param_ = b;
  p.name_ = "quadratic_logcosh";
  p.c_minus_ = std::min(1.0, 1.0 + b);
  p.c_plus_ = std::max(1.0, 1.0 + b);
  p.validate();
  return p;
}

Potential Potential::custom(Fn v, Fn dv, Fn ddv, double c_minus, double c_plus,
                            std::string name) {
  if (!(c_minus > 0.0) || !(c_plus >= c_minus))
    throw InvalidArgument("custom potential needs 0 < c_minus <= c_plus");
  Potential p;
  p.family_ = Family::Custom;
  p.v_ = std::move(v);
  p.dv_ = std::move(dv);
  p.ddv_ = std::move(ddv);
  p.c_minus_ = c_minus;
  p.c_plus_ = c_plus;
  p.name_ = std::move(name);
  p.validate();
  return p;
}

Potential Potential::from_json(const nlohmann::json& j) {
  std::string kind = j.value("kind", std::string("quadratic"));
  if (kind == "quadratic") return quadratic();
  if (kind == "quadratic_cos") return quadratic_cos(j.at("a").get<double>());
  if (kind == "quadratic_logcosh") return quadratic_logcosh(j.at("b").get<double>());
  throw InvalidArgument("unknown potential kind: " + kind);
}

nlohmann::json Potential::to_json() const {
  switch (family_) {
    case Family::Quadratic: return {{"kind", "quadratic"}};
    case Family::Cosine: return {{"kind", "quadratic_cos"}, {"a", param_}};
    case Family::LogCosh: return {{"kind", "quadratic_logcosh"}, {"b", param_}};
    default: return {{"kind", name_}, {"c_minus", c_minus_}, {"c_plus", c_plus_}};
  }
}

double Potential::v(double z) const {
  switch (family_) {
    case Family::Quadratic: return 0.5 * z * z;
    case Family::Cosine: return 0.5 * z * z + param_ * std::cos(z);
    case Family::LogCosh: return 0.5 * z * z + param_ * log_cosh(z);
    default: return v_(z);
  }
}

double Potential::dv(double z) const {
  switch (family_) {
    case Family::Quadratic: return z;
    case Family::Cosine: return z - param_ * std::sin(z);
    case Family::LogCosh: return z + param_ * std::tanh(z);
    default: return dv_(z);
  }
}

double Potential::ddv(double z) const {
  switch (family_) {
    case Family::Quadratic: return 1.0;
    case Family::Cosine: return 1.0 - param_ * std::cos(z);
    case Family::LogCosh: {
      double c = std::cosh(z);
      return 1.0 + param_ / (c * c);
    }
    default: return ddv_(z);
  }
}

void Potential::dv_many(const double* in, double* out, std::size_t n) const {
  switch (family_) {
    case Family::Quadratic:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i];
      return;
    case Family::Cosine:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] - param_ * std::sin(in[i]);
      return;
    case Family::LogCosh:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] + param_ * std::tanh(in[i]);
      return;
    default:
      for (std::size_t i = 0; i < n; ++i) out[i] = dv_(in[i]);
  }
}

void Potential::validate() const {
  const double h = 1e-5;
  for (int k = 0; k <= 2000; ++k) {
    double z = -10.0 + 1e-2 * k;
    double c = ddv(z);
    if (!(c >= c_minus_ - 1e-12 && c <= c_plus_ + 1e-12))
      throw InvalidArgument(name_ + ": V'' outside [c_minus, c_plus] at " + std::to_string(z));
    double fd1 = (v(z + h) - v(z - h)) / (2 * h);
    double d1 = dv(z);
    if (std::fabs(fd1 - d1) > 1e-6 * std::max(1.0, std::fabs(d1)))
      throw InvalidArgument(name_ + ": dv inconsistent with v at " + std::to_string(z));
    double fd2 = (dv(z + h) - dv(z - h)) / (2 * h);
    if (std::fabs(fd2 - c) > 1e-6 * std::max(1.0, std::fabs(c)))
      throw InvalidArgument(name_ + ": ddv inconsistent with dv at " + std::to_string(z));
  }
}

}  // namespace glbg
