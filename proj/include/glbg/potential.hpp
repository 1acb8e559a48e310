#pragma once

#include <functional>
#include <string>

#include <nlohmann/json.hpp>

namespace glbg {

// Single-bond energy V with V'' in [c_minus, c_plus]. The closed-form families
// have an inlined batch path for V'; `custom` goes through std::function.
class Potential {
 public:
  enum class Family { Quadratic, Cosine, LogCosh, Custom };
  using Fn = std::function<double(double)>;

  static Potential quadratic();
  // zeta^2/2 + a cos(zeta), |a| < 1
  static Potential quadratic_cos(double a);
  // zeta^2/2 + b log cosh(zeta), b > -1
  static Potential quadratic_logcosh(double b);
  static Potential custom(Fn v, Fn dv, Fn ddv, double c_minus, double c_plus,
                          std::string name = "custom");
  static Potential from_json(const nlohmann::json& j);

  double v(double z) const;
  double dv(double z) const;
  double ddv(double z) const;
  void dv_many(const double* in, double* out, std::size_t n) const;

  double c_minus() const { return c_minus_; }
  double c_plus() const { return c_plus_; }
  bool is_quadratic() const { return family_ == Family::Quadratic; }
  Family family() const { return family_; }
  double param() const { return param_; }
  const std::string& name() const { return name_; }
  nlohmann::json to_json() const;

 private:
  Potential() = default;
  void validate() const;

  Family family_ = Family::Quadratic;
  double param_ = 0.0;
  double c_minus_ = 1.0;
  double c_plus_ = 1.0;
  std::string name_;
  Fn v_, dv_, ddv_;
};

struct Asymmetry {
  explicit Asymmetry(double g = 0.0) : gamma(g), p(0.5 + g), q(0.5 - g) {}
  double gamma;
  double p;
  double q;
};

}  // namespace glbg
