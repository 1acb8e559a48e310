#include "glbg/field.hpp"

#include <cmath>
#include <string>

#include "glbg/error.hpp"
#include "glbg/stats.hpp"

namespace glbg {

TorusField::TorusField(std::vector<double> values) : v_(std::move(values)) {
  if (v_.size() < 2) throw InvalidArgument("torus needs N >= 2");
}

double TorusField::mean() const { return pairwise_sum(v_) / static_cast<double>(v_.size()); }

nlohmann::json TorusField::to_json() const {
  return {{"N", N()}, {"m", mean()}, {"values", v_}};
}

TorusField TorusField::from_json(const nlohmann::json& j) {
  TorusField f(j.at("values").get<std::vector<double>>());
  if (j.contains("N") && j.at("N").get<int>() != f.N())
    throw InvalidArgument("field JSON: N does not match values");
  return f;
}

LocalField::LocalField(int ell, std::vector<double> values) : ell_(ell), v_(std::move(values)) {
  if (ell < 1) throw InvalidArgument("block radius must be >= 1");
  if (static_cast<int>(v_.size()) != 2 * ell)
    throw InvalidArgument("local field needs exactly 2*ell values");
}

double LocalField::at(long x) const {
  if (x < -ell_ || x > ell_ - 1)
    throw InvalidArgument("site " + std::to_string(x) + " outside the block");
  return v_[static_cast<std::size_t>(x + ell_)];
}

double LocalField::mean() const { return pairwise_sum(v_) / static_cast<double>(v_.size()); }

nlohmann::json LocalField::to_json() const {
  return {{"N", size()}, {"ell", ell_}, {"m", mean()}, {"values", v_}};
}

LocalField LocalField::from_json(const nlohmann::json& j) {
  return LocalField(j.at("ell").get<int>(), j.at("values").get<std::vector<double>>());
}

HeightField::HeightField(double m, std::vector<double> values) : m_(m), v_(std::move(values)) {
  if (v_.size() < 2) throw InvalidArgument("torus needs N >= 2");
}

double HeightField::at(long x) const {
  long n = N();
  long r = (x - 1) % n;
  if (r < 0) r += n;
  long wraps = (x - 1 - r) / n;
  return v_[static_cast<std::size_t>(r)] + static_cast<double>(wraps) * static_cast<double>(n) * m_;
}

nlohmann::json HeightField::to_json() const { return {{"N", N()}, {"m", m_}, {"values", v_}}; }

HeightField HeightField::from_json(const nlohmann::json& j) {
  return HeightField(j.at("m").get<double>(), j.at("values").get<std::vector<double>>());
}

TorusField eta_from_phi(const HeightField& phi) {
  std::vector<double> e(phi.N());
  for (int x = 1; x <= phi.N(); ++x) e[x - 1] = phi.at(x + 1) - phi.at(x);
  return TorusField(std::move(e));
}

HeightField phi_from_eta(const TorusField& eta, double phi0) {
  std::vector<double> p(eta.N());
  p[0] = phi0;
  for (int x = 1; x < eta.N(); ++x) p[x] = p[x - 1] + eta.at(x);
  return HeightField(eta.mean(), std::move(p));
}

double hamiltonian_phi(const HeightField& phi, const Potential& pot) {
  std::vector<double> terms(phi.N());
  for (int x = 1; x <= phi.N(); ++x) terms[x - 1] = pot.v(phi.at(x + 1) - phi.at(x));
  return pairwise_sum(terms);
}

double hamiltonian_eta(const TorusField& eta, const Potential& pot) {
  std::vector<double> terms(eta.N());
  for (int i = 0; i < eta.N(); ++i) terms[i] = pot.v(eta.values()[i]);
  return pairwise_sum(terms);
}

double block_average(const TorusField& eta, long x, int ell) {
  if (ell < 1 || 2 * ell > eta.N()) throw InvalidArgument("block larger than torus");
  double s = 0.0;
  for (long y = -ell; y < ell; ++y) s += eta.at(x + y);
  return s / (2.0 * ell);
}

double block_average(const LocalField& eta, long x, int ell) {
  if (x != 0 || ell != eta.ell())
    throw InvalidArgument("local block average needs x=0 and ell=field.ell");
  return eta.mean();
}

TorusField shift(const TorusField& eta, long k) {
  std::vector<double> v(eta.N());
  for (int x = 1; x <= eta.N(); ++x) v[x - 1] = eta.at(x + k);
  return TorusField(std::move(v));
}

std::vector<double> grad(const std::vector<double>& g) {
  std::size_t n = g.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = g[(i + 1) % n] - g[i];
  return r;
}

std::vector<double> grad_star(const std::vector<double>& g) {
  std::size_t n = g.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = g[(i + n - 1) % n] - g[i];
  return r;
}

std::vector<double> grad_star_local(const std::vector<double>& g) {
  if (g.size() < 2) throw InvalidArgument("grad_star_local needs at least two sites");
  std::vector<double> r(g.size() - 1);
  for (std::size_t i = 1; i < g.size(); ++i) r[i - 1] = g[i - 1] - g[i];
  return r;
}

}  // namespace glbg
