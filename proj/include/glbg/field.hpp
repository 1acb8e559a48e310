#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "glbg/potential.hpp"

namespace glbg {

// Configuration on the torus T_N with labels 1..N. values()[i] holds
// label i+1; at() accepts any integer label and wraps cyclically.
class TorusField {
 public:
  TorusField() = default;
  explicit TorusField(std::vector<double> values);

  int N() const { return static_cast<int>(v_.size()); }
  double at(long x) const { return v_[index(x)]; }
  std::size_t index(long x) const {
    long n = static_cast<long>(v_.size());
    long r = (x - 1) % n;
    return static_cast<std::size_t>(r < 0 ? r + n : r);
  }
  const std::vector<double>& values() const { return v_; }
  double mean() const;

  nlohmann::json to_json() const;
  static TorusField from_json(const nlohmann::json& j);

 private:
  std::vector<double> v_;
};

// Configuration on the block [-ell, ell-1]; values()[i] holds label i-ell.
class LocalField {
 public:
  LocalField() = default;
  LocalField(int ell, std::vector<double> values);

  int ell() const { return ell_; }
  int size() const { return 2 * ell_; }
  double at(long x) const;
  const std::vector<double>& values() const { return v_; }
  double mean() const;

  nlohmann::json to_json() const;
  static LocalField from_json(const nlohmann::json& j);

 private:
  int ell_ = 0;
  std::vector<double> v_;
};

// Heights phi(1..N) with phi(x+N) = phi(x) + N*m.
class HeightField {
 public:
  HeightField(double m, std::vector<double> values);

  int N() const { return static_cast<int>(v_.size()); }
  double m() const { return m_; }
  double at(long x) const;
  const std::vector<double>& values() const { return v_; }

  nlohmann::json to_json() const;
  static HeightField from_json(const nlohmann::json& j);

 private:
  double m_;
  std::vector<double> v_;
};

TorusField eta_from_phi(const HeightField& phi);
HeightField phi_from_eta(const TorusField& eta, double phi0);

double hamiltonian_phi(const HeightField& phi, const Potential& pot);
double hamiltonian_eta(const TorusField& eta, const Potential& pot);

double block_average(const TorusField& eta, long x, int ell);
double block_average(const LocalField& eta, long x, int ell);

// (tau_k eta)(x) = eta(x+k)
TorusField shift(const TorusField& eta, long k);

// Torus versions take and return 0-based arrays for labels 1..N.
std::vector<double> grad(const std::vector<double>& g);
std::vector<double> grad_star(const std::vector<double>& g);
// On the block: input indexed by labels -ell..ell-1, output by -ell+1..ell-1.
std::vector<double> grad_star_local(const std::vector<double>& g);

}  // namespace glbg
