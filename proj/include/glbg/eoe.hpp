#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "glbg/measures.hpp"
#include "glbg/observable.hpp"
#include "glbg/potential.hpp"

namespace glbg {

enum class EoEMethod { Analytic, MonteCarlo };
std::string to_string(EoEMethod m);
EoEMethod eoe_method_from_string(const std::string& s);

struct CondExpOptions {
  EoEMethod method = EoEMethod::Analytic;
  int grid_points = 33;        // MC grid over u0 +- 5 sd(block mean)
  long samples_per_point = 4000;
  std::uint64_t seed = 1;
  int threads = 0;
};

// m -> E^{mu_u0}[f | eta^(ell) = m] = E^{mu_{ell,m}}[f], with f read at block
// labels (its own window, placed at 0) inside [-ell, ell-1].
//
// Analytic (quadratic V only): given the block mean the window is Gaussian
// with mean m and covariance I - 11^T/(2 ell). Observables of polynomial
// degree <= 2 use the exact second-order formula; others use tensor
// Gauss-Hermite (window <= 4 sites). Values are served from a Chebyshev
// interpolant on u0 +- 10 sd and computed directly outside it.
//
// Monte Carlo: canonical sampling at each grid point (mean and SE);
// between grid points value() interpolates linearly.
class ConditionalExpectation {
 public:
  ConditionalExpectation(const Observable& f, const Potential& pot, int ell, double u0,
                         const CondExpOptions& opts = {});

  double operator()(double m) const { return value(m); }
  double value(double m) const;
  // Direct evaluation without the interpolant (analytic path only).
  double direct(double m) const;

  int ell() const { return ell_; }
  double u0() const { return u0_; }
  EoEMethod method() const { return opts_.method; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& grid_values() const { return gval_; }
  const std::vector<double>& grid_se() const { return gse_; }
  // sd of the block mean under mu_u0
  double block_sd() const { return sd_; }

 private:
  double gaussian_expect(double m) const;
  void build_chebyshev();

  Observable f_;
  Potential pot_;
  int ell_;
  double u0_;
  CondExpOptions opts_;
  double sd_ = 0.0;
  std::vector<double> grid_, gval_, gse_;
  // Chebyshev data on [a_, b_]
  double a_ = 0.0, b_ = 0.0;
  std::vector<double> cheb_;
  // cached Gaussian-conditioning ingredients
  std::vector<double> chol_;  // d x d square root of the window covariance
};

ConditionalExpectation cond_exp(const Observable& f, int ell, double u0, const Potential& pot,
                                const CondExpOptions& opts = {});

struct EoEValue {
  double norm = 0.0;
  double se = 0.0;
  std::string method;
};

struct EoEOptions {
  CondExpOptions cond;
  double precondition_tol = 1e-6;
  long law_samples = 40000;  // block-mean draws for the kernel-estimated law (non-quadratic V)
};

// L^p(mu_u0) norm of E[f | eta^(ell)] - 1/2 f''(u0) {(eta^(ell) - u0)^2 - var(u0)/(2 ell + 1)}.
// Requires f~(u0) = f~'(u0) = 0 (checked with tilde_derivs).
EoEValue eoe_residual_second(const Observable& f, int ell, double u0, double p,
                             const Potential& pot, const EoEOptions& opts = {});
// L^p(mu_u0) norm of E[f | eta^(ell)] - (eta^(ell) - u0) f~'(u0). Requires f~(u0) = 0.
EoEValue eoe_residual_first(const Observable& f, int ell, double u0, double p,
                            const Potential& pot, const EoEOptions& opts = {});

struct EoECurve {
  std::vector<int> ells;
  std::vector<double> norms;
  std::vector<double> se;
  std::string method;
  int order = 2;
  double p = 2.0;
  double slope = 0.0;
  double slope_se = 0.0;
  void validate() const;
  void write_csv(std::ostream& os) const;  // ell,norm,stderr,method
};

struct SlopeFit {
  double slope = 0.0;
  double se = 0.0;
};
// Least-squares slope of log norm against log ell.
SlopeFit scaling_exponent(const EoECurve& c);

EoECurve eoe_curve(const Observable& f, const std::vector<int>& ells, double u0, double p, int order,
                   const Potential& pot, const EoEOptions& opts = {});

struct CltRow {
  int ell = 0;
  double scaled_norm = 0.0;  // ||eta^(ell) - u0||_p * ell^{1/2}
  double scaled_norm_se = 0.0;
  double m4_ratio = 0.0;     // E X^4 / (E X^2)^2
  double m4_ratio_se = 0.0;
};
std::vector<CltRow> clt_block_check(const Potential& pot, double u0, const std::vector<int>& ells,
                                    double p, long samples, std::uint64_t seed);

}  // namespace glbg
