#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glbg/dynamics.hpp"
#include "glbg/eoe.hpp"
#include "glbg/field.hpp"
#include "glbg/observable.hpp"
#include "glbg/potential.hpp"
#include "glbg/stats.hpp"

namespace glbg {

// Test function h(s, x) on [0, T] x T_N, s in diffusive time.
//   constant:    h = amplitude
//   sinusoidal:  h = amplitude * cos(2 pi (k x / N + omega s) + phase)
//   tabulated:   rows of N site values on a uniform grid of [0, T], piecewise
//                constant in s (a single row means time-independent)
struct WeightSpec {
  std::string kind = "constant";
  double amplitude = 1.0;
  double k = 1.0;
  double omega = 0.0;
  double phase = 0.0;
  std::vector<std::vector<double>> table;

  double operator()(double s, long x, int N, double T) const;
  // int_0^T (1/N) sum_x |h(t,x)|^p dt by midpoint quadrature on `steps` cells.
  double lp_integral(int N, double T, double p, int steps = 2000) const;
  bool is_zero() const;
  nlohmann::json to_json() const;
  static WeightSpec from_json(const nlohmann::json& j);
};

struct BGConfig {
  int N = 128;
  std::vector<int> ells{4, 8, 16};
  int ell0 = 2;
  double T = 0.5;       // diffusive
  double p = 4.0;
  double p_prime = 6.0;
  double gamma = 0.0;
  bool weak_asymmetry = false;  // use gamma / sqrt(N)
  double u0 = 0.0;
  std::string observable = "pair";
  nlohmann::json observable_params = nlohmann::json::object();
  WeightSpec weight;
  int R = 500;
  long trajectory_offset = 0;  // first trajectory index, for split batches
  std::uint64_t seed = 1;
  double dt = 0.25;  // micro-time integration step
  int snapshots = 100;  // sup grid: equally spaced diffusive times in (0, T]
  std::string integrator = "auto";
  nlohmann::json potential = nlohmann::json{{"kind", "quadratic"}};
  std::string centering = "theorem";  // theorem: var/(2 ell + 1); block: var/(2 ell)
  std::string eoe_method = "analytic";  // conditional expectations in the diagnostics
  int bootstrap_reps = 400;
  double precondition_tol = 1e-6;
  int threads = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static BGConfig from_json(const nlohmann::json& j);  // missing keys keep defaults
  std::string hash() const;  // 16 hex digits
  double effective_gamma() const;
};

// FNV-1a of the compact JSON dump, 16 hex digits.
std::string json_hash(const nlohmann::json& j);

struct ResidualCoeffs {
  double u0 = 0.0;
  double f1 = 0.0;   // f~'(u0)
  double f2 = 0.0;   // f~''(u0)
  double var = 1.0;  // var(u0)
  // Denominator of the variance correction is 2 ell + shift: 1 as written in
  // the theorem, 0 gives the exact block variance and a mean-zero residual.
  int denom_shift = 1;
};

// f(tau_x eta) - 1/2 f''(u0) {(eta^(ell)(x) - u0)^2 - var/(2 ell + denom_shift)}.
double residual_field_second(const Observable& f, const TorusField& eta, long x, int ell,
                             const ResidualCoeffs& c);
// f(tau_x eta) - f'(u0) (eta^(ell)(x) - u0).
double residual_field_first(const Observable& f, const TorusField& eta, long x, int ell,
                            const ResidualCoeffs& c);
// E^{mu_u0} of the second-order residual: the 2 ell versus 2 ell + 1 offset.
double residual_second_mean(const ResidualCoeffs& c, int ell);

ResidualCoeffs residual_coeffs(const Observable& f, const Potential& pot, double u0);

struct MomentRow {
  int ell = 0;
  double estimate = 0.0;  // E[sup_t |I(t)|^p]^{1/p}
  double se = 0.0;        // bootstrap
  double env_rise = 0.0;  // first envelope branch (p-th power scale, times the h integral)
  double env_decay = 0.0;
  double envelope = 0.0;  // env_rise + env_decay
  double fitted = 0.0;    // (C_fit * envelope)^{1/p}, C_fit from the smallest ell
  bool dominated = true;  // estimate <= fitted + se
};

struct BGResult {
  std::string kind;  // bg2 | bg1 | one_block | two_block | iteration
  int order = 2;
  std::vector<MomentRow> rows;
  double c_fit = 0.0;   // constant fitted at the smallest ell
  double c_max = 0.0;   // smallest constant dominating every row
  double slope = 0.0;   // log estimate against log ell
  double slope_se = 0.0;
  double h_integral = 0.0;
  ResidualCoeffs coeffs;
  std::string integrator;
  double dt_micro = 0.0;
  std::string config_hash;
  nlohmann::json config;
  // sup_t |I(t)|^p per row and trajectory, trajectory index in `trajectories`.
  std::vector<std::vector<double>> sup_p;
  std::vector<long> trajectories;

  nlohmann::json to_json(bool with_samples = false) const;
  // config_hash,kind,order,ell,estimate,stderr,env_rise,env_decay,envelope,fitted,dominated
  void write_csv(std::ostream& os, bool header = true) const;
  // Repeats the estimate/bootstrap/envelope step from sup_p.
  void finalize(double p, int bootstrap_reps, std::uint64_t seed);
  // Nonincreasing over rows within one combined SE.
  bool nonincreasing() const;
};

// Merges trajectory batches of the same experiment; the estimate equals the
// one computed on the full batch.
BGResult merge_results(const BGResult& a, const BGResult& b, double p, int bootstrap_reps,
                       std::uint64_t seed);

// Per-site integrand r_x(eta). eval(e, r) gets e pointing at label 1 of a
// cyclically padded copy (e[i] valid for -reach <= i < N + reach) and writes
// r[0..N) for labels 1..N.
struct SiteIntegrand {
  std::string kind;
  int ell = 0;
  int reach = 0;
  std::function<void(const double* e, double* r)> eval;
};

// Runs R trajectories from mu_u0 and returns sup_t |int_0^t sum_x h r ds|^p
// for every integrand; trapezoid on the integration step, sup on the snapshot grid.
std::vector<std::vector<double>> run_integrands(const BGConfig& cfg,
                                                const std::vector<SiteIntegrand>& ints,
                                                std::string* integrator_used = nullptr,
                                                double* dt_used = nullptr);

BGResult bg_moment(const BGConfig& cfg, int order);
// Both orders on shared trajectories.
std::vector<BGResult> bg_moments(const BGConfig& cfg, const std::vector<int>& orders);

BGResult one_block_diag(const BGConfig& cfg);
// E[f | eta^(ell0)] - E[f | eta^(ell)] over cfg.ells; order from the vanishing of f~'(u0).
BGResult two_block_diag(const BGConfig& cfg);
struct IterationResult {
  MomentRow moment;  // time-integrated moment, envelope ell^{p/2} (order 2) or ell^p
  // ||E[f | eta^(ell)] - E[f | eta^(2 ell)]||_{L^p(mu_u0)} at one site, the
  // static difference whose decay in ell drives the iteration
  double static_norm = 0.0;
  double static_se = 0.0;
  std::string static_method;  // gauss-hermite | monte-carlo
};
IterationResult iteration_diag(const BGConfig& cfg, int ell);

struct TurnoverRow {
  int N = 0;
  int ell = 0;
  double estimate = 0.0, se = 0.0;
  double env_rise = 0.0, env_decay = 0.0;
};
struct TurnoverReport {
  std::vector<TurnoverRow> rows;
  bool nonincreasing = false;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& os) const;  // N,ell,estimate,stderr,env_rise,env_decay
};
int balancing_ell(int N);  // round(N^{3/4})
TurnoverReport turnover_scan(const BGConfig& base, const std::vector<int>& Ns);

// Time average of (1/N) sum_x r_x over one long run, with a batch-means SE.
MeanSE residual_time_average(const BGConfig& cfg, int ell, int order, double T_run, int batches = 20);

}  // namespace glbg
