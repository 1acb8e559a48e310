#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glbg/noise.hpp"
#include "glbg/observable.hpp"
#include "glbg/stats.hpp"

namespace glbg {

// Continuous-time reversible chain on n states: Q_ij >= 0 off the diagonal,
// zero row sums, detailed balance pi_i Q_ij = pi_j Q_ji.
struct ReversibleChain {
  Eigen::MatrixXd Q;
  Eigen::VectorXd pi;
  std::vector<std::pair<int, int>> edges;  // i < j with Q_ij > 0

  int n() const { return static_cast<int>(pi.size()); }
  // Q_ij = c_ij / pi_i for symmetric conductances c.
  static ReversibleChain from_conductances(const Eigen::VectorXd& pi, const Eigen::MatrixXd& c);
  // Throws InvalidChain on a broken invariant.
  void validate(double tol = 1e-12) const;
  bool irreducible() const;
  std::string hash() const;
};

// Random connected graph on n in [n_min, n_max] states, conductances
// log-uniform in [0.1, 10], pi from normalized uniform(0.05, 1) weights.
ReversibleChain random_chain(NoiseStream& rng, int n_min = 2, int n_max = 8);
// Nearest-neighbour cycle with unit conductances and uniform pi.
ReversibleChain cycle_chain(int n);

double lp_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& pi, double p);
double pi_mean(const Eigen::VectorXd& f, const Eigen::VectorXd& pi);
// Per-state carre du champ Gamma(f)_i = 1/2 sum_j Q_ij (f_j - f_i)^2; the
// edge-gradient norm is ||Gamma(f)^{1/2}||_{L^p(pi)}.
Eigen::VectorXd edge_gamma(const ReversibleChain& c, const Eigen::VectorXd& f);
double edge_gradient_norm(const ReversibleChain& c, const Eigen::VectorXd& f, double p);

// Spectral functions of -Q through the sqrt(pi) similarity.
Eigen::MatrixXd sqrt_minus_generator(const ReversibleChain& c);
// Pseudo-inverse root: (-Q)^{-1/2} on mean-zero functions, zero on constants.
Eigen::MatrixXd inv_sqrt_minus_generator(const ReversibleChain& c);
// (I - Q)^{1/2}.
Eigen::MatrixXd sqrt_shifted_generator(const ReversibleChain& c);
// Eigenvalues of -Q (ascending) with pi-orthonormal eigenvectors as columns.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> minus_generator_eigen(const ReversibleChain& c);

double spectral_gap(const ReversibleChain& c);

struct VariationalBounds {
  double lower = 0.0;  // best sup candidate found
  double value = 0.0;  // ||(-Q)^{-1/2} f||_p
  double upper = 0.0;  // 2 * lower
  double dual = 0.0;   // inf_c ||(-Q)^{-1/2} f - c||_p, the exact sup
  std::string best_source;
};

// sup over phi of <f, phi>_pi / ||(-Q)^{1/2} phi||_q, q = p/(p-1), searched over
// eigenvectors, the projected dual of (-Q)^{-1/2} f, random directions and a
// projected gradient ascent from the best candidate.
VariationalBounds variational_bounds(const ReversibleChain& c, const Eigen::VectorXd& f, double p,
                                     NoiseStream& rng, int random_directions = 10000);

// inf over mean-zero G0 and scalar c of ||G0 + c||_q / ||G0||_q. The inner
// minimization in c bisects the derivative on [min G0, max G0].
double kappa_inner(const Eigen::VectorXd& pi, const Eigen::VectorXd& G0, double q);
double kappa(const Eigen::VectorXd& pi, double q, NoiseStream& rng, int random_directions = 2000);

struct LpsConstants {
  double c_best = 0.0;  // min ratio ||(-Q)^{1/2} f||_p / ||grad f||_p
  double C_best = 0.0;  // max ratio
  double p2_error = 0.0;  // max |ratio - 1| seen when p = 2
};
LpsConstants lps_best_constants(const ReversibleChain& c, double p, int probes, NoiseStream& rng);

struct ShiftedLpsReport {
  double min_ratio = 0.0;  // ||(I-Q)^{1/2} f||_p / (||f||_p + ||grad f||_p)
  double max_ratio = 0.0;
  double p2_identity_error = 0.0;  // max | ||(I-Q)^{1/2} f||_2^2 - ||f||^2 - <f,-Qf> |
};
ShiftedLpsReport shifted_lps_check(const ReversibleChain& c, double p, int probes, NoiseStream& rng);

// Half the smallest eigenvalue of the Dirichlet form sum (xi_{x+1} - xi_x)^2
// on 2 ell - 1 interior heights with pinned ends.
double quadratic_local_gap(int ell);

// Pinned Gaussian bridge for quadratic V: phi(-ell) = 0, phi(ell) = 2 ell m;
// returns the 2 ell - 1 interior heights phi(-ell+1..ell-1).
std::vector<double> sample_pinned_bridge(int ell, double m, NoiseStream& rng);

// Linear test functions of the interior heights.
Observable bridge_mid_coordinate(int ell);
Observable bridge_lowest_sine(int ell);

struct WeakPoincareResult {
  double ratio = 0.0;  // ||f - E f||_q / (ell ||D_phi f||_p)
  double lq = 0.0;
  double grad_lp = 0.0;
  double mid_variance = 0.0;
  double mid_variance_se = 0.0;
};
WeakPoincareResult weak_poincare_ratio(int ell, double m, const Observable& f, double p, double q,
                                       long samples, NoiseStream& rng);

struct ChainLedgerRow {
  std::string hash;
  int n = 0;
  double p = 0.0;
  double lower = 0.0, value = 0.0, upper = 0.0, dual = 0.0;
  double kappa = 0.0;
  bool pass = false;
};
void write_chain_ledger(std::ostream& os, const std::vector<ChainLedgerRow>& rows, bool header = true);

}  // namespace glbg
