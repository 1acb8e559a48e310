#pragma once

#include <cstdint>
#include <vector>

#include "glbg/dynamics.hpp"
#include "glbg/field.hpp"
#include "glbg/measures.hpp"
#include "glbg/observable.hpp"
#include "glbg/potential.hpp"
#include "glbg/stats.hpp"

namespace glbg {

// Generator actions on an observable placed at x0 (its window covers labels
// x0+lo..x0+hi, wrapped on the torus; it may not exceed N sites).
//   L0 f = sum_x (d_x^2 - d_x d_{x-1}) f + 1/2 sum_x (V'(x+1) - 2V'(x) + V'(x-1)) d_x f
//   L1 f = gamma sum_x (V'(x+1) - V'(x-1)) d_x f
double apply_L0(const Observable& f, const TorusField& eta, const Potential& pot, long x0 = 0);
double apply_L1(const Observable& f, const TorusField& eta, const Potential& pot,
                const Asymmetry& asym, long x0 = 0);
double apply_L(const Observable& f, const TorusField& eta, const Potential& pot,
               const Asymmetry& asym, long x0 = 0);
// Gamma(f) = sum_x (d_x f - d_{x-1} f)^2.
double carre_du_champ(const Observable& f, const TorusField& eta, long x0 = 0);

// Localized L_{0,ell} on the block [-ell, ell-1]; throws if f's window leaves it.
double apply_L0_local(const Observable& f, const LocalField& eta, const Potential& pot);
// sum_{x=-ell+1}^{ell-1} ((d_x - d_{x-1}) F) ((d_x - d_{x-1}) G) at one block state.
double local_gradient_pairing(const Observable& F, const Observable& G, const LocalField& eta);

struct SymmetryResiduals {
  MeanSE s0;  // E[G L0 F - F L0 G]
  MeanSE s1;  // E[G L1 F + F L1 G]
  // -E[G L0 F] against the torus Dirichlet form; both from the same draws.
  MeanSE gl0f;
  MeanSE dirichlet;
};

// Samples mu_u on a torus of size N (F, G placed at 0).
SymmetryResiduals symmetry_residuals(const Observable& F, const Observable& G, const Potential& pot,
                                     double u, long n_samples, NoiseStream& rng, int N = 8,
                                     double gamma = 1.0);

// 1/2 E[sum_x (d_x - d_{x-1})F (d_x - d_{x-1})G] on the torus under mu_u.
MeanSE torus_dirichlet_form(const Observable& F, const Observable& G, const Potential& pot, double u,
                            long n_samples, NoiseStream& rng, int N = 8);

// Localized Dirichlet form under mu_{ell,m}; the sampler fixes n = 2 ell and m.
MeanSE dirichlet_form(const Observable& F, const Observable& G, CanonicalSampler& sampler,
                      long n_samples);

struct DynkinResult {
  MeanSE residual;        // M_T over trajectories
  double qv_ratio = 0.0;  // realized [M]_T over int Gamma(f), pooled over trajectories
  std::vector<double> per_path_ratio;
};

// Records must carry every micro step (simulate_fine). Integrals use the
// trapezoid rule on the micro grid.
DynkinResult dynkin_residual(const Observable& f, const std::vector<TrajectoryRecord>& records,
                             const Potential& pot, const Asymmetry& asym, long x0 = 0);

// Coefficients a(x), index i holding label i+1.
struct LinearFunctional {
  std::vector<double> a;
  double u0 = 0.0;
  double eval(const TorusField& eta) const;  // sum a(x)(eta(x) - u0)
  Observable as_observable() const;          // window 1..N
};

// Solves 1/2 Delta b = -a with sum b = 0, so L0 (sum b eta) = -(sum a eta)
// for quadratic V.
LinearFunctional poisson_solve_linear(const LinearFunctional& a, int N);
// Gamma of a linear functional: sum_x (b(x) - b(x-1))^2, a constant.
double gamma_linear(const LinearFunctional& b);

struct ItoTanakaOptions {
  double T = 0.1;        // diffusive horizon
  double p = 4.0;
  long batch = 500;
  double h_micro = 0.05; // exact-propagator step; the sup and integral use this grid
  std::uint64_t seed = 1;
  int threads = 0;
};

struct ItoTanakaResult {
  double lhs = 0.0;
  double lhs_se = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double ratio_se = 0.0;
};

// LHS = E[sup_{t<=T} |int_0^t V_a(eta^N_s) ds|^p] from mu_{u0} with the exact
// Gaussian propagator; RHS = N^-p T^{(p-2)/2} int_0^T Gamma(b)^{p/2} dt.
ItoTanakaResult ito_tanaka_ratio(const LinearFunctional& a, const Asymmetry& asym, int N,
                                 const ItoTanakaOptions& opts = {});

}  // namespace glbg
