#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glbg/noise.hpp"
#include "glbg/observable.hpp"
#include "glbg/potential.hpp"

namespace glbg {

// nu_lambda(dz) = exp(-V(z) + lambda z) dz / Z_lambda. All integrals run over
// [mode - L, mode + L] with L = sqrt(120 / c_minus), which drops a relative
// mass below e^-60.
class TiltedSite {
 public:
  TiltedSite(const Potential& pot, double lambda);

  double lambda() const { return lambda_; }
  double mode() const { return mode_; }
  double Z() const;
  double log_Z() const { return log_Z_; }
  double density(double z) const;
  double cdf(double z) const;
  double mean() const { return mean_; }
  double variance() const { return var_; }
  double lo() const { return mode_ - L_; }
  double hi() const { return mode_ + L_; }
  // Integral of g against the normalized density.
  double expect(const std::function<double(double)>& g) const;

  // Exact draw by rejection from a Gaussian of curvature c_minus at the mode.
  double sample(NoiseStream& rng) const;
  double predicted_acceptance() const;
  const Potential& potential() const { return pot_; }

 private:
  double shifted_energy(double z) const { return pot_.v(z) - lambda_ * z - g_mode_; }
  double integrate(const std::function<double(double)>& g, double a, double b) const;

  Potential pot_;
  double lambda_, mode_, g_mode_, L_;
  double log_Z_ = 0.0, mean_ = 0.0, var_ = 0.0;
};

double partition_1d(const Potential& pot, double lambda);
double mean_u(const Potential& pot, double lambda);
double lambda_of_u(const Potential& pot, double u);
double variance(const Potential& pot, double u);

struct EnsembleParams {
  double u = 0.0;
  double lambda = 0.0;
  double var = 1.0;
  nlohmann::json to_json() const { return {{"u", u}, {"lambda", lambda}, {"var", var}}; }
};
EnsembleParams ensemble_params(const Potential& pot, double u);

std::vector<double> sample_grand_canonical(const Potential& pot, double u, int n, NoiseStream& rng);
// Reuses a prepared site measure (nu_lambda with lambda = lambda(u)).
std::vector<double> sample_grand_canonical(const TiltedSite& site, int n, NoiseStream& rng);

struct CanonicalOptions {
  double proposal_scale = 0.0;  // 0: start at 1/sqrt(c_plus) and tune
  int burn_in_sweeps = -1;      // -1: 50 * n
  int thin_sweeps = 0;          // 0: from the integrated autocorrelation time
  double tilt = 0.0;            // internal tilt used for the initial state
  double min_ess = 100.0;
  bool strict = false;          // throw MixingWarning instead of flagging it
};

struct SamplerMetadata {
  std::string path;  // "exact-gaussian" | "pair-exchange"
  double acceptance_rate = 1.0;
  double proposal_scale = 0.0;
  double tau_int = 1.0;
  int burn_in_sweeps = 0;
  int thin_sweeps = 1;
  double pilot_ess = 0.0;
  bool mixing_warning = false;
  nlohmann::json to_json() const;
};

// Draws from mu_{n,m}: the product measure conditioned on the sample mean.
class CanonicalSampler {
 public:
  CanonicalSampler(const Potential& pot, int n, double m, NoiseStream& rng,
                   const CanonicalOptions& opts = {});
  std::vector<double> draw();
  const SamplerMetadata& metadata() const { return meta_; }
  int n() const { return n_; }
  double m() const { return m_; }

 private:
  void sweep(bool adapt);
  void recenter();

  Potential pot_;
  int n_;
  double m_;
  NoiseStream* rng_;
  CanonicalOptions opts_;
  SamplerMetadata meta_;
  std::vector<double> state_;
  long proposed_ = 0, accepted_ = 0;
};

std::vector<double> sample_canonical(const Potential& pot, int n, double m, NoiseStream& rng,
                                     const CanonicalOptions& opts = {});

struct AverageOptions {
  bool force_monte_carlo = false;
  long mc_samples = 100000;
  std::uint64_t seed = 1;
};

struct AverageResult {
  double value = 0.0;
  double se = 0.0;
  std::string method;  // "quadrature" | "monte-carlo"
};

// <f>(u) = E^{mu_u}[f]; tensor Gauss-Legendre for supports up to 3 sites.
AverageResult ensemble_avg(const Observable& f, const Potential& pot, double u,
                           const AverageOptions& opts = {});

struct TildeDerivs {
  double f0 = 0.0, f1 = 0.0, f2 = 0.0;
};
TildeDerivs tilde_derivs(const Observable& f, const Potential& pot, double u0);
// Quadratic V only: mu_u is N(u,1)^n, so d^k/du^k <f>(u) = E[(sum_i d_i)^k f(u + Z)].
// Exact for polynomial observables of degree <= 2, Gauss-Hermite (<= 3 sites) otherwise.
TildeDerivs tilde_derivs_gaussian(const Observable& f, double u0);

}  // namespace glbg
