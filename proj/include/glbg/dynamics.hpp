#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "glbg/field.hpp"
#include "glbg/noise.hpp"
#include "glbg/potential.hpp"

namespace glbg {

std::vector<double> drift_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym);

// Euler-Maruyama. dB[i] is the increment of B at label i+1 (variance dt);
// site x receives dB(x+1) - dB(x) with dB(N+1) = dB(1).
TorusField step_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                      double dt, std::span<const double> dB);
TorusField step_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                      double dt, NoiseStream& noise);

// Localized symmetric dynamics on [-ell, ell-1]. dB has 2*ell-1 entries for
// bond labels -ell+1..ell-1.
LocalField step_local(const LocalField& eta, const Potential& pot, double dt,
                      std::span<const double> dB);
LocalField step_local(const LocalField& eta, const Potential& pot, double dt, NoiseStream& noise);

// In-place Euler integrator reusing its buffers.
class EulerTorus {
 public:
  EulerTorus(const Potential& pot, const Asymmetry& asym, std::vector<double> eta);
  void step(double dt, std::span<const double> dB);
  void step(double dt, NoiseStream& noise);
  const std::vector<double>& state() const { return eta_; }
  // Cheap finiteness probe of the whole state.
  bool finite() const;

 private:
  const Potential* pot_;
  Asymmetry asym_;
  std::vector<double> eta_, next_, w_, dB_;
};

// Closed-form transition of the linear dynamics for V = zeta^2/2. The drift
// A = pS + qS^T - I is circulant with symbol (cos t - 1) + 2i*gamma*sin t and
// commutes with the noise factor D = S - I, so everything is diagonal in the
// discrete Fourier basis.
class GaussianPropagator {
 public:
  GaussianPropagator(int N, const Asymmetry& asym, double h);
  ~GaussianPropagator();
  GaussianPropagator(const GaussianPropagator&) = delete;
  GaussianPropagator& operator=(const GaussianPropagator&) = delete;

  int N() const { return N_; }
  double h() const { return h_; }
  // Eigenvalues of A for k = 0..N-1.
  static std::vector<std::complex<double>> symbol(int N, const Asymmetry& asym);

  // Exact marginal transition with white noise z (N standard normals).
  void transition(std::span<const double> eta, std::span<const double> z,
                  std::span<double> out);
  // Exact transition conditioned on the Brownian increments dB over the step
  // (same convention as step_torus); xi carries the remaining bridge noise.
  void transition_shared(std::span<const double> eta, std::span<const double> dB,
                         std::span<const double> xi, std::span<double> out);

  // Spectral-state stepping for long runs: state kept in Fourier space.
  void load(std::span<const double> eta);
  void advance(NoiseStream& noise);
  void unload(std::span<double> out);

 private:
  void forward(std::span<const double> x, std::complex<double>* X);
  void inverse(const std::complex<double>* X, std::span<double> x);

  int N_, K_;
  double h_;
  std::vector<std::complex<double>> E_, G_, Dsym_;
  std::vector<double> sigma_, sqrtc_;
  std::vector<std::complex<double>> state_, work_, work2_;
  std::vector<double> rbuf_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

TorusField exact_gaussian_step(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                               double dt, NoiseStream& noise);

enum class Integrator { Euler, Exact, Auto };
Integrator integrator_from_string(const std::string& s);
std::string to_string(Integrator i);

struct TrajectoryRecord {
  int N = 0;
  double m0 = 0.0;
  double dt_micro = 0.0;
  std::string integrator;
  std::vector<double> times;  // diffusive units, strictly increasing
  std::vector<TorusField> fields;
  std::vector<double> conservation;  // |mean - m0| at each snapshot

  void write_long_csv(std::ostream& os) const;
  // Columns: t, then one per (name, functional) pair.
  void write_wide_csv(std::ostream& os,
                      const std::vector<std::pair<std::string, std::function<double(const TorusField&)>>>& cols) const;
};

struct SimulateOptions {
  Integrator integrator = Integrator::Euler;
};

// Integrates micro time N^2*T; a snapshot at diffusive t is the state at micro
// time N^2*t. Each snapshot interval is split into equal micro steps no longer
// than dt_micro.
TrajectoryRecord simulate(const TorusField& eta0, const Potential& pot, const Asymmetry& asym,
                          double T, double dt_micro, std::vector<double> snapshots,
                          NoiseStream& noise, const SimulateOptions& opts = {});

// Every Euler step recorded; used by the Dynkin checks.
TrajectoryRecord simulate_fine(const TorusField& eta0, const Potential& pot, const Asymmetry& asym,
                               long steps, double dt_micro, NoiseStream& noise);

double conservation_residual(const TrajectoryRecord& rec);

double default_dt(const Potential& pot);

// Euler against the conditional exact step, sharing one Brownian path. The
// reference runs on the finest dt; coarser Euler runs use sums of the fine
// increments. Error is the RMS terminal difference over sites and paths.
struct StrongOrderResult {
  std::vector<double> dts;
  std::vector<double> errors;
  double slope = 0.0;  // d log2(error) / d log2(dt)
};
StrongOrderResult strong_order_study(int N, const Asymmetry& asym, double T_micro,
                                     std::vector<double> dts, int paths, std::uint64_t seed);

}  // namespace glbg
