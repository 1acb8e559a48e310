#include "glbg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include <fftw3.h>

#include "glbg/error.hpp"
#include "glbg/stats.hpp"

namespace glbg {

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

}  // namespace

std::vector<double> drift_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym) {
  const auto& e = eta.values();
  std::size_t n = e.size();
  std::vector<double> w(n), d(n);
  pot.dv_many(e.data(), w.data(), n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ip = i + 1 == n ? 0 : i + 1, im = i == 0 ? n - 1 : i - 1;
    d[i] = asym.p * (w[ip] - w[i]) + asym.q * (w[im] - w[i]);
  }
  return d;
}

EulerTorus::EulerTorus(const Potential& pot, const Asymmetry& asym, std::vector<double> eta)
    : pot_(&pot), asym_(asym), eta_(std::move(eta)) {
  next_.resize(eta_.size());
  w_.resize(eta_.size());
  dB_.resize(eta_.size());
}

void EulerTorus::step(double dt, std::span<const double> dB) {
  std::size_t n = eta_.size();
  const double p = asym_.p, q = asym_.q;
  pot_->dv_many(eta_.data(), w_.data(), n);
  const double* w = w_.data();
  const double* e = eta_.data();
  double* o = next_.data();
  o[0] = e[0] + dt * (p * (w[1] - w[0]) + q * (w[n - 1] - w[0])) + dB[1] - dB[0];
  for (std::size_t i = 1; i + 1 < n; ++i)
    o[i] = e[i] + dt * (p * (w[i + 1] - w[i]) + q * (w[i - 1] - w[i])) + dB[i + 1] - dB[i];
  o[n - 1] =
      e[n - 1] + dt * (p * (w[0] - w[n - 1]) + q * (w[n - 2] - w[n - 1])) + dB[0] - dB[n - 1];
  eta_.swap(next_);
}

void EulerTorus::step(double dt, NoiseStream& noise) {
  noise.increments(dB_, dt);
  step(dt, dB_);
}

bool EulerTorus::finite() const {
  double s = 0.0;
  for (double x : eta_) s += x * 0.0;
  return s == 0.0;
}

TorusField step_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                      double dt, std::span<const double> dB) {
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  if (dB.size() != eta.values().size()) throw InvalidArgument("need one increment per site");
  EulerTorus e(pot, asym, eta.values());
  e.step(dt, dB);
  if (!e.finite()) throw IntegratorDiverged("non-finite state after Euler step", 0.0);
  return TorusField(e.state());
}

TorusField step_torus(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                      double dt, NoiseStream& noise) {
  std::vector<double> dB(eta.N());
  noise.increments(dB, dt);
  return step_torus(eta, pot, asym, dt, dB);
}

LocalField step_local(const LocalField& eta, const Potential& pot, double dt,
                      std::span<const double> dB) {
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  int n = eta.size();
  if (static_cast<int>(dB.size()) != n - 1)
    throw InvalidArgument("localized dynamics needs 2*ell-1 bond increments");
  const auto& e = eta.values();
  std::vector<double> w(n), o(n);
  pot.dv_many(e.data(), w.data(), n);
  // index i <-> label i-ell; bond increment dB[j] <-> label j-ell+1
  for (int i = 1; i + 1 < n; ++i)
    o[i] = e[i] + dt * 0.5 * (w[i + 1] - 2 * w[i] + w[i - 1]) + dB[i] - dB[i - 1];
  o[0] = e[0] + dt * 0.5 * (w[1] - w[0]) + dB[0];
  o[n - 1] = e[n - 1] - dt * 0.5 * (w[n - 1] - w[n - 2]) - dB[n - 2];
  for (double x : o)
    if (!std::isfinite(x)) throw IntegratorDiverged("non-finite state in localized dynamics", 0.0);
  return LocalField(eta.ell(), std::move(o));
}

LocalField step_local(const LocalField& eta, const Potential& pot, double dt, NoiseStream& noise) {
  std::vector<double> dB(eta.size() - 1);
  noise.increments(dB, dt);
  return step_local(eta, pot, dt, dB);
}

// ---------------------------------------------------------------------------

struct GaussianPropagator::Plans {
  fftw_plan r2c = nullptr, c2r = nullptr;
  double* rin = nullptr;
  fftw_complex* cbuf = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
    fftw_free(rin);
    fftw_free(cbuf);
  }
};

std::vector<std::complex<double>> GaussianPropagator::symbol(int N, const Asymmetry& asym) {
  std::vector<std::complex<double>> a(N);
  for (int k = 0; k < N; ++k) {
    double t = 2.0 * M_PI * k / N;
    a[k] = {std::cos(t) - 1.0, 2.0 * asym.gamma * std::sin(t)};
  }
  a[0] = 0.0;
  return a;
}

GaussianPropagator::GaussianPropagator(int N, const Asymmetry& asym, double h)
    : N_(N), K_(N / 2 + 1), h_(h), plans_(std::make_unique<Plans>()) {
  if (N < 2) throw InvalidArgument("torus needs N >= 2");
  if (!(h > 0)) throw InvalidArgument("step must be positive");
  auto a = symbol(N, asym);
  E_.resize(K_);
  G_.resize(K_);
  Dsym_.resize(K_);
  sigma_.resize(K_);
  sqrtc_.resize(K_);
  for (int k = 0; k < K_; ++k) {
    double t = 2.0 * M_PI * k / N;
    double r = a[k].real(), s = a[k].imag();
    double er = std::exp(r * h);
    E_[k] = {er * std::cos(s * h), er * std::sin(s * h)};
    Dsym_[k] = {std::cos(t) - 1.0, std::sin(t)};
    if (k == 0) {
      G_[k] = h;
      sigma_[k] = 0.0;
      sqrtc_[k] = 0.0;
      continue;
    }
    // e^{ah} - 1 without cancellation
    double sh = std::sin(0.5 * s * h);
    std::complex<double> em1{std::expm1(r * h) * std::cos(s * h) - 2.0 * sh * sh,
                             er * std::sin(s * h)};
    G_[k] = em1 / a[k];
    double var_j = std::expm1(2.0 * r * h) / (2.0 * r);  // integral of |e^{au}|^2
    double c = var_j - std::norm(G_[k]) / h;
    sqrtc_[k] = std::sqrt(std::max(c, 0.0));
    sigma_[k] = std::sqrt(-std::expm1(2.0 * r * h));
  }
  state_.resize(K_);
  work_.resize(K_);
  work2_.resize(K_);
  rbuf_.resize(N);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  plans_->rin = fftw_alloc_real(N);
  plans_->cbuf = fftw_alloc_complex(K_);
  plans_->r2c = fftw_plan_dft_r2c_1d(N, plans_->rin, plans_->cbuf, FFTW_ESTIMATE);
  plans_->c2r = fftw_plan_dft_c2r_1d(N, plans_->cbuf, plans_->rin, FFTW_ESTIMATE);
}

GaussianPropagator::~GaussianPropagator() = default;

void GaussianPropagator::forward(std::span<const double> x, std::complex<double>* X) {
  std::copy(x.begin(), x.end(), plans_->rin);
  fftw_execute(plans_->r2c);
  for (int k = 0; k < K_; ++k) X[k] = {plans_->cbuf[k][0], plans_->cbuf[k][1]};
}

void GaussianPropagator::inverse(const std::complex<double>* X, std::span<double> x) {
  for (int k = 0; k < K_; ++k) {
    plans_->cbuf[k][0] = X[k].real();
    plans_->cbuf[k][1] = X[k].imag();
  }
  // a real field has a real Nyquist coefficient; drop rounding residue
  if (N_ % 2 == 0) plans_->cbuf[K_ - 1][1] = 0.0;
  fftw_execute(plans_->c2r);
  double inv = 1.0 / N_;
  for (int i = 0; i < N_; ++i) x[i] = plans_->rin[i] * inv;
}

void GaussianPropagator::transition(std::span<const double> eta, std::span<const double> z,
                                    std::span<double> out) {
  forward(eta, work_.data());
  forward(z, work2_.data());
  for (int k = 0; k < K_; ++k) work_[k] = E_[k] * work_[k] + sigma_[k] * work2_[k];
  inverse(work_.data(), out);
}

void GaussianPropagator::transition_shared(std::span<const double> eta, std::span<const double> dB,
                                           std::span<const double> xi, std::span<double> out) {
  forward(eta, work_.data());
  forward(dB, work2_.data());
  std::vector<std::complex<double>> xh(K_);
  forward(xi, xh.data());
  for (int k = 0; k < K_; ++k)
    work_[k] = E_[k] * work_[k] + Dsym_[k] * (G_[k] / h_ * work2_[k] + sqrtc_[k] * xh[k]);
  inverse(work_.data(), out);
}

void GaussianPropagator::load(std::span<const double> eta) { forward(eta, state_.data()); }

void GaussianPropagator::advance(NoiseStream& noise) {
  // Fourier coefficients of real white noise: complex with E|z_k|^2 = N for
  // 0 < k < N/2, real with variance N at the Nyquist index.
  const double half = std::sqrt(0.5 * N_);
  int last = (N_ % 2 == 0) ? K_ - 1 : K_;
  for (int k = 1; k < last; ++k) {
    double re = noise.normal(), im = noise.normal();
    state_[k] = E_[k] * state_[k] + sigma_[k] * half * std::complex<double>(re, im);
  }
  if (N_ % 2 == 0) {
    int k = K_ - 1;
    state_[k] = E_[k].real() * state_[k].real() + sigma_[k] * std::sqrt(double(N_)) * noise.normal();
  }
}

void GaussianPropagator::unload(std::span<double> out) { inverse(state_.data(), out); }

TorusField exact_gaussian_step(const TorusField& eta, const Potential& pot, const Asymmetry& asym,
                               double dt, NoiseStream& noise) {
  if (!pot.is_quadratic()) throw UnsupportedPotential("exact Gaussian step needs V = zeta^2/2");
  GaussianPropagator g(eta.N(), asym, dt);
  std::vector<double> z(eta.N()), out(eta.N());
  noise.fill_normal(z);
  g.transition(eta.values(), z, out);
  return TorusField(std::move(out));
}

// ---------------------------------------------------------------------------

Integrator integrator_from_string(const std::string& s) {
  if (s == "euler") return Integrator::Euler;
  if (s == "exact") return Integrator::Exact;
  if (s == "auto") return Integrator::Auto;
  throw InvalidArgument("unknown integrator: " + s);
}

std::string to_string(Integrator i) {
  switch (i) {
    case Integrator::Euler: return "euler";
    case Integrator::Exact: return "exact";
    default: return "auto";
  }
}

double default_dt(const Potential& pot) { return std::min(0.05 / pot.c_plus(), 1e-3); }

void TrajectoryRecord::write_long_csv(std::ostream& os) const {
  os << "t,site,value\n";
  os.precision(17);
  for (std::size_t j = 0; j < times.size(); ++j)
    for (int x = 1; x <= N; ++x) os << times[j] << ',' << x << ',' << fields[j].at(x) << '\n';
}

void TrajectoryRecord::write_wide_csv(
    std::ostream& os,
    const std::vector<std::pair<std::string, std::function<double(const TorusField&)>>>& cols) const {
  os << 't';
  for (const auto& c : cols) os << ',' << c.first;
  os << '\n';
  os.precision(17);
  for (std::size_t j = 0; j < times.size(); ++j) {
    os << times[j];
    for (const auto& c : cols) os << ',' << c.second(fields[j]);
    os << '\n';
  }
}

TrajectoryRecord simulate(const TorusField& eta0, const Potential& pot, const Asymmetry& asym,
                          double T, double dt_micro, std::vector<double> snapshots,
                          NoiseStream& noise, const SimulateOptions& opts) {
  if (!(T >= 0)) throw InvalidArgument("T must be nonnegative");
  if (!(dt_micro > 0)) throw InvalidArgument("dt must be positive");
  if (snapshots.empty()) snapshots = T > 0 ? std::vector<double>{0.0, T} : std::vector<double>{0.0};
  for (std::size_t j = 0; j < snapshots.size(); ++j) {
    if (snapshots[j] < 0 || snapshots[j] > T * (1 + 1e-12))
      throw InvalidArgument("snapshot outside [0, T]");
    if (j > 0 && !(snapshots[j] > snapshots[j - 1]))
      throw InvalidArgument("snapshot times must be strictly increasing");
  }
  const int N = eta0.N();
  const double scale = static_cast<double>(N) * N;
  double prev = 0.0;
  for (double t : snapshots) {
    if (t > prev && dt_micro > scale * (t - prev) * (1 + 1e-12))
      throw InvalidArgument("micro step longer than a snapshot spacing");
    prev = t;
  }
  Integrator integ = opts.integrator;
  if (integ == Integrator::Auto) integ = pot.is_quadratic() ? Integrator::Exact : Integrator::Euler;
  if (integ == Integrator::Exact && !pot.is_quadratic())
    throw UnsupportedPotential("exact integrator needs V = zeta^2/2");

  TrajectoryRecord rec;
  rec.N = N;
  rec.m0 = eta0.mean();
  rec.dt_micro = dt_micro;
  rec.integrator = to_string(integ);

  EulerTorus euler(pot, asym, eta0.values());
  std::unique_ptr<GaussianPropagator> prop;
  double prop_h = -1.0;
  std::vector<double> cur = eta0.values(), z(N), out(N);
  double t = 0.0;
  auto record = [&](double when, const std::vector<double>& state) {
    TorusField f(state);
    rec.times.push_back(when);
    rec.conservation.push_back(std::fabs(f.mean() - rec.m0));
    rec.fields.push_back(std::move(f));
  };
  for (double ts : snapshots) {
    double span_micro = scale * (ts - t);
    if (span_micro > 0) {
      long k = static_cast<long>(std::ceil(span_micro / dt_micro - 1e-9));
      double h = span_micro / k;
      if (integ == Integrator::Euler) {
        for (long s = 0; s < k; ++s) {
          euler.step(h, noise);
          if (!euler.finite())
            throw IntegratorDiverged("non-finite state", t + (s + 1) * h / scale);
        }
        cur = euler.state();
      } else {
        if (!prop || std::fabs(prop_h - h) > 1e-15 * h) {
          prop = std::make_unique<GaussianPropagator>(N, asym, h);
          prop_h = h;
        }
        for (long s = 0; s < k; ++s) {
          noise.fill_normal(z);
          prop->transition(cur, z, out);
          cur.swap(out);
        }
      }
    }
    t = ts;
    record(ts, integ == Integrator::Euler ? euler.state() : cur);
  }
  return rec;
}

TrajectoryRecord simulate_fine(const TorusField& eta0, const Potential& pot, const Asymmetry& asym,
                               long steps, double dt_micro, NoiseStream& noise) {
  if (!(dt_micro > 0)) throw InvalidArgument("dt must be positive");
  const int N = eta0.N();
  const double scale = static_cast<double>(N) * N;
  TrajectoryRecord rec;
  rec.N = N;
  rec.m0 = eta0.mean();
  rec.dt_micro = dt_micro;
  rec.integrator = "euler";
  rec.times.reserve(steps + 1);
  rec.fields.reserve(steps + 1);
  EulerTorus euler(pot, asym, eta0.values());
  for (long s = 0; s <= steps; ++s) {
    if (s > 0) {
      euler.step(dt_micro, noise);
      if (!euler.finite()) throw IntegratorDiverged("non-finite state", s * dt_micro / scale);
    }
    TorusField f(euler.state());
    rec.times.push_back(s * dt_micro / scale);
    rec.conservation.push_back(std::fabs(f.mean() - rec.m0));
    rec.fields.push_back(std::move(f));
  }
  return rec;
}

double conservation_residual(const TrajectoryRecord& rec) {
  double r = 0.0;
  for (double c : rec.conservation) r = std::max(r, c);
  return r;
}

StrongOrderResult strong_order_study(int N, const Asymmetry& asym, double T_micro,
                                     std::vector<double> dts, int paths, std::uint64_t seed) {
  std::sort(dts.begin(), dts.end());
  const double fine = dts.front();
  const long n_fine = std::lround(T_micro / fine);
  std::vector<long> ratio;
  for (double dt : dts) {
    long r = std::lround(dt / fine);
    if (r < 1 || std::fabs(r * fine - dt) > 1e-12 * dt || n_fine % r != 0)
      throw InvalidArgument("step sizes must be integer multiples of the finest step dividing T");
    ratio.push_back(r);
  }
  auto pot = Potential::quadratic();
  GaussianPropagator exact(N, asym, fine);
  std::vector<double> sq(dts.size(), 0.0);
  for (int path = 0; path < paths; ++path) {
    NoiseStream noise(seed, path);
    std::vector<double> eta0(N);
    noise.fill_normal(eta0);
    std::vector<std::vector<double>> dB(n_fine, std::vector<double>(N)), xi = dB;
    for (long j = 0; j < n_fine; ++j) {
      noise.increments(dB[j], fine);
      noise.fill_normal(xi[j]);
    }
    std::vector<double> ref = eta0, out(N);
    for (long j = 0; j < n_fine; ++j) {
      exact.transition_shared(ref, dB[j], xi[j], out);
      ref.swap(out);
    }
    for (std::size_t d = 0; d < dts.size(); ++d) {
      EulerTorus e(pot, asym, eta0);
      std::vector<double> agg(N);
      for (long j = 0; j < n_fine; j += ratio[d]) {
        std::fill(agg.begin(), agg.end(), 0.0);
        for (long i = 0; i < ratio[d]; ++i)
          for (int x = 0; x < N; ++x) agg[x] += dB[j + i][x];
        e.step(dts[d], agg);
      }
      for (int x = 0; x < N; ++x) sq[d] += std::pow(e.state()[x] - ref[x], 2);
    }
  }
  StrongOrderResult r;
  r.dts = dts;
  std::vector<double> lx, ly;
  for (std::size_t d = 0; d < dts.size(); ++d) {
    r.errors.push_back(std::sqrt(sq[d] / (static_cast<double>(paths) * N)));
    lx.push_back(std::log2(dts[d]));
    ly.push_back(std::log2(r.errors.back()));
  }
  r.slope = fit_line(lx, ly).slope;
  return r;
}

}  // namespace glbg
