#include "glbg/measures.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "glbg/error.hpp"
#include "glbg/quadrature.hpp"
#include "glbg/stats.hpp"

namespace glbg {

TiltedSite::TiltedSite(const Potential& pot, double lambda) : pot_(pot), lambda_(lambda) {
  if (!(std::fabs(lambda) <= 20.0)) throw InvalidArgument("lambda outside [-20, 20]");
  // V'(z) - lambda is increasing with slope >= c_minus, so the root lies
  // within |V'(0) - lambda| / c_minus of the origin.
  double f0 = pot_.dv(0.0) - lambda;
  double span = std::fabs(f0) / pot_.c_minus() + 1e-12;
  auto fn = [&](double z) { return std::make_pair(pot_.dv(z) - lambda, pot_.ddv(z)); };
  std::uintmax_t iters = 100;
  mode_ = boost::math::tools::newton_raphson_iterate(fn, 0.0, -span, span, 52, iters);
  g_mode_ = pot_.v(mode_) - lambda_ * mode_;
  L_ = std::sqrt(120.0 / pot_.c_minus());
  double zs = integrate([&](double z) { return std::exp(-shifted_energy(z)); }, lo(), hi());
  log_Z_ = std::log(zs) - g_mode_;
  mean_ = expect([](double z) { return z; });
  var_ = expect([m = mean_](double z) { return (z - m) * (z - m); });
}

double TiltedSite::integrate(const std::function<double(double)>& g, double a, double b) const {
  double err = 0.0, l1 = 0.0;
  double r = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, a, b, 15, 1e-14,
                                                                           &err, &l1);
  if (!std::isfinite(r) || err > 1e-10 * std::max(l1, 1e-300))
    throw NumericFailure("quadrature did not converge (error " + std::to_string(err) + ")");
  return r;
}

double TiltedSite::Z() const { return std::exp(log_Z_); }

double TiltedSite::density(double z) const {
  return std::exp(-(pot_.v(z) - lambda_ * z) - log_Z_);
}

double TiltedSite::expect(const std::function<double(double)>& g) const {
  double zs = std::exp(log_Z_ + g_mode_);
  return integrate([&](double z) { return g(z) * std::exp(-shifted_energy(z)); }, lo(), hi()) / zs;
}

double TiltedSite::cdf(double z) const {
  if (z <= lo()) return 0.0;
  if (z >= hi()) return 1.0;
  double zs = std::exp(log_Z_ + g_mode_);
  return integrate([&](double x) { return std::exp(-shifted_energy(x)); }, lo(), z) / zs;
}

double TiltedSite::predicted_acceptance() const {
  return std::exp(log_Z_ + g_mode_) / std::sqrt(2.0 * M_PI / pot_.c_minus());
}

double TiltedSite::sample(NoiseStream& rng) const {
  const double c = pot_.c_minus();
  const double sd = 1.0 / std::sqrt(c);
  for (;;) {
    double z = mode_ + sd * rng.normal();
    double d = z - mode_;
    double log_ratio = -shifted_energy(z) + 0.5 * c * d * d;
    if (log_ratio > 1e-9 * (1.0 + 0.5 * c * d * d))
      throw EnvelopeViolation("target density above the rejection envelope");
    if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) return z;
  }
}

double partition_1d(const Potential& pot, double lambda) { return TiltedSite(pot, lambda).Z(); }

double mean_u(const Potential& pot, double lambda) { return TiltedSite(pot, lambda).mean(); }

double lambda_of_u(const Potential& pot, double u) {
  double lam = std::clamp(pot.dv(u), -20.0, 20.0);
  double best_res = HUGE_VAL;
  for (int it = 0; it < 50; ++it) {
    TiltedSite s(pot, lam);
    double res = s.mean() - u;
    // keep polishing past 1e-10 until the residual stalls at rounding level,
    // so that u -> lambda(u) is smooth enough for finite differences
    if (std::fabs(res) <= 1e-10 && std::fabs(res) >= 0.5 * best_res) return lam;
    best_res = std::min(best_res, std::fabs(res));
    double step = res / s.variance();
    if (std::fabs(res) <= 1e-10 && std::fabs(step) <= 1e-15 * std::max(1.0, std::fabs(lam)))
      return lam;
    lam = std::clamp(lam - step, -20.0, 20.0);
  }
  if (best_res <= 1e-10) return lam;
  throw NumericFailure("lambda_of_u: Newton iteration cap exceeded");
}

double variance(const Potential& pot, double u) {
  return TiltedSite(pot, lambda_of_u(pot, u)).variance();
}

EnsembleParams ensemble_params(const Potential& pot, double u) {
  EnsembleParams e;
  e.u = u;
  e.lambda = lambda_of_u(pot, u);
  e.var = TiltedSite(pot, e.lambda).variance();
  return e;
}

std::vector<double> sample_grand_canonical(const Potential& pot, double u, int n, NoiseStream& rng) {
  if (pot.is_quadratic()) {
    // nu_u = N(u, 1)
    std::vector<double> x(n);
    rng.fill_normal(x);
    for (auto& v : x) v += u;
    return x;
  }
  return sample_grand_canonical(TiltedSite(pot, lambda_of_u(pot, u)), n, rng);
}

std::vector<double> sample_grand_canonical(const TiltedSite& site, int n, NoiseStream& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = site.sample(rng);
  return x;
}

// ---------------------------------------------------------------------------

nlohmann::json SamplerMetadata::to_json() const {
  return {{"path", path},          {"acceptance_rate", acceptance_rate},
          {"proposal_scale", proposal_scale}, {"tau_int", tau_int},
          {"burn_in_sweeps", burn_in_sweeps}, {"thin_sweeps", thin_sweeps},
          {"pilot_ess", pilot_ess}, {"mixing_warning", mixing_warning}};
}

CanonicalSampler::CanonicalSampler(const Potential& pot, int n, double m, NoiseStream& rng,
                                   const CanonicalOptions& opts)
    : pot_(pot), n_(n), m_(m), rng_(&rng), opts_(opts) {
  if (n < 2) throw InvalidArgument("canonical measure needs n >= 2");
  if (pot_.is_quadratic()) {
    meta_.path = "exact-gaussian";
    return;
  }
  meta_.path = "pair-exchange";
  TiltedSite site(pot_, opts_.tilt);
  state_.resize(n);
  for (auto& v : state_) v = site.sample(rng);
  recenter();
  meta_.proposal_scale =
      opts_.proposal_scale > 0 ? opts_.proposal_scale : 1.0 / std::sqrt(pot_.c_plus());
  meta_.burn_in_sweeps = opts_.burn_in_sweeps >= 0 ? opts_.burn_in_sweeps : 50 * n;
  for (int s = 0; s < meta_.burn_in_sweeps; ++s) sweep(opts_.proposal_scale <= 0);
  // pilot run for the autocorrelation time of the first site, in sweeps
  proposed_ = accepted_ = 0;
  const int pilot = std::max(400, 20 * n);
  std::vector<double> trace(pilot);
  for (int s = 0; s < pilot; ++s) {
    sweep(false);
    trace[s] = state_[0];
  }
  meta_.tau_int = integrated_autocorr(trace);
  meta_.pilot_ess = pilot / meta_.tau_int;
  meta_.acceptance_rate = static_cast<double>(accepted_) / std::max<long>(proposed_, 1);
  meta_.thin_sweeps =
      opts_.thin_sweeps > 0 ? opts_.thin_sweeps : static_cast<int>(std::ceil(2.0 * meta_.tau_int));
  if (meta_.pilot_ess < opts_.min_ess) {
    meta_.mixing_warning = true;
    if (opts_.strict)
      throw MixingWarning("canonical sampler: pilot ESS " + std::to_string(meta_.pilot_ess) +
                          " below threshold");
  }
}

void CanonicalSampler::sweep(bool adapt) {
  long acc = 0;
  const double s = meta_.proposal_scale;
  for (int k = 0; k < n_; ++k) {
    std::size_t x = static_cast<std::size_t>(rng_->uniform() * n_);
    std::size_t y = static_cast<std::size_t>(rng_->uniform() * (n_ - 1));
    if (x >= static_cast<std::size_t>(n_)) x = n_ - 1;
    if (y >= x) ++y;
    double d = s * rng_->normal();
    double a = state_[x], b = state_[y];
    double dh = pot_.v(a + d) + pot_.v(b - d) - pot_.v(a) - pot_.v(b);
    if (dh <= 0 || std::log(rng_->uniform()) < -dh) {
      state_[x] = a + d;
      state_[y] = b - d;
      ++acc;
    }
  }
  proposed_ += n_;
  accepted_ += acc;
  if (adapt) {
    double rate = static_cast<double>(acc) / n_;
    meta_.proposal_scale *= std::exp(0.5 * (rate - 0.4));
  }
}

void CanonicalSampler::recenter() {
  double shift = pairwise_sum(state_) / n_ - m_;
  for (auto& v : state_) v -= shift;
}

std::vector<double> CanonicalSampler::draw() {
  if (pot_.is_quadratic()) {
    std::vector<double> x(n_);
    rng_->fill_normal(x);
    double shift = pairwise_sum(x) / n_ - m_;
    for (auto& v : x) v -= shift;
    return x;
  }
  for (int s = 0; s < meta_.thin_sweeps; ++s) sweep(false);
  recenter();
  meta_.acceptance_rate = static_cast<double>(accepted_) / std::max<long>(proposed_, 1);
  return state_;
}

std::vector<double> sample_canonical(const Potential& pot, int n, double m, NoiseStream& rng,
                                     const CanonicalOptions& opts) {
  CanonicalSampler s(pot, n, m, rng, opts);
  return s.draw();
}

// ---------------------------------------------------------------------------

AverageResult ensemble_avg(const Observable& f, const Potential& pot, double u,
                           const AverageOptions& opts) {
  TiltedSite site(pot, lambda_of_u(pot, u));
  const int k = f.size();
  AverageResult r;
  if (k <= 3 && !opts.force_monte_carlo) {
    QuadRule q = gauss_legendre(site.lo(), site.hi());
    std::vector<double> w(q.x.size());
    double tot = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) tot += (w[i] = q.w[i] * site.density(q.x[i]));
    for (auto& v : w) v /= tot;
    const std::size_t m = w.size();
    std::size_t total = 1;
    for (int d = 0; d < k; ++d) total *= m;
    std::vector<double> win(k), terms;
    terms.reserve(total);
    std::vector<std::size_t> idx(k, 0);
    for (std::size_t c = 0; c < total; ++c) {
      double wt = 1.0;
      for (int d = 0; d < k; ++d) {
        win[d] = q.x[idx[d]];
        wt *= w[idx[d]];
      }
      terms.push_back(wt * f.eval(win));
      for (int d = 0; d < k; ++d) {
        if (++idx[d] < m) break;
        idx[d] = 0;
      }
    }
    r.value = pairwise_sum(terms);
    r.method = "quadrature";
    return r;
  }
  NoiseStream rng(opts.seed, 0, 0x617667);
  std::vector<double> vals(opts.mc_samples), win(k);
  for (long s = 0; s < opts.mc_samples; ++s) {
    for (auto& v : win) v = site.sample(rng);
    vals[s] = f.eval(win);
  }
  auto ms = mean_se(vals);
  r.value = ms.mean;
  r.se = ms.se;
  r.method = "monte-carlo";
  return r;
}

TildeDerivs tilde_derivs(const Observable& f, const Potential& pot, double u0) {
  const double h = 1e-3 * std::max(1.0, std::fabs(u0));
  auto F = [&](double u) { return ensemble_avg(f, pot, u).value; };
  double f0 = F(u0);
  double p1 = F(u0 + h), m1 = F(u0 - h), p2 = F(u0 + 0.5 * h), m2 = F(u0 - 0.5 * h);
  double d1h = (p1 - m1) / (2 * h), d1h2 = (p2 - m2) / h;
  double d2h = (p1 - 2 * f0 + m1) / (h * h), d2h2 = (p2 - 2 * f0 + m2) / (0.25 * h * h);
  TildeDerivs t;
  t.f0 = f0;
  t.f1 = (4 * d1h2 - d1h) / 3;
  t.f2 = (4 * d2h2 - d2h) / 3;
  return t;
}

TildeDerivs tilde_derivs_gaussian(const Observable& f, double u0) {
  const int d = f.size();
  auto accumulate = [&](const std::vector<double>& w, double wt, TildeDerivs& t) {
    Jet j = f.eval_jet(w);
    double g = 0.0, h = 0.0;
    for (int i = 0; i < d; ++i) {
      g += j.g[i];
      for (int k = 0; k < d; ++k) h += j.hess(i, k);
    }
    t.f0 += wt * j.v;
    t.f1 += wt * g;
    t.f2 += wt * h;
  };
  TildeDerivs t;
  if (f.poly_degree && *f.poly_degree <= 2) {
    std::vector<double> w(d, u0);
    Jet j = f.eval_jet(w);
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += j.hess(i, i);
    accumulate(w, 1.0, t);
    t.f0 += 0.5 * tr;
    return t;
  }
  if (d > 3) throw InvalidArgument("Gaussian derivatives need a window of at most 3 sites");
  const int n = 24;
  QuadRule q = gauss_hermite(n);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  std::vector<int> idx(d, 0);
  std::vector<double> w(d);
  for (std::size_t c = 0; c < total; ++c) {
    double wt = 1.0;
    for (int i = 0; i < d; ++i) {
      w[i] = u0 + q.x[idx[i]];
      wt *= q.w[idx[i]];
    }
    accumulate(w, wt, t);
    for (int i = 0; i < d; ++i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return t;
}

}  // namespace glbg
