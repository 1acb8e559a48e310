#include "glbg/eoe.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>

#include <Eigen/Dense>

#include "glbg/error.hpp"
#include "glbg/field.hpp"
#include "glbg/parallel.hpp"
#include "glbg/quadrature.hpp"
#include "glbg/stats.hpp"

namespace glbg {

std::string to_string(EoEMethod m) { return m == EoEMethod::Analytic ? "analytic" : "mc"; }

EoEMethod eoe_method_from_string(const std::string& s) {
  if (s == "analytic") return EoEMethod::Analytic;
  if (s == "mc" || s == "monte-carlo") return EoEMethod::MonteCarlo;
  throw InvalidArgument("unknown EoE method: " + s);
}

namespace {
constexpr int kChebDegree = 40;
constexpr int kHermite = 12;
}  // namespace

ConditionalExpectation::ConditionalExpectation(const Observable& f, const Potential& pot, int ell,
                                               double u0, const CondExpOptions& opts)
    : f_(f), pot_(pot), ell_(ell), u0_(u0), opts_(opts) {
  if (ell < 1) throw InvalidArgument("ell must be positive");
  if (f.lo() < -ell || f.hi() > ell - 1) throw InvalidArgument("observable window leaves the block");
  sd_ = std::sqrt(variance(pot, u0) / (2.0 * ell));

  if (opts.method == EoEMethod::Analytic) {
    if (!pot.is_quadratic()) throw UnsupportedPotential("analytic conditioning needs quadratic V");
    int d = f.size();
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(d, d).array() - 1.0 / (2.0 * ell);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::MatrixXd S = es.eigenvectors() * lam.asDiagonal();
    chol_.assign(S.data(), S.data() + d * d);  // column-major d x d
    build_chebyshev();
    return;
  }

  int G = std::max(2, opts.grid_points);
  grid_.resize(G);
  gval_.resize(G);
  gse_.resize(G);
  for (int j = 0; j < G; ++j) grid_[j] = u0 - 5 * sd_ + 10 * sd_ * j / (G - 1);
  parallel_for(
      G,
      [&](std::size_t j) {
        NoiseStream rng(opts.seed, static_cast<std::uint64_t>(ell) * 1000 + j, 0x434f4e44);
        CanonicalSampler cs(pot, 2 * ell, grid_[j], rng);
        std::vector<double> v(opts.samples_per_point);
        for (auto& x : v) x = f.eval_at(LocalField(ell, cs.draw()));
        auto ms = mean_se(v);
        gval_[j] = ms.mean;
        gse_[j] = ms.se;
      },
      opts.threads > 0 ? opts.threads : default_threads());
}

double ConditionalExpectation::gaussian_expect(double m) const {
  int d = f_.size();
  std::vector<double> mean(d, m);
  if (f_.poly_degree && *f_.poly_degree <= 2) {
    Jet j = f_.eval_jet(mean);
    double tr = 0.0;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) tr += j.hess(i, k) * ((i == k ? 1.0 : 0.0) - 1.0 / (2.0 * ell_));
    return j.v + 0.5 * tr;
  }
  if (d > 4) throw InvalidObservable("analytic conditioning of a nonpolynomial observable needs <= 4 sites");
  const QuadRule& q = gauss_hermite(kHermite);
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= kHermite;
  std::vector<int> idx(d, 0);
  std::vector<double> z(d), w(d), terms;
  terms.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    double wt = 1.0;
    for (int i = 0; i < d; ++i) {
      z[i] = q.x[idx[i]];
      wt *= q.w[idx[i]];
    }
    for (int i = 0; i < d; ++i) {
      double s = m;
      for (int k = 0; k < d; ++k) s += chol_[k * d + i] * z[k];
      w[i] = s;
    }
    terms.push_back(wt * f_.eval(w));
    for (int i = 0; i < d; ++i) {
      if (++idx[i] < kHermite) break;
      idx[i] = 0;
    }
  }
  return pairwise_sum(terms);
}

void ConditionalExpectation::build_chebyshev() {
  a_ = u0_ - 10 * sd_;
  b_ = u0_ + 10 * sd_;
  int deg = (f_.poly_degree && *f_.poly_degree <= 2) ? 2 : kChebDegree;
  int n = deg + 1;
  std::vector<double> fv(n);
  for (int j = 0; j < n; ++j) {
    double t = std::cos(std::numbers::pi * (j + 0.5) / n);
    fv[j] = gaussian_expect(0.5 * (a_ + b_) + 0.5 * (b_ - a_) * t);
  }
  cheb_.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += fv[j] * std::cos(std::numbers::pi * k * (j + 0.5) / n);
    cheb_[k] = 2.0 * s / n;
  }
  cheb_[0] *= 0.5;
}

double ConditionalExpectation::direct(double m) const {
  if (opts_.method != EoEMethod::Analytic) throw InvalidArgument("direct evaluation is analytic only");
  return gaussian_expect(m);
}

double ConditionalExpectation::value(double m) const {
  if (opts_.method == EoEMethod::Analytic) {
    if (m < a_ || m > b_) return gaussian_expect(m);
    double t = (2 * m - a_ - b_) / (b_ - a_);
    // Clenshaw
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(cheb_.size()) - 1; k >= 1; --k) {
      double b0 = 2 * t * b1 - b2 + cheb_[k];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + cheb_[0];
  }
  std::size_t G = grid_.size();
  std::size_t j = std::upper_bound(grid_.begin(), grid_.end(), m) - grid_.begin();
  j = std::clamp<std::size_t>(j, 1, G - 1);
  double w = (m - grid_[j - 1]) / (grid_[j] - grid_[j - 1]);
  return (1 - w) * gval_[j - 1] + w * gval_[j];
}

ConditionalExpectation cond_exp(const Observable& f, int ell, double u0, const Potential& pot,
                                const CondExpOptions& opts) {
  return ConditionalExpectation(f, pot, ell, u0, opts);
}

namespace {

// Law of the block mean on the MC grid: the exact Gaussian for quadratic V,
// otherwise a Gaussian kernel estimate from grand-canonical block draws.
std::vector<double> grid_weights(const ConditionalExpectation& ce, const Potential& pot,
                                 const EoEOptions& opts) {
  const auto& g = ce.grid();
  std::vector<double> w(g.size());
  if (pot.is_quadratic()) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      double z = (g[j] - ce.u0()) / ce.block_sd();
      w[j] = std::exp(-0.5 * z * z);
    }
  } else {
    NoiseStream rng(opts.cond.seed, static_cast<std::uint64_t>(ce.ell()), 0x4c4157);
    TiltedSite site(pot, lambda_of_u(pot, ce.u0()));
    std::vector<double> means(opts.law_samples);
    for (auto& m : means) {
      auto x = sample_grand_canonical(site, 2 * ce.ell(), rng);
      m = pairwise_sum(x) / x.size();
    }
    auto ms = mean_se(means);
    double sd = ms.se * std::sqrt(static_cast<double>(means.size()));
    double bw = 1.06 * sd * std::pow(static_cast<double>(means.size()), -0.2);
    for (std::size_t j = 0; j < g.size(); ++j) {
      double s = 0.0;
      for (double m : means) {
        double z = (g[j] - m) / bw;
        s += std::exp(-0.5 * z * z);
      }
      w[j] = s;
    }
  }
  double tot = 0.0;
  for (double v : w) tot += v;
  for (double& v : w) v /= tot;
  return w;
}

template <class Resid>
EoEValue residual_norm(const ConditionalExpectation& ce, const Potential& pot, double p,
                       const EoEOptions& opts, Resid resid) {
  EoEValue out;
  out.method = to_string(ce.method());
  if (ce.method() == EoEMethod::Analytic) {
    const QuadRule& q = gauss_hermite(64);
    std::vector<double> terms(q.x.size());
    for (std::size_t i = 0; i < q.x.size(); ++i) {
      double m = ce.u0() + ce.block_sd() * q.x[i];
      terms[i] = q.w[i] * std::pow(std::fabs(resid(m, ce.value(m))), p);
    }
    out.norm = std::pow(std::max(0.0, pairwise_sum(terms)), 1.0 / p);
    return out;
  }
  auto w = grid_weights(ce, pot, opts);
  const auto& g = ce.grid();
  std::vector<double> r(g.size());
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    r[j] = resid(g[j], ce.grid_values()[j]);
    s += w[j] * std::pow(std::fabs(r[j]), p);
  }
  out.norm = std::pow(s, 1.0 / p);
  if (out.norm > 0) {
    // delta method: dN/dR_j = N^{1-p} w_j |R_j|^{p-1} sign(R_j)
    double v = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      double d = std::pow(out.norm, 1 - p) * w[j] * std::pow(std::fabs(r[j]), p - 1);
      v += d * d * ce.grid_se()[j] * ce.grid_se()[j];
    }
    out.se = std::sqrt(v);
  }
  return out;
}

}  // namespace

EoEValue eoe_residual_second(const Observable& f, int ell, double u0, double p,
                             const Potential& pot, const EoEOptions& opts) {
  auto t = tilde_derivs(f, pot, u0);
  if (std::fabs(t.f0) > opts.precondition_tol || std::fabs(t.f1) > opts.precondition_tol)
    throw InvalidObservable("second-order residual needs f~(u0) = f~'(u0) = 0");
  if (opts.cond.method == EoEMethod::Analytic) t = tilde_derivs_gaussian(f, u0);
  double var = variance(pot, u0);
  ConditionalExpectation ce(f, pot, ell, u0, opts.cond);
  return residual_norm(ce, pot, p, opts, [&](double m, double e) {
    return e - 0.5 * t.f2 * ((m - u0) * (m - u0) - var / (2.0 * ell + 1));
  });
}

EoEValue eoe_residual_first(const Observable& f, int ell, double u0, double p,
                            const Potential& pot, const EoEOptions& opts) {
  auto t = tilde_derivs(f, pot, u0);
  if (std::fabs(t.f0) > opts.precondition_tol)
    throw InvalidObservable("first-order residual needs f~(u0) = 0");
  if (opts.cond.method == EoEMethod::Analytic) t = tilde_derivs_gaussian(f, u0);
  ConditionalExpectation ce(f, pot, ell, u0, opts.cond);
  return residual_norm(ce, pot, p, opts, [&](double m, double e) { return e - (m - u0) * t.f1; });
}

void EoECurve::validate() const {
  if (ells.size() != norms.size()) throw InvalidCurve("ell and norm lists differ in length");
  for (std::size_t i = 1; i < ells.size(); ++i)
    if (ells[i] <= ells[i - 1]) throw InvalidCurve("ell must be strictly increasing");
  for (double n : norms)
    if (!(n >= 0)) throw InvalidCurve("norms must be nonnegative");
}

void EoECurve::write_csv(std::ostream& os) const {
  os << "ell,norm,stderr,method\n" << std::setprecision(17);
  for (std::size_t i = 0; i < ells.size(); ++i)
    os << ells[i] << ',' << norms[i] << ',' << (i < se.size() ? se[i] : 0.0) << ',' << method << '\n';
}

SlopeFit scaling_exponent(const EoECurve& c) {
  c.validate();
  if (c.ells.size() < 4) throw InvalidCurve("scaling fit needs at least 4 points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < c.ells.size(); ++i) {
    if (!(c.norms[i] > 0)) throw InvalidCurve("scaling fit needs positive norms");
    x.push_back(std::log(static_cast<double>(c.ells[i])));
    y.push_back(std::log(c.norms[i]));
  }
  auto fit = fit_line(x, y);
  return {fit.slope, fit.slope_se};
}

EoECurve eoe_curve(const Observable& f, const std::vector<int>& ells, double u0, double p, int order,
                   const Potential& pot, const EoEOptions& opts) {
  if (order != 1 && order != 2) throw InvalidArgument("order must be 1 or 2");
  EoECurve c;
  c.order = order;
  c.p = p;
  c.method = to_string(opts.cond.method);
  for (int ell : ells) {
    auto v = order == 2 ? eoe_residual_second(f, ell, u0, p, pot, opts)
                        : eoe_residual_first(f, ell, u0, p, pot, opts);
    c.ells.push_back(ell);
    c.norms.push_back(v.norm);
    c.se.push_back(v.se);
  }
  c.validate();
  if (c.ells.size() >= 4 && std::all_of(c.norms.begin(), c.norms.end(), [](double n) { return n > 0; })) {
    auto s = scaling_exponent(c);
    c.slope = s.slope;
    c.slope_se = s.se;
  }
  return c;
}

std::vector<CltRow> clt_block_check(const Potential& pot, double u0, const std::vector<int>& ells,
                                    double p, long samples, std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("need at least two samples");
  std::vector<CltRow> rows;
  for (int ell : ells) {
    NoiseStream rng(seed, static_cast<std::uint64_t>(ell), 0x434c54);
    std::vector<double> ap(samples), x2(samples), x4(samples);
    for (long k = 0; k < samples; ++k) {
      auto x = sample_grand_canonical(pot, u0, 2 * ell, rng);
      double d = pairwise_sum(x) / (2.0 * ell) - u0;
      ap[k] = std::pow(std::fabs(d), p);
      x2[k] = d * d;
      x4[k] = x2[k] * x2[k];
    }
    CltRow r;
    r.ell = ell;
    auto a = mean_se(ap);
    double sq = std::sqrt(static_cast<double>(ell));
    r.scaled_norm = std::pow(a.mean, 1.0 / p) * sq;
    r.scaled_norm_se = std::pow(a.mean, 1.0 / p - 1) * a.se / p * sq;
    auto A = mean_se(x4), B = mean_se(x2);
    r.m4_ratio = A.mean / (B.mean * B.mean);
    // delta method on (E X^4, E X^2) with their sample covariance
    double cov = 0.0;
    for (long k = 0; k < samples; ++k) cov += (x4[k] - A.mean) * (x2[k] - B.mean);
    cov /= static_cast<double>(samples - 1) * samples;
    double ga = 1 / (B.mean * B.mean), gb = -2 * A.mean / (B.mean * B.mean * B.mean);
    r.m4_ratio_se = std::sqrt(std::max(0.0, ga * ga * A.se * A.se + gb * gb * B.se * B.se + 2 * ga * gb * cov));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace glbg
