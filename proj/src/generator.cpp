#include "glbg/generator.hpp"

#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "glbg/error.hpp"
#include "glbg/parallel.hpp"

namespace glbg {

namespace {

// Partials of f at x0, scattered to torus indices.
struct SitePartials {
  std::vector<std::size_t> site;  // torus index of window slot i
  Jet jet;
};

SitePartials partials(const Observable& f, const TorusField& eta, long x0) {
  SitePartials s;
  s.jet = f.jet_at(eta, x0);
  s.site.resize(f.size());
  for (int i = 0; i < f.size(); ++i) s.site[i] = eta.index(x0 + f.lo() + i);
  return s;
}

std::vector<double> dense_grad(const SitePartials& s, int N) {
  std::vector<double> g(N, 0.0);
  for (std::size_t i = 0; i < s.site.size(); ++i) g[s.site[i]] += s.jet.g[i];
  return g;
}

double second_order_L0(const SitePartials& s, int N) {
  double acc = 0.0;
  int n = static_cast<int>(s.site.size());
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double h = s.jet.hess(i, k);
      if (h == 0.0) continue;
      if (s.site[i] == s.site[k]) acc += h;
      if (s.site[k] == (s.site[i] + N - 1) % N) acc -= h;
    }
  return acc;
}

}  // namespace

double apply_L0(const Observable& f, const TorusField& eta, const Potential& pot, long x0) {
  int N = eta.N();
  auto s = partials(f, eta, x0);
  double acc = second_order_L0(s, N);
  const auto& e = eta.values();
  for (std::size_t i = 0; i < s.site.size(); ++i) {
    std::size_t x = s.site[i];
    double vp = pot.dv(e[(x + 1) % N]), v0 = pot.dv(e[x]), vm = pot.dv(e[(x + N - 1) % N]);
    acc += 0.5 * (vp - 2 * v0 + vm) * s.jet.g[i];
  }
  return acc;
}

double apply_L1(const Observable& f, const TorusField& eta, const Potential& pot,
                const Asymmetry& asym, long x0) {
  int N = eta.N();
  auto s = partials(f, eta, x0);
  const auto& e = eta.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < s.site.size(); ++i) {
    std::size_t x = s.site[i];
    acc += (pot.dv(e[(x + 1) % N]) - pot.dv(e[(x + N - 1) % N])) * s.jet.g[i];
  }
  return asym.gamma * acc;
}

double apply_L(const Observable& f, const TorusField& eta, const Potential& pot,
               const Asymmetry& asym, long x0) {
  return apply_L0(f, eta, pot, x0) + apply_L1(f, eta, pot, asym, x0);
}

double carre_du_champ(const Observable& f, const TorusField& eta, long x0) {
  int N = eta.N();
  auto g = dense_grad(partials(f, eta, x0), N);
  double acc = 0.0;
  for (int x = 0; x < N; ++x) {
    double d = g[x] - g[(x + N - 1) % N];
    acc += d * d;
  }
  return acc;
}

namespace {

void check_local_window(const Observable& f, const LocalField& eta) {
  if (f.lo() < -eta.ell() || f.hi() > eta.ell() - 1)
    throw InvalidArgument("observable window leaves the block");
}

// Gradient and Hessian over block labels -ell..ell-1 (dense, 2 ell).
struct LocalPartials {
  std::vector<double> g;
  std::vector<double> h;
  int n;
  double H(int a, int b) const { return h[a * n + b]; }
};

LocalPartials local_partials(const Observable& f, const LocalField& eta, bool need_hess) {
  check_local_window(f, eta);
  LocalPartials p;
  p.n = eta.size();
  p.g.assign(p.n, 0.0);
  if (need_hess) p.h.assign(p.n * p.n, 0.0);
  Jet j = f.jet_at(eta);
  int off = f.lo() + eta.ell();
  for (int i = 0; i < f.size(); ++i) {
    p.g[off + i] = j.g[i];
    if (need_hess)
      for (int k = 0; k < f.size(); ++k) p.h[(off + i) * p.n + off + k] = j.hess(i, k);
  }
  return p;
}

}  // namespace

double apply_L0_local(const Observable& f, const LocalField& eta, const Potential& pot) {
  auto p = local_partials(f, eta, true);
  const auto& e = eta.values();
  double acc = 0.0;
  // bond x between slots i = x + ell and i - 1
  for (int i = 1; i < p.n; ++i) {
    double second = p.H(i, i) - 2 * p.H(i, i - 1) + p.H(i - 1, i - 1);
    double first = p.g[i] - p.g[i - 1];
    acc += second - (pot.dv(e[i]) - pot.dv(e[i - 1])) * first;
  }
  return 0.5 * acc;
}

double local_gradient_pairing(const Observable& F, const Observable& G, const LocalField& eta) {
  auto a = local_partials(F, eta, false), b = local_partials(G, eta, false);
  double acc = 0.0;
  for (int i = 1; i < a.n; ++i) acc += (a.g[i] - a.g[i - 1]) * (b.g[i] - b.g[i - 1]);
  return acc;
}

namespace {

double torus_pairing(const Observable& F, const Observable& G, const TorusField& eta) {
  int N = eta.N();
  auto a = dense_grad(partials(F, eta, 0), N), b = dense_grad(partials(G, eta, 0), N);
  double acc = 0.0;
  for (int x = 0; x < N; ++x) acc += (a[x] - a[(x + N - 1) % N]) * (b[x] - b[(x + N - 1) % N]);
  return acc;
}

}  // namespace

SymmetryResiduals symmetry_residuals(const Observable& F, const Observable& G, const Potential& pot,
                                     double u, long n_samples, NoiseStream& rng, int N,
                                     double gamma) {
  Asymmetry asym(gamma);
  TiltedSite site(pot, lambda_of_u(pot, u));
  std::vector<double> s0(n_samples), s1(n_samples), gl(n_samples), df(n_samples);
  for (long k = 0; k < n_samples; ++k) {
    TorusField eta(sample_grand_canonical(site, N, rng));
    double f = F.eval_at(eta), g = G.eval_at(eta);
    double l0f = apply_L0(F, eta, pot), l0g = apply_L0(G, eta, pot);
    double l1f = apply_L1(F, eta, pot, asym), l1g = apply_L1(G, eta, pot, asym);
    s0[k] = g * l0f - f * l0g;
    s1[k] = g * l1f + f * l1g;
    gl[k] = -g * l0f;
    df[k] = 0.5 * torus_pairing(F, G, eta);
  }
  return {mean_se(s0), mean_se(s1), mean_se(gl), mean_se(df)};
}

MeanSE torus_dirichlet_form(const Observable& F, const Observable& G, const Potential& pot, double u,
                            long n_samples, NoiseStream& rng, int N) {
  TiltedSite site(pot, lambda_of_u(pot, u));
  std::vector<double> v(n_samples);
  for (long k = 0; k < n_samples; ++k) {
    TorusField eta(sample_grand_canonical(site, N, rng));
    v[k] = 0.5 * torus_pairing(F, G, eta);
  }
  return mean_se(v);
}

MeanSE dirichlet_form(const Observable& F, const Observable& G, CanonicalSampler& sampler,
                      long n_samples) {
  if (sampler.n() % 2 != 0) throw InvalidArgument("block sampler needs an even number of sites");
  int ell = sampler.n() / 2;
  std::vector<double> v(n_samples);
  for (long k = 0; k < n_samples; ++k) {
    LocalField eta(ell, sampler.draw());
    v[k] = 0.5 * local_gradient_pairing(F, G, eta);
  }
  return mean_se(v);
}

DynkinResult dynkin_residual(const Observable& f, const std::vector<TrajectoryRecord>& records,
                             const Potential& pot, const Asymmetry& asym, long x0) {
  DynkinResult out;
  std::vector<double> finals;
  double qv_total = 0.0, gamma_total = 0.0;
  for (const auto& rec : records) {
    if (rec.fields.size() < 2) throw InvalidArgument("trajectory needs at least two states");
    double dt = rec.dt_micro;
    double f0 = f.eval_at(rec.fields[0], x0);
    double lf_prev = apply_L(f, rec.fields[0], pot, asym, x0);
    double gm_prev = carre_du_champ(f, rec.fields[0], x0);
    double drift = 0.0, m_prev = 0.0, qv = 0.0, gint = 0.0;
    for (std::size_t k = 1; k < rec.fields.size(); ++k) {
      const auto& e = rec.fields[k];
      double lf = apply_L(f, e, pot, asym, x0);
      double gm = carre_du_champ(f, e, x0);
      drift += 0.5 * dt * (lf_prev + lf);
      gint += 0.5 * dt * (gm_prev + gm);
      double m = f.eval_at(e, x0) - f0 - drift;
      qv += (m - m_prev) * (m - m_prev);
      m_prev = m;
      lf_prev = lf;
      gm_prev = gm;
    }
    finals.push_back(m_prev);
    qv_total += qv;
    gamma_total += gint;
    out.per_path_ratio.push_back(gint > 0 ? qv / gint : 0.0);
  }
  out.residual = mean_se(finals);
  out.qv_ratio = gamma_total > 0 ? qv_total / gamma_total : 0.0;
  return out;
}

double LinearFunctional::eval(const TorusField& eta) const {
  if (static_cast<int>(a.size()) != eta.N()) throw InvalidArgument("functional size mismatch");
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * (eta.values()[i] - u0);
  return pairwise_sum(t);
}

Observable LinearFunctional::as_observable() const {
  auto c = a;
  double m = u0;
  int n = static_cast<int>(c.size());
  auto f = Observable::make("linear", 1, n, [c, m, n](const auto* w) {
    auto s = (w[0] - m) * c[0];
    for (int i = 1; i < n; ++i) s = s + (w[i] - m) * c[i];
    return s;
  });
  f.poly_degree = 1;
  return f;
}

LinearFunctional poisson_solve_linear(const LinearFunctional& a, int N) {
  if (static_cast<int>(a.a.size()) != N) throw InvalidArgument("functional size mismatch");
  double sum = 0.0, scale = 0.0;
  for (double v : a.a) {
    sum += v;
    scale += std::fabs(v);
  }
  if (std::fabs(sum) > 1e-12 * std::max(1.0, scale))
    throw InvalidArgument("Poisson right-hand side must have zero coefficient sum");
  LinearFunctional b;
  b.u0 = a.u0;
  if (scale == 0.0) {
    b.a.assign(N, 0.0);
    return b;
  }
  // -1/2 Delta is diagonal in Fourier space with eigenvalue 1 - cos(2 pi k / N)
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> A;
  fft.fwd(A, a.a);
  A[0] = 0.0;
  for (int k = 1; k < N; ++k) A[k] /= 1.0 - std::cos(2 * M_PI * k / N);
  fft.inv(b.a, A);
  b.a.resize(N);
  double mean = pairwise_sum(b.a) / N;
  for (double& v : b.a) v -= mean;

  double res = 0.0;
  for (int x = 0; x < N; ++x) {
    double lap = b.a[(x + 1) % N] - 2 * b.a[x] + b.a[(x + N - 1) % N];
    res = std::max(res, std::fabs(0.5 * lap + a.a[x]));
  }
  if (res > 1e-10 * std::max(1.0, scale)) throw NumericFailure("Poisson residual too large");
  return b;
}

double gamma_linear(const LinearFunctional& b) {
  int N = static_cast<int>(b.a.size());
  double acc = 0.0;
  for (int x = 0; x < N; ++x) {
    double d = b.a[x] - b.a[(x + N - 1) % N];
    acc += d * d;
  }
  return acc;
}

ItoTanakaResult ito_tanaka_ratio(const LinearFunctional& a, const Asymmetry& asym, int N,
                                 const ItoTanakaOptions& o) {
  if (o.p < 2) throw InvalidArgument("ito_tanaka_ratio needs p >= 2");
  if (o.T <= 0 || o.h_micro <= 0 || o.batch < 2) throw InvalidArgument("bad Ito-Tanaka options");
  auto b = poisson_solve_linear(a, N);
  double gam = gamma_linear(b);
  ItoTanakaResult r;
  r.rhs = std::pow(N, -o.p) * std::pow(o.T, (o.p - 2) / 2) * o.T * std::pow(gam, o.p / 2);
  double scale = 0.0;
  for (double v : a.a) scale += std::fabs(v);
  if (scale == 0.0) return r;

  const double micro = o.T * N * N;
  const long steps = static_cast<long>(std::ceil(micro / o.h_micro));
  const double h = micro / steps;
  const double hd = h / (double(N) * N);  // diffusive length of one step
  auto pot = Potential::quadratic();
  std::vector<double> lhs(o.batch);
  parallel_for(
      o.batch,
      [&](long k) {
        NoiseStream noise(o.seed, static_cast<std::uint64_t>(k), 0x49544f);
        auto eta = sample_grand_canonical(pot, a.u0, N, noise);
        GaussianPropagator prop(N, asym, h);
        std::vector<double> buf(N);
        auto va = [&](const std::vector<double>& e) {
          double s = 0.0;
          for (int i = 0; i < N; ++i) s += a.a[i] * (e[i] - a.u0);
          return s;
        };
        prop.load(eta);
        double prev = va(eta), integral = 0.0, sup = 0.0;
        for (long s = 0; s < steps; ++s) {
          prop.advance(noise);
          prop.unload(buf);
          double cur = va(buf);
          integral += 0.5 * hd * (prev + cur);
          sup = std::max(sup, std::fabs(integral));
          prev = cur;
        }
        lhs[k] = std::pow(sup, o.p);
      },
      o.threads > 0 ? o.threads : default_threads());
  auto m = mean_se(lhs);
  r.lhs = m.mean;
  r.lhs_se = m.se;
  r.ratio = r.lhs / r.rhs;
  r.ratio_se = r.lhs_se / r.rhs;
  return r;
}

}  // namespace glbg
