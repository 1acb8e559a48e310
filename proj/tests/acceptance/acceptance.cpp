// Acceptance run: one PASS/FAIL line per criterion, details indented below it.
// Exit code 1 when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glbg/bg.hpp"
#include "glbg/chain.hpp"
#include "glbg/dynamics.hpp"
#include "glbg/eoe.hpp"
#include "glbg/generator.hpp"
#include "glbg/measures.hpp"
#include "glbg/observable.hpp"
#include "glbg/stats.hpp"

using namespace glbg;

namespace {

struct Report {
  std::vector<std::string> lines;
  bool ok = true;
  void note(const std::string& s) { lines.push_back(s); }
  void check(bool c, const std::string& s) {
    ok = ok && c;
    lines.push_back(std::string(c ? "ok   " : "BAD  ") + s);
  }
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double zscore(const MeanSE& m, double target) {
  if (m.se == 0) return m.mean == target ? 0.0 : INFINITY;
  return std::fabs(m.mean - target) / m.se;
}

bool all_pass = true;

void criterion(int k, const std::string& name, const std::function<void(Report&)>& body) {
  Report r;
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.check(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  all_pass = all_pass && r.ok;
  std::cout << (r.ok ? "PASS" : "FAIL") << " criterion " << k << ": " << name << fmt(" (%.1f s)", secs)
            << '\n';
  for (const auto& l : r.lines) std::cout << "    " << l << '\n';
  std::cout.flush();
}

// ---------------------------------------------------------------- 1
void conservation(Report& r) {
  const int N = 128;
  const long steps = 1000000;
  for (auto pot : {Potential::quadratic(), Potential::quadratic_cos(0.5)}) {
    for (double gm : {0.0, 0.5, 2.0}) {
      NoiseStream n(1, 0, 0x4143434fULL);
      auto e0 = sample_grand_canonical(pot, 0.3, N, n);
      const double m0 = pairwise_sum(e0) / N;
      EulerTorus eu(pot, Asymmetry(gm), e0);
      const double dt = default_dt(pot) / (1 + 2 * gm);
      double worst = 0.0;
      for (long k = 0; k < steps; ++k) {
        eu.step(dt, n);
        if (k % 10 == 9) worst = std::max(worst, std::fabs(pairwise_sum(eu.state()) / N - m0));
      }
      r.check(worst <= 1e-9 && eu.finite(),
              fmt("%s gamma=%.1f dt=%.3g: max drift %.3e", pot.name().c_str(), gm, dt, worst));
    }
  }
}

// ---------------------------------------------------------------- 2
void moment_checks(Report& r, const std::vector<double>& x, const std::string& tag) {
  const double target[4] = {0, 1, 0, 3};
  std::string s = tag + ":";
  bool ok = true;
  for (int k = 1; k <= 4; ++k) {
    std::vector<double> v(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v[i] = std::pow(x[i], k);
    auto m = mean_se(v);
    double z = zscore(m, target[k - 1]);
    ok = ok && z <= 4.0;
    s += fmt(" m%d=%.4f(z=%.2f)", k, m.mean, z);
  }
  r.check(ok, s);
}

void stationarity(Report& r) {
  auto pot = Potential::quadratic();
  {
    const int N = 64, R = 2000;
    const double T = 1.0;
    for (double gm : {0.0, 2.0}) {
      std::vector<double> x(R);
      for (int k = 0; k < R; ++k) {
        NoiseStream n(2, k, 0x41535441ULL);
        auto e0 = sample_grand_canonical(pot, 0.0, N, n);
        SimulateOptions so;
        so.integrator = Integrator::Exact;
        auto rec = simulate(TorusField(e0), pot, Asymmetry(gm), T, 1.0, {0.0, T}, n, so);
        x[k] = rec.fields.back().at(1);
      }
      moment_checks(r, x, fmt("exact N=%d T=%.0f R=%d gamma=%.0f", N, T, R, gm));
    }
  }
  // The Euler path on a smaller torus, so its O(dt) bias stays below the SE.
  {
    const int N = 16, R = 1000;
    const double T = 1.0, dt = 0.01;
    for (double gm : {0.0, 2.0}) {
      std::vector<double> x(R);
      for (int k = 0; k < R; ++k) {
        NoiseStream n(2, k, 0x45535441ULL);
        auto e0 = sample_grand_canonical(pot, 0.0, N, n);
        auto rec = simulate(TorusField(e0), pot, Asymmetry(gm), T, dt, {0.0, T}, n);
        x[k] = rec.fields.back().at(1);
      }
      moment_checks(r, x, fmt("euler N=%d T=%.0f dt=%.2g R=%d gamma=%.0f", N, T, dt, R, gm));
    }
  }
}

// ---------------------------------------------------------------- 3
void strong_order(Report& r) {
  for (double gm : {0.0, 0.5}) {
    auto s = strong_order_study(32, Asymmetry(gm), 0.1, {4e-4, 2e-4, 1e-4}, 40, 3);
    r.check(s.slope >= 0.8 && s.slope <= 1.2,
            fmt("gamma=%.1f errors %.3e %.3e %.3e slope %.3f", gm, s.errors[0], s.errors[1], s.errors[2],
                s.slope));
  }
}

// ---------------------------------------------------------------- 4
void eoe_exact(Report& r) {
  auto pot = Potential::quadratic();
  for (double u0 : {0.0, 0.7}) {
    auto f = make_observable("centered_square", u0);
    for (int ell : {1, 2, 4, 8, 16, 64}) {
      double want = 1.0 / (2.0 * ell * (2 * ell + 1));
      for (double p : {2.0, 4.0}) {
        auto v = eoe_residual_second(f, ell, u0, p, pot);
        r.check(std::fabs(v.norm - want) <= 1e-12,
                fmt("analytic u0=%.1f ell=%d p=%.0f: %.15f vs %.15f", u0, ell, p, v.norm, want));
      }
    }
  }
  auto f = make_observable("centered_square", 0.0);
  EoEOptions o;
  o.cond.method = EoEMethod::MonteCarlo;
  o.cond.samples_per_point = 200000;
  o.cond.seed = 4;
  for (int ell : {4, 8}) {
    double want = 1.0 / (2.0 * ell * (2 * ell + 1));
    auto v = eoe_residual_second(f, ell, 0.0, 2.0, pot, o);
    double z = std::fabs(v.norm - want) / v.se;
    r.check(z <= 4.0, fmt("monte-carlo ell=%d: %.6f +- %.2e vs %.6f (z=%.2f)", ell, v.norm, v.se, want, z));
  }
}

// ---------------------------------------------------------------- 5
void eoe_rates(Report& r) {
  auto pot = Potential::quadratic();
  const std::vector<int> ells{4, 8, 16, 32, 64};
  for (double p : {2.0, 4.0}) {
    for (const char* name : {"centered_square", "sin_pair"}) {
      auto c = eoe_curve(make_observable(name, 0.0), ells, 0.0, p, 2, pot);
      r.check(c.slope <= -1.4, fmt("second order %s p=%.0f: slope %.3f", name, p, c.slope));
    }
    for (const char* name : {"pair", "centered_square"}) {
      auto c = eoe_curve(make_observable(name, 0.0), ells, 0.0, p, 1, pot);
      r.check(c.slope >= -1.2 && c.slope <= -0.8, fmt("first order %s p=%.0f: slope %.3f", name, p, c.slope));
    }
  }
}

// ---------------------------------------------------------------- 6
void chain_bounds(Report& r) {
  NoiseStream rng(6, 0, 0x41434841ULL);
  double worst_lower = -INFINITY, worst_upper = -INFINITY, worst_kappa = INFINITY, worst_k2 = 0.0;
  int instances = 0, bad = 0;
  for (int k = 0; k < 200; ++k) {
    auto ch = random_chain(rng, 2, 8);
    Eigen::VectorXd f(ch.n());
    for (int i = 0; i < ch.n(); ++i) f[i] = rng.normal();
    f.array() -= pi_mean(f, ch.pi);
    for (double p : {4.0 / 3, 2.0, 4.0}) {
      auto b = variational_bounds(ch, f, p, rng);
      double q = p / (p - 1);
      double kp = kappa(ch.pi, q, rng);
      ++instances;
      bool ok = b.lower <= b.value + 1e-9 && b.value <= 2 * b.lower && kp >= 0.5 - 1e-12;
      bad += !ok;
      worst_lower = std::max(worst_lower, b.lower - b.value);
      worst_upper = std::max(worst_upper, b.value / b.lower);
      worst_kappa = std::min(worst_kappa, kp);
      if (p == 2.0) worst_k2 = std::max(worst_k2, std::fabs(kp - 1));
    }
  }
  r.check(bad == 0, fmt("%d/%d instances satisfy all bounds", instances - bad, instances));
  r.check(worst_lower <= 1e-9, fmt("max(lower - value) = %.3e", worst_lower));
  r.check(worst_upper <= 2.0, fmt("max(value / lower) = %.6f", worst_upper));
  r.check(worst_kappa >= 0.5 - 1e-12, fmt("min kappa = %.6f", worst_kappa));
  r.check(worst_k2 <= 1e-10, fmt("max |kappa(., 2) - 1| = %.3e", worst_k2));
}

// ---------------------------------------------------------------- 7
void lps_identities(Report& r) {
  NoiseStream rng(7, 0, 0x414c5053ULL);
  double plain = 0.0, shifted = 0.0;
  for (int k = 0; k < 50; ++k) {
    auto ch = random_chain(rng, 2, 8);
    plain = std::max(plain, lps_best_constants(ch, 2.0, 200, rng).p2_error);
    shifted = std::max(shifted, shifted_lps_check(ch, 2.0, 200, rng).p2_identity_error);
  }
  r.check(plain <= 1e-10, fmt("plain p=2 identity: max error %.3e", plain));
  r.check(shifted <= 1e-10, fmt("shifted p=2 identity: max error %.3e", shifted));

  for (auto pot : {Potential::quadratic(), Potential::quadratic_cos(0.3)}) {
    for (const char* name : {"mixed3", "sin_pair"}) {
      auto f = make_observable(name, 0.0);
      const int ell = 3;
      NoiseStream r1(7, 1, 0x47524144ULL), r2(7, 2, 0x47524144ULL);
      CanonicalSampler s1(pot, 2 * ell, 0.2, r1), s2(pot, 2 * ell, 0.2, r2);
      const long n = 40000;
      std::vector<double> a(n);
      for (long i = 0; i < n; ++i) {
        LocalField e(ell, s1.draw());
        a[i] = local_gradient_pairing(f, f, e);
      }
      auto A = mean_se(a);
      auto D = dirichlet_form(f, f, s2, n);
      double z = std::fabs(A.mean - 2 * D.mean) / std::hypot(A.se, 2 * D.se);
      r.check(z <= 4.0, fmt("%s %s: E|grad* D f|^2 = %.5f, 2 D(f,f) = %.5f (z=%.2f)", pot.name().c_str(), name,
                            A.mean, 2 * D.mean, z));
    }
  }
}

// ---------------------------------------------------------------- 8
void spectral_gap_check(Report& r) {
  double lo = INFINITY, hi = 0.0;
  for (int ell : {8, 16, 32}) {
    double g1 = quadratic_local_gap(ell), g2 = quadratic_local_gap(2 * ell);
    double ratio = g2 / g1;
    r.check(ratio >= 0.2 && ratio <= 0.3, fmt("ell=%d: gap(2 ell)/gap(ell) = %.5f", ell, ratio));
  }
  for (int ell : {8, 16, 32, 64}) {
    double s = quadratic_local_gap(ell) * ell * ell;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    r.note(fmt("ell=%d: gap * ell^2 = %.5f", ell, s));
  }
  r.check(hi / lo <= 2.0, fmt("gap * ell^2 spread max/min = %.4f", hi / lo));
}

// ---------------------------------------------------------------- 9
void dynkin_ito(Report& r) {
  const int N = 32, paths = 100;
  const long steps = 2000;
  const double dt = 1e-4;
  for (auto pot : {Potential::quadratic(), Potential::quadratic_cos(0.3)}) {
    for (double gm : {0.0, 2.0}) {
      std::vector<TrajectoryRecord> recs;
      for (int k = 0; k < paths; ++k) {
        NoiseStream n(9, k, 0x4144594eULL);
        auto e0 = sample_grand_canonical(pot, 0.0, N, n);
        recs.push_back(simulate_fine(TorusField(e0), pot, Asymmetry(gm), steps, dt, n));
      }
      for (const char* name : {"eta0", "pair"}) {
        auto res = dynkin_residual(make_observable(name, 0.0), recs, pot, Asymmetry(gm));
        double z = zscore(res.residual, 0.0);
        r.check(z <= 4.0 && res.qv_ratio >= 0.95 && res.qv_ratio <= 1.05,
                fmt("dynkin %s %s gamma=%.0f: residual %.3e +- %.2e (z=%.2f), qv_ratio %.4f", pot.name().c_str(),
                    name, gm, res.residual.mean, res.residual.se, z, res.qv_ratio));
      }
    }
  }

  double lo = INFINITY, hi = 0.0;
  std::vector<std::vector<double>> ratio(2);
  for (int N : {32, 64, 128}) {
    LinearFunctional a{std::vector<double>(N, 0.0)};
    a.a[N - 1] = 1.0;  // label 0
    a.a[0] = -1.0;     // label 1
    for (int g = 0; g < 2; ++g) {
      ItoTanakaOptions o;
      o.seed = 9;
      auto it = ito_tanaka_ratio(a, Asymmetry(g == 0 ? 0.0 : 2.0), N, o);
      ratio[g].push_back(it.ratio);
      lo = std::min(lo, it.ratio);
      hi = std::max(hi, it.ratio);
      r.note(fmt("ito-tanaka N=%d gamma=%d: lhs %.4e +- %.2e, rhs %.4e, ratio %.4f", N, g == 0 ? 0 : 2, it.lhs,
                 it.lhs_se, it.rhs, it.ratio));
    }
  }
  for (int g = 0; g < 2; ++g) {
    auto [mn, mx] = std::minmax_element(ratio[g].begin(), ratio[g].end());
    r.check(*mx / *mn <= 2.0, fmt("ito-tanaka gamma=%d: spread across N %.3f", g == 0 ? 0 : 2, *mx / *mn));
  }
  for (std::size_t i = 0; i < ratio[0].size(); ++i) {
    double s = std::max(ratio[0][i], ratio[1][i]) / std::min(ratio[0][i], ratio[1][i]);
    r.check(s <= 2.0, fmt("ito-tanaka N=%d: spread across gamma %.3f", 32 << i, s));
    // Long-run variance of the integral, mode by mode: weight |a_k|^2 d/(d^2 + w^2)
    // with d = 1 - cos k, w = 2 gamma sin k. The fourth moment scales as its square.
    const int N = 32 << i;
    double v0 = 0, v2 = 0;
    for (int j = 1; j < N; ++j) {
      double k = 2 * M_PI * j / N, d = 1 - std::cos(k), w = 4 * std::sin(k), a2 = 2 * d;
      v0 += a2 / d;
      v2 += a2 * d / (d * d + w * w);
    }
    r.note(fmt("[info] N=%d: gamma=2/gamma=0 ratio %.4f, Gaussian long-time prediction %.4f", N,
               ratio[1][i] / ratio[0][i], (v2 / v0) * (v2 / v0)));
  }
}

// ---------------------------------------------------------------- 10
void bg_suite(Report& r) {
  BGConfig cfg;  // pair observable, N=128, T=0.5, p=4, R=500, ells {4, 8, 16}
  cfg.validate();
  auto res = bg_moments(cfg, {2, 1});
  const auto& b2 = res[0];
  const auto& b1 = res[1];
  for (std::size_t i = 0; i < b2.rows.size(); ++i)
    r.note(fmt("ell=%d: second %.4f +- %.4f, first %.4f +- %.4f", b2.rows[i].ell, b2.rows[i].estimate,
               b2.rows[i].se, b1.rows[i].estimate, b1.rows[i].se));
  r.check(b2.nonincreasing(), "second-order moment nonincreasing within SE");
  for (std::size_t i = 0; i < b2.rows.size(); ++i)
    r.check(b1.rows[i].estimate > b2.rows[i].estimate,
            fmt("ell=%d: first-order exceeds second-order", b2.rows[i].ell));

  auto tv = turnover_scan(cfg, {64, 128, 256});
  for (const auto& row : tv.rows)
    r.note(fmt("turnover N=%d ell=%d: %.4f +- %.4f", row.N, row.ell, row.estimate, row.se));
  r.check(tv.nonincreasing, "turnover nonincreasing in N");

  // Informational: with the exact block variance in the correction the mean
  // offset disappears and the first-order gap shows at every ell.
  BGConfig blk = cfg;
  blk.centering = "block";
  blk.R = 100;
  auto rb = bg_moments(blk, {2, 1});
  for (std::size_t i = 0; i < rb[0].rows.size(); ++i)
    r.note(fmt("[info, block centering, R=100] ell=%d: second %.4f, first %.4f", rb[0].rows[i].ell,
               rb[0].rows[i].estimate, rb[1].rows[i].estimate));
}

// ---------------------------------------------------------------- 11
void symmetry(Report& r) {
  const std::vector<std::pair<const char*, const char*>> pairs{
      {"pair", "centered_square"}, {"sin_pair", "cos0"}, {"mixed3", "eta0"}};
  for (auto pot : {Potential::quadratic(), Potential::quadratic_cos(0.3)}) {
    for (double gm : {0.0, 1.0}) {
      for (const auto& [a, b] : pairs) {
        NoiseStream rng(11, 0, 0x4153594dULL);
        auto s = symmetry_residuals(make_observable(a, 0.0), make_observable(b, 0.0), pot, 0.0, 40000, rng, 8, gm);
        double z0 = zscore(s.s0, 0.0), z1 = zscore(s.s1, 0.0);
        r.check(z0 <= 4.0 && z1 <= 4.0, fmt("%s %s/%s gamma=%.0f: s0 %.3e (z=%.2f), s1 %.3e (z=%.2f)",
                                            pot.name().c_str(), a, b, gm, s.s0.mean, z0, s.s1.mean, z1));
      }
    }
  }
}

}  // namespace

int main() {
  criterion(1, "conservation of the mean under Euler", conservation);
  criterion(2, "stationarity of the grand canonical measure", stationarity);
  criterion(3, "strong order of the Euler scheme", strong_order);
  criterion(4, "exact equivalence-of-ensembles residual", eoe_exact);
  criterion(5, "equivalence-of-ensembles rates", eoe_rates);
  criterion(6, "variational bounds and kappa on random chains", chain_bounds);
  criterion(7, "p=2 square-root identities", lps_identities);
  criterion(8, "local spectral gap scaling", spectral_gap_check);
  criterion(9, "Dynkin martingale and Ito-Tanaka uniformity", dynkin_ito);
  criterion(10, "Boltzmann-Gibbs property suite", bg_suite);
  criterion(11, "generator symmetry residuals", symmetry);
  std::cout << (all_pass ? "ALL PASS" : "SOME CRITERIA FAILED") << '\n';
  return all_pass ? 0 : 1;
}
