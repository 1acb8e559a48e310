#include <doctest.h>

#include <cmath>
#include <numbers>

#include "glbg/error.hpp"
#include "glbg/generator.hpp"

using namespace glbg;

namespace {

std::vector<double> normals(int n, std::uint64_t seed, double sd = 1.0) {
  NoiseStream s(seed, 0);
  std::vector<double> v(n);
  s.fill_normal(v, sd);
  return v;
}

Observable constant_obs(double c) {
  return Observable::make("const", 0, 0, [c](const auto* w) { return 0.0 * w[0] + c; });
}

}  // namespace

TEST_SUITE("generator actions") {
  TEST_CASE("hand example on the torus") {
    // labels 1..5; eta(-1) = label 4, eta(0) = label 5, eta(1) = label 1
    TorusField eta({2.0, 0.3, -0.7, 1.0, 0.0});
    auto f = make_observable("eta0", 0.0);
    auto q = Potential::quadratic();
    CHECK(apply_L0(f, eta, q) == doctest::Approx(1.5));
    for (double g : {0.0, 0.5, 2.0}) CHECK(apply_L1(f, eta, q, Asymmetry(g)) == doctest::Approx(g));
  }

  TEST_CASE("conserved mean and constants are annihilated") {
    auto pot = Potential::quadratic_cos(0.4);
    auto m = make_observable("block_mean", 0.0, {{"ell", 4}});
    auto c = constant_obs(2.5);
    for (std::uint64_t s = 0; s < 5; ++s) {
      TorusField eta(normals(8, s));
      CHECK(std::fabs(apply_L0(m, eta, pot)) < 1e-14);
      CHECK(std::fabs(apply_L1(m, eta, pot, Asymmetry(1.3))) < 1e-14);
      CHECK(carre_du_champ(m, eta) < 1e-28);
      CHECK(apply_L(c, eta, pot, Asymmetry(0.7)) == 0.0);
    }
  }

  TEST_CASE("carre du champ") {
    TorusField eta(normals(6, 2));
    CHECK(carre_du_champ(make_observable("eta0", 0.0), eta) == doctest::Approx(2.0));
  }

  TEST_CASE("carre du champ identity for the full generator") {
    auto pot = Potential::quadratic_logcosh(0.7);
    for (const char* id : {"pair", "sin_pair", "mixed3", "cos0", "centered_square"}) {
      auto f = make_observable(id, 0.3);
      auto f2 = f * f;
      for (double g : {0.0, 1.0, -2.5}) {
        Asymmetry as(g);
        for (std::uint64_t s = 0; s < 4; ++s) {
          TorusField eta(normals(7, 10 + s));
          for (long x0 : {0L, 3L}) {
            double lhs = apply_L(f2, eta, pot, as, x0) -
                         2 * f.eval_at(eta, x0) * apply_L(f, eta, pot, as, x0);
            CHECK(std::fabs(lhs - carre_du_champ(f, eta, x0)) < 1e-10);
          }
        }
      }
    }
  }

  TEST_CASE("shift equivariance of the placement") {
    auto pot = Potential::quadratic_cos(0.2);
    auto f = make_observable("mixed3", 0.0);
    auto e = normals(9, 5);
    TorusField eta(e);
    std::vector<double> rot(9);
    for (int i = 0; i < 9; ++i) rot[i] = e[(i + 4) % 9];  // (tau_4 eta)(x) = eta(x+4)
    CHECK(apply_L(f, TorusField(rot), pot, Asymmetry(0.6)) ==
          doctest::Approx(apply_L(f, eta, pot, Asymmetry(0.6), 4)));
  }

  TEST_CASE("phi chain rule") {
    // G(phi) = f(eta(phi)) with eta(x) = phi(x+1) - phi(x); jets in phi against eta partials
    auto f = make_observable("mixed3", 0.1);
    int n = f.size();
    auto phi = normals(n + 1, 4);
    std::vector<Jet> jp;
    for (int i = 0; i <= n; ++i) jp.push_back(Jet::variable(i, n + 1, phi[i]));
    std::vector<Jet> w;
    std::vector<double> wd;
    for (int i = 0; i < n; ++i) {
      w.push_back(jp[i + 1] - jp[i]);
      wd.push_back(phi[i + 1] - phi[i]);
    }
    Jet G = f.jet_body()(w.data());
    Jet F = f.eval_jet(wd);
    // phi slot j is phi(lo + j); d/dphi(x) = d_eta(x-1) - d_eta(x)
    for (int j = 0; j <= n; ++j) {
      double left = j >= 1 ? F.g[j - 1] : 0.0;
      double here = j < n ? F.g[j] : 0.0;
      CHECK(std::fabs(G.g[j] - (left - here)) < 1e-10);
    }
  }
}

TEST_SUITE("localized generator") {
  TEST_CASE("block mean and constants") {
    auto pot = Potential::quadratic_cos(0.3);
    LocalField e(3, normals(6, 1));
    CHECK(std::fabs(apply_L0_local(make_observable("block_mean", 0.0, {{"ell", 3}}), e, pot)) < 1e-14);
    CHECK(apply_L0_local(constant_obs(1.0), e, pot) == 0.0);
  }

  TEST_CASE("single pair") {
    auto pot = Potential::quadratic_cos(0.3);
    LocalField e(1, {0.4, -0.9});
    CHECK(apply_L0_local(make_observable("eta0", 0.0), e, pot) ==
          doctest::Approx(-0.5 * (pot.dv(-0.9) - pot.dv(0.4))));
  }

  TEST_CASE("window overflow") {
    LocalField e(1, {0.4, -0.9});
    CHECK_THROWS_AS(apply_L0_local(make_observable("mixed3", 0.0), e, Potential::quadratic()),
                    InvalidArgument);
  }
}

TEST_SUITE("reversibility") {
  TEST_CASE("equal pair gives an exact zero") {
    NoiseStream rng(1, 0);
    auto f = make_observable("sin_pair", 0.0);
    auto r = symmetry_residuals(f, f, Potential::quadratic_cos(0.3), 0.2, 500, rng);
    CHECK(r.s0.mean == 0.0);
    CHECK(r.s0.se == 0.0);
  }

  TEST_CASE("gaussian pair") {
    NoiseStream rng(2, 0);
    auto F = make_observable("eta0", 0.0);
    auto G = Observable::make("eta1", 1, 1, [](const auto* w) { return w[0]; });
    for (double g : {0.0, 1.0}) {
      auto r = symmetry_residuals(F, G, Potential::quadratic(), 0.0, 20000, rng, 8, g);
      CHECK(std::fabs(r.s0.mean) <= 4 * r.s0.se + 1e-14);
      CHECK(std::fabs(r.s1.mean) <= 4 * r.s1.se + 1e-14);
    }
  }

  TEST_CASE("nonlinear pairs and the dirichlet cross-check") {
    NoiseStream rng(3, 0);
    auto pot = Potential::quadratic_cos(0.4);
    auto F = make_observable("mixed3", 0.0), G = make_observable("sin_pair", 0.0);
    auto r = symmetry_residuals(F, G, pot, 0.3, 40000, rng, 8, 1.0);
    CHECK(std::fabs(r.s0.mean) <= 4 * r.s0.se);
    CHECK(std::fabs(r.s1.mean) <= 4 * r.s1.se);
    CHECK(std::fabs(r.gl0f.mean - r.dirichlet.mean) <= 4 * std::hypot(r.gl0f.se, r.dirichlet.se));
  }

  TEST_CASE("localized dirichlet form") {
    NoiseStream rng(4, 0);
    auto pot = Potential::quadratic_cos(0.2);
    CanonicalSampler one(pot, 2, 0.3, rng);
    auto e0 = make_observable("eta0", 0.0);
    auto d = dirichlet_form(e0, e0, one, 50);
    CHECK(d.mean == doctest::Approx(0.5).epsilon(1e-15));
    CanonicalSampler three(pot, 6, 0.0, rng);
    auto bm = make_observable("block_mean", 0.0, {{"ell", 3}});
    auto f = make_observable("mixed3", 0.0);
    CHECK(std::fabs(dirichlet_form(f, bm, three, 200).mean) < 1e-14);
    for (int k = 0; k < 20; ++k) {
      LocalField e(3, three.draw());
      auto g = make_observable("sin_pair", 0.0);
      CHECK(local_gradient_pairing(f, g, e) ==
            doctest::Approx(local_gradient_pairing(g, f, e)).epsilon(1e-12));
    }
  }

  TEST_CASE("p=2 LPS identity by simulation") {
    // E|grad* D f|^2 against 2 D(f,f) and against -2 E[f L_{0,ell} f], independent draws
    auto pot = Potential::quadratic_cos(0.3);
    auto f = make_observable("mixed3", 0.0).plus_constant(0.0);
    NoiseStream r1(5, 1), r2(5, 2), r3(5, 3);
    CanonicalSampler s1(pot, 6, 0.2, r1), s2(pot, 6, 0.2, r2), s3(pot, 6, 0.2, r3);
    const long n = 20000;
    std::vector<double> a(n), c(n);
    for (long k = 0; k < n; ++k) {
      LocalField e(3, s1.draw());
      a[k] = local_gradient_pairing(f, f, e);
      LocalField e3(3, s3.draw());
      c[k] = -2 * f.eval_at(e3) * apply_L0_local(f, e3, pot);
    }
    auto A = mean_se(a), C = mean_se(c);
    auto D = dirichlet_form(f, f, s2, n);
    CHECK(std::fabs(A.mean - 2 * D.mean) <= 4 * std::hypot(A.se, 2 * D.se));
    CHECK(std::fabs(A.mean - C.mean) <= 4 * std::hypot(A.se, C.se));
  }
}

TEST_SUITE("dynkin") {
  TEST_CASE("constant observable") {
    NoiseStream n(1, 0);
    auto rec = simulate_fine(TorusField(normals(8, 1)), Potential::quadratic(), Asymmetry(1.0), 200,
                             1e-3, n);
    auto r = dynkin_residual(constant_obs(3.0), {rec}, Potential::quadratic(), Asymmetry(1.0));
    CHECK(r.residual.mean == 0.0);
  }

  TEST_CASE("martingale and quadratic variation") {
    auto pot = Potential::quadratic();
    auto f = make_observable("eta0", 0.0);
    for (double g : {0.0, 2.0}) {
      std::vector<TrajectoryRecord> recs;
      for (int r = 0; r < 40; ++r) {
        NoiseStream n(9, r);
        auto e0 = sample_grand_canonical(pot, 0.0, 16, n);
        recs.push_back(simulate_fine(TorusField(e0), pot, Asymmetry(g), 2000, 5e-4, n));
      }
      auto res = dynkin_residual(f, recs, pot, Asymmetry(g), 3);
      CHECK(std::fabs(res.residual.mean) < 4 * res.residual.se);
      CHECK(res.qv_ratio > 0.95);
      CHECK(res.qv_ratio < 1.05);
    }
  }
}

TEST_SUITE("poisson") {
  TEST_CASE("first fourier mode on N=4") {
    LinearFunctional a;
    for (int i = 0; i < 4; ++i) a.a.push_back(std::cos(2 * std::numbers::pi * (i + 1) / 4));
    auto b = poisson_solve_linear(a, 4);
    for (int i = 0; i < 4; ++i) CHECK(b.a[i] == doctest::Approx(a.a[i]).scale(1));
  }

  TEST_CASE("general N eigen-divisor") {
    const int N = 10;
    LinearFunctional a;
    for (int i = 0; i < N; ++i) a.a.push_back(std::cos(2 * std::numbers::pi * (i + 1) / N));
    auto b = poisson_solve_linear(a, N);
    double d = 1 - std::cos(2 * std::numbers::pi / N);
    for (int i = 0; i < N; ++i) CHECK(b.a[i] == doctest::Approx(a.a[i] / d).scale(1));
  }

  TEST_CASE("zero and bad input") {
    LinearFunctional z{std::vector<double>(6, 0.0)};
    for (double v : poisson_solve_linear(z, 6).a) CHECK(v == 0.0);
    LinearFunctional bad{{1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(poisson_solve_linear(bad, 3), InvalidArgument);
  }

  TEST_CASE("inverse check through the generator") {
    const int N = 12;
    auto raw = normals(N, 3);
    double m = 0;
    for (double v : raw) m += v / N;
    LinearFunctional a;
    for (double v : raw) a.a.push_back(v - m);
    auto b = poisson_solve_linear(a, N);
    auto B = b.as_observable(), A = a.as_observable();
    auto q = Potential::quadratic();
    for (std::uint64_t s = 0; s < 3; ++s) {
      TorusField eta(normals(N, 40 + s));
      CHECK(std::fabs(apply_L0(B, eta, q, 0) + a.eval(eta)) < 1e-10);
      CHECK(std::fabs(carre_du_champ(B, eta, 0) - gamma_linear(b)) < 1e-10);
    }
  }
}

TEST_SUITE("ito-tanaka") {
  TEST_CASE("zero functional") {
    LinearFunctional z{std::vector<double>(16, 0.0)};
    auto r = ito_tanaka_ratio(z, Asymmetry(0.0), 16);
    CHECK(r.lhs == 0.0);
    CHECK(r.ratio == 0.0);
  }

  TEST_CASE("p = 2 ratio is of order one") {
    const int N = 16;
    LinearFunctional a{std::vector<double>(N, 0.0)};
    a.a[N - 1] = 1.0;  // label 0
    a.a[0] = -1.0;     // label 1
    ItoTanakaOptions o;
    o.p = 2;
    o.T = 0.5;
    o.batch = 400;
    o.h_micro = 0.1;
    auto r = ito_tanaka_ratio(a, Asymmetry(0.0), N, o);
    CHECK(r.ratio > 0.2);
    CHECK(r.ratio < 5.0);
  }
}
