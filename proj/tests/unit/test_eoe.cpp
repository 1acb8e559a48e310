#include <doctest.h>

#include <cmath>
#include <sstream>

#include "glbg/eoe.hpp"
#include "glbg/error.hpp"
#include "glbg/quadrature.hpp"
#include "glbg/stats.hpp"

using namespace glbg;

namespace {
const Potential Q = Potential::quadratic();

CondExpOptions mc_opts(long per_point = 4000) {
  CondExpOptions o;
  o.method = EoEMethod::MonteCarlo;
  o.samples_per_point = per_point;
  return o;
}
}  // namespace

TEST_SUITE("conditional expectation") {
  TEST_CASE("linear observable") {
    auto f = make_observable("eta0", 0.3);
    auto ce = cond_exp(f, 4, 0.3, Q);
    for (double m : {-1.0, 0.3, 0.9, 5.0}) CHECK(ce(m) == doctest::Approx(m - 0.3).scale(1));
  }

  TEST_CASE("gaussian conditional variance") {
    for (int ell : {1, 4, 9}) {
      auto ce = cond_exp(make_observable("centered_square", 0.2), ell, 0.2, Q);
      for (double m : {-0.8, 0.2, 0.45, 3.0}) {
        double exact = (m - 0.2) * (m - 0.2) + 1 - 1.0 / (2 * ell) - 1;
        CHECK(std::fabs(ce(m) - exact) < 1e-12);
      }
    }
  }

  TEST_CASE("nonpolynomial path against a Gaussian oracle") {
    // two-site window: conditional law is bivariate normal with the stated moments
    const int ell = 3;
    auto f = make_observable("sin_pair", 0.0);
    auto ce = cond_exp(f, ell, 0.0, Q);
    double v = 1 - 1.0 / (2 * ell), c = -1.0 / (2 * ell);
    // E[sin(X) Y] with X, Y jointly normal mean m: Stein gives
    // E[sin X (Y - m)] = c E[cos X], E sin X = sin(m) e^{-v/2}
    for (double m : {-0.4, 0.1, 0.7}) {
      double exact = m * std::sin(m) * std::exp(-v / 2) + c * std::cos(m) * std::exp(-v / 2);
      CHECK(ce(m) == doctest::Approx(exact).epsilon(1e-10));
      CHECK(ce.direct(m) == doctest::Approx(exact).epsilon(1e-10));
    }
  }

  TEST_CASE("window overflow and unsupported potential") {
    CHECK_THROWS_AS(cond_exp(make_observable("pair", 0.0), 1, 0.0, Potential::quadratic()).value(0.0) +
                        cond_exp(make_observable("mixed3", 0.0), 1, 0.0, Q).value(0.0),
                    InvalidArgument);
    CHECK_THROWS_AS(cond_exp(make_observable("eta0", 0.0), 2, 0.0, Potential::quadratic_cos(0.1)),
                    UnsupportedPotential);
  }

  TEST_CASE("monte carlo path matches the analytic path") {
    const int ell = 2;
    auto f = make_observable("centered_square", 0.0);
    auto an = cond_exp(f, ell, 0.0, Q);
    auto mc = cond_exp(f, ell, 0.0, Q, mc_opts(3000));
    REQUIRE(mc.grid().size() == 33);
    CHECK(mc.grid().front() == doctest::Approx(-5 / std::sqrt(2.0 * ell)));
    int bad = 0;
    for (std::size_t j = 0; j < mc.grid().size(); ++j)
      if (std::fabs(mc.grid_values()[j] - an(mc.grid()[j])) > 4 * mc.grid_se()[j]) ++bad;
    CHECK(bad <= 1);
  }

  TEST_CASE("tower property") {
    for (const char* id : {"pair", "centered_square", "sin_pair"}) {
      auto f = make_observable(id, 0.25);
      for (int ell : {2, 5}) {
        auto ce = cond_exp(f, ell, 0.25, Q);
        auto q = gauss_hermite(64);
        double s = 0;
        for (std::size_t i = 0; i < q.x.size(); ++i)
          s += q.w[i] * ce(0.25 + q.x[i] / std::sqrt(2.0 * ell));
        CHECK(s == doctest::Approx(ensemble_avg(f, Q, 0.25).value).epsilon(1e-10).scale(1));
      }
    }
  }

  TEST_CASE("conditioning under the canonical measure of the whole torus") {
    // E^{mu_{N,m}}[f | block] is the same block-canonical expectation
    const int N = 12, ell = 2;
    auto f = make_observable("centered_square", 0.0);
    auto ce = cond_exp(f, ell, 0.0, Q);
    NoiseStream rng(1, 0);
    std::vector<double> d;
    for (int k = 0; k < 20000; ++k) {
      auto g = sample_grand_canonical(Q, 0.0, N, rng);
      double mN = 0;
      for (double v : g) mN += v / N;
      CanonicalSampler cs(Q, N, mN, rng);
      auto x = cs.draw();
      TorusField t(x);
      double b = block_average(t, N, ell);  // block around label 0 = N
      d.push_back(f.eval_at(t, N) - ce(b));
    }
    auto m = mean_se(d);
    CHECK(std::fabs(m.mean) < 4 * m.se);
  }
}

TEST_SUITE("residuals") {
  TEST_CASE("second order exact value") {
    auto f = make_observable("centered_square", 0.0);
    for (double p : {2.0, 4.0, 3.0}) {
      auto r = eoe_residual_second(f, 4, 0.0, p, Q);
      CHECK(std::fabs(r.norm - 1.0 / 72) < 1e-12);
    }
    for (int ell : {2, 8, 16})
      CHECK(std::fabs(eoe_residual_second(f, ell, 0.0, 4.0, Q).norm -
                      1.0 / (2.0 * ell * (2 * ell + 1))) < 1e-12);
  }

  TEST_CASE("second order monte carlo within 4 SE") {
    auto f = make_observable("centered_square", 0.0);
    EoEOptions o;
    o.cond = mc_opts(20000);
    auto r = eoe_residual_second(f, 4, 0.0, 2.0, Q, o);
    CHECK(r.se > 0);
    CHECK(std::fabs(r.norm - 1.0 / 72) < 4 * r.se);
  }

  TEST_CASE("preconditions") {
    CHECK_THROWS_AS(eoe_residual_second(make_observable("eta0", 0.0), 4, 0.0, 2.0, Q), InvalidObservable);
    CHECK_THROWS_AS(eoe_residual_first(make_observable("cos0", 0.0), 4, 0.0, 2.0, Q), InvalidObservable);
    auto zero = Observable::make("zero", 0, 0, [](const auto* w) { return 0.0 * w[0]; });
    zero.poly_degree = 1;
    CHECK(eoe_residual_second(zero, 4, 0.0, 4.0, Q).norm == 0.0);
  }

  TEST_CASE("first order values") {
    CHECK(eoe_residual_first(make_observable("eta0", 0.0), 4, 0.0, 4.0, Q).norm < 1e-14);
    auto f = make_observable("centered_square", 0.0);
    CHECK(eoe_residual_first(f, 4, 0.0, 2.0, Q).norm == doctest::Approx(0.1767767).epsilon(1e-7));
    for (int ell : {4, 8, 16, 32, 64}) {
      double n = eoe_residual_first(f, ell, 0.0, 2.0, Q).norm;
      CHECK(n == doctest::Approx(std::sqrt(2.0) / (2 * ell)).epsilon(1e-10));
    }
  }

  TEST_CASE("non-quadratic potential through the monte carlo path") {
    auto pot = Potential::quadratic_cos(0.3);
    auto f = make_observable("pair", 0.0);
    EoEOptions o;
    o.cond = mc_opts(1500);
    o.cond.grid_points = 9;
    o.law_samples = 4000;
    auto r = eoe_residual_second(f, 2, 0.0, 2.0, pot, o);
    CHECK(std::isfinite(r.norm));
    CHECK(r.se > 0);
  }
}

TEST_SUITE("curves") {
  TEST_CASE("exact power law") {
    EoECurve c;
    for (int ell : {4, 8, 16, 32}) {
      c.ells.push_back(ell);
      c.norms.push_back(3.0 * std::pow(ell, -1.5));
    }
    auto s = scaling_exponent(c);
    CHECK(std::fabs(s.slope + 1.5) < 1e-12);
  }

  TEST_CASE("invalid curves") {
    EoECurve c;
    c.ells = {4, 8, 16, 32};
    c.norms = {1, 0.5, 0.0, 0.1};
    CHECK_THROWS_AS(scaling_exponent(c), InvalidCurve);
    c.norms = {1, 0.5, 0.2};
    CHECK_THROWS_AS(scaling_exponent(c), InvalidCurve);
    c.ells = {4, 4, 8};
    CHECK_THROWS_AS(c.validate(), InvalidCurve);
  }

  TEST_CASE("gaussian slopes and monotonicity") {
    auto f = make_observable("centered_square", 0.0);
    std::vector<int> ells{4, 8, 16, 32, 64};
    for (double p : {2.0, 4.0}) {
      auto c2 = eoe_curve(f, ells, 0.0, p, 2, Q);
      auto c1 = eoe_curve(f, ells, 0.0, p, 1, Q);
      CHECK(c2.slope == doctest::Approx(-2.0).epsilon(0.05));
      CHECK(c1.slope == doctest::Approx(-1.0).epsilon(0.02));
      for (std::size_t i = 1; i < ells.size(); ++i) {
        CHECK(c2.norms[i] <= c2.norms[i - 1]);
        CHECK(c1.norms[i] <= c1.norms[i - 1]);
      }
      // rate envelope fitted at ell = 4
      double C = c2.norms[0] * std::pow(4.0, 1.5);
      for (std::size_t i = 1; i < ells.size(); ++i) CHECK(c2.norms[i] <= C * std::pow(ells[i], -1.5));
      for (std::size_t i = 1; i < ells.size(); ++i)
        CHECK(c1.norms[i] * ells[i] == doctest::Approx(c1.norms[0] * ells[0]).epsilon(1e-9));
    }
    std::ostringstream os;
    eoe_curve(f, {4, 8}, 0.0, 2.0, 2, Q).write_csv(os);
    CHECK(os.str().rfind("ell,norm,stderr,method\n4,", 0) == 0);
  }
}

TEST_SUITE("clt") {
  TEST_CASE("block mean moments") {
    auto rows = clt_block_check(Q, 0.0, {2, 8, 32}, 2.0, 40000, 3);
    for (const auto& r : rows) {
      CHECK(std::fabs(r.scaled_norm - std::sqrt(0.5)) < 4 * r.scaled_norm_se);
      CHECK(std::fabs(r.m4_ratio - 3.0) < 4 * r.m4_ratio_se);
    }
    auto a = clt_block_check(Q, 0.0, {8}, 4.0, 2000, 5);
    auto b = clt_block_check(Q, 1.0, {8}, 4.0, 2000, 5);
    CHECK(a[0].scaled_norm == doctest::Approx(b[0].scaled_norm).epsilon(1e-12));
    CHECK(a[0].m4_ratio == doctest::Approx(b[0].m4_ratio).epsilon(1e-9));
  }
}
