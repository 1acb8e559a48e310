#include <doctest.h>

#include <cmath>
#include <random>

#include "glbg/error.hpp"
#include "glbg/field.hpp"
#include "glbg/potential.hpp"

using namespace glbg;

namespace {
std::vector<double> random_values(int n, unsigned seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.3, 1.2);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}
}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("closed-form families validate and report bounds") {
    auto q = Potential::quadratic();
    CHECK(q.is_quadratic());
    CHECK(q.v(2.0) == 2.0);
    auto c = Potential::quadratic_cos(0.1);
    CHECK(c.c_minus() == doctest::Approx(0.9));
    CHECK(c.c_plus() == doctest::Approx(1.1));
    CHECK_FALSE(c.is_quadratic());
    auto l = Potential::quadratic_logcosh(0.5);
    CHECK(l.c_plus() == doctest::Approx(1.5));
    CHECK_THROWS_AS(Potential::quadratic_cos(1.5), InvalidArgument);
  }

  TEST_CASE("custom potential with a wrong derivative is rejected") {
    auto v = [](double z) { return 0.5 * z * z; };
    auto bad = [](double z) { return 1.1 * z; };
    auto one = [](double) { return 1.0; };
    CHECK_THROWS_AS(Potential::custom(v, bad, one, 1.0, 1.0), InvalidArgument);
    CHECK_NOTHROW(Potential::custom(v, [](double z) { return z; }, one, 1.0, 1.0));
    // curvature outside the declared bounds
    CHECK_THROWS_AS(Potential::custom(v, [](double z) { return z; }, one, 1.5, 2.0), InvalidArgument);
  }

  TEST_CASE("asymmetry rates sum to one") {
    for (double g : {-2.0, 0.0, 0.5, 2.0, 0.1}) {
      Asymmetry a(g);
      CHECK(a.p + a.q == 1.0);
      CHECK(a.p == 0.5 + g);
    }
  }
}

TEST_SUITE("fields") {
  TEST_CASE("eta from phi on the three-site example") {
    HeightField phi(1.0, {0, 1, 3});
    CHECK(phi.at(4) == 3.0);  // phi(1) + N*m
    CHECK(phi.at(0) == 0.0);  // phi(3) - 3
    auto eta = eta_from_phi(phi);
    CHECK(eta.values() == std::vector<double>{1, 2, 0});
    CHECK(eta.mean() == 1.0);
  }

  TEST_CASE("phi from eta and the round trips") {
    TorusField eta({1, 2, 0});
    auto phi = phi_from_eta(eta, 0.0);
    CHECK(phi.values() == std::vector<double>{0, 1, 3});
    CHECK(phi.m() == 1.0);
    auto z = phi_from_eta(TorusField({0, 0, 0}), 5.0);
    CHECK(z.values() == std::vector<double>{5, 5, 5});
    CHECK(z.m() == 0.0);

    auto r = TorusField(random_values(17, 3));
    auto back = eta_from_phi(phi_from_eta(r, 0.7));
    for (int x = 1; x <= 17; ++x) CHECK(back.at(x) == doctest::Approx(r.at(x)).epsilon(1e-13));
    auto p0 = phi_from_eta(r, 0.0), pc = phi_from_eta(r, 2.5);
    for (int x = 1; x <= 17; ++x) CHECK(pc.at(x) - p0.at(x) == doctest::Approx(2.5));
  }

  TEST_CASE("constant slope profile") {
    double m = 0.4;
    std::vector<double> v;
    for (int x = 1; x <= 6; ++x) v.push_back(m * x);
    HeightField phi(m, v);
    auto eta = eta_from_phi(phi);
    for (double e : eta.values()) CHECK(e == doctest::Approx(m));
    auto V = Potential::quadratic();
    CHECK(hamiltonian_phi(phi, V) == doctest::Approx(6 * V.v(m)));
  }

  TEST_CASE("hamiltonians") {
    auto V = Potential::quadratic();
    HeightField phi(1.0, {0, 1, 3});
    CHECK(hamiltonian_phi(phi, V) == 2.5);
    CHECK(hamiltonian_eta(TorusField({1, -1, 0}), V) == 1.0);
    CHECK(hamiltonian_eta(TorusField({0, 0}), V) == 0.0);
    auto C = Potential::quadratic_cos(0.3);
    for (unsigned s = 0; s < 20; ++s) {
      auto eta = TorusField(random_values(9, s));
      auto ph = phi_from_eta(eta, 0.1 * s);
      CHECK(hamiltonian_phi(ph, C) == doctest::Approx(hamiltonian_eta(eta_from_phi(ph), C)).epsilon(1e-14));
    }
    // additivity over disjoint blocks
    auto a = random_values(5, 1), b = random_values(4, 2);
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(hamiltonian_eta(TorusField(ab), C) ==
          doctest::Approx(hamiltonian_eta(TorusField(a), C) + hamiltonian_eta(TorusField(b), C)));
  }

  TEST_CASE("block averages") {
    TorusField eta({9, 2, 4, 7});  // labels 1..4
    CHECK(block_average(eta, 3, 1) == 3.0);  // eta(2), eta(3)
    CHECK(block_average(eta, 1, 2) == doctest::Approx(eta.mean()));
    CHECK_THROWS_AS(block_average(eta, 1, 3), InvalidArgument);
    TorusField c(std::vector<double>(8, 1.5));
    for (int x = 1; x <= 8; ++x)
      for (int l = 1; l <= 4; ++l) CHECK(block_average(c, x, l) == 1.5);
    auto r = TorusField(random_values(12, 9));
    for (int k = -3; k <= 5; ++k)
      for (int x = 1; x <= 12; ++x)
        CHECK(block_average(shift(r, k), x, 3) == doctest::Approx(block_average(r, x + k, 3)));
    LocalField loc(2, {1, 2, 3, 6});
    CHECK(block_average(loc, 0, 2) == 3.0);
    CHECK(loc.at(-2) == 1.0);
    CHECK(loc.at(1) == 6.0);
    CHECK_THROWS_AS(block_average(loc, 1, 2), InvalidArgument);
    CHECK_THROWS_AS(loc.at(2), InvalidArgument);
  }

  TEST_CASE("grad and grad_star") {
    std::vector<double> c(7, 2.0);
    for (double g : grad(c)) CHECK(g == 0.0);
    auto r = random_values(11, 4);
    double s = 0;
    for (double g : grad(r)) s += g;
    CHECK(std::fabs(s) < 1e-13);
    // delta at label 1 (index 0): -Laplacian gives (2 at 0, -1 at +-1)
    std::vector<double> d(6, 0.0);
    d[0] = 1.0;
    auto ld = grad_star(grad(d));
    CHECK(ld[0] == 2.0);
    CHECK(ld[1] == -1.0);
    CHECK(ld[5] == -1.0);
    CHECK(ld[2] == 0.0);
    auto f = random_values(11, 5);
    double lhs = 0, rhs = 0;
    auto gr = grad(r), gs = grad_star(f);
    for (int i = 0; i < 11; ++i) {
      lhs += f[i] * gr[i];
      rhs += gs[i] * r[i];
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
    auto loc = grad_star_local({1.0, 4.0, 2.0, 2.0});
    CHECK(loc == std::vector<double>{-3.0, 2.0, 0.0});
  }

  TEST_CASE("json round trip") {
    TorusField eta({1, 2, 0});
    auto j = eta.to_json();
    CHECK(j["N"] == 3);
    CHECK(j["m"] == 1.0);
    CHECK(TorusField::from_json(j).values() == eta.values());
    LocalField loc(1, {0.5, -0.5});
    CHECK(LocalField::from_json(loc.to_json()).values() == loc.values());
    HeightField phi(1.0, {0, 1, 3});
    CHECK(HeightField::from_json(phi.to_json()).at(4) == 3.0);
  }
}
