#include "glbg/chain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "glbg/error.hpp"

namespace glbg {

ReversibleChain ReversibleChain::from_conductances(const Eigen::VectorXd& pi, const Eigen::MatrixXd& c) {
  int n = static_cast<int>(pi.size());
  if (c.rows() != n || c.cols() != n) throw InvalidChain("conductance matrix has the wrong shape");
  ReversibleChain ch;
  ch.pi = pi;
  ch.Q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j || c(i, j) <= 0) continue;
      ch.Q(i, j) = c(i, j) / pi(i);
      if (i < j) ch.edges.emplace_back(i, j);
    }
  for (int i = 0; i < n; ++i) ch.Q(i, i) = -(ch.Q.row(i).sum() - ch.Q(i, i));
  ch.validate();
  return ch;
}

void ReversibleChain::validate(double tol) const {
  int N = n();
  if (N < 1 || Q.rows() != N || Q.cols() != N) throw InvalidChain("shape mismatch");
  if ((pi.array() <= 0).any()) throw InvalidChain("stationary weights must be positive");
  if (std::fabs(pi.sum() - 1.0) > tol * N) throw InvalidChain("stationary weights must sum to 1");
  double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  for (int i = 0; i < N; ++i) {
    if (std::fabs(Q.row(i).sum()) > tol * scale * N) throw InvalidChain("rows must sum to zero");
    for (int j = 0; j < N; ++j) {
      if (i != j && Q(i, j) < 0) throw InvalidChain("negative off-diagonal rate");
      if (std::fabs(pi(i) * Q(i, j) - pi(j) * Q(j, i)) > tol * scale)
        throw InvalidChain("detailed balance fails");
    }
  }
}

bool ReversibleChain::irreducible() const {
  int N = n();
  std::vector<char> seen(N, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    int i = stack.back();
    stack.pop_back();
    for (int j = 0; j < N; ++j)
      if (!seen[j] && Q(i, j) > 0) {
        seen[j] = 1;
        stack.push_back(j);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

std::string ReversibleChain::hash() const {
  // FNV-1a over the raw bytes of Q and pi
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](double v) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char c : b) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  for (int i = 0; i < Q.size(); ++i) mix(Q.data()[i]);
  for (int i = 0; i < pi.size(); ++i) mix(pi(i));
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

ReversibleChain random_chain(NoiseStream& rng, int n_min, int n_max) {
  int n = n_min + static_cast<int>(rng.uniform() * (n_max - n_min + 1));
  n = std::min(n, n_max);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = 0.05 + 0.95 * rng.uniform();
  w /= w.sum();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  auto cond = [&] { return std::exp(std::log(0.1) + rng.uniform() * std::log(100.0)); };
  // random spanning tree, then extra edges
  for (int i = 1; i < n; ++i) {
    int j = std::min(i - 1, static_cast<int>(rng.uniform() * i));
    c(i, j) = c(j, i) = cond();
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (c(i, j) == 0 && rng.uniform() < 0.35) c(i, j) = c(j, i) = cond();
  return ReversibleChain::from_conductances(w, c);
}

ReversibleChain cycle_chain(int n) {
  if (n < 2) throw InvalidArgument("cycle needs at least two states");
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / n);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  // unit rates: conductance pi_i * 1
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    c(i, j) = c(j, i) = 1.0 / n;
  }
  return ReversibleChain::from_conductances(pi, c);
}

double lp_norm(const Eigen::VectorXd& f, const Eigen::VectorXd& pi, double p) {
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += pi(i) * std::pow(std::fabs(f(i)), p);
  return std::pow(s, 1.0 / p);
}

double pi_mean(const Eigen::VectorXd& f, const Eigen::VectorXd& pi) { return pi.dot(f); }

Eigen::VectorXd edge_gamma(const ReversibleChain& c, const Eigen::VectorXd& f) {
  int n = c.n();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) g(i) += 0.5 * c.Q(i, j) * (f(j) - f(i)) * (f(j) - f(i));
  return g;
}

double edge_gradient_norm(const ReversibleChain& c, const Eigen::VectorXd& f, double p) {
  return lp_norm(edge_gamma(c, f).cwiseSqrt(), c.pi, p);
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> minus_generator_eigen(const ReversibleChain& c) {
  Eigen::VectorXd s = c.pi.cwiseSqrt();
  Eigen::MatrixXd S = s.asDiagonal() * (-c.Q) * s.cwiseInverse().asDiagonal();
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericFailure("eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues();
  double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  for (int i = 0; i < lam.size(); ++i) {
    if (lam(i) < -1e-10 * scale) throw InvalidChain("-Q has a negative eigenvalue");
    lam(i) = std::max(lam(i), 0.0);
  }
  // pi-orthonormal eigenvectors of -Q
  Eigen::MatrixXd V = s.cwiseInverse().asDiagonal() * es.eigenvectors();
  return {lam, V};
}

namespace {

template <class Fn>
Eigen::MatrixXd spectral_function(const ReversibleChain& c, Fn g) {
  auto [lam, V] = minus_generator_eigen(c);
  Eigen::VectorXd gl(lam.size());
  double scale = std::max(1.0, lam.maxCoeff());
  for (int i = 0; i < lam.size(); ++i) gl(i) = g(lam(i), lam(i) <= 1e-12 * scale);
  // g(-Q) = V g(L) V^T diag(pi), using pi-orthonormality of V
  return V * gl.asDiagonal() * V.transpose() * c.pi.asDiagonal();
}

}  // namespace

Eigen::MatrixXd sqrt_minus_generator(const ReversibleChain& c) {
  return spectral_function(c, [](double l, bool) { return std::sqrt(l); });
}

Eigen::MatrixXd inv_sqrt_minus_generator(const ReversibleChain& c) {
  return spectral_function(c, [](double l, bool zero) { return zero ? 0.0 : 1.0 / std::sqrt(l); });
}

Eigen::MatrixXd sqrt_shifted_generator(const ReversibleChain& c) {
  return spectral_function(c, [](double l, bool) { return std::sqrt(1.0 + l); });
}

double spectral_gap(const ReversibleChain& c) {
  if (!c.irreducible()) throw InvalidChain("reducible chain has no spectral gap");
  auto lam = minus_generator_eigen(c).first;
  if (lam.size() < 2) throw InvalidChain("one-state chain has no spectral gap");
  return lam(1);
}

namespace {

Eigen::VectorXd project_mean_zero(const Eigen::VectorXd& v, const Eigen::VectorXd& pi) {
  return v.array() - pi.dot(v);
}

// Minimizes ||g - c||_p over c. The objective is convex; its derivative is a
// monotone function of c, so bisection on it pins the minimizer to full precision.
std::pair<double, double> min_shift(const Eigen::VectorXd& g, const Eigen::VectorXd& pi, double p) {
  double lo = g.minCoeff(), hi = g.maxCoeff();
  if (hi - lo <= 0) return {lo, 0.0};
  auto slope = [&](double c) {
    double s = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      double d = g(i) - c;
      s += pi(i) * std::pow(std::fabs(d), p - 1) * (d < 0 ? -1.0 : 1.0);
    }
    return s;
  };
  auto br = boost::math::tools::bisect(slope, lo, hi, boost::math::tools::eps_tolerance<double>(52));
  double c = 0.5 * (br.first + br.second);
  Eigen::VectorXd d = g.array() - c;
  return {c, lp_norm(d, pi, p)};
}

}  // namespace

VariationalBounds variational_bounds(const ReversibleChain& c, const Eigen::VectorXd& f, double p,
                                     NoiseStream& rng, int random_directions) {
  if (p <= 1) throw InvalidArgument("variational bounds need p > 1");
  double fn = f.cwiseAbs().maxCoeff();
  if (std::fabs(pi_mean(f, c.pi)) > 1e-10 * std::max(1.0, fn))
    throw InvalidArgument("f must have mean zero under pi");
  if (spectral_gap(c) <= 0) throw InvalidChain("zero spectral gap");
  VariationalBounds out;
  if (fn == 0.0) return out;
  const double q = p / (p - 1);
  Eigen::MatrixXd R = sqrt_minus_generator(c), Ri = inv_sqrt_minus_generator(c);
  Eigen::VectorXd g = Ri * f;
  out.value = lp_norm(g, c.pi, p);
  out.dual = min_shift(g, c.pi, p).second;

  auto ratio = [&](const Eigen::VectorXd& raw) {
    // constants carry no information; dropping them avoids 0/0 on the kernel
    Eigen::VectorXd phi = project_mean_zero(raw, c.pi);
    double den = lp_norm(R * phi, c.pi, q);
    if (den <= 1e-12 * lp_norm(phi, c.pi, q)) return 0.0;
    return std::fabs(c.pi.dot(f.cwiseProduct(phi))) / den;
  };
  Eigen::VectorXd best_phi;
  auto offer = [&](const Eigen::VectorXd& phi, const char* src) {
    double r = ratio(phi);
    if (r > out.lower) {
      out.lower = r;
      out.best_source = src;
      best_phi = phi;
    }
  };

  auto V = minus_generator_eigen(c).second;
  for (int k = 0; k < V.cols(); ++k) offer(V.col(k), "eigenvector");
  offer(f, "p2-optimizer");
  // projected dual: v = J - E J with J = |g|^{p-2} g, then phi = (-Q)^{-1/2} v
  Eigen::VectorXd J(g.size());
  for (int i = 0; i < g.size(); ++i) J(i) = std::pow(std::fabs(g(i)), p - 1) * (g(i) < 0 ? -1 : 1);
  offer(Ri * project_mean_zero(J, c.pi), "projected-dual");
  // the dual of the optimally shifted g attains the sup exactly
  double cstar = min_shift(g, c.pi, p).first;
  Eigen::VectorXd gs = g.array() - cstar;
  for (int i = 0; i < g.size(); ++i) J(i) = std::pow(std::fabs(gs(i)), p - 1) * (gs(i) < 0 ? -1 : 1);
  offer(Ri * project_mean_zero(J, c.pi), "shifted-dual");
  std::vector<double> z(c.n());
  for (int k = 0; k < random_directions; ++k) {
    rng.fill_normal(z);
    offer(Eigen::Map<Eigen::VectorXd>(z.data(), c.n()), "random");
  }

  // ascent on v = (-Q)^{1/2} phi in the mean-zero subspace: maximize <g,v>/||v||_q
  Eigen::VectorXd v = R * best_phi;
  v = project_mean_zero(v / v.norm(), c.pi);
  auto vr = [&](const Eigen::VectorXd& w) {
    double den = lp_norm(w, c.pi, q);
    return den > 0 ? std::fabs(c.pi.dot(g.cwiseProduct(w))) / den : 0.0;
  };
  double cur = vr(v), step = 0.1;
  for (int it = 0; it < 500 && step > 1e-14; ++it) {
    v /= v.norm();
    double num = c.pi.dot(g.cwiseProduct(v)), den = lp_norm(v, c.pi, q);
    double sgn = num < 0 ? -1 : 1;
    Eigen::VectorXd grad(v.size());
    for (int i = 0; i < v.size(); ++i) {
      double dn = c.pi(i) * std::pow(std::fabs(v(i)), q - 1) * (v(i) < 0 ? -1 : 1) / std::pow(den, q - 1);
      grad(i) = sgn * c.pi(i) * g(i) / den - std::fabs(num) * dn / (den * den);
    }
    grad = project_mean_zero(grad, c.pi);
    double gn = grad.norm();
    if (gn == 0) break;
    Eigen::VectorXd trial = project_mean_zero(v + step * grad / gn, c.pi);
    double tr = vr(trial);
    if (tr > cur) {
      v = trial;
      cur = tr;
      step *= 1.5;
    } else {
      step *= 0.5;
    }
  }
  if (cur > out.lower) {
    out.lower = cur;
    out.best_source = "ascent";
  }
  out.upper = 2 * out.lower;
  return out;
}

double kappa_inner(const Eigen::VectorXd& pi, const Eigen::VectorXd& G0, double q) {
  double base = lp_norm(G0, pi, q);
  if (base == 0) return 1.0;
  auto [c, m] = min_shift(G0, pi, q);
  (void)c;
  return std::min(1.0, m / base);
}

double kappa(const Eigen::VectorXd& pi, double q, NoiseStream& rng, int random_directions) {
  if (q <= 1) throw InvalidArgument("kappa needs q > 1");
  int n = static_cast<int>(pi.size());
  double best = 1.0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(i) = 1.0;
    best = std::min(best, kappa_inner(pi, project_mean_zero(e, pi), q));
  }
  std::vector<double> z(n);
  for (int k = 0; k < random_directions; ++k) {
    rng.fill_normal(z);
    Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(z.data(), n);
    // cube the draw half the time to favour spiky directions
    if (k % 2) v = v.array().cube();
    best = std::min(best, kappa_inner(pi, project_mean_zero(v, pi), q));
  }
  return best;
}

LpsConstants lps_best_constants(const ReversibleChain& c, double p, int probes, NoiseStream& rng) {
  if (p <= 1) throw InvalidArgument("LPS constants need p > 1");
  Eigen::MatrixXd R = sqrt_minus_generator(c);
  auto V = minus_generator_eigen(c).second;
  LpsConstants out;
  out.c_best = std::numeric_limits<double>::infinity();
  out.C_best = 0.0;
  auto probe = [&](const Eigen::VectorXd& raw) {
    Eigen::VectorXd f = project_mean_zero(raw, c.pi);
    double den = edge_gradient_norm(c, f, p);
    if (den <= 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff())) return;
    double r = lp_norm(R * f, c.pi, p) / den;
    out.c_best = std::min(out.c_best, r);
    out.C_best = std::max(out.C_best, r);
    if (p == 2.0) out.p2_error = std::max(out.p2_error, std::fabs(r - 1.0));
  };
  for (int k = 1; k < V.cols(); ++k) probe(V.col(k));
  std::vector<double> z(c.n());
  for (int k = 0; k < probes; ++k) {
    rng.fill_normal(z);
    probe(Eigen::Map<Eigen::VectorXd>(z.data(), c.n()));
  }
  if (p == 2.0 && out.p2_error > 1e-10) throw NumericFailure("p = 2 LPS ratio differs from 1");
  return out;
}

ShiftedLpsReport shifted_lps_check(const ReversibleChain& c, double p, int probes, NoiseStream& rng) {
  if (p <= 1) throw InvalidArgument("shifted LPS check needs p > 1");
  Eigen::MatrixXd S = sqrt_shifted_generator(c);
  ShiftedLpsReport out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  std::vector<double> z(c.n());
  for (int k = 0; k < probes; ++k) {
    rng.fill_normal(z);
    Eigen::VectorXd f = Eigen::Map<Eigen::VectorXd>(z.data(), c.n());
    if (k == 0) f.setConstant(z[0]);
    double lhs = lp_norm(S * f, c.pi, p);
    double rhs = lp_norm(f, c.pi, p) + edge_gradient_norm(c, f, p);
    out.min_ratio = std::min(out.min_ratio, lhs / rhs);
    out.max_ratio = std::max(out.max_ratio, lhs / rhs);
    double l2 = lp_norm(S * f, c.pi, 2), f2 = lp_norm(f, c.pi, 2);
    double dir = c.pi.dot(f.cwiseProduct(-c.Q * f));
    double scale = std::max(1.0, f2 * f2 + dir);
    out.p2_identity_error = std::max(out.p2_identity_error, std::fabs(l2 * l2 - f2 * f2 - dir) / scale);
  }
  return out;
}

double quadratic_local_gap(int ell) {
  if (ell < 1) throw InvalidArgument("ell must be positive");
  int n = 2 * ell - 1;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    H(i, i) = 2.0;
    if (i > 0) H(i, i - 1) = H(i - 1, i) = -1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues()(0);
}

std::vector<double> sample_pinned_bridge(int ell, double m, NoiseStream& rng) {
  if (ell < 1) throw InvalidArgument("ell must be positive");
  int steps = 2 * ell;
  std::vector<double> s(steps + 1, 0.0);
  for (int k = 1; k <= steps; ++k) s[k] = s[k - 1] + rng.normal();
  std::vector<double> out(steps - 1);
  for (int k = 1; k < steps; ++k) out[k - 1] = s[k] - (double(k) / steps) * s[steps] + k * m;
  return out;
}

Observable bridge_mid_coordinate(int ell) {
  int n = 2 * ell - 1;
  return Observable::make("bridge_mid", 0, n - 1, [ell](const auto* w) { return w[ell - 1]; });
}

Observable bridge_lowest_sine(int ell) {
  int n = 2 * ell - 1;
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k) c[k] = std::sin(std::numbers::pi * (k + 1) / (2.0 * ell));
  return Observable::make("bridge_sine", 0, n - 1, [c, n](const auto* w) {
    auto s = c[0] * w[0];
    for (int k = 1; k < n; ++k) s = s + c[k] * w[k];
    return s;
  });
}

WeakPoincareResult weak_poincare_ratio(int ell, double m, const Observable& f, double p, double q,
                                       long samples, NoiseStream& rng) {
  if (!(2 < q && q < p)) throw InvalidArgument("weak Poincare ratio needs 2 < q < p");
  if (f.size() != 2 * ell - 1) throw InvalidArgument("observable must cover the interior heights");
  if (samples < 2) throw InvalidArgument("need at least two samples");
  std::vector<double> vals(samples), grads(samples), mid(samples);
  for (long k = 0; k < samples; ++k) {
    auto phi = sample_pinned_bridge(ell, m, rng);
    Jet j = f.eval_jet(phi);
    vals[k] = j.v;
    double g2 = 0.0;
    for (double g : j.g) g2 += g * g;
    grads[k] = std::sqrt(g2);
    double c = phi[ell - 1] - ell * m;
    mid[k] = c * c;
  }
  double mean = pairwise_sum(vals) / samples;
  double sq = 0.0, gp = 0.0;
  for (long k = 0; k < samples; ++k) {
    sq += std::pow(std::fabs(vals[k] - mean), q);
    gp += std::pow(grads[k], p);
  }
  WeakPoincareResult r;
  r.lq = std::pow(sq / samples, 1.0 / q);
  r.grad_lp = std::pow(gp / samples, 1.0 / p);
  r.ratio = r.lq / (ell * r.grad_lp);
  auto mv = mean_se(mid);
  r.mid_variance = mv.mean;
  r.mid_variance_se = mv.se;
  return r;
}

void write_chain_ledger(std::ostream& os, const std::vector<ChainLedgerRow>& rows, bool header) {
  if (header) os << "hash,n,p,lower,value,upper,dual,kappa,pass\n";
  os << std::setprecision(17);
  for (const auto& r : rows)
    os << r.hash << ',' << r.n << ',' << r.p << ',' << r.lower << ',' << r.value << ',' << r.upper
       << ',' << r.dual << ',' << r.kappa << ',' << (r.pass ? 1 : 0) << '\n';
}

}  // namespace glbg
