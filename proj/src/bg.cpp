#include "glbg/bg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include "glbg/error.hpp"
#include "glbg/measures.hpp"
#include "glbg/noise.hpp"
#include "glbg/parallel.hpp"
#include "glbg/quadrature.hpp"

namespace glbg {

namespace {

constexpr std::uint64_t kTrajTag = 0x4247424754ULL;
constexpr std::uint64_t kBootTag = 0x424f4f54ULL;

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Sliding block means over labels x-ell..x+ell-1 for x = 1..N.
void block_means(const double* e, int N, int ell, double* out) {
  double s = 0.0;
  for (int j = -ell; j < ell; ++j) s += e[j];
  const double inv = 1.0 / (2.0 * ell);
  for (int i = 0; i < N; ++i) {
    out[i] = s * inv;
    s += e[i + ell] - e[i - ell];
  }
}

int observable_reach(const Observable& f) { return std::max(-f.lo(), std::max(f.hi(), 0)); }

struct Envelope {
  double rise_exp = 0.0;   // ell exponent of the T^{(p-2)/2} N^{-p/2} branch
  double decay_exp = 0.0;  // ell exponent of the T^{p-1} N^p branch; 0 = absent
  bool has_decay = false;
};

Envelope envelope_shape(const std::string& kind, int order, double p) {
  if (kind == "bg2") return {p / 2, -1.5 * p, true};
  if (kind == "bg1") return {p, -p, true};
  if (kind == "one_block") return {1.5 * p, 0.0, false};
  // two_block / iteration
  return {order == 2 ? p / 2 : p, 0.0, false};
}

Potential config_potential(const BGConfig& c) { return Potential::from_json(c.potential); }

}  // namespace

// ---------------------------------------------------------------- weight

double WeightSpec::operator()(double s, long x, int N, double T) const {
  if (kind == "constant") return amplitude;
  if (kind == "sinusoidal")
    return amplitude *
           std::cos(2 * std::numbers::pi * (k * static_cast<double>(x) / N + omega * s) + phase);
  if (kind == "tabulated") {
    if (table.empty()) throw InvalidArgument("tabulated weight needs at least one row");
    std::size_t rows = table.size();
    std::size_t r = rows == 1 ? 0 : std::min(rows - 1, static_cast<std::size_t>(s / T * rows));
    const auto& row = table[r];
    if (static_cast<int>(row.size()) != N) throw InvalidArgument("weight row length differs from N");
    long n = N;
    long i = ((x - 1) % n + n) % n;
    return amplitude * row[static_cast<std::size_t>(i)];
  }
  throw InvalidArgument("unknown weight kind: " + kind);
}

double WeightSpec::lp_integral(int N, double T, double p, int steps) const {
  double total = 0.0;
  for (int j = 0; j < steps; ++j) {
    double s = (j + 0.5) * T / steps;
    double row = 0.0;
    for (int x = 1; x <= N; ++x) row += std::pow(std::fabs((*this)(s, x, N, T)), p);
    total += row / N;
  }
  return total * T / steps;
}

bool WeightSpec::is_zero() const {
  if (amplitude == 0.0) return true;
  if (kind == "tabulated")
    return std::all_of(table.begin(), table.end(), [](const auto& r) {
      return std::all_of(r.begin(), r.end(), [](double v) { return v == 0.0; });
    });
  return false;
}

nlohmann::json WeightSpec::to_json() const {
  nlohmann::json j{{"kind", kind}, {"amplitude", amplitude}};
  if (kind == "sinusoidal") {
    j["k"] = k;
    j["omega"] = omega;
    j["phase"] = phase;
  }
  if (kind == "tabulated") j["table"] = table;
  return j;
}

WeightSpec WeightSpec::from_json(const nlohmann::json& j) {
  WeightSpec w;
  if (j.is_null()) return w;
  w.kind = j.value("kind", w.kind);
  w.amplitude = j.value("amplitude", w.amplitude);
  w.k = j.value("k", w.k);
  w.omega = j.value("omega", w.omega);
  w.phase = j.value("phase", w.phase);
  if (j.contains("table")) w.table = j.at("table").get<std::vector<std::vector<double>>>();
  if (w.kind != "constant" && w.kind != "sinusoidal" && w.kind != "tabulated")
    throw InvalidArgument("unknown weight kind: " + w.kind);
  return w;
}

// ---------------------------------------------------------------- config

void BGConfig::validate() const {
  if (N < 4) throw InvalidArgument("N must be at least 4");
  if (!(T > 0)) throw InvalidArgument("T must be positive");
  if (!(p >= 4)) throw InvalidArgument("p must be at least 4");
  if (!(p_prime > p)) throw InvalidArgument("p' must exceed p");
  if (ell0 < 1) throw InvalidArgument("ell0 must be positive");
  if (ells.empty()) throw InvalidArgument("ell list is empty");
  for (int l : ells) {
    if (l < 1) throw InvalidArgument("ell must be positive");
    if (2 * l > N) throw InvalidArgument("2 ell must not exceed N");
  }
  if (2 * ell0 > N) throw InvalidArgument("2 ell0 must not exceed N");
  if (R < 1) throw InvalidArgument("R must be positive");
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  if (snapshots < 1) throw InvalidArgument("need at least one snapshot");
  if (centering != "theorem" && centering != "block") throw InvalidArgument("centering is theorem or block");
  integrator_from_string(integrator);
  eoe_method_from_string(eoe_method);
  if (weight.kind == "tabulated")
    for (const auto& r : weight.table)
      if (static_cast<int>(r.size()) != N) throw InvalidArgument("weight row length differs from N");
}

nlohmann::json BGConfig::to_json() const {
  return {{"N", N},
          {"ells", ells},
          {"ell0", ell0},
          {"T", T},
          {"p", p},
          {"p_prime", p_prime},
          {"gamma", gamma},
          {"weak_asymmetry", weak_asymmetry},
          {"u0", u0},
          {"observable", observable},
          {"observable_params", observable_params},
          {"weight", weight.to_json()},
          {"R", R},
          {"trajectory_offset", trajectory_offset},
          {"seed", seed},
          {"dt", dt},
          {"snapshots", snapshots},
          {"integrator", integrator},
          {"potential", potential},
          {"centering", centering},
          {"eoe_method", eoe_method},
          {"bootstrap_reps", bootstrap_reps},
          {"precondition_tol", precondition_tol},
          {"threads", threads}};
}

BGConfig BGConfig::from_json(const nlohmann::json& j) {
  BGConfig c;
  c.N = j.value("N", c.N);
  if (j.contains("ells")) c.ells = j.at("ells").get<std::vector<int>>();
  c.ell0 = j.value("ell0", c.ell0);
  c.T = j.value("T", c.T);
  c.p = j.value("p", c.p);
  c.p_prime = j.value("p_prime", c.p_prime);
  c.gamma = j.value("gamma", c.gamma);
  c.weak_asymmetry = j.value("weak_asymmetry", c.weak_asymmetry);
  c.u0 = j.value("u0", c.u0);
  c.observable = j.value("observable", c.observable);
  if (j.contains("observable_params")) c.observable_params = j.at("observable_params");
  if (j.contains("weight")) c.weight = WeightSpec::from_json(j.at("weight"));
  c.R = j.value("R", c.R);
  c.trajectory_offset = j.value("trajectory_offset", c.trajectory_offset);
  c.seed = j.value("seed", c.seed);
  c.dt = j.value("dt", c.dt);
  c.snapshots = j.value("snapshots", c.snapshots);
  c.integrator = j.value("integrator", c.integrator);
  if (j.contains("potential")) c.potential = j.at("potential");
  c.centering = j.value("centering", c.centering);
  c.eoe_method = j.value("eoe_method", c.eoe_method);
  c.bootstrap_reps = j.value("bootstrap_reps", c.bootstrap_reps);
  c.precondition_tol = j.value("precondition_tol", c.precondition_tol);
  c.threads = j.value("threads", c.threads);
  return c;
}

std::string BGConfig::hash() const {
  // threads do not change results
  auto j = to_json();
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

std::string json_hash(const nlohmann::json& j) { return fnv1a_hex(j.dump()); }

double BGConfig::effective_gamma() const {
  return weak_asymmetry ? gamma / std::sqrt(static_cast<double>(N)) : gamma;
}

// ---------------------------------------------------------------- residuals

double residual_field_second(const Observable& f, const TorusField& eta, long x, int ell,
                             const ResidualCoeffs& c) {
  if (2 * ell > eta.N()) throw InvalidArgument("2 ell must not exceed N");
  double d = block_average(eta, x, ell) - c.u0;
  return f.eval_at(eta, x) - 0.5 * c.f2 * (d * d - c.var / (2.0 * ell + c.denom_shift));
}

double residual_field_first(const Observable& f, const TorusField& eta, long x, int ell,
                            const ResidualCoeffs& c) {
  if (2 * ell > eta.N()) throw InvalidArgument("2 ell must not exceed N");
  return f.eval_at(eta, x) - c.f1 * (block_average(eta, x, ell) - c.u0);
}

double residual_second_mean(const ResidualCoeffs& c, int ell) {
  return 0.5 * c.f2 * (c.var / (2.0 * ell + c.denom_shift) - c.var / (2.0 * ell));
}

ResidualCoeffs residual_coeffs(const Observable& f, const Potential& pot, double u0) {
  ResidualCoeffs c;
  c.u0 = u0;
  c.var = variance(pot, u0);
  auto t = pot.is_quadratic() ? tilde_derivs_gaussian(f, u0) : tilde_derivs(f, pot, u0);
  c.f1 = t.f1;
  c.f2 = t.f2;
  return c;
}

namespace {

void check_preconditions(const Observable& f, const Potential& pot, double u0, int order,
                         double tol) {
  auto t = tilde_derivs(f, pot, u0);
  if (std::fabs(t.f0) > tol) throw InvalidObservable("Boltzmann-Gibbs needs f~(u0) = 0");
  if (order == 2 && std::fabs(t.f1) > tol)
    throw InvalidObservable("second-order Boltzmann-Gibbs needs f~'(u0) = 0");
}

SiteIntegrand make_residual_integrand(const Observable& f, int N, int ell, int order,
                                      const ResidualCoeffs& c) {
  SiteIntegrand s;
  s.kind = order == 2 ? "bg2" : "bg1";
  s.ell = ell;
  s.reach = std::max(ell, observable_reach(f));
  const int lo = f.lo();
  auto body = f.double_body();
  s.eval = [=](const double* e, double* r) {
    std::vector<double> m(N);
    block_means(e, N, ell, m.data());
    const double off = c.var / (2.0 * ell + c.denom_shift);
    for (int i = 0; i < N; ++i) {
      double d = m[i] - c.u0;
      double fx = body(e + i + lo);
      r[i] = order == 2 ? fx - 0.5 * c.f2 * (d * d - off) : fx - c.f1 * d;
    }
  };
  return s;
}

CondExpOptions cond_options(const BGConfig& cfg) {
  CondExpOptions o;
  o.method = eoe_method_from_string(cfg.eoe_method);
  o.seed = derive_seed(cfg.seed, 0, 0x434f4e44ULL);
  o.threads = cfg.threads;
  return o;
}

SiteIntegrand make_one_block_integrand(const Observable& f, const Potential& pot, int N, int ell,
                                       double u0, const CondExpOptions& o) {
  SiteIntegrand s;
  s.kind = "one_block";
  s.ell = ell;
  s.reach = std::max(ell, observable_reach(f));
  auto ce = std::make_shared<ConditionalExpectation>(f, pot, ell, u0, o);
  const int lo = f.lo();
  auto body = f.double_body();
  s.eval = [=](const double* e, double* r) {
    std::vector<double> m(N);
    block_means(e, N, ell, m.data());
    for (int i = 0; i < N; ++i) r[i] = body(e + i + lo) - ce->value(m[i]);
  };
  return s;
}

SiteIntegrand make_block_difference(const Observable& f, const Potential& pot, int N, int ell_a,
                                    int ell_b, double u0, const CondExpOptions& o,
                                    const std::string& kind, int report_ell) {
  SiteIntegrand s;
  s.kind = kind;
  s.ell = report_ell;
  s.reach = std::max(ell_a, ell_b);
  auto ca = std::make_shared<ConditionalExpectation>(f, pot, ell_a, u0, o);
  auto cb = std::make_shared<ConditionalExpectation>(f, pot, ell_b, u0, o);
  const bool same = ell_a == ell_b;
  s.eval = [=](const double* e, double* r) {
    if (same) {
      std::fill(r, r + N, 0.0);
      return;
    }
    std::vector<double> ma(N), mb(N);
    block_means(e, N, ell_a, ma.data());
    block_means(e, N, ell_b, mb.data());
    for (int i = 0; i < N; ++i) r[i] = ca->value(ma[i]) - cb->value(mb[i]);
  };
  return s;
}

bool weight_time_dependent(const WeightSpec& w) {
  if (w.kind == "sinusoidal") return w.omega != 0.0;
  if (w.kind == "tabulated") return w.table.size() > 1;
  return false;
}

// Runs one trajectory and calls visit(step, s, densities) after each step,
// where densities[j] = sum_x h(s, x) r_j(x). Step 0 is the initial state.
template <class Visit>
void run_trajectory(const BGConfig& cfg, const Potential& pot, Integrator integ, long steps,
                    double h, const std::vector<SiteIntegrand>& ints, long index, Visit&& visit) {
  const int N = cfg.N;
  int reach = 0;
  for (const auto& s : ints) reach = std::max(reach, s.reach);
  const int pad = std::max(1, reach + 1);
  Asymmetry asym(cfg.effective_gamma());
  NoiseStream noise(cfg.seed, static_cast<std::uint64_t>(index), kTrajTag);
  auto eta = sample_grand_canonical(pot, cfg.u0, N, noise);

  std::vector<double> padded(N + 2 * static_cast<std::size_t>(pad));
  std::vector<double> r(N), hrow(N, 1.0), dens(ints.size());
  double* e = padded.data() + pad;
  const bool tdep = weight_time_dependent(cfg.weight);
  const bool constant = cfg.weight.kind == "constant";
  const double hd = h / (double(N) * N);
  auto fill_h = [&](double s) {
    for (int i = 0; i < N; ++i) hrow[i] = cfg.weight(s, i + 1, N, cfg.T);
  };
  if (!constant) fill_h(0.0);

  auto evaluate = [&](const std::vector<double>& state, double s) {
    for (int i = 0; i < N; ++i) e[i] = state[i];
    for (int i = 1; i <= pad; ++i) {
      e[-i] = state[((-i) % N + N) % N];
      e[N - 1 + i] = state[(i - 1) % N];
    }
    if (tdep) fill_h(s);
    for (std::size_t j = 0; j < ints.size(); ++j) {
      ints[j].eval(e, r.data());
      double acc = 0.0;
      if (constant)
        for (int i = 0; i < N; ++i) acc += r[i];
      else
        for (int i = 0; i < N; ++i) acc += hrow[i] * r[i];
      dens[j] = constant ? cfg.weight.amplitude * acc : acc;
    }
  };

  evaluate(eta, 0.0);
  visit(0L, 0.0, dens);
  if (integ == Integrator::Exact) {
    GaussianPropagator prop(N, asym, h);
    prop.load(eta);
    for (long k = 1; k <= steps; ++k) {
      prop.advance(noise);
      prop.unload(eta);
      evaluate(eta, k * hd);
      visit(k, k * hd, dens);
    }
  } else {
    EulerTorus euler(pot, asym, eta);
    for (long k = 1; k <= steps; ++k) {
      euler.step(h, noise);
      if (!euler.finite()) throw IntegratorDiverged("Euler state became non-finite", k * hd);
      evaluate(euler.state(), k * hd);
      visit(k, k * hd, dens);
    }
  }
}

Integrator resolve_integrator(const BGConfig& cfg, const Potential& pot) {
  auto integ = integrator_from_string(cfg.integrator);
  if (integ == Integrator::Auto) integ = pot.is_quadratic() ? Integrator::Exact : Integrator::Euler;
  if (integ == Integrator::Exact && !pot.is_quadratic())
    throw UnsupportedPotential("exact propagator needs quadratic V");
  return integ;
}

}  // namespace

std::vector<std::vector<double>> run_integrands(const BGConfig& cfg,
                                                const std::vector<SiteIntegrand>& ints,
                                                std::string* integrator_used, double* dt_used) {
  cfg.validate();
  auto pot = config_potential(cfg);
  auto integ = resolve_integrator(cfg, pot);
  double dt = cfg.dt;
  if (integ == Integrator::Euler) dt = std::min(dt, default_dt(pot));
  const double micro = cfg.T * cfg.N * cfg.N;
  const long per_snap = std::max(1L, static_cast<long>(std::ceil(micro / (cfg.snapshots * dt))));
  const long steps = per_snap * cfg.snapshots;
  const double h = micro / steps;
  const double hd = h / (double(cfg.N) * cfg.N);
  if (integrator_used) *integrator_used = to_string(integ);
  if (dt_used) *dt_used = h;

  std::vector<std::vector<double>> out(ints.size(), std::vector<double>(cfg.R, 0.0));
  if (cfg.weight.is_zero()) return out;
  const double p = cfg.p;
  parallel_for(
      static_cast<std::size_t>(cfg.R),
      [&](std::size_t k) {
        std::vector<double> integral(ints.size(), 0.0), prev(ints.size()), sup(ints.size(), 0.0);
        run_trajectory(cfg, pot, integ, steps, h, ints, cfg.trajectory_offset + static_cast<long>(k),
                       [&](long step, double, const std::vector<double>& d) {
                         if (step == 0) {
                           prev = d;
                           return;
                         }
                         for (std::size_t j = 0; j < d.size(); ++j) {
                           integral[j] += 0.5 * hd * (prev[j] + d[j]);
                           prev[j] = d[j];
                         }
                         if (step % per_snap == 0)
                           for (std::size_t j = 0; j < d.size(); ++j)
                             sup[j] = std::max(sup[j], std::fabs(integral[j]));
                       });
        for (std::size_t j = 0; j < ints.size(); ++j) out[j][k] = std::pow(sup[j], p);
      },
      cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : default_threads());
  return out;
}

// ---------------------------------------------------------------- results

void BGResult::finalize(double p, int bootstrap_reps, std::uint64_t seed) {
  const int N = config.value("N", 0);
  const double T = config.value("T", 0.0);
  auto shape = envelope_shape(kind, order, p);
  const double front_rise = std::pow(T, (p - 2) / 2) * std::pow(N, -p / 2) * h_integral;
  const double front_decay = std::pow(T, p - 1) * std::pow(N, p) * h_integral;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    const auto& v = sup_p[i];
    auto mean = [p](std::span<const double> x) {
      return std::pow(order_free_sum(x) / static_cast<double>(x.size()), 1.0 / p);
    };
    row.estimate = v.empty() ? 0.0 : mean(v);
    row.se = bootstrap_se(v, mean, bootstrap_reps, derive_seed(seed, i, kBootTag));
    row.env_rise = front_rise * std::pow(row.ell, shape.rise_exp);
    row.env_decay = shape.has_decay ? front_decay * std::pow(row.ell, shape.decay_exp) : 0.0;
    row.envelope = row.env_rise + row.env_decay;
  }
  c_fit = 0.0;
  c_max = 0.0;
  for (const auto& row : rows) {
    if (row.envelope <= 0) continue;
    double c = std::pow(row.estimate, p) / row.envelope;
    if (c_fit == 0.0 && row.estimate > 0) c_fit = c;
    c_max = std::max(c_max, c);
  }
  for (auto& row : rows) {
    row.fitted = std::pow(c_fit * row.envelope, 1.0 / p);
    row.dominated = row.estimate <= row.fitted + row.se;
  }
  std::vector<double> lx, ly;
  for (const auto& row : rows)
    if (row.estimate > 0) {
      lx.push_back(std::log(row.ell));
      ly.push_back(std::log(row.estimate));
    }
  slope = slope_se = 0.0;
  if (lx.size() >= 2) {
    auto fit = fit_line(lx, ly);
    slope = fit.slope;
    slope_se = std::isfinite(fit.slope_se) ? fit.slope_se : 0.0;
  }
}

bool BGResult::nonincreasing() const {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double tol = std::hypot(rows[i - 1].se, rows[i].se);
    if (rows[i].estimate > rows[i - 1].estimate + tol) return false;
  }
  return true;
}

nlohmann::json BGResult::to_json(bool with_samples) const {
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows)
    jr.push_back({{"ell", r.ell},
                  {"estimate", r.estimate},
                  {"se", r.se},
                  {"env_rise", r.env_rise},
                  {"env_decay", r.env_decay},
                  {"envelope", r.envelope},
                  {"fitted", r.fitted},
                  {"dominated", r.dominated}});
  nlohmann::json j{{"kind", kind},
                   {"order", order},
                   {"rows", jr},
                   {"c_fit", c_fit},
                   {"c_max", c_max},
                   {"slope", slope},
                   {"slope_se", slope_se},
                   {"h_integral", h_integral},
                   {"coeffs",
                    {{"u0", coeffs.u0},
                     {"f1", coeffs.f1},
                     {"f2", coeffs.f2},
                     {"var", coeffs.var},
                     {"denom_shift", coeffs.denom_shift}}},
                   {"integrator", integrator},
                   {"dt_micro", dt_micro},
                   {"nonincreasing", nonincreasing()},
                   {"config_hash", config_hash},
                   {"config", config}};
  if (with_samples) {
    j["sup_p"] = sup_p;
    j["trajectories"] = trajectories;
  }
  return j;
}

void BGResult::write_csv(std::ostream& os, bool header) const {
  if (header)
    os << "config_hash,kind,order,ell,estimate,stderr,env_rise,env_decay,envelope,fitted,dominated\n";
  auto old = os.precision(10);
  for (const auto& r : rows)
    os << config_hash << ',' << kind << ',' << order << ',' << r.ell << ',' << r.estimate << ','
       << r.se << ',' << r.env_rise << ',' << r.env_decay << ',' << r.envelope << ',' << r.fitted
       << ',' << (r.dominated ? 1 : 0) << '\n';
  os.precision(old);
}

BGResult merge_results(const BGResult& a, const BGResult& b, double p, int bootstrap_reps,
                       std::uint64_t seed) {
  if (a.kind != b.kind || a.order != b.order || a.rows.size() != b.rows.size())
    throw InvalidArgument("results describe different experiments");
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    if (a.rows[i].ell != b.rows[i].ell) throw InvalidArgument("results use different ell lists");
  BGResult m = a;
  std::vector<std::size_t> idx(a.trajectories.size() + b.trajectories.size());
  std::vector<long> traj(a.trajectories);
  traj.insert(traj.end(), b.trajectories.begin(), b.trajectories.end());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return traj[x] < traj[y]; });
  for (std::size_t i = 1; i < idx.size(); ++i)
    if (traj[idx[i]] == traj[idx[i - 1]]) throw InvalidArgument("batches overlap");
  m.trajectories.clear();
  for (auto i : idx) m.trajectories.push_back(traj[i]);
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    std::vector<double> all(a.sup_p[r]);
    all.insert(all.end(), b.sup_p[r].begin(), b.sup_p[r].end());
    m.sup_p[r].clear();
    for (auto i : idx) m.sup_p[r].push_back(all[i]);
  }
  long first = m.trajectories.empty() ? 0 : m.trajectories.front();
  m.config["trajectory_offset"] = first;
  m.config["R"] = static_cast<int>(m.trajectories.size());
  auto cfg = BGConfig::from_json(m.config);
  m.config_hash = cfg.hash();
  m.finalize(p, bootstrap_reps, seed);
  return m;
}

namespace {

BGResult make_result(const BGConfig& cfg, const std::string& kind, int order,
                     const std::vector<int>& ells) {
  BGResult r;
  r.kind = kind;
  r.order = order;
  for (int l : ells) {
    MomentRow row;
    row.ell = l;
    r.rows.push_back(row);
  }
  r.config = cfg.to_json();
  r.config_hash = cfg.hash();
  r.h_integral = cfg.weight.lp_integral(cfg.N, cfg.T, cfg.p);
  for (int k = 0; k < cfg.R; ++k) r.trajectories.push_back(cfg.trajectory_offset + k);
  return r;
}

}  // namespace

std::vector<BGResult> bg_moments(const BGConfig& cfg, const std::vector<int>& orders) {
  cfg.validate();
  auto pot = config_potential(cfg);
  auto f = make_observable(cfg.observable, cfg.u0, cfg.observable_params);
  for (int l : cfg.ells)
    if (l < cfg.ell0) throw InvalidArgument("ell must be at least ell0");
  auto coeffs = residual_coeffs(f, pot, cfg.u0);
  coeffs.denom_shift = cfg.centering == "block" ? 0 : 1;
  std::vector<SiteIntegrand> ints;
  for (int order : orders) {
    if (order != 1 && order != 2) throw InvalidArgument("order must be 1 or 2");
    check_preconditions(f, pot, cfg.u0, order, cfg.precondition_tol);
    for (int l : cfg.ells) ints.push_back(make_residual_integrand(f, cfg.N, l, order, coeffs));
  }
  std::string integ;
  double dt = 0.0;
  auto samples = run_integrands(cfg, ints, &integ, &dt);
  std::vector<BGResult> out;
  std::size_t j = 0;
  for (int order : orders) {
    auto r = make_result(cfg, order == 2 ? "bg2" : "bg1", order, cfg.ells);
    r.coeffs = coeffs;
    r.integrator = integ;
    r.dt_micro = dt;
    for (std::size_t i = 0; i < cfg.ells.size(); ++i) r.sup_p.push_back(std::move(samples[j++]));
    r.finalize(cfg.p, cfg.bootstrap_reps, cfg.seed);
    out.push_back(std::move(r));
  }
  return out;
}

BGResult bg_moment(const BGConfig& cfg, int order) { return bg_moments(cfg, {order}).front(); }

BGResult one_block_diag(const BGConfig& cfg) {
  cfg.validate();
  auto pot = config_potential(cfg);
  auto f = make_observable(cfg.observable, cfg.u0, cfg.observable_params);
  auto o = cond_options(cfg);
  std::vector<SiteIntegrand> ints;
  for (int l : cfg.ells) {
    if (l < cfg.ell0) throw InvalidArgument("ell must be at least ell0");
    ints.push_back(make_one_block_integrand(f, pot, cfg.N, l, cfg.u0, o));
  }
  auto r = make_result(cfg, "one_block", 0, cfg.ells);
  r.coeffs = residual_coeffs(f, pot, cfg.u0);
  auto samples = run_integrands(cfg, ints, &r.integrator, &r.dt_micro);
  for (auto& s : samples) r.sup_p.push_back(std::move(s));
  r.finalize(cfg.p, cfg.bootstrap_reps, cfg.seed);
  return r;
}

namespace {

int diag_order(const Observable& f, const Potential& pot, const BGConfig& cfg) {
  auto t = tilde_derivs(f, pot, cfg.u0);
  if (std::fabs(t.f0) > cfg.precondition_tol)
    throw InvalidObservable("block diagnostics need f~(u0) = 0");
  return std::fabs(t.f1) <= cfg.precondition_tol ? 2 : 1;
}

}  // namespace

BGResult two_block_diag(const BGConfig& cfg) {
  cfg.validate();
  auto pot = config_potential(cfg);
  auto f = make_observable(cfg.observable, cfg.u0, cfg.observable_params);
  int order = diag_order(f, pot, cfg);
  auto o = cond_options(cfg);
  std::vector<SiteIntegrand> ints;
  for (int l : cfg.ells) {
    if (l < cfg.ell0) throw InvalidArgument("ell must be at least ell0");
    ints.push_back(make_block_difference(f, pot, cfg.N, cfg.ell0, l, cfg.u0, o, "two_block", l));
  }
  auto r = make_result(cfg, "two_block", order, cfg.ells);
  r.coeffs = residual_coeffs(f, pot, cfg.u0);
  auto samples = run_integrands(cfg, ints, &r.integrator, &r.dt_micro);
  for (auto& s : samples) r.sup_p.push_back(std::move(s));
  r.finalize(cfg.p, cfg.bootstrap_reps, cfg.seed);
  return r;
}

namespace {

// The block means m1 = eta^(ell)(0) and m2 = eta^(2 ell)(0) satisfy
// m2 = (m1 + m_out)/2 with m_out the mean of the 2 ell outer sites,
// independent of m1 under mu_u0.
void static_iteration_norm(const Observable& f, const Potential& pot, const BGConfig& c, int ell,
                           const CondExpOptions& o, IterationResult& out) {
  ConditionalExpectation ca(f, pot, ell, c.u0, o), cb(f, pot, 2 * ell, c.u0, o);
  const double p = c.p;
  if (pot.is_quadratic() && o.method == EoEMethod::Analytic) {
    auto gh = gauss_hermite(48);
    const double sd = std::sqrt(variance(pot, c.u0) / (2.0 * ell));
    double acc = 0.0;
    for (std::size_t i = 0; i < gh.x.size(); ++i)
      for (std::size_t j = 0; j < gh.x.size(); ++j) {
        double m1 = c.u0 + sd * gh.x[i], mo = c.u0 + sd * gh.x[j];
        double d = ca.value(m1) - cb.value(0.5 * (m1 + mo));
        acc += gh.w[i] * gh.w[j] * std::pow(std::fabs(d), p);
      }
    out.static_norm = std::pow(acc, 1.0 / p);
    out.static_se = 0.0;
    out.static_method = "gauss-hermite";
    return;
  }
  const long n = 20000;
  std::vector<double> v(n);
  NoiseStream rng(c.seed, static_cast<std::uint64_t>(ell), 0x49544552ULL);
  TiltedSite site(pot, lambda_of_u(pot, c.u0));
  for (long k = 0; k < n; ++k) {
    auto w = sample_grand_canonical(site, 4 * ell, rng);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < 4 * ell; ++i) (i >= ell && i < 3 * ell ? s1 : s2) += w[i];
    double m1 = s1 / (2.0 * ell), m2 = (s1 + s2) / (4.0 * ell);
    v[k] = std::pow(std::fabs(ca.value(m1) - cb.value(m2)), p);
  }
  auto m = mean_se(v);
  out.static_norm = std::pow(m.mean, 1.0 / p);
  out.static_se = m.mean > 0 ? out.static_norm * m.se / (p * m.mean) : 0.0;
  out.static_method = "monte-carlo";
}

}  // namespace

IterationResult iteration_diag(const BGConfig& cfg, int ell) {
  auto c = cfg;
  c.ells = {ell};
  c.validate();
  if (ell < cfg.ell0) throw InvalidArgument("ell must be at least ell0");
  if (4 * ell > cfg.N) throw InvalidArgument("iteration needs 4 ell <= N");
  auto pot = config_potential(c);
  auto f = make_observable(c.observable, c.u0, c.observable_params);
  int order = diag_order(f, pot, c);
  auto o = cond_options(c);
  std::vector<SiteIntegrand> ints{make_block_difference(f, pot, c.N, ell, 2 * ell, c.u0, o, "iteration", ell)};
  auto r = make_result(c, "iteration", order, c.ells);
  auto samples = run_integrands(c, ints, &r.integrator, &r.dt_micro);
  r.sup_p.push_back(std::move(samples[0]));
  r.finalize(c.p, c.bootstrap_reps, c.seed);
  IterationResult out;
  out.moment = r.rows.front();
  static_iteration_norm(f, pot, c, ell, o, out);
  return out;
}

// ---------------------------------------------------------------- turnover

int balancing_ell(int N) { return static_cast<int>(std::lround(std::pow(N, 0.75))); }

TurnoverReport turnover_scan(const BGConfig& base, const std::vector<int>& Ns) {
  TurnoverReport rep;
  for (int N : Ns) {
    auto c = base;
    c.N = N;
    int ell = balancing_ell(N);
    if (ell < c.ell0) throw InvalidArgument("round(N^{3/4}) is below ell0");
    c.ells = {ell};
    auto r = bg_moment(c, 2);
    const auto& row = r.rows.front();
    rep.rows.push_back({N, ell, row.estimate, row.se, row.env_rise, row.env_decay});
  }
  rep.nonincreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].estimate > rep.rows[i - 1].estimate + std::hypot(rep.rows[i].se, rep.rows[i - 1].se))
      rep.nonincreasing = false;
  return rep;
}

nlohmann::json TurnoverReport::to_json() const {
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows)
    jr.push_back({{"N", r.N},
                  {"ell", r.ell},
                  {"estimate", r.estimate},
                  {"se", r.se},
                  {"env_rise", r.env_rise},
                  {"env_decay", r.env_decay}});
  return {{"rows", jr}, {"nonincreasing", nonincreasing}};
}

void TurnoverReport::write_csv(std::ostream& os) const {
  os << "N,ell,estimate,stderr,env_rise,env_decay\n";
  auto old = os.precision(10);
  for (const auto& r : rows)
    os << r.N << ',' << r.ell << ',' << r.estimate << ',' << r.se << ',' << r.env_rise << ','
       << r.env_decay << '\n';
  os.precision(old);
}

// ---------------------------------------------------------------- ergodicity

MeanSE residual_time_average(const BGConfig& cfg, int ell, int order, double T_run, int batches) {
  if (!(T_run > 0) || batches < 2) throw InvalidArgument("bad time-average request");
  auto c = cfg;
  c.T = T_run;
  c.ells = {ell};
  c.snapshots = batches;
  c.weight = WeightSpec{};
  c.validate();
  auto pot = config_potential(c);
  auto integ = resolve_integrator(c, pot);
  double dt = c.dt;
  if (integ == Integrator::Euler) dt = std::min(dt, default_dt(pot));
  auto f = make_observable(c.observable, c.u0, c.observable_params);
  auto coeffs = residual_coeffs(f, pot, c.u0);
  coeffs.denom_shift = c.centering == "block" ? 0 : 1;
  std::vector<SiteIntegrand> ints{make_residual_integrand(f, c.N, ell, order, coeffs)};
  const double micro = T_run * c.N * c.N;
  const long per_batch = std::max(1L, static_cast<long>(std::ceil(micro / (batches * dt))));
  const long steps = per_batch * batches;
  const double h = micro / steps;
  std::vector<double> means(batches, 0.0);
  run_trajectory(c, pot, integ, steps, h, ints, c.trajectory_offset,
                 [&](long step, double, const std::vector<double>& d) {
                   if (step == 0) return;
                   means[(step - 1) / per_batch] += d[0] / c.N / static_cast<double>(per_batch);
                 });
  return mean_se(means);
}

}  // namespace glbg
