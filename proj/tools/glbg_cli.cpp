// glbg: command-line front end for the simulator, samplers, equivalence-of-
// ensembles curves and Boltzmann-Gibbs experiments.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "glbg/bg.hpp"
#include "glbg/chain.hpp"
#include "glbg/dynamics.hpp"
#include "glbg/eoe.hpp"
#include "glbg/error.hpp"
#include "glbg/field.hpp"
#include "glbg/generator.hpp"
#include "glbg/measures.hpp"
#include "glbg/noise.hpp"
#include "glbg/observable.hpp"

#include "csv_schema.inc"

using nlohmann::json;
using namespace glbg;

namespace {

struct Globals {
  std::string config_path;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
  std::string json_out;
  int threads = 0;
};

// "a.b.c=value": value parsed as JSON, falling back to a plain string.
void apply_set(json& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidArgument("--set expects key=value, got " + kv);
  std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    node = &(*node)[part];
    if (!node->is_object()) *node = json::object();
    start = dot + 1;
  }
}

json load_config(const Globals& g) {
  json cfg = json::object();
  if (!g.config_path.empty()) {
    std::ifstream in(g.config_path);
    if (!in) throw InvalidArgument("cannot open config " + g.config_path);
    cfg = json::parse(in);
    if (!cfg.is_object()) throw InvalidArgument("config must be a JSON object");
    cfg.erase("_comment");
  }
  for (const auto& s : g.sets) apply_set(cfg, s);
  if (g.seed_given) cfg["seed"] = g.seed;
  if (g.threads > 0) cfg["threads"] = g.threads;
  return cfg;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InvalidArgument("cannot write " + path);
    }
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void preamble(std::ostream& os, const std::string& cmd, const std::string& hash) {
  os << "# glbg command=" << cmd << " config_hash=" << hash << '\n';
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string default_json_path(const Globals& g) {
  if (!g.json_out.empty()) return g.json_out;
  if (g.out.empty() || g.out == "-") return "";
  auto dot = g.out.rfind('.');
  auto slash = g.out.rfind('/');
  std::string stem = (dot != std::string::npos && (slash == std::string::npos || dot > slash))
                         ? g.out.substr(0, dot)
                         : g.out;
  return stem + ".json";
}

template <class T>
T get(const json& c, const std::string& key, T fallback) {
  return c.contains(key) ? c.at(key).get<T>() : fallback;
}

long count_unknown(const json& cfg, const std::vector<std::string>& known, const std::string& cmd) {
  long n = 0;
  for (auto it = cfg.begin(); it != cfg.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      std::cerr << "glbg " << cmd << ": ignoring unknown key '" << it.key() << "'\n";
      ++n;
    }
  return n;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Globals& g) {
  json c = load_config(g);
  count_unknown(c, {"N", "T", "gamma", "u0", "dt", "snapshots", "integrator", "potential", "form", "seed", "threads", "trajectory"}, "simulate");
  json eff{{"N", get(c, "N", 32)},
           {"T", get(c, "T", 0.01)},
           {"gamma", get(c, "gamma", 0.0)},
           {"u0", get(c, "u0", 0.0)},
           {"snapshots", get(c, "snapshots", 10)},
           {"integrator", get<std::string>(c, "integrator", "auto")},
           {"potential", c.value("potential", json{{"kind", "quadratic"}})},
           {"form", get<std::string>(c, "form", "long")},
           {"seed", get<std::uint64_t>(c, "seed", 1)},
           {"trajectory", get<std::uint64_t>(c, "trajectory", 0)}};
  auto pot = Potential::from_json(eff["potential"]);
  auto integ = integrator_from_string(eff["integrator"]);
  if (integ == Integrator::Auto) integ = pot.is_quadratic() ? Integrator::Exact : Integrator::Euler;
  eff["integrator"] = to_string(integ);
  const int N = eff["N"];
  const double T = eff["T"];
  const int S = eff["snapshots"];
  if (S < 1) throw InvalidArgument("snapshots must be positive");
  const double spacing = T * N * N / S;
  eff["dt"] = get(c, "dt", std::min(integ == Integrator::Exact ? 0.25 : default_dt(pot), spacing));
  std::string hash = json_hash(eff);

  NoiseStream noise(eff["seed"].get<std::uint64_t>(), eff["trajectory"].get<std::uint64_t>(), 0x53494dULL);
  auto eta0 = sample_grand_canonical(pot, eff["u0"].get<double>(), N, noise);
  std::vector<double> snaps;
  for (int j = 0; j <= S; ++j) snaps.push_back(T * j / S);
  SimulateOptions so;
  so.integrator = integ;
  auto rec = simulate(TorusField(eta0), pot, Asymmetry(eff["gamma"].get<double>()), T, eff["dt"].get<double>(),
                      snaps, noise, so);
  Output out(g.out);
  preamble(out.os(), "simulate", hash);
  if (eff["form"] == "long")
    rec.write_long_csv(out.os());
  else if (eff["form"] == "wide")
    rec.write_wide_csv(out.os(), {{"mean", [](const TorusField& e) { return e.mean(); }},
                                  {"energy", [&pot](const TorusField& e) { return hamiltonian_eta(e, pot); }},
                                  {"eta1", [](const TorusField& e) { return e.at(1); }}});
  else
    throw InvalidArgument("form must be long or wide");
  write_json(default_json_path(g), {{"command", "simulate"},
                                    {"config_hash", hash},
                                    {"config", eff},
                                    {"max_conservation_drift", conservation_residual(rec)}});
  return 0;
}

// ---------------------------------------------------------------- sample

int cmd_sample(const Globals& g) {
  json c = load_config(g);
  count_unknown(c, {"kind", "n", "u", "m", "count", "potential", "seed", "threads"}, "sample");
  json eff{{"kind", get<std::string>(c, "kind", "grand")},
           {"n", get(c, "n", 16)},
           {"count", get(c, "count", 1000)},
           {"potential", c.value("potential", json{{"kind", "quadratic"}})},
           {"seed", get<std::uint64_t>(c, "seed", 1)}};
  if (eff["kind"] == "grand")
    eff["u"] = get(c, "u", 0.0);
  else if (eff["kind"] == "canonical")
    eff["m"] = get(c, "m", 0.0);
  else
    throw InvalidArgument("kind must be grand or canonical");
  auto pot = Potential::from_json(eff["potential"]);
  const int n = eff["n"];
  const long count = eff["count"];
  std::string hash = json_hash(eff);
  NoiseStream rng(eff["seed"].get<std::uint64_t>(), 0, 0x53414dULL);
  Output out(g.out);
  preamble(out.os(), "sample", hash);
  out.os() << "draw,site,value\n";
  out.os().precision(17);
  json meta;
  auto emit = [&](long d, const std::vector<double>& w) {
    for (int i = 0; i < n; ++i) out.os() << d << ',' << i + 1 << ',' << w[i] << '\n';
  };
  if (eff["kind"] == "grand") {
    TiltedSite site(pot, lambda_of_u(pot, eff["u"].get<double>()));
    for (long d = 0; d < count; ++d) emit(d, sample_grand_canonical(site, n, rng));
  } else {
    CanonicalSampler s(pot, n, eff["m"].get<double>(), rng);
    for (long d = 0; d < count; ++d) emit(d, s.draw());
    meta = s.metadata().to_json();
  }
  write_json(default_json_path(g), {{"command", "sample"}, {"config_hash", hash}, {"config", eff}, {"sampler", meta}});
  return 0;
}

// ---------------------------------------------------------------- eoe

int cmd_eoe(const Globals& g) {
  json c = load_config(g);
  count_unknown(c, {"observable", "observable_params", "ells", "u0", "p", "order", "method", "potential",
                    "grid_points", "samples_per_point", "law_samples", "seed", "threads"},
                "eoe");
  json eff{{"observable", get<std::string>(c, "observable", "centered_square")},
           {"observable_params", c.value("observable_params", json::object())},
           {"ells", get(c, "ells", std::vector<int>{4, 8, 16, 32, 64})},
           {"u0", get(c, "u0", 0.0)},
           {"p", get(c, "p", 2.0)},
           {"order", get(c, "order", 2)},
           {"method", get<std::string>(c, "method", "analytic")},
           {"potential", c.value("potential", json{{"kind", "quadratic"}})},
           {"grid_points", get(c, "grid_points", 33)},
           {"samples_per_point", get(c, "samples_per_point", 4000L)},
           {"law_samples", get(c, "law_samples", 40000L)},
           {"seed", get<std::uint64_t>(c, "seed", 1)}};
  auto pot = Potential::from_json(eff["potential"]);
  double u0 = eff["u0"];
  auto f = make_observable(eff["observable"], u0, eff["observable_params"]);
  EoEOptions o;
  o.cond.method = eoe_method_from_string(eff["method"]);
  o.cond.grid_points = eff["grid_points"];
  o.cond.samples_per_point = eff["samples_per_point"];
  o.cond.seed = eff["seed"];
  o.cond.threads = get(c, "threads", 0);
  o.law_samples = eff["law_samples"];
  auto curve = eoe_curve(f, eff["ells"].get<std::vector<int>>(), u0, eff["p"], eff["order"], pot, o);
  std::string hash = json_hash(eff);
  Output out(g.out);
  preamble(out.os(), "eoe", hash);
  curve.write_csv(out.os());
  write_json(default_json_path(g), {{"command", "eoe"},
                                    {"config_hash", hash},
                                    {"config", eff},
                                    {"ells", curve.ells},
                                    {"norms", curve.norms},
                                    {"se", curve.se},
                                    {"slope", curve.slope},
                                    {"slope_se", curve.slope_se}});
  return 0;
}

// ---------------------------------------------------------------- bg

int cmd_bg(const Globals& g) {
  json c = load_config(g);
  std::string diag = get<std::string>(c, "diagnostic", "moments");
  auto orders = get(c, "orders", std::vector<int>{2, 1});
  auto Ns = get(c, "turnover_Ns", std::vector<int>{64, 128, 256});
  auto it_ells = get(c, "iteration_ells", std::vector<int>{2, 4, 8});
  for (const char* k : {"diagnostic", "orders", "turnover_Ns", "iteration_ells"}) c.erase(k);
  auto known = BGConfig{}.to_json();
  std::vector<std::string> keys;
  for (auto it = known.begin(); it != known.end(); ++it) keys.push_back(it.key());
  count_unknown(c, keys, "bg");
  auto cfg = BGConfig::from_json(c);
  cfg.validate();
  json extra{{"diagnostic", diag}};
  if (diag == "moments") extra["orders"] = orders;
  if (diag == "turnover") extra["turnover_Ns"] = Ns;
  if (diag == "iteration") extra["iteration_ells"] = it_ells;
  json eff = cfg.to_json();
  eff.erase("threads");
  eff["cli"] = extra;
  std::string hash = json_hash(eff);

  Output out(g.out);
  preamble(out.os(), "bg", hash);
  json report{{"command", "bg"}, {"config_hash", hash}, {"config", eff}};
  if (diag == "moments" || diag == "one_block" || diag == "two_block") {
    std::vector<BGResult> results;
    if (diag == "moments")
      results = bg_moments(cfg, orders);
    else
      results.push_back(diag == "one_block" ? one_block_diag(cfg) : two_block_diag(cfg));
    bool header = true;
    json arr = json::array();
    for (auto& r : results) {
      r.config_hash = hash;
      r.write_csv(out.os(), header);
      header = false;
      arr.push_back(r.to_json());
    }
    report["results"] = arr;
  } else if (diag == "iteration") {
    out.os() << "config_hash,ell,estimate,stderr,env_rise,static_norm,static_se\n";
    out.os().precision(10);
    json arr = json::array();
    for (int ell : it_ells) {
      auto r = iteration_diag(cfg, ell);
      out.os() << hash << ',' << ell << ',' << r.moment.estimate << ',' << r.moment.se << ','
               << r.moment.env_rise << ',' << r.static_norm << ',' << r.static_se << '\n';
      arr.push_back({{"ell", ell},
                     {"estimate", r.moment.estimate},
                     {"se", r.moment.se},
                     {"env_rise", r.moment.env_rise},
                     {"static_norm", r.static_norm},
                     {"static_se", r.static_se},
                     {"static_method", r.static_method}});
    }
    report["iteration"] = arr;
  } else if (diag == "turnover") {
    auto rep = turnover_scan(cfg, Ns);
    rep.write_csv(out.os());
    report["turnover"] = rep.to_json();
  } else {
    throw InvalidArgument("diagnostic must be moments, one_block, two_block, iteration or turnover");
  }
  write_json(default_json_path(g), report);
  return 0;
}

// ---------------------------------------------------------------- verify

struct CheckRow {
  std::string suite, check;
  double value, threshold;
  bool pass;
};

void suite_conservation(const json& c, std::vector<CheckRow>& rows) {
  const int N = get(c, "N", 32);
  const long steps = get(c, "steps", 20000L);
  auto pot = Potential::from_json(c.value("potential", json{{"kind", "quadratic"}}));
  for (double gm : {0.0, 0.5, 2.0}) {
    NoiseStream n(get<std::uint64_t>(c, "seed", 1), 0, 0x434f4eULL);
    auto e0 = sample_grand_canonical(pot, 0.0, N, n);
    double m0 = TorusField(e0).mean();
    EulerTorus eu(pot, Asymmetry(gm), e0);
    double worst = 0.0;
    for (long k = 0; k < steps; ++k) {
      eu.step(default_dt(pot), n);
      if (k % 100 == 99) worst = std::max(worst, std::fabs(TorusField(eu.state()).mean() - m0));
    }
    rows.push_back({"conservation", "gamma=" + std::to_string(gm), worst, 1e-9, worst <= 1e-9});
  }
}

void suite_stationarity(const json& c, std::vector<CheckRow>& rows) {
  const int N = get(c, "N", 16), R = get(c, "R", 400);
  const double T = get(c, "T", 0.1);
  auto pot = Potential::quadratic();
  for (double gm : {0.0, 2.0}) {
    std::vector<double> x(R);
    for (int r = 0; r < R; ++r) {
      NoiseStream n(get<std::uint64_t>(c, "seed", 1), r, 0x535441ULL);
      auto e0 = sample_grand_canonical(pot, 0.0, N, n);
      SimulateOptions so;
      so.integrator = Integrator::Exact;
      auto rec = simulate(TorusField(e0), pot, Asymmetry(gm), T, 0.5, {0.0, T}, n, so);
      x[r] = rec.fields.back().at(1);
    }
    const double target[4] = {0, 1, 0, 3};
    for (int k = 1; k <= 4; ++k) {
      std::vector<double> v(R);
      for (int r = 0; r < R; ++r) v[r] = std::pow(x[r], k);
      auto m = mean_se(v);
      double z = std::fabs(m.mean - target[k - 1]) / m.se;
      rows.push_back({"stationarity", "gamma=" + std::to_string(gm) + " moment" + std::to_string(k), z, 4.0,
                      z <= 4.0});
    }
  }
}

void suite_symmetry(const json& c, std::vector<CheckRow>& rows) {
  const long n = get(c, "samples", 20000L);
  auto pot = Potential::from_json(c.value("potential", json{{"kind", "quadratic"}}));
  std::vector<std::pair<std::string, std::string>> pairs{{"pair", "centered_square"}, {"sin_pair", "cos0"},
                                                         {"mixed3", "eta0"}};
  for (double gm : {0.0, 1.0})
    for (const auto& [a, b] : pairs) {
      NoiseStream rng(get<std::uint64_t>(c, "seed", 1), 0, 0x53594dULL);
      auto r = symmetry_residuals(make_observable(a, 0.0), make_observable(b, 0.0), pot, 0.0, n, rng, 8, gm);
      double z0 = std::fabs(r.s0.mean) / std::max(r.s0.se, 1e-300);
      double z1 = std::fabs(r.s1.mean) / std::max(r.s1.se, 1e-300);
      if (r.s0.se == 0) z0 = r.s0.mean == 0 ? 0 : 1e300;
      if (r.s1.se == 0) z1 = r.s1.mean == 0 ? 0 : 1e300;
      std::string tag = a + "/" + b + " gamma=" + std::to_string(gm);
      rows.push_back({"symmetry", "s0 " + tag, z0, 4.0, z0 <= 4.0});
      rows.push_back({"symmetry", "s1 " + tag, z1, 4.0, z1 <= 4.0});
    }
}

void suite_dynkin(const json& c, std::vector<CheckRow>& rows) {
  const int N = get(c, "N", 16), paths = get(c, "paths", 40);
  const long steps = get(c, "steps", 2000L);
  const double dt = get(c, "dt", 5e-4);
  auto pot = Potential::quadratic();
  auto f = make_observable("eta0", 0.0);
  for (double gm : {0.0, 2.0}) {
    std::vector<TrajectoryRecord> recs;
    for (int r = 0; r < paths; ++r) {
      NoiseStream n(get<std::uint64_t>(c, "seed", 1), r, 0x44594eULL);
      auto e0 = sample_grand_canonical(pot, 0.0, N, n);
      recs.push_back(simulate_fine(TorusField(e0), pot, Asymmetry(gm), steps, dt, n));
    }
    auto res = dynkin_residual(f, recs, pot, Asymmetry(gm));
    double z = std::fabs(res.residual.mean) / res.residual.se;
    rows.push_back({"dynkin", "residual gamma=" + std::to_string(gm), z, 4.0, z <= 4.0});
    double dq = std::fabs(res.qv_ratio - 1);
    rows.push_back({"dynkin", "qv_ratio-1 gamma=" + std::to_string(gm), dq, 0.05, dq <= 0.05});
  }
}

void suite_chain(const json& c, std::vector<CheckRow>& rows) {
  const int chains = get(c, "chains", 20);
  NoiseStream rng(get<std::uint64_t>(c, "seed", 1), 0, 0x434841ULL);
  double worst_lower = -1e300, worst_upper = -1e300, worst_kappa = 1e300;
  for (int k = 0; k < chains; ++k) {
    auto ch = random_chain(rng);
    Eigen::VectorXd f(ch.n());
    for (int i = 0; i < ch.n(); ++i) f[i] = rng.normal();
    f.array() -= pi_mean(f, ch.pi);
    for (double p : {4.0 / 3, 2.0, 4.0}) {
      auto b = variational_bounds(ch, f, p, rng, 2000);
      worst_lower = std::max(worst_lower, b.lower - b.value);
      worst_upper = std::max(worst_upper, b.value - 2 * b.lower);
      worst_kappa = std::min(worst_kappa, kappa(ch.pi, p / (p - 1), rng, 500));
    }
  }
  rows.push_back({"chain", "max(lower - value)", worst_lower, 1e-9, worst_lower <= 1e-9});
  rows.push_back({"chain", "max(value - 2 lower)", worst_upper, 0.0, worst_upper <= 0.0});
  rows.push_back({"chain", "min kappa", worst_kappa, 0.5 - 1e-12, worst_kappa >= 0.5 - 1e-12});
}

int cmd_verify(const Globals& g) {
  json c = load_config(g);
  auto suites = get(c, "suites", std::vector<std::string>{"conservation", "stationarity", "symmetry", "dynkin", "chain"});
  json eff = c;
  eff["suites"] = suites;
  if (!eff.contains("seed")) eff["seed"] = 1;
  eff.erase("threads");
  std::string hash = json_hash(eff);
  std::vector<CheckRow> rows;
  for (const auto& s : suites) {
    json sc = c.value(s, json::object());
    if (!sc.contains("seed")) sc["seed"] = eff["seed"];
    if (s == "conservation") suite_conservation(sc, rows);
    else if (s == "stationarity") suite_stationarity(sc, rows);
    else if (s == "symmetry") suite_symmetry(sc, rows);
    else if (s == "dynkin") suite_dynkin(sc, rows);
    else if (s == "chain") suite_chain(sc, rows);
    else throw InvalidArgument("unknown suite: " + s);
  }
  bool all = true;
  for (const auto& r : rows) {
    all = all && r.pass;
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.suite << ": " << r.check << " value=" << r.value
              << " threshold=" << r.threshold << '\n';
  }
  Output out(g.out);
  preamble(out.os(), "verify", hash);
  out.os() << "suite,check,value,threshold,pass\n";
  out.os().precision(10);
  for (const auto& r : rows)
    out.os() << r.suite << ',' << r.check << ',' << r.value << ',' << r.threshold << ',' << (r.pass ? 1 : 0) << '\n';
  write_json(default_json_path(g), {{"command", "verify"}, {"config_hash", hash}, {"config", eff}, {"pass", all}});
  return all ? 0 : 1;
}

// ---------------------------------------------------------------- report

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

json parse_cell(const std::string& s) {
  if (s.empty()) return nullptr;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end && *end == '\0') return v;
  return s;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw InvalidArgument("report needs at least one input CSV");
  json bundle{{"format", "glbg-bundle"}, {"version", 1}, {"inputs", json::array()}};
  std::vector<std::string> hashes;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path);
    std::string line, cmd, hash;
    std::vector<std::string> cols;
    json data = json::object();
    long nrows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        std::istringstream ss(line.substr(1));
        std::string tok;
        while (ss >> tok) {
          if (tok.rfind("command=", 0) == 0) cmd = tok.substr(8);
          if (tok.rfind("config_hash=", 0) == 0) hash = tok.substr(12);
        }
        continue;
      }
      auto cells = split_csv_line(line);
      if (cols.empty()) {
        cols = cells;
        for (const auto& k : cols) data[k] = json::array();
        continue;
      }
      if (cells.size() != cols.size()) throw InvalidArgument(path + ": ragged row");
      for (std::size_t i = 0; i < cols.size(); ++i) data[cols[i]].push_back(parse_cell(cells[i]));
      ++nrows;
    }
    hashes.push_back(hash);
    bundle["inputs"].push_back({{"path", path},
                                {"command", cmd},
                                {"config_hash", hash},
                                {"columns", cols},
                                {"rows", nrows},
                                {"data", data}});
  }
  std::string joined;
  for (const auto& h : hashes) joined += h;
  bundle["bundle_hash"] = json_hash(joined);
  Output out(g.out);
  out.os() << bundle.dump(1) << '\n';
  return 0;
}

std::string schema_help() {
  auto s = nlohmann::ordered_json::parse(kCsvSchema);
  std::ostringstream os;
  os << "CSV outputs (schema version " << s["version"] << "; also in configs/csv_schema.json):\n";
  os << "  " << s["preamble"].get<std::string>() << "\n";
  for (auto it = s["files"].begin(); it != s["files"].end(); ++it) {
    os << "  " << it.key() << " [" << it.value()["command"].get<std::string>() << "]\n";
    for (auto col = it.value()["columns"].begin(); col != it.value()["columns"].end(); ++col)
      os << "    " << col.key() << ": " << col.value().get<std::string>() << "\n";
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glbg: asymmetric Ginzburg-Landau lattice experiments"};
  app.footer(schema_help());
  Globals g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--set", g.sets, "override a config key: key=value (value parsed as JSON; dots for nesting)");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "CSV destination (default stdout)");
  app.add_option("--json", g.json_out, "JSON destination (default: --out with a .json extension)");
  app.add_option("--threads", g.threads, "worker threads (results do not depend on it)");
  app.require_subcommand(1);
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "trajectories from mu_u0 to CSV");
  auto* smp = app.add_subcommand("sample", "grand canonical or canonical draws to CSV");
  auto* ver = app.add_subcommand("verify", "property suites; exit code 0 when all pass, 1 otherwise");
  auto* eoe = app.add_subcommand("eoe", "equivalence-of-ensembles residual curve to CSV");
  auto* bg = app.add_subcommand("bg", "Boltzmann-Gibbs moments and block diagnostics to CSV and JSON");
  auto* rep = app.add_subcommand("report", "merge CSV outputs into a JSON data bundle");
  std::vector<std::string> inputs;
  rep->add_option("inputs", inputs, "CSV files")->required();
  for (auto* s : {sim, smp, ver, eoe, bg, rep}) s->footer("Configuration keys are listed in README.md; see --help on the top level for CSV columns.");

  CLI11_PARSE(app, argc, argv);
  g.seed_given = seed_opt->count() > 0;
  try {
    if (*sim) return cmd_simulate(g);
    if (*smp) return cmd_sample(g);
    if (*ver) return cmd_verify(g);
    if (*eoe) return cmd_eoe(g);
    if (*bg) return cmd_bg(g);
    if (*rep) return cmd_report(g, inputs);
  } catch (const std::exception& e) {
    std::cerr << "glbg: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
