#include "wflab/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "wflab/error.hpp"

namespace wflab {

using nlohmann::json;

RealFunction named_function(std::string_view name) {
  if (name == "1") return [](double) { return 1.0; };
  if (name == "x") return [](double x) { return x; };
  if (name == "x(1-x)") return [](double x) { return x * (1.0 - x); };
  if (name == "(1-x)/x") return [](double x) { return (1.0 - x) / x; };
  if (name == "x/(1-x)") return [](double x) { return x / (1.0 - x); };
  throw Error(ErrorCode::ConfigError,
              "h: unknown function '" + std::string(name) +
                  "' (expected 1, x, x(1-x), (1-x)/x or x/(1-x))");
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, key + ": " + what);
}

const std::map<std::string, std::set<std::string>>& command_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"simulate", {"T"}},
      {"estimate", {"input", "estimator", "prior", "loss"}},
      {"experiment", {"T", "replicates", "estimator", "prior", "loss", "p"}},
      {"ergodic-check", {"T", "n_paths", "h"}},
      {"hitting", {"x", "b", "replicates", "t_max"}},
      {"fisher", {}},
      {"check-conditions", {"grid", "a", "b", "h", "x", "nu"}},
      {"stationary-sample", {"n"}},
  };
  return keys;
}

double number(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) bad(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(key, "must be finite");
  return d;
}

double positive(const json& doc, const std::string& key) {
  const double d = number(doc, key);
  if (!(d > 0.0)) bad(key, "must be > 0");
  return d;
}

double unit_open(const json& doc, const std::string& key) {
  const double d = number(doc, key);
  if (!(d > 0.0 && d < 1.0)) bad(key, "must lie in (0, 1)");
  return d;
}

std::uint64_t count(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected a nonnegative integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto i = v.get<std::int64_t>();
  if (i < 0) bad(key, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(i);
}

std::vector<double> number_list(const json& doc, const std::string& key) {
  const auto& v = doc.at(key);
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array() && !v.empty()) {
    for (const auto& e : v) {
      if (!e.is_number()) bad(key, "expected numbers");
      out.push_back(e.get<double>());
    }
  } else {
    bad(key, "expected a number or a non-empty array of numbers");
  }
  for (double d : out) {
    if (!std::isfinite(d)) bad(key, "must be finite");
  }
  return out;
}

Prior parse_prior(const json& v) {
  if (!v.is_object()) bad("prior", "expected an object");
  const std::string type = v.value("type", "");
  auto get = [&](const char* k) {
    if (!v.contains(k)) bad(std::string("prior.") + k, "missing");
    return number(v, k);
  };
  for (const auto& [k, _] : v.items()) {
    static const std::set<std::string> allowed{"type", "lo", "hi", "mean", "sd"};
    if (!allowed.count(k)) bad("prior." + k, "unknown key");
  }
  const double lo = get("lo");
  const double hi = get("hi");
  if (!(lo < hi)) bad("prior", "needs lo < hi");
  if (type == "uniform") return Prior::uniform(lo, hi);
  if (type == "gaussian") {
    const double sd = get("sd");
    if (!(sd > 0.0)) bad("prior.sd", "must be > 0");
    return Prior::gaussian(get("mean"), sd, lo, hi);
  }
  bad("prior.type", "expected 'uniform' or 'gaussian'");
}

Loss parse_loss(const json& v) {
  if (!v.is_string()) bad("loss", "expected 'quadratic' or 'absolute'");
  const auto name = v.get<std::string>();
  if (name == "quadratic") return Loss::quadratic();
  if (name == "absolute") return Loss::absolute();
  bad("loss", "expected 'quadratic' or 'absolute'");
}

std::vector<ParamVector> parse_grid(const json& v) {
  std::vector<ParamVector> grid;
  if (v.is_object()) {
    for (const auto& [k, _] : v.items()) {
      if (k != "s" && k != "theta1" && k != "theta2") bad("grid." + k, "unknown key");
    }
    std::vector<double> s{0.0};
    std::vector<double> t1{1.0};
    std::vector<double> t2{1.0};
    if (v.contains("s")) s = number_list(v, "s");
    if (v.contains("theta1")) t1 = number_list(v, "theta1");
    if (v.contains("theta2")) t2 = number_list(v, "theta2");
    for (double a : s) {
      for (double b : t1) {
        for (double c : t2) grid.push_back({a, b, c});
      }
    }
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_array() || e.size() != 3) bad("grid", "expected [s, theta1, theta2] triples");
      ParamVector p;
      for (const auto& c : e) {
        if (!c.is_number()) bad("grid", "expected numbers");
        p.push_back(c.get<double>());
      }
      grid.push_back(p);
    }
  } else {
    bad("grid", "expected an object of axes or an array of triples");
  }
  if (grid.empty()) bad("grid", "is empty");
  for (const auto& p : grid) {
    if (!(p[1] > 0.0)) bad("grid", "theta1 must be > 0");
    if (!(p[2] > 0.0)) bad("grid", "theta2 must be > 0");
  }
  return grid;
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + file.string());
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json ergodicity_json(const ErgodicityReport& r) {
  json out = {{"grid", r.grid},
              {"kappa_l_min", finite_or_string(r.kappa_l_min)},
              {"kappa_r_min", finite_or_string(r.kappa_r_min)},
              {"pass", r.pass}};
  if (r.unbounded_suprema) {
    json sup = json::array();
    for (double v : *r.unbounded_suprema) sup.push_back(finite_or_string(v));
    out["unbounded_suprema"] = sup;
    out["condition_pass"] = r.condition_pass;
  }
  return out;
}

}  // namespace

CliConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");

  // Model and simulation keys first, so a bad value is named even when the
  // command itself is missing.
  CliConfig c;
  if (doc.contains("s")) c.params.s = number(doc, "s");
  if (doc.contains("theta1")) c.params.theta1 = positive(doc, "theta1");
  if (doc.contains("theta2")) c.params.theta2 = positive(doc, "theta2");
  if (doc.contains("seed")) c.seed = count(doc["seed"], "seed");
  if (doc.contains("dt")) c.dt = positive(doc, "dt");
  if (doc.contains("start")) {
    const auto& v = doc["start"];
    if (v == "stationary") {
      c.start = StartSpec::stationary();
      if (doc.contains("x0")) bad("x0", "not allowed with a stationary start");
    } else if (v != "fixed") {
      bad("start", "expected 'fixed' or 'stationary'");
    }
  }
  if (doc.contains("x0")) {
    const double x0 = number(doc, "x0");
    if (!(x0 >= 0.0 && x0 <= 1.0)) bad("x0", "must lie in [0, 1]");
    c.start = StartSpec::fixed(x0);
  }

  if (!doc.contains("cmd")) bad("cmd", "missing");
  if (!doc["cmd"].is_string()) bad("cmd", "expected a string");
  c.cmd = doc["cmd"].get<std::string>();
  const auto it = command_keys().find(c.cmd);
  if (it == command_keys().end()) bad("cmd", "unknown command '" + c.cmd + "'");
  static const std::set<std::string> common{"cmd", "s", "theta1", "theta2", "seed", "dt", "start", "x0"};
  for (const auto& [k, _] : doc.items()) {
    if (!common.count(k) && !it->second.count(k)) bad(k, "unknown key for '" + c.cmd + "'");
  }

  const std::string& cmd = c.cmd;
  if (doc.contains("T")) {
    c.T_list = number_list(doc, "T");
    for (double T : c.T_list) {
      if (!(T >= c.dt)) bad("T", "must be >= dt");
    }
    if (cmd != "experiment") {
      if (c.T_list.size() != 1) bad("T", "expected a single number");
      c.T = c.T_list.front();
    }
  } else if (cmd == "ergodic-check") {
    c.T = 500.0;
  }
  if (doc.contains("replicates")) {
    const auto& v = doc["replicates"];
    std::vector<std::size_t> reps;
    if (v.is_array()) {
      for (const auto& e : v) reps.push_back(count(e, "replicates"));
    } else {
      reps.push_back(count(v, "replicates"));
    }
    if (reps.empty()) bad("replicates", "is empty");
    for (auto r : reps) {
      if (r < 2) bad("replicates", "must be >= 2");
    }
    if (cmd == "hitting") {
      if (reps.size() != 1) bad("replicates", "expected a single count");
      c.hit_replicates = reps.front();
    } else {
      c.replicates = reps;
    }
  }
  if (cmd == "experiment" && c.replicates.size() != 1 && c.replicates.size() != c.T_list.size()) {
    bad("replicates", "needs one count or one per T");
  }
  if (doc.contains("estimator")) {
    if (!doc["estimator"].is_string()) bad("estimator", "expected a string");
    try {
      c.estimator = estimator_from_string(doc["estimator"].get<std::string>());
    } catch (const Error&) {
      bad("estimator", "expected mle_riemann, mle_score or bayes");
    }
  } else if (cmd == "estimate") {
    c.estimator = EstimatorKind::MleRiemann;
  }
  if (doc.contains("prior")) c.prior = parse_prior(doc["prior"]);
  if (doc.contains("loss")) c.loss = parse_loss(doc["loss"]);
  if (c.estimator == EstimatorKind::Bayes) {
    if (!c.prior) bad("prior", "required by the bayes estimator");
    if (!c.loss) c.loss = Loss::quadratic();
  }
  if (doc.contains("p")) {
    c.p_list = number_list(doc, "p");
    for (double p : c.p_list) {
      if (!(p > 0.0)) bad("p", "moment orders must be > 0");
    }
  }
  if (doc.contains("input")) {
    if (!doc["input"].is_string()) bad("input", "expected a path");
    c.input = doc["input"].get<std::string>();
  } else if (cmd == "estimate") {
    bad("input", "missing");
  }
  if (doc.contains("n_paths")) {
    c.n_paths = count(doc["n_paths"], "n_paths");
    if (c.n_paths < 1) bad("n_paths", "must be >= 1");
  }
  if (doc.contains("h")) {
    if (!doc["h"].is_string()) bad("h", "expected a function name");
    c.h = doc["h"].get<std::string>();
    named_function(c.h);
  } else if (cmd == "ergodic-check") {
    c.h = "x";
  }
  if (doc.contains("x")) c.x = unit_open(doc, "x");
  if (doc.contains("b")) c.b = unit_open(doc, "b");
  if (doc.contains("a")) c.a = unit_open(doc, "a");
  if (cmd == "hitting" && c.x == c.b) bad("b", "must differ from x");
  if (cmd == "check-conditions") {
    if (!doc.contains("b")) c.b = 0.75;
    if (!(c.a < c.b)) bad("a", "must be < b");
    if (!doc.contains("grid")) bad("grid", "missing");
    c.grid = parse_grid(doc["grid"]);
  }
  if (doc.contains("t_max")) c.t_max = positive(doc, "t_max");
  if (doc.contains("nu")) {
    const auto& v = doc["nu"];
    if (v == "stationary") {
      c.nu = InitialLaw::stationary();
    } else if (v.is_number()) {
      c.nu = InitialLaw::point_mass(unit_open(doc, "nu"));
    } else {
      bad("nu", "expected 'stationary' or a point in (0, 1)");
    }
  }
  if (doc.contains("n")) {
    c.n = count(doc["n"], "n");
    if (c.n < 1) bad("n", "must be >= 1");
  }
  return c;
}

ExitCode exit_code_for(const Error& e) {
  return e.is_numeric() ? ExitCode::NumericFailure : ExitCode::ConfigError;
}

ExitCode dispatch(const CliConfig& c, const DispatchOptions& options, std::ostream& log) {
  const auto& dir = options.out_dir;
  const auto& p = c.params;
  p.validate();

  if (c.cmd == "simulate") {
    const auto path = simulate_path(p, SimConfig{c.T, c.dt, c.start, c.seed});
    write_file(dir / "path.csv", path_to_csv(path));
    log << "simulate: " << path.steps() << " steps, " << path.clamp_count << " clamped -> "
        << (dir / "path.csv").string() << "\n";
    return ExitCode::Ok;
  }

  if (c.cmd == "estimate") {
    std::ifstream in(c.input, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "input: cannot open " + c.input);
    const auto path = read_path_csv(in);
    EstimationResult r;
    switch (c.estimator) {
      case EstimatorKind::MleRiemann: r = mle_riemann(path, p.theta1, p.theta2); break;
      case EstimatorKind::MleScore: r = mle_score(path, p.theta1, p.theta2); break;
      case EstimatorKind::Bayes:
        r = bayes_estimator(sufficient_stats(path, p.theta1, p.theta2), *c.prior, *c.loss, path.T);
        break;
    }
    const std::string text = dump(to_json(r));
    write_file(dir / "estimate.json", text);
    log << text;
    return ExitCode::Ok;
  }

  if (c.cmd == "experiment") {
    ExperimentConfig e;
    e.params = p;
    e.T_list = c.T_list;
    e.replicates = c.replicates;
    e.dt = c.dt;
    e.master_seed = c.seed;
    e.estimator = c.estimator;
    e.start = c.start;
    e.prior = c.prior;
    e.loss = c.loss;
    e.p_list = c.p_list;
    const auto report = run_normality_experiment(e, options.threads);
    write_report_files(report, dir);
    for (const auto& h : report.horizons) {
      char line[200];
      std::snprintf(line, sizeof line, "T=%-6s n=%-6zu mean=%+.4f var=%.4f (limit %.4f) ks=%.4f\n",
                    format_horizon(h.T).c_str(), h.estimates.size(), h.summary.mean,
                    h.summary.variance, 1.0 / report.fisher_information, h.ks_distance);
      log << line;
    }
    return ExitCode::Ok;
  }

  if (c.cmd == "ergodic-check") {
    ErgodicCheckConfig e;
    e.params = p;
    e.T = c.T;
    e.dt = c.dt;
    e.n_paths = c.n_paths;
    e.start = c.start;
    e.master_seed = c.seed;
    const auto r = run_ergodic_check(e, named_function(c.h), options.threads);
    json j = to_json(r);
    j["h"] = c.h;
    write_file(dir / "ergodic.json", dump(j));
    log << "ergodic-check: time average " << r.time_average << ", expectation " << r.expectation
        << "\n";
    return ExitCode::Ok;
  }

  if (c.cmd == "hitting") {
    HittingCheckConfig h;
    h.params = p;
    h.x = c.x;
    h.b = c.b;
    h.dt = c.dt;
    h.replicates = c.hit_replicates;
    h.t_max = c.t_max;
    h.master_seed = c.seed;
    const auto r = run_hitting_check(h, options.threads);
    write_file(dir / "hitting.json", dump(to_json(r)));
    char buf[256];
    std::string table = "moment,quadrature,monte_carlo,mc_std_error\n";
    std::snprintf(buf, sizeof buf, "1,%.17g,%.17g,%.17g\n", r.quad_mean, r.mc_time.mean,
                  r.mc_time.std_error());
    table += buf;
    std::snprintf(buf, sizeof buf, "2,%.17g,%.17g,%.17g\n", r.quad_second, r.mc_time_sq.mean,
                  r.mc_time_sq.std_error());
    table += buf;
    write_file(dir / "hitting.csv", table);
    log << table;
    return ExitCode::Ok;
  }

  if (c.cmd == "fisher") {
    const auto f = fisher_matrix(p);
    json m = json::array();
    for (int i = 0; i < 3; ++i) {
      json row = json::array();
      for (int j = 0; j < 3; ++j) row.push_back(finite_or_string(f(i, j)));
      m.push_back(row);
    }
    const json j = {{"order", {"s", "theta1", "theta2"}},
                    {"matrix", m},
                    {"selection_information", f.selection()}};
    write_file(dir / "fisher.json", dump(j));
    log << j.dump() << "\n";
    return ExitCode::Ok;
  }

  if (c.cmd == "check-conditions") {
    const auto spec = wright_fisher_spec();
    auto report = check_uniform_ergodicity(spec, c.grid, c.a, c.b);
    if (!c.h.empty()) {
      const auto u = check_unbounded_conditions(spec, c.grid, named_function(c.h), c.b, c.x, c.nu);
      report.unbounded_suprema = u.unbounded_suprema;
      report.condition_pass = u.condition_pass;
      report.pass = report.pass && u.pass;
    }
    write_file(dir / "conditions.json", dump(ergodicity_json(report)));
    log << "check-conditions: " << (report.pass ? "pass" : "FAIL") << "\n";
    return report.pass ? ExitCode::Ok : ExitCode::NumericFailure;
  }

  if (c.cmd == "stationary-sample") {
    Rng rng(c.seed);
    std::string text = "x\n";
    char buf[64];
    for (std::size_t i = 0; i < c.n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\n", sample_stationary(p, rng));
      text += buf;
    }
    write_file(dir / "samples.csv", text);
    log << "stationary-sample: " << c.n << " draws\n";
    return ExitCode::Ok;
  }

  throw Error(ErrorCode::ConfigError, "cmd: unknown command '" + c.cmd + "'");
}

}  // namespace wflab
