#include "wflab/path.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "wflab/error.hpp"

namespace wflab {

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!(T >= dt) || !std::isfinite(T)) throw Error(ErrorCode::InvalidArgument, "T must be >= dt");
  if (start.kind == StartSpec::Kind::Fixed && !(start.x0 >= 0.0 && start.x0 <= 1.0)) {
    throw Error(ErrorCode::StateOutOfRange, "start x0 must lie in [0, 1]");
  }
}

std::size_t SimConfig::steps() const {
  return static_cast<std::size_t>(std::floor(T / dt + 1e-9));
}

SamplePath simulate_path(const WFParams& params, const SimConfig& config, Rng& rng) {
  params.validate();
  config.validate();
  const std::size_t n = config.steps();
  SamplePath path;
  path.dt = config.dt;
  const double grid_T = static_cast<double>(n) * config.dt;
  path.T = std::abs(grid_T - config.T) <= 1e-9 * config.T ? config.T : grid_T;
  path.seed = config.seed;
  path.start = config.start.kind;
  path.values.resize(n + 1);

  double x = config.start.kind == StartSpec::Kind::Stationary ? sample_stationary(params, rng)
                                                               : config.start.x0;
  path.values[0] = x;
  const double sqrt_dt = std::sqrt(config.dt);
  bool clamped = false;
  for (std::size_t i = 1; i <= n; ++i) {
    x = em_step(params, x, config.dt, sqrt_dt, rng.normal(), clamped);
    path.clamp_count += clamped;
    path.values[i] = x;
  }
  return path;
}

SamplePath simulate_path(const WFParams& params, const SimConfig& config) {
  Rng rng(config.seed);
  return simulate_path(params, config, rng);
}

double riemann_functional(const SamplePath& path, const RealFunction& h, RiemannRule rule) {
  const std::size_t n = path.steps();
  std::vector<double> terms;
  terms.reserve(n);
  const std::size_t begin = rule == RiemannRule::Right ? 1 : 0;
  for (std::size_t i = begin; i < begin + n; ++i) {
    const double v = h(path.values[i]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "h(" << path.values[i] << ") is not finite at grid index " << i;
      throw Error(ErrorCode::FunctionalSingular, os.str());
    }
    terms.push_back(v);
  }
  return path.dt * compensated_sum(terms);
}

std::optional<double> first_hitting_time(const WFParams& params, double x0, double b, double dt,
                                         double t_max, Rng& rng) {
  params.validate();
  if (!(x0 > 0.0 && x0 < 1.0) || !(b > 0.0 && b < 1.0)) {
    throw Error(ErrorCode::StateOutOfRange, "x0 and b must lie in (0, 1)");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (x0 == b) return 0.0;
  if (!(t_max > 0.0)) return std::nullopt;

  const double sqrt_dt = std::sqrt(dt);
  const auto max_steps = static_cast<std::size_t>(std::ceil(t_max / dt - 1e-9));
  const bool below = x0 < b;
  double x = x0;
  bool clamped = false;
  for (std::size_t i = 0; i < max_steps; ++i) {
    const double next = em_step(params, x, dt, sqrt_dt, rng.normal(), clamped);
    if (below ? next >= b : next <= b) {
      const double frac = (b - x) / (next - x);
      const double t = (static_cast<double>(i) + frac) * dt;
      if (t > t_max) return std::nullopt;
      return t;
    }
    x = next;
  }
  return std::nullopt;
}

std::size_t upcrossing_count(const SamplePath& path, double a, double b) {
  if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "upcrossing levels need a < b");
  std::size_t cycles = 0;
  bool seeking_b = true;
  for (double x : path.values) {
    if (seeking_b) {
      if (x >= b) seeking_b = false;
    } else if (x <= a) {
      ++cycles;
      seeking_b = true;
    }
  }
  return cycles;
}

void write_path_csv(const SamplePath& path, std::ostream& out) {
  out << "t,x\n";
  char buf[64];
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", path.time(i), path.values[i]);
    out << buf;
  }
}

std::string path_to_csv(const SamplePath& path) {
  std::ostringstream os;
  write_path_csv(path, os);
  return os.str();
}

SamplePath read_path_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidArgument, "empty path CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x") throw Error(ErrorCode::InvalidArgument, "path CSV header must be `t,x`");

  std::vector<double> ts;
  SamplePath path;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "malformed CSV row " + std::to_string(lineno));
    }
    try {
      std::size_t used = 0;
      const double t = std::stod(line.substr(0, comma), &used);
      const std::string xs = line.substr(comma + 1);
      const double x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("trailing data");
      ts.push_back(t);
      path.values.push_back(x);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "malformed CSV row " + std::to_string(lineno));
    }
    if (!(path.values.back() >= 0.0 && path.values.back() <= 1.0)) {
      throw Error(ErrorCode::StateOutOfRange, "path value outside [0, 1] on row " +
                                                  std::to_string(lineno));
    }
  }
  if (ts.size() < 2) throw Error(ErrorCode::InvalidArgument, "path needs at least two points");
  const std::size_t n = ts.size() - 1;
  path.t0 = ts.front();
  path.T = ts.back() - ts.front();
  path.dt = path.T / static_cast<double>(n);
  if (!(path.dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "path times must increase");
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const double step = ts[i] - ts[i - 1];
    if (std::abs(step - path.dt) > 1e-6 * path.dt + 1e-12 * std::abs(ts[i])) {
      throw Error(ErrorCode::InvalidArgument, "path time grid is not uniform");
    }
  }
  // Prefer the exact step when the grid came from t0 + i * dt.
  const double first_step = ts[1] - ts[0];
  if (std::abs(first_step * static_cast<double>(n) - path.T) <= 1e-12 * path.T) {
    path.dt = first_step;
  }
  return path;
}

}  // namespace wflab
