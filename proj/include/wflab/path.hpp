#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wflab/quadrature.hpp"
#include "wflab/random.hpp"
#include "wflab/wright_fisher.hpp"

namespace wflab {

struct StartSpec {
  enum class Kind { Fixed, Stationary };
  Kind kind = Kind::Fixed;
  double x0 = 0.25;

  static StartSpec fixed(double x) { return {Kind::Fixed, x}; }
  static StartSpec stationary() { return {Kind::Stationary, 0.0}; }
};

struct SimConfig {
  double T = 1.0;
  double dt = 1e-3;
  StartSpec start;
  std::uint64_t seed = 0;

  void validate() const;
  /// floor(T / dt), tolerant to representation error in T / dt.
  std::size_t steps() const;
};

/// Uniformly gridded trajectory; values[i] is the state at t0 + i * dt.
struct SamplePath {
  double t0 = 0.0;
  double T = 0.0;
  double dt = 0.0;
  std::vector<double> values;
  std::size_t clamp_count = 0;
  std::uint64_t seed = 0;
  StartSpec::Kind start = StartSpec::Kind::Fixed;

  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Euler-Maruyama with projection onto [0, 1].
SamplePath simulate_path(const WFParams& params, const SimConfig& config, Rng& rng);
/// Same, with the generator seeded from config.seed.
SamplePath simulate_path(const WFParams& params, const SimConfig& config);

/// One Euler-Maruyama step; returns the projected state and whether it clamped.
inline double em_step(const WFParams& p, double x, double dt, double sqrt_dt, double z,
                      bool& clamped) {
  const double v = x * (1.0 - x);
  const double drift = 0.5 * (p.s * v - p.theta2 * x + p.theta1 * (1.0 - x));
  double next = x + drift * dt + std::sqrt(v > 0.0 ? v : 0.0) * sqrt_dt * z;
  clamped = false;
  if (next < 0.0) {
    next = 0.0;
    clamped = true;
  } else if (next > 1.0) {
    next = 1.0;
    clamped = true;
  }
  return next;
}

enum class RiemannRule { Left, Right };

/// dt * sum h(X_i): right rule over i = 1..N, left rule over i = 0..N-1.
double riemann_functional(const SamplePath& path, const RealFunction& h, RiemannRule rule);

/// max(x, dt) near 0 and min(x, 1 - dt) near 1, for functionals singular at
/// the (unattained) boundaries.
inline double clamp_to_interior(double x, double dt) {
  return x < dt ? dt : (x > 1.0 - dt ? 1.0 - dt : x);
}

/// First time the simulated path reaches b, interpolated linearly between the
/// straddling grid points; nullopt if not reached by t_max.
std::optional<double> first_hitting_time(const WFParams& params, double x0, double b, double dt,
                                         double t_max, Rng& rng);

/// Completed cycles "reach b, then return to a" along the grid.
std::size_t upcrossing_count(const SamplePath& path, double a, double b);

/// CSV with header `t,x`, 17 significant digits.
void write_path_csv(const SamplePath& path, std::ostream& out);
std::string path_to_csv(const SamplePath& path);
/// Parses the CSV above; the time grid must be uniform.
SamplePath read_path_csv(std::istream& in);

}  // namespace wflab
