#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "wflab/quadrature.hpp"

namespace wflab {

struct Interval {
  double l;
  double r;
};

using ParamVector = std::vector<double>;
using ParamFunction = std::function<double(const ParamVector&, double)>;

/**
 * Scalar diffusion dY = mu(p, Y) dt + sigma(Y) dW on a bounded interval.
 *
 * `log_scale_integrand` is 2 mu / sigma^2; when empty it is formed from the
 * two coefficients. `log_scale` is an antiderivative of it (any additive
 * constant); when empty it is integrated numerically from the midpoint.
 */
struct DiffusionSpec {
  Interval interval{0.0, 1.0};
  ParamFunction drift;
  std::function<double(double)> diffusion_sq;
  ParamFunction log_scale_integrand;
  ParamFunction log_scale;

  void validate() const;

  double two_mu_over_sigma_sq(const ParamVector& p, double x) const;
  /// psi(x): antiderivative of 2 mu / sigma^2.
  double psi(const ParamVector& p, double x) const;
  /// log of the speed density 2 exp(psi) / sigma^2.
  double log_speed(const ParamVector& p, double x) const;
};

/// Invariant law of a positive recurrent diffusion with its normalizer cached.
class InvariantLaw {
 public:
  InvariantLaw(DiffusionSpec spec, ParamVector params, const QuadratureOptions& options = {});

  double density(double x) const;
  double log_density(double x) const;
  /// log of G = integral of the speed density.
  double log_normalizer() const { return log_normalizer_; }

  /// Integral of h against the invariant law; "moment-infinite" on divergence.
  double expectation(const RealFunction& h) const;

  const DiffusionSpec& spec() const { return spec_; }
  const ParamVector& params() const { return params_; }

 private:
  DiffusionSpec spec_;
  ParamVector params_;
  QuadratureOptions options_;
  double log_normalizer_ = 0.0;
};

double invariant_density(const DiffusionSpec& spec, const ParamVector& params, double x);

/// kappa^l(a, b) = int_a^b S'(xi) int_l^xi m(eta) d eta d xi  (= E_a[T_b]).
double kappa_l(const DiffusionSpec& spec, const ParamVector& params, double a, double b,
               const QuadratureOptions& options = {});
/// kappa^r(a, b) = int_a^b S'(xi) int_xi^r m(eta) d eta d xi  (= E_b[T_a]).
double kappa_r(const DiffusionSpec& spec, const ParamVector& params, double a, double b,
               const QuadratureOptions& options = {});

struct MomentValue {
  double value = 0.0;
  bool divergent = false;
};

/**
 * U_q(x) = E_x[(int_0^{T_b} h(Y_t) dt)^q] from the iterated backward
 * recursion, evaluated on a composite Gauss-Legendre mesh between the
 * boundary and b. h = nullptr means h = 1 (plain time moments).
 */
MomentValue hitting_moment_checked(const DiffusionSpec& spec, const ParamVector& params,
                                   double x, double b, int q, const RealFunction& h = {});

/// As above; divergence raises "moment-infinite".
double hitting_moment(const DiffusionSpec& spec, const ParamVector& params, double x, double b,
                      int q, const RealFunction& h = {});

/// 1 / (E_a[T_b] + E_b[T_a]).
double regeneration_rate(const DiffusionSpec& spec, const ParamVector& params, double a,
                         double b);

struct InitialLaw {
  enum class Kind { Stationary, PointMass };
  Kind kind = Kind::Stationary;
  double x0 = 0.0;

  static InitialLaw stationary() { return {}; }
  static InitialLaw point_mass(double x) { return {Kind::PointMass, x}; }
};

struct ErgodicityReport {
  std::vector<ParamVector> grid;
  double kappa_l_min = 0.0;
  double kappa_r_min = 0.0;
  /// Suprema of the three unbounded-function conditions; +inf when one
  /// diverges at some grid point. Empty when not evaluated.
  std::optional<std::array<double, 3>> unbounded_suprema;
  /// Per-condition pass flags (meaningful only when suprema are present).
  std::array<bool, 3> condition_pass{true, true, true};
  bool pass = false;
};

ErgodicityReport check_uniform_ergodicity(const DiffusionSpec& spec,
                                          const std::vector<ParamVector>& grid, double a,
                                          double b);

/**
 * Evaluates, at each grid point, E_x[int_0^{T_b} h], the nested condition
 * with the inner E_eta[int_0^{T_b} h] factor, and int E_x[int_0^{T_b} h] nu(dx).
 * A divergent condition is reported as +inf and fails; it does not throw.
 */
ErgodicityReport check_unbounded_conditions(const DiffusionSpec& spec,
                                            const std::vector<ParamVector>& grid,
                                            const RealFunction& h, double b, double x,
                                            const InitialLaw& nu);

}  // namespace wflab
