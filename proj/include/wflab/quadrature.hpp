#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wflab {

using RealFunction = std::function<double(double)>;

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  std::size_t evaluations = 0;
};

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  std::size_t max_evaluations = 200'000;

  /// Tolerances for an integral nested inside another one.
  QuadratureOptions relaxed(double factor = 10.0) const {
    return {rel_tol * factor, abs_tol * factor, max_evaluations};
  }
};

/**
 * Globally adaptive 7/15-point Gauss-Kronrod quadrature on [a, b].
 *
 * The rule is open: f is never evaluated at a or b, so integrable power-law
 * endpoint singularities are allowed. Panels touching an endpoint are split
 * geometrically (ratio 1:4) toward it; interior panels are bisected.
 *
 * Throws QuadratureError (with the best estimate attached) when the
 * evaluation budget runs out before max(abs_tol, rel_tol*|value|) is met.
 */
QuadratureResult adaptive_quad(const RealFunction& f, double a, double b,
                               double rel_tol = 1e-9, double abs_tol = 1e-12);

QuadratureResult adaptive_quad(const RealFunction& f, double a, double b,
                               const QuadratureOptions& options);

enum class IntegralStatus { Converged, Divergent, BudgetExceeded };

struct CheckedIntegral {
  IntegralStatus status = IntegralStatus::Converged;
  QuadratureResult result;

  bool ok() const { return status == IntegralStatus::Converged; }
};

/// Non-throwing variant. When the adaptive pass fails, the endpoint
/// refinement test below decides between Divergent and BudgetExceeded.
CheckedIntegral integrate_checked(const RealFunction& f, double a, double b,
                                  const QuadratureOptions& options = {});

/// Sum of adaptive integrals over the sub-intervals cut by `points`
/// (points outside (a, b) are ignored). Throws like adaptive_quad.
QuadratureResult adaptive_quad_split(const RealFunction& f, double a, double b,
                                     std::span<const double> points,
                                     const QuadratureOptions& options = {});

/// Divergence heuristic over a sequence of partial integrals computed with
/// successively finer endpoint truncation: true when each of the last three
/// refinements changes the partial sum by more than 10%.
bool grows_without_bound(std::span<const double> partial_sums);

/// Truncation distances (relative to the interval length) used for the
/// endpoint refinement test.
inline constexpr double kTruncationLevels[] = {1e-3, 1e-6, 1e-9, 1e-12};

/// p-point Gauss-Legendre rule on [-1, 1] with its spectral integration matrix.
class GaussLegendre {
 public:
  explicit GaussLegendre(int points);

  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// cumulative(j, i): integral from -1 to node j of the i-th Lagrange basis
  /// polynomial. Applying it to samples gives the indefinite integral of the
  /// interpolant at every node.
  double cumulative(int j, int i) const { return cumulative_[j * size() + i]; }

  /// Legendre expansion coefficients of the interpolant through `values`.
  std::vector<double> legendre_coefficients(std::span<const double> values) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Shared, lazily built rule of the requested order.
const GaussLegendre& gauss_legendre(int points);

struct MeshOptions {
  int order = 24;
  /// Accept a panel when the trailing Legendre coefficients of every probe
  /// fall below this fraction of the probe's magnitude on the panel.
  double smoothness_tol = 1e-12;
  std::size_t max_panels = 6000;
  /// Panels touching an endpoint are not split below these widths.
  double min_width_left = 0.0;
  double min_width_right = 0.0;
};

/**
 * Composite Gauss-Legendre mesh on [a, b], refined until every probe
 * function is resolved panel by panel. Used where the same node set must
 * serve several integrals (iterated recursions, fixed-rule risk curves).
 */
class PanelMesh {
 public:
  struct Panel {
    double lo;
    double hi;
  };

  PanelMesh(double a, double b, std::span<const double> breakpoints,
            std::span<const RealFunction> probes, const MeshOptions& options = {});

  double lower() const { return a_; }
  double upper() const { return b_; }
  const std::vector<Panel>& panels() const { return panels_; }
  const GaussLegendre& rule() const { return *rule_; }
  int order() const { return rule_->size(); }
  std::size_t size() const { return panels_.size() * static_cast<std::size_t>(order()); }
  bool resolved() const { return resolved_; }

  double node(std::size_t panel, int i) const;
  double weight(std::size_t panel, int i) const;

  /// All nodes / weights in panel-major order.
  std::vector<double> nodes() const;
  std::vector<double> weights() const;

  /// Quadrature of values sampled at nodes().
  double integrate(std::span<const double> values) const;

  /// Index of the panel whose lower edge equals `x` (x must be a breakpoint).
  std::size_t panel_starting_at(double x) const;

 private:
  double a_;
  double b_;
  const GaussLegendre* rule_;
  std::vector<Panel> panels_;
  bool resolved_ = true;
};

/// Running sum with Neumaier compensation.
struct NeumaierSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

/// Sum with Neumaier compensation, in the given order.
double compensated_sum(std::span<const double> values);

}  // namespace wflab
