#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include "wflab/diffusion.hpp"
#include "wflab/random.hpp"

namespace wflab {

/// (s, theta1, theta2): selection and the two scaled mutation rates.
struct WFParams {
  double s = 0.0;
  double theta1 = 1.0;
  double theta2 = 1.0;

  /// Throws "invalid-parameters" unless theta1, theta2 > 0 and s is finite.
  void validate() const;
  /// Both boundaries entrance (theta >= 1); the LAN statements need this.
  bool lan_regime() const { return theta1 >= 1.0 && theta2 >= 1.0; }

  ParamVector vec() const { return {s, theta1, theta2}; }
  static WFParams from_vec(const ParamVector& p);
};

struct Coefficients {
  double drift;
  double diffusion_sq;
};

/// mu = (s x(1-x) - theta2 x + theta1 (1-x)) / 2, sigma^2 = x(1-x).
Coefficients wf_coefficients(const WFParams& params, double x);

/// Generic-core view of the model; parameter vector order (s, theta1, theta2).
DiffusionSpec wright_fisher_spec();

/// Stationary law f(x) = e^{sx} x^{theta1-1} (1-x)^{theta2-1} / G.
class StationaryLaw {
 public:
  explicit StationaryLaw(const WFParams& params);

  const WFParams& params() const { return params_; }
  double normalizer() const { return std::exp(log_g_); }
  double log_normalizer() const { return log_g_; }

  double log_density(double x) const;
  double density(double x) const;
  double expectation(const RealFunction& h) const;
  double cdf(double x) const;
  /// CDF at ascending points, accumulated piecewise (one pass).
  std::vector<double> cdf_sorted(std::span<const double> xs) const;

 private:
  WFParams params_;
  double log_g_;
};

/// log of int_0^1 e^{sx} x^{a-1} (1-x)^{b-1} dx = log B(a,b) + log 1F1(a; a+b; s).
double log_wf_normalizer(double s, double a, double b);

double stationary_density(const WFParams& params, double x);
double stationary_expectation(const WFParams& params, const RealFunction& h);

/// 3x3 information matrix, rows/columns (s, theta1, theta2). Mutation
/// diagonal entries are +inf unless the corresponding theta exceeds 1.
struct FisherMatrix {
  std::array<std::array<double, 3>, 3> m{};

  double operator()(int i, int j) const { return m[i][j]; }
  double selection() const { return m[0][0]; }
  bool all_finite() const;
};

FisherMatrix fisher_matrix(const WFParams& params);

/// I(s) = E[xi (1 - xi)] / 4.
double selection_information(const WFParams& params);

/// Exact draw from the stationary law: Beta(theta1, theta2) proposal
/// accepted with probability exp(s x - max(s, 0)).
double sample_stationary(const WFParams& params, Rng& rng);

enum class BoundaryType { Regular, Entrance };
std::string_view to_string(BoundaryType type);

struct BoundaryClass {
  BoundaryType at_zero;
  BoundaryType at_one;
};

BoundaryClass classify_boundaries(const WFParams& params);

}  // namespace wflab
