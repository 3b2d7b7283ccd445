#pragma once

#include <array>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wflab/path.hpp"
#include "wflab/wright_fisher.hpp"

namespace wflab {

/**
 * Path statistics behind the selection log-likelihood
 *   log L(s) = A s - B s^2 / 2 + const,
 * with A = delta_x / 2 - mut_integral / 4 and B = sel_integral / 4.
 */
struct SufficientStats {
  double A = 0.0;
  double B = 0.0;
  double delta_x = 0.0;
  double mut_integral = 0.0;  // int (-theta2 X + theta1 (1 - X)) dt
  double sel_integral = 0.0;  // int X (1 - X) dt
};

/// Throws "degenerate-path" when sel_integral == 0.
SufficientStats sufficient_stats(const SamplePath& path, double theta1, double theta2,
                                 RiemannRule rule = RiemannRule::Right);

enum class EstimatorKind { MleRiemann, MleScore, Bayes };
std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_from_string(std::string_view name);

struct EstimationResult {
  double estimate = 0.0;
  EstimatorKind method = EstimatorKind::MleScore;
  SufficientStats stats;
  double T = 0.0;
};

nlohmann::json to_json(const EstimationResult& result);

/// (delta_x - mut_integral) / sel_integral, right-endpoint sums.
EstimationResult mle_riemann(const SamplePath& path, double theta1, double theta2);
/// A / B = (2 delta_x - mut_integral) / sel_integral.
EstimationResult mle_score(const SamplePath& path, double theta1, double theta2,
                           RiemannRule rule = RiemannRule::Right);

/// A (s' - s) - B (s'^2 - s^2) / 2.
double log_likelihood_ratio(const SufficientStats& stats, double s_prime, double s);

/// As above plus log f_{s'}(X0) - log f_s(X0) when the path started from
/// the stationary law.
double log_likelihood_ratio(const SamplePath& path, double s_prime, double s, double theta1,
                            double theta2);

/// Open parameter set S for the selection coefficient.
struct Support {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double s) const { return s > lo && s < hi; }
  double width() const { return hi - lo; }
};

/// Z_{T,s}(u) = L(s + u / sqrt(T)) / L(s); "local-parameter-out-of-range"
/// when s + u / sqrt(T) leaves S.
double likelihood_ratio_Z(const SamplePath& path, double s, double u, double theta1,
                          double theta2, const Support& support = {});

/// Log of Z from precomputed pieces (used by the Monte Carlo lab).
double log_likelihood_ratio_Z(const SufficientStats& stats, double log_nu_ratio, double T,
                              double s, double u);

struct Prior {
  std::function<double(double)> density;
  Support support{0.0, 1.0};
  double majorant_A = 1.0;
  double majorant_b = 1.0;
  /// Optional points where the density has structure (peaks, kinks).
  std::vector<double> features;

  static Prior uniform(double lo, double hi);
  static Prior gaussian(double mean, double sd, double lo, double hi);
};

struct Loss {
  std::function<double(double)> fn;
  double majorant_A = 1.0;
  double majorant_b = 2.0;
  std::string name = "custom";

  static Loss quadratic();
  static Loss absolute();
};

struct PosteriorCurve {
  std::vector<double> s;
  std::vector<double> density;
};

/**
 * Posterior p(s) exp(A s - B s^2 / 2) / Z on closure(S). The normalizer is
 * computed once by adaptive quadrature; density() is then cheap.
 */
class Posterior {
 public:
  Posterior(const SufficientStats& stats, const Prior& prior);

  double density(double s) const;
  /// Points where the integrand changes scale (mode, +-k sd, prior features).
  const std::vector<double>& breakpoints() const { return breaks_; }
  const Prior& prior() const { return prior_; }
  double mean() const;

 private:
  double log_unnormalized(double s) const;

  SufficientStats stats_;
  Prior prior_;
  double shift_ = 0.0;
  double log_norm_ = 0.0;
  std::vector<double> breaks_;
};

PosteriorCurve posterior_density(const SufficientStats& stats, const Prior& prior,
                                 std::size_t grid_size);

/// argmin_v int loss(sqrt(T) (v - s)) pi(s | path) ds: 512-point grid, then
/// golden section to 1e-8 |S|.
EstimationResult bayes_estimator(const SufficientStats& stats, const Prior& prior,
                                 const Loss& loss, double T);

struct LossReport {
  bool a1 = false;  // even, nonnegative, l(0) = 0, not identically zero
  bool a2 = false;  // nondecreasing on [0, inf)
  bool a3 = false;  // polynomial majorant
  bool a4 = false;  // inf_{|u|>H} l - sup_{|u|<=H^gamma} l >= 0
  bool pass() const { return a1 && a2 && a3 && a4; }
};

LossReport validate_loss(const Loss& loss, double H, double gamma, const std::vector<double>& grid);

struct PriorReport {
  bool nonnegative = false;
  bool continuous = false;
  bool majorant = false;
  bool unit_mass = false;
  double mass = 0.0;
  bool pass() const { return nonnegative && continuous && majorant && unit_mass; }
};

PriorReport validate_prior(const Prior& prior, const std::vector<double>& grid);

struct LanStatistic {
  std::array<double, 3> delta{};
  /// False outside the LAN regime; the two mutation components are then NaN.
  bool mutation_valid = true;
};

/// Delta_T = T^{-1/2} sum mu_dot / sigma^2 (X_{i-1}) (dX_i - mu(X_{i-1}) dt).
LanStatistic lan_statistic(const SamplePath& path, const WFParams& params);

/// r_T = log nu-ratio + <I u, u> / 2 - (1 / 2T) int <u, mu_dot>^2 / sigma^2 dt.
double lan_remainder(const SamplePath& path, const WFParams& params, const std::array<double, 3>& u);
double lan_remainder(const SamplePath& path, const WFParams& params, const std::array<double, 3>& u,
                     const FisherMatrix& info);

}  // namespace wflab
