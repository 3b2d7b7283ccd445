#include "wflab/wright_fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include "wflab/error.hpp"

namespace wflab {

void WFParams::validate() const {
  std::ostringstream os;
  if (!std::isfinite(s)) os << "s must be finite; ";
  if (!(theta1 > 0.0) || !std::isfinite(theta1)) os << "theta1 must be > 0 (got " << theta1 << "); ";
  if (!(theta2 > 0.0) || !std::isfinite(theta2)) os << "theta2 must be > 0 (got " << theta2 << "); ";
  const auto msg = os.str();
  if (!msg.empty()) throw Error(ErrorCode::InvalidParameters, msg.substr(0, msg.size() - 2));
}

WFParams WFParams::from_vec(const ParamVector& p) {
  if (p.size() != 3) throw Error(ErrorCode::InvalidParameters, "expected (s, theta1, theta2)");
  return {p[0], p[1], p[2]};
}

Coefficients wf_coefficients(const WFParams& params, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    std::ostringstream os;
    os << "x = " << x << " outside [0, 1]";
    throw Error(ErrorCode::StateOutOfRange, os.str());
  }
  const double v = x * (1.0 - x);
  const double drift =
      0.5 * (params.s * v - params.theta2 * x + params.theta1 * (1.0 - x));
  return {drift, v};
}

DiffusionSpec wright_fisher_spec() {
  DiffusionSpec spec;
  spec.interval = {0.0, 1.0};
  spec.drift = [](const ParamVector& p, double x) {
    return 0.5 * (p[0] * x * (1.0 - x) - p[2] * x + p[1] * (1.0 - x));
  };
  spec.diffusion_sq = [](double x) { return x * (1.0 - x); };
  spec.log_scale_integrand = [](const ParamVector& p, double x) {
    return p[0] + p[1] / x - p[2] / (1.0 - x);
  };
  spec.log_scale = [](const ParamVector& p, double x) {
    return p[0] * x + p[1] * std::log(x) + p[2] * std::log1p(-x);
  };
  return spec;
}

// ---------------------------------------------------------------------------
// Stationary law

double log_wf_normalizer(double s, double a, double b) {
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  if (s == 0.0) return log_beta;
  // Kummer's transformation keeps the series argument non-negative.
  if (s < 0.0) {
    return log_beta + s + std::log(boost::math::hypergeometric_1F1(b, a + b, -s));
  }
  return log_beta + std::log(boost::math::hypergeometric_1F1(a, a + b, s));
}

StationaryLaw::StationaryLaw(const WFParams& params) : params_(params) {
  params_.validate();
  log_g_ = log_wf_normalizer(params_.s, params_.theta1, params_.theta2);
}

double StationaryLaw::log_density(double x) const {
  if (!(x > 0.0 && x < 1.0)) {
    std::ostringstream os;
    os << "x = " << x << " outside (0, 1)";
    throw Error(ErrorCode::StateOutOfRange, os.str());
  }
  return params_.s * x + (params_.theta1 - 1.0) * std::log(x) +
         (params_.theta2 - 1.0) * std::log1p(-x) - log_g_;
}

double StationaryLaw::density(double x) const { return std::exp(log_density(x)); }

double StationaryLaw::expectation(const RealFunction& h) const {
  auto integrand = [&](double x) { return h(x) * density(x); };
  auto res = integrate_checked(integrand, 0.0, 1.0);
  if (res.status == IntegralStatus::Divergent) {
    throw Error(ErrorCode::MomentInfinite, "stationary expectation diverges");
  }
  if (res.status == IntegralStatus::BudgetExceeded) {
    throw QuadratureError("stationary expectation did not converge", res.result.value,
                          res.result.abs_error_estimate);
  }
  return res.result.value;
}

double StationaryLaw::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  auto f = [&](double y) { return density(y); };
  // Integrate over the shorter side so the tail near 1 stays accurate.
  if (x <= 0.5) return std::clamp(adaptive_quad(f, 0.0, x).value, 0.0, 1.0);
  return std::clamp(1.0 - adaptive_quad(f, x, 1.0).value, 0.0, 1.0);
}

std::vector<double> StationaryLaw::cdf_sorted(std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  auto f = [&](double y) { return density(y); };
  double prev_x = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::clamp(xs[i], 0.0, 1.0);
    if (x < prev_x) throw Error(ErrorCode::InvalidArgument, "cdf_sorted needs ascending input");
    if (x > prev_x) acc += adaptive_quad(f, prev_x, x, 1e-10, 1e-14).value;
    prev_x = x;
    out[i] = std::clamp(acc, 0.0, 1.0);
  }
  return out;
}

double stationary_density(const WFParams& params, double x) {
  return StationaryLaw(params).density(x);
}

double stationary_expectation(const WFParams& params, const RealFunction& h) {
  return StationaryLaw(params).expectation(h);
}

// ---------------------------------------------------------------------------
// Fisher information

bool FisherMatrix::all_finite() const {
  for (const auto& row : m) {
    for (double v : row) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

FisherMatrix fisher_matrix(const WFParams& params) {
  params.validate();
  const double s = params.s;
  const double a = params.theta1;
  const double b = params.theta2;
  const double lg = log_wf_normalizer(s, a, b);
  // Moments of the stationary law as ratios of shifted normalizers.
  auto ratio = [&](double da, double db) { return std::exp(log_wf_normalizer(s, a + da, b + db) - lg); };
  const double e_x = ratio(1.0, 0.0);
  const double e_1mx = ratio(0.0, 1.0);
  const double e_xx = ratio(1.0, 1.0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double e_odds_zero = a > 1.0 ? ratio(-1.0, 1.0) : inf;  // E[(1-x)/x]
  const double e_odds_one = b > 1.0 ? ratio(1.0, -1.0) : inf;   // E[x/(1-x)]

  FisherMatrix f;
  f.m[0][0] = 0.25 * e_xx;
  f.m[0][1] = f.m[1][0] = 0.25 * e_1mx;
  f.m[0][2] = f.m[2][0] = -0.25 * e_x;
  f.m[1][1] = 0.25 * e_odds_zero;
  f.m[1][2] = f.m[2][1] = -0.25;
  f.m[2][2] = 0.25 * e_odds_one;
  return f;
}

double selection_information(const WFParams& params) { return fisher_matrix(params).selection(); }

// ---------------------------------------------------------------------------
// Sampling and boundaries

double sample_stationary(const WFParams& params, Rng& rng) {
  params.validate();
  const double top = std::max(params.s, 0.0);
  while (true) {
    const double x = rng.beta(params.theta1, params.theta2);
    if (params.s == 0.0) return x;
    if (rng.uniform() < std::exp(params.s * x - top)) return x;
  }
}

std::string_view to_string(BoundaryType type) {
  return type == BoundaryType::Regular ? "regular" : "entrance";
}

BoundaryClass classify_boundaries(const WFParams& params) {
  params.validate();
  auto kind = [](double theta) { return theta < 1.0 ? BoundaryType::Regular : BoundaryType::Entrance; };
  return {kind(params.theta1), kind(params.theta2)};
}

}  // namespace wflab
