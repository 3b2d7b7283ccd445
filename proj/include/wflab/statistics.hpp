#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace wflab {

/// Normal CDF via the complementary error function.
double normal_cdf(double x, double mean = 0.0, double variance = 1.0);

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const;
};

SampleSummary summarize(std::span<const double> xs);

/// Linear-interpolation quantile of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double q);

struct KdeCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
};

/// 0.9 min(sd, IQR / 1.34) n^{-1/5}, with 1e-3 when the sample has no spread.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian kernel estimate on 512 points over [min - 3h, max + 3h]. No
/// bandwidth means Silverman's rule.
KdeCurve kde_gaussian(std::span<const double> samples, std::optional<double> bandwidth = {});

/// sup_i max(|i/n - F(x_(i))|, |(i-1)/n - F(x_(i))|).
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

struct MomentRow {
  double p = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
};

/// Empirical E|e|^p against E|I^{-1/2} zeta|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi) I^{-p/2}.
std::vector<MomentRow> moment_convergence_table(std::span<const double> rescaled_errors,
                                                std::span<const double> p_list, double I_s);

/// Ordinary least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace wflab
