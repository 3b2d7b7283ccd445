#include "wflab/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wflab/error.hpp"
#include "wflab/quadrature.hpp"

namespace wflab {

double normal_cdf(double x, double mean, double variance) {
  if (!(variance > 0.0)) throw Error(ErrorCode::InvalidArgument, "variance must be > 0");
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * variance));
}

double SampleSummary::std_error() const {
  return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
}

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  NeumaierSum sum;
  for (double x : xs) sum.add(x);
  s.mean = sum.value() / static_cast<double>(s.n);
  if (s.n > 1) {
    NeumaierSum sq;
    for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
    s.variance = sq.value() / static_cast<double>(s.n - 1);
  }
  return s;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double silverman_bandwidth(std::span<const double> samples) {
  if (samples.size() < 2) return 1e-3;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(summarize(samples).variance);
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) return 1e-3;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

KdeCurve kde_gaussian(std::span<const double> samples, std::optional<double> bandwidth) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "KDE needs at least one sample");
  KdeCurve c;
  c.bandwidth = bandwidth ? *bandwidth : silverman_bandwidth(samples);
  if (!(c.bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be > 0");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *mn - 3.0 * c.bandwidth;
  const double hi = *mx + 3.0 * c.bandwidth;
  constexpr std::size_t kPoints = 512;
  c.x.resize(kPoints);
  c.density.resize(kPoints);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * c.bandwidth *
                             std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < kPoints; ++i) {
    // Build from both ends so a symmetric sample gives a mirror-image grid.
    const double last = static_cast<double>(kPoints - 1);
    c.x[i] = i < kPoints / 2 ? lo + (hi - lo) * (static_cast<double>(i) / last)
                             : hi - (hi - lo) * (static_cast<double>(kPoints - 1 - i) / last);
    NeumaierSum acc;
    for (double s : samples) {
      const double z = (c.x[i] - s) / c.bandwidth;
      acc.add(std::exp(-0.5 * z * z));
    }
    c.density[i] = norm * acc.value();
  }
  return c;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "KS distance needs samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = std::clamp(cdf(sorted[i]), 0.0, 1.0);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f),
                  std::abs(static_cast<double>(i) / n - f)});
  }
  return std::clamp(d, 0.0, 1.0);
}

std::vector<MomentRow> moment_convergence_table(std::span<const double> rescaled_errors,
                                                std::span<const double> p_list, double I_s) {
  if (!(I_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "I(s) must be > 0");
  std::vector<MomentRow> rows;
  for (double p : p_list) {
    if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "moment order must be > 0");
    NeumaierSum acc;
    for (double e : rescaled_errors) acc.add(std::pow(std::abs(e), p));
    MomentRow r;
    r.p = p;
    r.empirical = rescaled_errors.empty() ? 0.0 : acc.value() / static_cast<double>(rescaled_errors.size());
    r.theoretical = std::pow(2.0, 0.5 * p) * std::tgamma(0.5 * (p + 1.0)) /
                    std::sqrt(std::numbers::pi) * std::pow(I_s, -0.5 * p);
    rows.push_back(r);
  }
  return rows;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "regression needs >= 2 paired points");
  }
  const double mx = summarize(x).mean;
  const double my = summarize(y).mean;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace wflab
