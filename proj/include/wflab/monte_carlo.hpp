#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"
#include "wflab/estimation.hpp"
#include "wflab/path.hpp"
#include "wflab/statistics.hpp"
#include "wflab/wright_fisher.hpp"

namespace wflab {

/// 0 means "all hardware threads".
unsigned resolve_threads(unsigned requested);

/// Runs body(0..n-1) on a small worker pool. Each index is handled exactly
/// once; callers write results by index, so output never depends on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Asymptotic-normality experiment

struct ExperimentConfig {
  WFParams params{4.0, 2.0, 2.0};
  std::vector<double> T_list{1.0, 2.0, 10.0, 50.0};
  /// One count per T, or a single count used for every T.
  std::vector<std::size_t> replicates{10000, 10000, 2000, 2000};
  double dt = 1e-3;
  std::uint64_t master_seed = 0;
  EstimatorKind estimator = EstimatorKind::MleRiemann;
  StartSpec start = StartSpec::fixed(0.25);
  std::optional<Prior> prior;
  std::optional<Loss> loss;
  std::vector<double> p_list{1.0, 2.0};

  void validate() const;
  std::size_t replicates_for(std::size_t t_index) const;
};

struct HorizonResult {
  double T = 0.0;
  std::size_t replicates = 0;
  std::size_t excluded = 0;
  std::size_t clamp_count = 0;
  std::vector<std::size_t> replicate_ids;  // surviving replicates, ascending
  std::vector<double> estimates;
  std::vector<double> rescaled_errors;     // sqrt(T) (estimate - s)
  SampleSummary summary;                   // of rescaled_errors
  double mean_abs_error = 0.0;             // mean |estimate - s|
  double ks_distance = 0.0;                // vs N(0, 1 / I(s))
  KdeCurve kde;
  std::vector<MomentRow> moments;
  /// The other ML variant computed on the same paths.
  EstimatorKind companion = EstimatorKind::MleRiemann;
  SampleSummary companion_summary;
};

struct ExperimentReport {
  ExperimentConfig config;
  double fisher_information = 0.0;  // I(s) by quadrature
  std::vector<HorizonResult> horizons;
};

ExperimentReport run_normality_experiment(const ExperimentConfig& config, unsigned threads = 0);

nlohmann::json to_json(const ExperimentReport& report);

/// report.json, errors_T<t>.csv and kde_T<t>.csv.
void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir);

/// "1", "2.5", ... as used in the per-horizon file names.
std::string format_horizon(double T);

// ---------------------------------------------------------------------------
// Ergodic averages

struct ErgodicCheckConfig {
  WFParams params{4.0, 2.0, 2.0};
  double T = 500.0;
  double dt = 1e-3;
  std::size_t n_paths = 10;
  StartSpec start = StartSpec::fixed(0.25);
  std::uint64_t master_seed = 0;
  /// Evaluate h at clamp_to_interior(x, dt), for h singular at 0 or 1.
  bool clamp_argument = true;
};

struct ErgodicReport {
  double time_average = 0.0;
  double expectation = 0.0;
  double abs_deviation = 0.0;
  double rel_deviation = 0.0;
  std::vector<double> path_averages;
  std::size_t clamp_count = 0;
};

ErgodicReport run_ergodic_check(const ErgodicCheckConfig& config, const RealFunction& h,
                                unsigned threads = 0);

nlohmann::json to_json(const ErgodicReport& report);

// ---------------------------------------------------------------------------
// Likelihood-ratio diagnostics

struct MartingaleConfig {
  WFParams params{4.0, 2.0, 2.0};
  double T = 1.0;
  double dt = 1e-3;
  std::size_t replicates = 5000;
  StartSpec start = StartSpec::fixed(0.25);
  std::uint64_t master_seed = 0;
  Support support{-10.0, 30.0};
  std::vector<double> u_list{1.0, 2.0, 4.0, 8.0};
  std::vector<std::pair<double, double>> pairs{{0.25, 0.0}, {0.5, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
};

struct ZMoments {
  double u = 0.0;
  SampleSummary z;
  SampleSummary sqrt_z;
};

struct HellingerRow {
  double u = 0.0;
  double v = 0.0;
  SampleSummary sq_diff;  // |Z^{1/2}(u) - Z^{1/2}(v)|^2
};

struct MartingaleReport {
  std::vector<ZMoments> z;
  std::vector<HellingerRow> hellinger;
  double hellinger_slope = 0.0;  // log-log, against |u - v|
  bool sqrt_z_decreasing = false;
};

MartingaleReport run_martingale_and_hellinger(const MartingaleConfig& config, unsigned threads = 0);

nlohmann::json to_json(const MartingaleReport& report);

// ---------------------------------------------------------------------------
// LAN diagnostics

struct LanCheckConfig {
  WFParams params{4.0, 2.0, 2.0};
  double T = 10.0;
  double dt = 1e-3;
  std::size_t replicates = 2000;
  StartSpec start = StartSpec::stationary();
  std::uint64_t master_seed = 0;
};

struct LanCheckReport {
  std::array<double, 3> mean{};
  std::array<std::array<double, 3>, 3> covariance{};
  std::array<std::array<double, 3>, 3> covariance_se{};
  FisherMatrix fisher;
};

LanCheckReport run_lan_check(const LanCheckConfig& config, unsigned threads = 0);

struct RemainderTrend {
  std::vector<double> T;
  std::vector<double> median_abs;
};

/// Median |r_T| over replicates for each horizon (same seeds across horizons).
RemainderTrend run_remainder_trend(const LanCheckConfig& base, const std::vector<double>& T_list,
                                   const std::array<double, 3>& u, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Hitting times

struct HittingCheckConfig {
  WFParams params{0.0, 1.0, 1.0};
  double x = 0.25;
  double b = 0.5;
  double dt = 1e-4;
  std::size_t replicates = 10000;
  double t_max = 1e3;
  std::uint64_t master_seed = 0;
};

struct HittingCheckReport {
  double quad_mean = 0.0;     // E_x[T_b] by quadrature
  double quad_second = 0.0;   // E_x[T_b^2]
  double kappa_bound = 0.0;   // 2 kappa^l(l, b)^2 (or the mirrored bound)
  SampleSummary mc_time;
  SampleSummary mc_time_sq;
  std::size_t not_hit = 0;
};

HittingCheckReport run_hitting_check(const HittingCheckConfig& config, unsigned threads = 0);

nlohmann::json to_json(const HittingCheckReport& report);

}  // namespace wflab
