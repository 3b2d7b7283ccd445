#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wflab/diffusion.hpp"
#include "wflab/error.hpp"
#include "wflab/estimation.hpp"
#include "wflab/monte_carlo.hpp"
#include "wflab/path.hpp"
#include "wflab/wright_fisher.hpp"

namespace wflab {

enum class ExitCode : int { Ok = 0, ConfigError = 1, NumericFailure = 2 };

/// Named test functions accepted by ergodic-check and check-conditions.
RealFunction named_function(std::string_view name);

/**
 * Validated configuration for one subcommand. Every key is optional except
 * "cmd"; keys that do not belong to the chosen command are rejected.
 */
struct CliConfig {
  std::string cmd;
  WFParams params{4.0, 2.0, 2.0};
  std::uint64_t seed = 0;
  double dt = 1e-3;
  StartSpec start = StartSpec::fixed(0.25);

  // simulate, ergodic-check
  double T = 1.0;
  // experiment
  std::vector<double> T_list{1.0, 2.0, 10.0, 50.0};
  std::vector<std::size_t> replicates{10000, 10000, 2000, 2000};
  EstimatorKind estimator = EstimatorKind::MleRiemann;
  std::optional<Prior> prior;
  std::optional<Loss> loss;
  std::vector<double> p_list{1.0, 2.0};
  // estimate
  std::string input;
  // ergodic-check, check-conditions
  std::string h;
  std::size_t n_paths = 10;
  // hitting, check-conditions
  double x = 0.25;
  double b = 0.5;
  double a = 0.25;
  std::size_t hit_replicates = 10000;
  double t_max = 1e3;
  // check-conditions
  std::vector<ParamVector> grid;
  InitialLaw nu = InitialLaw::stationary();
  // stationary-sample
  std::size_t n = 1000;
};

/// Throws Error(ConfigError) naming the offending key.
CliConfig parse_config(std::string_view text);

struct DispatchOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 0;
};

/// Runs the command, writes its output files into out_dir and a one-line
/// summary to `log`. Library errors propagate; see exit_code_for.
ExitCode dispatch(const CliConfig& config, const DispatchOptions& options, std::ostream& log);

/// 1 for malformed input, 2 for numeric failures.
ExitCode exit_code_for(const Error& e);

}  // namespace wflab
