#include "wflab/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "wflab/error.hpp"

namespace wflab {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::size_t first_error_index = n;
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (i < first_error_index) {
          first_error_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Normality experiment

void ExperimentConfig::validate() const {
  params.validate();
  if (T_list.empty()) throw Error(ErrorCode::InvalidArgument, "T list is empty");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  for (double T : T_list) {
    if (!(T >= dt)) throw Error(ErrorCode::InvalidArgument, "every T must be >= dt");
  }
  if (replicates.size() != 1 && replicates.size() != T_list.size()) {
    throw Error(ErrorCode::InvalidArgument, "replicates must have one entry or one per T");
  }
  for (auto r : replicates) {
    if (r < 2) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 2");
  }
  if (estimator == EstimatorKind::Bayes && (!prior || !loss)) {
    throw Error(ErrorCode::InvalidArgument, "the Bayes estimator needs a prior and a loss");
  }
}

std::size_t ExperimentConfig::replicates_for(std::size_t t_index) const {
  return replicates.size() == 1 ? replicates.front() : replicates.at(t_index);
}

ExperimentReport run_normality_experiment(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  const auto& p = config.params;
  report.fisher_information =
      0.25 * StationaryLaw(p).expectation([](double x) { return x * (1.0 - x); });
  const double limit_var = 1.0 / report.fisher_information;
  const EstimatorKind companion =
      config.estimator == EstimatorKind::MleRiemann ? EstimatorKind::MleScore : EstimatorKind::MleRiemann;

  for (std::size_t ti = 0; ti < config.T_list.size(); ++ti) {
    const double T = config.T_list[ti];
    const std::size_t n = config.replicates_for(ti);
    struct Row {
      bool ok = false;
      double estimate = 0.0;
      double companion = 0.0;
      std::size_t clamps = 0;
    };
    std::vector<Row> rows(n);
    parallel_for(n, threads, [&](std::size_t r) {
      SimConfig sim{T, config.dt, config.start, mix_seed(config.master_seed, r)};
      const auto path = simulate_path(p, sim);
      rows[r].clamps = path.clamp_count;
      try {
        const auto st = sufficient_stats(path, p.theta1, p.theta2, RiemannRule::Right);
        const double score = st.A / st.B;
        const double riemann = (st.delta_x - st.mut_integral) / st.sel_integral;
        double primary = score;
        if (config.estimator == EstimatorKind::MleRiemann) primary = riemann;
        if (config.estimator == EstimatorKind::Bayes) {
          primary = bayes_estimator(st, *config.prior, *config.loss, path.T).estimate;
        }
        rows[r].estimate = primary;
        rows[r].companion = companion == EstimatorKind::MleScore ? score : riemann;
        rows[r].ok = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegeneratePath) throw;
      }
    });

    HorizonResult h;
    h.T = T;
    h.replicates = n;
    h.companion = companion;
    const double rt = std::sqrt(T);
    std::vector<double> comp_errors;
    NeumaierSum abs_err;
    for (std::size_t r = 0; r < n; ++r) {
      h.clamp_count += rows[r].clamps;
      if (!rows[r].ok) {
        ++h.excluded;
        continue;
      }
      h.replicate_ids.push_back(r);
      h.estimates.push_back(rows[r].estimate);
      h.rescaled_errors.push_back(rt * (rows[r].estimate - p.s));
      comp_errors.push_back(rt * (rows[r].companion - p.s));
      abs_err.add(std::abs(rows[r].estimate - p.s));
    }
    if (h.estimates.size() < 2) {
      throw Error(ErrorCode::DegeneratePath, "fewer than two usable replicates at T = " + format_horizon(T));
    }
    h.summary = summarize(h.rescaled_errors);
    h.companion_summary = summarize(comp_errors);
    h.mean_abs_error = abs_err.value() / static_cast<double>(h.estimates.size());
    h.ks_distance = ks_distance(h.rescaled_errors,
                                [&](double x) { return normal_cdf(x, 0.0, limit_var); });
    h.kde = kde_gaussian(h.rescaled_errors);
    h.moments = moment_convergence_table(h.rescaled_errors, config.p_list, report.fisher_information);
    report.horizons.push_back(std::move(h));
  }
  return report;
}

std::string format_horizon(double T) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", T);
  return buf;
}

namespace {

nlohmann::json start_json(const StartSpec& s) {
  if (s.kind == StartSpec::Kind::Stationary) return {{"kind", "stationary"}};
  return {{"kind", "fixed"}, {"x0", s.x0}};
}

nlohmann::json summary_json(const SampleSummary& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}, {"std_error", s.std_error()}};
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + file.string());
  out << text;
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& report) {
  const auto& c = report.config;
  nlohmann::json cfg = {
      {"s", c.params.s},
      {"theta1", c.params.theta1},
      {"theta2", c.params.theta2},
      {"T", c.T_list},
      {"replicates", c.replicates},
      {"dt", c.dt},
      {"seed", c.master_seed},
      {"estimator", std::string(to_string(c.estimator))},
      {"start", start_json(c.start)},
  };
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& h : report.horizons) {
    nlohmann::json moments = nlohmann::json::array();
    for (const auto& m : h.moments) {
      moments.push_back({{"p", m.p}, {"empirical", m.empirical}, {"theoretical", m.theoretical}});
    }
    horizons.push_back({
        {"T", h.T},
        {"replicates", h.replicates},
        {"used", h.estimates.size()},
        {"excluded", h.excluded},
        {"clamp_count", h.clamp_count},
        {"rescaled_error", summary_json(h.summary)},
        {"mean_abs_error", h.mean_abs_error},
        {"ks_distance", h.ks_distance},
        {"kde_bandwidth", h.kde.bandwidth},
        {"moments", moments},
        {"companion", {{"method", std::string(to_string(h.companion))},
                       {"rescaled_error", summary_json(h.companion_summary)}}},
    });
  }
  return {{"config", cfg},
          {"fisher_information", report.fisher_information},
          {"limit_variance", 1.0 / report.fisher_information},
          {"horizons", horizons}};
}

void write_report_files(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
  char buf[128];
  for (const auto& h : report.horizons) {
    const std::string tag = format_horizon(h.T);
    std::string errors = "replicate,estimate,rescaled_error\n";
    for (std::size_t i = 0; i < h.estimates.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", h.replicate_ids[i], h.estimates[i],
                    h.rescaled_errors[i]);
      errors += buf;
    }
    write_text(dir / ("errors_T" + tag + ".csv"), errors);
    std::string kde = "x,density\n";
    for (std::size_t i = 0; i < h.kde.x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", h.kde.x[i], h.kde.density[i]);
      kde += buf;
    }
    write_text(dir / ("kde_T" + tag + ".csv"), kde);
  }
}

// ---------------------------------------------------------------------------
// Ergodic averages

ErgodicReport run_ergodic_check(const ErgodicCheckConfig& config, const RealFunction& h,
                                unsigned threads) {
  config.params.validate();
  if (config.n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  ErgodicReport rep;
  rep.expectation = StationaryLaw(config.params).expectation(h);

  std::vector<double> averages(config.n_paths);
  std::vector<std::size_t> clamps(config.n_paths);
  const double dt = config.dt;
  RealFunction g = h;
  if (config.clamp_argument) g = [&h, dt](double x) { return h(clamp_to_interior(x, dt)); };
  parallel_for(config.n_paths, threads, [&](std::size_t r) {
    SimConfig sim{config.T, dt, config.start, mix_seed(config.master_seed, r)};
    const auto path = simulate_path(config.params, sim);
    averages[r] = riemann_functional(path, g, RiemannRule::Left) / path.T;
    clamps[r] = path.clamp_count;
  });
  rep.path_averages = averages;
  rep.time_average = summarize(averages).mean;
  for (auto c : clamps) rep.clamp_count += c;
  rep.abs_deviation = std::abs(rep.time_average - rep.expectation);
  rep.rel_deviation = rep.expectation != 0.0 ? rep.abs_deviation / std::abs(rep.expectation)
                                             : rep.abs_deviation;
  return rep;
}

nlohmann::json to_json(const ErgodicReport& r) {
  return {{"time_average", r.time_average},     {"expectation", r.expectation},
          {"abs_deviation", r.abs_deviation},   {"rel_deviation", r.rel_deviation},
          {"path_averages", r.path_averages},   {"clamp_count", r.clamp_count}};
}

// ---------------------------------------------------------------------------
// Likelihood-ratio diagnostics

MartingaleReport run_martingale_and_hellinger(const MartingaleConfig& config, unsigned threads) {
  const auto& p = config.params;
  p.validate();
  const double rt = std::sqrt(config.T);
  auto check_u = [&](double u) {
    if (!config.support.contains(p.s + u / rt)) {
      throw Error(ErrorCode::LocalParameterOutOfRange,
                  "u = " + std::to_string(u) + " leaves the parameter set");
    }
  };
  for (double u : config.u_list) check_u(u);
  for (const auto& [u, v] : config.pairs) {
    check_u(u);
    check_u(v);
  }

  const std::size_t n = config.replicates;
  const std::size_t nu = config.u_list.size();
  const std::size_t np = config.pairs.size();
  std::vector<double> z(n * nu);
  std::vector<double> hz(n * nu);
  std::vector<double> hd(n * np);
  const double log_g = log_wf_normalizer(p.s, p.theta1, p.theta2);

  parallel_for(n, threads, [&](std::size_t r) {
    SimConfig sim{config.T, config.dt, config.start, mix_seed(config.master_seed, r)};
    const auto path = simulate_path(p, sim);
    const auto st = sufficient_stats(path, p.theta1, p.theta2);
    auto log_z = [&](double u) {
      if (u == 0.0) return 0.0;
      const double sp = p.s + u / std::sqrt(path.T);
      double nu_ratio = 0.0;
      if (path.start == StartSpec::Kind::Stationary) {
        nu_ratio = (sp - p.s) * path.values.front() -
                   (log_wf_normalizer(sp, p.theta1, p.theta2) - log_g);
      }
      return log_likelihood_ratio(st, sp, p.s) + nu_ratio;
    };
    for (std::size_t k = 0; k < nu; ++k) {
      const double lz = log_z(config.u_list[k]);
      z[r * nu + k] = std::exp(lz);
      hz[r * nu + k] = std::exp(0.5 * lz);
    }
    for (std::size_t k = 0; k < np; ++k) {
      const double d = std::exp(0.5 * log_z(config.pairs[k].first)) -
                       std::exp(0.5 * log_z(config.pairs[k].second));
      hd[r * np + k] = d * d;
    }
  });

  MartingaleReport rep;
  std::vector<double> col(n);
  for (std::size_t k = 0; k < nu; ++k) {
    ZMoments m;
    m.u = config.u_list[k];
    for (std::size_t r = 0; r < n; ++r) col[r] = z[r * nu + k];
    m.z = summarize(col);
    for (std::size_t r = 0; r < n; ++r) col[r] = hz[r * nu + k];
    m.sqrt_z = summarize(col);
    rep.z.push_back(m);
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t k = 0; k < np; ++k) {
    HellingerRow row;
    row.u = config.pairs[k].first;
    row.v = config.pairs[k].second;
    for (std::size_t r = 0; r < n; ++r) col[r] = hd[r * np + k];
    row.sq_diff = summarize(col);
    rep.hellinger.push_back(row);
    if (row.u != row.v && row.sq_diff.mean > 0.0) {
      lx.push_back(std::log(std::abs(row.u - row.v)));
      ly.push_back(std::log(row.sq_diff.mean));
    }
  }
  rep.hellinger_slope = lx.size() >= 2 ? ols_slope(lx, ly) : std::nan("");

  std::vector<std::pair<double, double>> by_u;
  for (const auto& m : rep.z) by_u.emplace_back(std::abs(m.u), m.sqrt_z.mean);
  std::sort(by_u.begin(), by_u.end());
  rep.sqrt_z_decreasing = true;
  for (std::size_t i = 1; i < by_u.size(); ++i) {
    if (!(by_u[i].second < by_u[i - 1].second)) rep.sqrt_z_decreasing = false;
  }
  return rep;
}

nlohmann::json to_json(const MartingaleReport& r) {
  nlohmann::json zs = nlohmann::json::array();
  for (const auto& m : r.z) {
    zs.push_back({{"u", m.u}, {"Z", summary_json(m.z)}, {"sqrt_Z", summary_json(m.sqrt_z)}});
  }
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : r.hellinger) {
    hs.push_back({{"u", h.u}, {"v", h.v}, {"sq_diff", summary_json(h.sq_diff)}});
  }
  return {{"Z", zs},
          {"hellinger", hs},
          {"hellinger_slope", r.hellinger_slope},
          {"sqrt_Z_decreasing", r.sqrt_z_decreasing}};
}

// ---------------------------------------------------------------------------
// LAN diagnostics

LanCheckReport run_lan_check(const LanCheckConfig& config, unsigned threads) {
  const auto& p = config.params;
  p.validate();
  if (!p.lan_regime()) throw Error(ErrorCode::LanRegimeRequired, "LAN check needs theta >= 1");
  const std::size_t n = config.replicates;
  std::vector<std::array<double, 3>> deltas(n);
  parallel_for(n, threads, [&](std::size_t r) {
    SimConfig sim{config.T, config.dt, config.start, mix_seed(config.master_seed, r)};
    deltas[r] = lan_statistic(simulate_path(p, sim), p).delta;
  });

  LanCheckReport rep;
  rep.fisher = fisher_matrix(p);
  std::vector<double> col(n);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t r = 0; r < n; ++r) col[r] = deltas[r][i];
    rep.mean[i] = summarize(col).mean;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (std::size_t r = 0; r < n; ++r) {
        col[r] = (deltas[r][i] - rep.mean[i]) * (deltas[r][j] - rep.mean[j]);
      }
      const auto s = summarize(col);
      rep.covariance[i][j] = s.mean * static_cast<double>(n) / static_cast<double>(n - 1);
      rep.covariance_se[i][j] = s.std_error();
    }
  }
  return rep;
}

RemainderTrend run_remainder_trend(const LanCheckConfig& base, const std::vector<double>& T_list,
                                   const std::array<double, 3>& u, unsigned threads) {
  const auto& p = base.params;
  p.validate();
  const auto info = fisher_matrix(p);
  RemainderTrend trend;
  for (double T : T_list) {
    std::vector<double> r_abs(base.replicates);
    parallel_for(base.replicates, threads, [&](std::size_t r) {
      SimConfig sim{T, base.dt, base.start, mix_seed(base.master_seed, r)};
      r_abs[r] = std::abs(lan_remainder(simulate_path(p, sim), p, u, info));
    });
    std::sort(r_abs.begin(), r_abs.end());
    trend.T.push_back(T);
    trend.median_abs.push_back(quantile_sorted(r_abs, 0.5));
  }
  return trend;
}

// ---------------------------------------------------------------------------
// Hitting times

HittingCheckReport run_hitting_check(const HittingCheckConfig& config, unsigned threads) {
  const auto& p = config.params;
  p.validate();
  const auto spec = wright_fisher_spec();
  const auto pv = p.vec();
  HittingCheckReport rep;
  rep.quad_mean = hitting_moment(spec, pv, config.x, config.b, 1);
  rep.quad_second = hitting_moment(spec, pv, config.x, config.b, 2);
  const double k = config.x < config.b ? kappa_l(spec, pv, 0.0, config.b)
                                       : kappa_r(spec, pv, config.b, 1.0);
  rep.kappa_bound = 2.0 * k * k;

  const std::size_t n = config.replicates;
  std::vector<double> times(n, std::nan(""));
  parallel_for(n, threads, [&](std::size_t r) {
    Rng rng(mix_seed(config.master_seed, r));
    const auto t = first_hitting_time(p, config.x, config.b, config.dt, config.t_max, rng);
    if (t) times[r] = *t;
  });
  std::vector<double> hit;
  std::vector<double> hit_sq;
  for (double t : times) {
    if (std::isnan(t)) {
      ++rep.not_hit;
      continue;
    }
    hit.push_back(t);
    hit_sq.push_back(t * t);
  }
  rep.mc_time = summarize(hit);
  rep.mc_time_sq = summarize(hit_sq);
  return rep;
}

nlohmann::json to_json(const HittingCheckReport& r) {
  return {{"quadrature", {{"mean", r.quad_mean}, {"second_moment", r.quad_second}}},
          {"moment_bound_q2", r.kappa_bound},
          {"monte_carlo", {{"mean", summary_json(r.mc_time)},
                           {"second_moment", summary_json(r.mc_time_sq)},
                           {"not_hit", r.not_hit}}}};
}

}  // namespace wflab
