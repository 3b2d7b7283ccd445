// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails. Reference values come from
// closed forms or from composite Simpson rules written here, never from the
// library's own quadrature.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "wflab/diffusion.hpp"
#include "wflab/estimation.hpp"
#include "wflab/monte_carlo.hpp"
#include "wflab/path.hpp"
#include "wflab/statistics.hpp"
#include "wflab/wright_fisher.hpp"

namespace fs = std::filesystem;
using namespace wflab;

namespace {

constexpr std::uint64_t kSeed = 42;

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// E[x^i (1-x)^j] under e^{sx} x^{t1-1} (1-x)^{t2-1}; needs t1 - 1 + i >= 0 and
// t2 - 1 + j >= 0 so the integrand is finite at both ends.
double stationary_moment(const WFParams& p, double i, double j) {
  auto w = [&](double x, double a, double b) {
    return std::exp(p.s * x) * std::pow(x, p.theta1 - 1.0 + a) * std::pow(1.0 - x, p.theta2 - 1.0 + b);
  };
  return simpson([&](double x) { return w(x, i, j); }, 0.0, 1.0) /
         simpson([&](double x) { return w(x, 0.0, 0.0); }, 0.0, 1.0);
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig study_config() {
  ExperimentConfig c;
  c.params = {4.0, 2.0, 2.0};
  c.T_list = {1.0, 2.0, 10.0, 50.0};
  c.replicates = {10000, 10000, 2000, 2000};
  c.dt = 1e-3;
  c.start = StartSpec::fixed(0.25);
  c.master_seed = kSeed;
  c.estimator = EstimatorKind::MleRiemann;
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
  const WFParams study{4.0, 2.0, 2.0};
  const double I_ref = 0.25 * stationary_moment(study, 1.0, 1.0);
  const double var_ref = 1.0 / I_ref;
  const fs::path work = fs::temp_directory_path() / "wflab_acceptance";
  fs::remove_all(work);

  // AC1, AC2, AC10 share one run of the study.
  auto t0 = std::chrono::steady_clock::now();
  const auto study_report = run_normality_experiment(study_config(), 1);
  const double study_seconds = seconds_since(t0);
  write_report_files(study_report, work / "threads1");
  {
    const auto& H = study_report.horizons;
    bool mono = true;
    std::string ks;
    for (std::size_t i = 0; i < H.size(); ++i) {
      ks += fmt("%s%.4f", i ? "," : "", H[i].ks_distance);
      if (i > 0 && H[i].ks_distance > H[i - 1].ks_distance) mono = false;
    }
    const auto& last = H.back();
    const double n = static_cast<double>(last.summary.n);
    const double mean_tol = 3.0 * std::sqrt(var_ref / n);
    const double rel_var = last.summary.variance / var_ref - 1.0;
    const bool info_ok = std::abs(study_report.fisher_information / I_ref - 1.0) < 1e-8;
    const bool ok = mono && last.ks_distance <= 0.06 && std::abs(last.summary.mean) <= mean_tol &&
                    std::abs(rel_var) <= 0.15 && info_ok && study_seconds <= 180.0;
    report("AC1", ok,
           fmt("KS=[%s] mean(T=50)=%+.4f (|.|<=%.4f) var rel.err=%+.4f I(s)=%.6f (oracle %.6f) %.1fs",
               ks.c_str(), last.summary.mean, mean_tol, rel_var,
               study_report.fisher_information, I_ref, study_seconds));
  }
  {
    const auto& H = study_report.horizons;
    bool ok = true;
    std::string mae;
    for (std::size_t i = 0; i < H.size(); ++i) {
      mae += fmt("%s%.4f", i ? "," : "", H[i].mean_abs_error);
      if (i > 0 && !(H[i].mean_abs_error < H[i - 1].mean_abs_error)) ok = false;
    }
    report("AC2", ok, fmt("mean |s_hat - s| over T=1,2,10,50: [%s]", mae.c_str()));
  }

  // AC3, AC4
  {
    MartingaleConfig c;
    c.params = study;
    c.T = 1.0;
    c.dt = 1e-3;
    c.replicates = 5000;
    c.start = StartSpec::fixed(0.25);
    c.master_seed = kSeed;
    c.u_list = {1.0, 2.0, 4.0, 8.0};
    c.pairs = {{0.25, 0.0}, {0.5, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
    t0 = std::chrono::steady_clock::now();
    const auto m = run_martingale_and_hellinger(c, 1);
    const double secs = seconds_since(t0);
    const auto& z1 = m.z.front();
    const double dev = std::abs(z1.z.mean - 1.0);
    report("AC3", z1.u == 1.0 && dev <= 3.0 * z1.z.std_error() && secs <= 20.0,
           fmt("E[Z(1)]=%.5f se=%.5f |dev|/se=%.2f %.1fs", z1.z.mean, z1.z.std_error(),
               dev / z1.z.std_error(), secs));
    std::string sq;
    for (const auto& r : m.z) sq += fmt("%s%.4f", sq.empty() ? "" : ",", r.sqrt_z.mean);
    report("AC4", m.hellinger_slope >= 1.7 && m.hellinger_slope <= 2.3 && m.sqrt_z_decreasing,
           fmt("Hellinger slope=%.4f E[Z^1/2](u=1,2,4,8)=[%s]", m.hellinger_slope, sq.c_str()));
  }

  // AC5
  {
    HittingCheckConfig c;
    c.params = {0.0, 1.0, 1.0};
    c.x = 0.25;
    c.b = 0.5;
    c.dt = 1e-4;
    c.replicates = 10000;
    c.master_seed = kSeed;
    const auto h = run_hitting_check(c, 1);
    const double exact = 2.0 * std::log(1.5);
    const double rel = std::abs(h.quad_mean / exact - 1.0);
    const double z = std::abs(h.mc_time.mean - exact) / h.mc_time.std_error();
    // E_x[T_b^q] <= q! kappa^q with kappa = E_0[T_b] = 2 ln(1 / (1 - b)).
    const double kappa = 2.0 * std::log(2.0);
    const bool bound = h.quad_second <= 2.0 * kappa * kappa &&
                       std::abs(h.kappa_bound / (2.0 * kappa * kappa) - 1.0) < 1e-6;
    report("AC5", rel <= 1e-6 && z <= 3.0 && bound && h.not_hit == 0,
           fmt("E[T_b]=%.10f (2 ln 1.5, rel.err %.2e) MC=%.5f (%.2f se) E[T_b^2]=%.5f <= %.5f",
               h.quad_mean, rel, h.mc_time.mean, z, h.quad_second, 2.0 * kappa * kappa));
  }

  // AC6
  {
    const auto spec = wright_fisher_spec();
    const double k = kappa_l(spec, {0.0, 1.0, 1.0}, 0.25, 0.75);
    const double exact = 2.0 * std::log(3.0);
    const double rel = std::abs(k / exact - 1.0);
    std::vector<ParamVector> grid;
    for (double s : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      for (double t1 : {1.0, 1.5, 2.0}) {
        for (double t2 : {1.0, 1.5, 2.0}) grid.push_back({s, t1, t2});
      }
    }
    const auto e = check_uniform_ergodicity(spec, grid, 0.25, 0.75);
    report("AC6", rel <= 1e-6 && e.pass && e.kappa_l_min > 0.0 && e.kappa_r_min > 0.0,
           fmt("kappa_l(0.25,0.75)=%.10f (2 ln 3, rel.err %.2e) grid of %zu: min kappa_l=%.4f "
               "min kappa_r=%.4f",
               k, rel, grid.size(), e.kappa_l_min, e.kappa_r_min));
  }

  // AC7
  {
    ErgodicCheckConfig c;
    c.params = study;
    c.T = 500.0;
    c.dt = 1e-3;
    c.n_paths = 10;
    c.start = StartSpec::fixed(0.25);
    c.master_seed = kSeed;
    const auto rx = run_ergodic_check(c, [](double x) { return x; }, 1);
    const double ex = stationary_moment(study, 1.0, 0.0);
    const auto rh = run_ergodic_check(c, [](double x) { return (1.0 - x) / x; }, 1);
    const double eh = stationary_moment(study, -1.0, 1.0);
    const double abs_x = std::abs(rx.time_average - ex);
    const double rel_h = std::abs(rh.time_average / eh - 1.0);
    report("AC7", abs_x <= 0.01 && rel_h <= 0.05,
           fmt("h=x: %.5f vs %.5f (abs %.4f)  h=(1-x)/x: %.5f vs %.5f (rel %.4f)",
               rx.time_average, ex, abs_x, rh.time_average, eh, rel_h));
  }

  // AC8
  {
    double worst_identity = 0.0;
    double worst_argmax = 0.0;
    double worst_bayes = 0.0;
    const double step = 1e-3;
    const Prior flat = Prior::uniform(-10.0, 30.0);
    for (std::size_t r = 0; r < 200; ++r) {
      const double T = r % 2 ? 10.0 : 2.0;
      const auto path = simulate_path(study, {T, 1e-3, StartSpec::fixed(0.25), mix_seed(kSeed, r)});
      const auto st = sufficient_stats(path, study.theta1, study.theta2);
      const double score = mle_score(path, study.theta1, study.theta2).estimate;
      const double riem = mle_riemann(path, study.theta1, study.theta2).estimate;
      const double dx = path.values.back() - path.values.front();
      worst_identity = std::max(worst_identity, std::abs((score - riem) - dx / st.sel_integral));

      const double centre = std::round(score / step) * step;
      double best = centre;
      double best_ll = -INFINITY;
      for (int k = -5000; k <= 5000; ++k) {
        const double s = centre + k * step;
        const double ll = log_likelihood_ratio(st, s, 0.0);
        if (ll > best_ll) {
          best_ll = ll;
          best = s;
        }
      }
      worst_argmax = std::max(worst_argmax, std::abs(best - st.A / st.B) / step);

      // A s - B s^2 / 2 = -B (s - A/B)^2 / 2 + const
      auto w = [&](double s) { return std::exp(-0.5 * st.B * (s - score) * (s - score)); };
      const double mean = simpson([&](double s) { return s * w(s); }, -10.0, 30.0, 400000) /
                          simpson(w, -10.0, 30.0, 400000);
      const double bayes = bayes_estimator(st, flat, Loss::quadratic(), path.T).estimate;
      worst_bayes = std::max(worst_bayes, std::abs(bayes - mean));
    }
    report("AC8", worst_identity <= 1e-12 && worst_argmax <= 0.5 + 1e-9 && worst_bayes <= 1e-6,
           fmt("200 paths: max identity gap %.2e, max |argmax - A/B| %.3f grid steps, "
               "max |bayes - posterior mean| %.2e",
               worst_identity, worst_argmax, worst_bayes));
  }

  // AC9
  {
    LanCheckConfig c;
    c.params = study;
    c.T = 10.0;
    c.dt = 1e-3;
    c.replicates = 2000;
    c.start = StartSpec::stationary();
    c.master_seed = kSeed;
    const auto lan = run_lan_check(c, 1);
    // Diagonal of the information matrix from independent quadrature:
    // E[mu_dot_i^2 / sigma^2] with mu_dot = (x(1-x), 1-x, -x) / 2.
    const std::array<double, 3> diag = {
        I_ref,
        0.25 * stationary_moment(study, -1.0, 1.0),
        0.25 * stationary_moment(study, 1.0, -1.0),
    };
    bool ok = true;
    std::string rows;
    for (int i = 0; i < 3; ++i) {
      const double rel = lan.covariance[i][i] / diag[i] - 1.0;
      if (std::abs(rel) > 0.15 || std::abs(lan.fisher(i, i) / diag[i] - 1.0) > 1e-8) ok = false;
      rows += fmt("%s%.4f/%.4f", i ? " " : "", lan.covariance[i][i], diag[i]);
    }
    LanCheckConfig base = c;
    base.replicates = 1000;
    const auto trend = run_remainder_trend(base, {5.0, 20.0, 80.0}, {1.0, 1.0, 1.0}, 1);
    const auto& med = trend.median_abs;
    ok = ok && med[1] < med[0] && med[2] < med[1];
    report("AC9", ok,
           fmt("var(Delta)/I diag: %s  median|r_T| (T=5,20,80): %.4f %.4f %.4f", rows.c_str(),
               med[0], med[1], med[2]));
  }

  // AC10
  {
    const auto& last = study_report.horizons.back();
    bool ok = true;
    std::string rows;
    for (double p : {1.0, 2.0}) {
      const auto it = std::find_if(last.moments.begin(), last.moments.end(),
                                   [&](const MomentRow& m) { return m.p == p; });
      const double theory = std::pow(2.0, p / 2.0) * std::tgamma((p + 1.0) / 2.0) /
                            std::sqrt(M_PI) * std::pow(I_ref, -p / 2.0);
      if (it == last.moments.end()) {
        ok = false;
        continue;
      }
      const double rel = it->empirical / theory - 1.0;
      if (std::abs(rel) > 0.10) ok = false;
      rows += fmt("%sp=%g: %.4f vs %.4f (%+.3f)", rows.empty() ? "" : "  ", p, it->empirical, theory, rel);
    }
    report("AC10", ok, rows);
  }

  // AC11
  {
    const auto again = run_normality_experiment(study_config(), 3);
    write_report_files(again, work / "threads3");
    bool same = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(work / "threads1")) {
      const auto other = work / "threads3" / entry.path().filename();
      ++files;
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) same = false;
    }
    MartingaleConfig mc;
    mc.replicates = 500;
    mc.master_seed = kSeed;
    same = same && to_json(run_martingale_and_hellinger(mc, 1)).dump() ==
                       to_json(run_martingale_and_hellinger(mc, 4)).dump();
    ErgodicCheckConfig ec;
    ec.T = 20.0;
    ec.n_paths = 6;
    ec.master_seed = kSeed;
    auto hx = [](double x) { return x; };
    same = same && to_json(run_ergodic_check(ec, hx, 1)).dump() ==
                       to_json(run_ergodic_check(ec, hx, 4)).dump();
    HittingCheckConfig hc;
    hc.replicates = 500;
    hc.master_seed = kSeed;
    same = same && to_json(run_hitting_check(hc, 1)).dump() == to_json(run_hitting_check(hc, 4)).dump();
    report("AC11", same && files >= 9,
           fmt("%zu report files byte-identical at 1 and 3 threads; martingale, ergodic and "
               "hitting reports identical at 1 and 4 threads",
               files));
  }

  fs::remove_all(work);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
