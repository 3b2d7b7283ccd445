#include "wflab/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wflab/error.hpp"

namespace wflab {

// ---------------------------------------------------------------------------
// Sufficient statistics and ML

SufficientStats sufficient_stats(const SamplePath& path, double theta1, double theta2,
                                 RiemannRule rule) {
  if (path.values.size() < 2) throw Error(ErrorCode::DegeneratePath, "path has no steps");
  const std::size_t n = path.steps();
  const std::size_t begin = rule == RiemannRule::Right ? 1 : 0;
  NeumaierSum mut;
  NeumaierSum sel;
  for (std::size_t i = begin; i < begin + n; ++i) {
    const double x = path.values[i];
    mut.add(-theta2 * x + theta1 * (1.0 - x));
    sel.add(x * (1.0 - x));
  }
  SufficientStats st;
  st.delta_x = path.values.back() - path.values.front();
  st.mut_integral = path.dt * mut.value();
  st.sel_integral = path.dt * sel.value();
  if (!(st.sel_integral > 0.0)) {
    throw Error(ErrorCode::DegeneratePath, "int X(1-X) dt vanishes (path stuck at a boundary)");
  }
  st.A = 0.5 * st.delta_x - 0.25 * st.mut_integral;
  st.B = 0.25 * st.sel_integral;
  return st;
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::MleRiemann: return "mle_riemann";
    case EstimatorKind::MleScore: return "mle_score";
    case EstimatorKind::Bayes: return "bayes";
  }
  return "unknown";
}

EstimatorKind estimator_from_string(std::string_view name) {
  if (name == "mle_riemann") return EstimatorKind::MleRiemann;
  if (name == "mle_score") return EstimatorKind::MleScore;
  if (name == "bayes") return EstimatorKind::Bayes;
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

nlohmann::json to_json(const EstimationResult& r) {
  return {{"method", std::string(to_string(r.method))},
          {"estimate", r.estimate},
          {"T", r.T},
          {"A", r.stats.A},
          {"B", r.stats.B},
          {"delta_x", r.stats.delta_x},
          {"mut_integral", r.stats.mut_integral},
          {"sel_integral", r.stats.sel_integral}};
}

EstimationResult mle_riemann(const SamplePath& path, double theta1, double theta2) {
  const auto st = sufficient_stats(path, theta1, theta2, RiemannRule::Right);
  return {(st.delta_x - st.mut_integral) / st.sel_integral, EstimatorKind::MleRiemann, st, path.T};
}

EstimationResult mle_score(const SamplePath& path, double theta1, double theta2, RiemannRule rule) {
  const auto st = sufficient_stats(path, theta1, theta2, rule);
  return {st.A / st.B, EstimatorKind::MleScore, st, path.T};
}

double log_likelihood_ratio(const SufficientStats& st, double s_prime, double s) {
  return st.A * (s_prime - s) - 0.5 * st.B * (s_prime * s_prime - s * s);
}

namespace {

double stationary_start_ratio(const SamplePath& path, double s_prime, double s, double theta1,
                              double theta2) {
  if (path.start != StartSpec::Kind::Stationary || s_prime == s) return 0.0;
  const double x0 = path.values.front();
  return (s_prime - s) * x0 - (log_wf_normalizer(s_prime, theta1, theta2) -
                               log_wf_normalizer(s, theta1, theta2));
}

}  // namespace

double log_likelihood_ratio(const SamplePath& path, double s_prime, double s, double theta1,
                            double theta2) {
  const auto st = sufficient_stats(path, theta1, theta2);
  return log_likelihood_ratio(st, s_prime, s) +
         stationary_start_ratio(path, s_prime, s, theta1, theta2);
}

double log_likelihood_ratio_Z(const SufficientStats& stats, double log_nu_ratio, double T,
                              double s, double u) {
  return log_likelihood_ratio(stats, s + u / std::sqrt(T), s) + log_nu_ratio;
}

double likelihood_ratio_Z(const SamplePath& path, double s, double u, double theta1,
                          double theta2, const Support& support) {
  if (u == 0.0) return 1.0;
  const double s_prime = s + u / std::sqrt(path.T);
  if (!support.contains(s_prime)) {
    std::ostringstream os;
    os << "s + u/sqrt(T) = " << s_prime << " outside (" << support.lo << ", " << support.hi << ")";
    throw Error(ErrorCode::LocalParameterOutOfRange, os.str());
  }
  return std::exp(log_likelihood_ratio(path, s_prime, s, theta1, theta2));
}

// ---------------------------------------------------------------------------
// Priors, losses, posterior

Prior Prior::uniform(double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "uniform prior needs lo < hi");
  Prior p;
  const double h = 1.0 / (hi - lo);
  p.density = [h](double) { return h; };
  p.support = {lo, hi};
  p.majorant_A = h;
  p.majorant_b = 1.0;
  return p;
}

Prior Prior::gaussian(double mean, double sd, double lo, double hi) {
  if (!(lo < hi) || !(sd > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad gaussian prior");
  const double inv = 1.0 / (sd * std::sqrt(2.0));
  const double mass = 0.5 * (std::erf((hi - mean) * inv) - std::erf((lo - mean) * inv));
  const double c = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi) * mass);
  Prior p;
  p.density = [=](double s) {
    const double z = (s - mean) / sd;
    return c * std::exp(-0.5 * z * z);
  };
  p.support = {lo, hi};
  p.majorant_A = c;
  p.majorant_b = 1.0;
  p.features = {mean - 4 * sd, mean - sd, mean, mean + sd, mean + 4 * sd};
  return p;
}

Loss Loss::quadratic() { return {[](double u) { return u * u; }, 1.0, 2.0, "quadratic"}; }

Loss Loss::absolute() { return {[](double u) { return std::abs(u); }, 1.0, 1.0, "absolute"}; }

Posterior::Posterior(const SufficientStats& stats, const Prior& prior)
    : stats_(stats), prior_(prior) {
  const auto& S = prior_.support;
  if (!std::isfinite(S.lo) || !std::isfinite(S.hi) || !(S.lo < S.hi)) {
    throw Error(ErrorCode::InvalidArgument, "posterior needs a bounded support");
  }
  if (!(stats.B >= 0.0)) throw Error(ErrorCode::InvalidArgument, "B must be >= 0");
  double mode;
  double sd;
  if (stats.B > 0.0) {
    mode = stats.A / stats.B;
    sd = 1.0 / std::sqrt(stats.B);
  } else {
    mode = stats.A >= 0.0 ? S.hi : S.lo;
    sd = S.width();
  }
  const double peak = std::clamp(mode, S.lo, S.hi);
  shift_ = log_likelihood_ratio(stats_, peak, 0.0);
  for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
    const double v = mode + k * sd;
    if (v > S.lo && v < S.hi) breaks_.push_back(v);
  }
  for (double f : prior_.features) {
    if (f > S.lo && f < S.hi) breaks_.push_back(f);
  }
  std::sort(breaks_.begin(), breaks_.end());

  auto integrand = [&](double s) { return std::exp(log_unnormalized(s)); };
  QuadratureOptions opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-300;
  double mass = 0.0;
  try {
    mass = adaptive_quad_split(integrand, S.lo, S.hi, breaks_, opt).value;
  } catch (const QuadratureError& e) {
    mass = e.best_estimate();
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw Error(ErrorCode::PosteriorDegenerate,
                "prior vanishes wherever the likelihood is non-negligible");
  }
  log_norm_ = std::log(mass);
}

double Posterior::log_unnormalized(double s) const {
  const double p = prior_.density(s);
  if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(p) + log_likelihood_ratio(stats_, s, 0.0) - shift_;
}

double Posterior::density(double s) const {
  if (s < prior_.support.lo || s > prior_.support.hi) return 0.0;
  return std::exp(log_unnormalized(s) - log_norm_);
}

double Posterior::mean() const {
  auto f = [&](double s) { return s * density(s); };
  QuadratureOptions opt;
  opt.rel_tol = 1e-11;
  opt.abs_tol = 1e-14;
  return adaptive_quad_split(f, prior_.support.lo, prior_.support.hi, breaks_, opt).value;
}

PosteriorCurve posterior_density(const SufficientStats& stats, const Prior& prior,
                                 std::size_t grid_size) {
  if (grid_size < 2) throw Error(ErrorCode::InvalidArgument, "grid_size must be >= 2");
  const Posterior post(stats, prior);
  PosteriorCurve c;
  c.s.resize(grid_size);
  c.density.resize(grid_size);
  const double lo = prior.support.lo;
  const double step = prior.support.width() / static_cast<double>(grid_size - 1);
  for (std::size_t i = 0; i < grid_size; ++i) {
    c.s[i] = i + 1 == grid_size ? prior.support.hi : lo + step * static_cast<double>(i);
    c.density[i] = post.density(c.s[i]);
  }
  return c;
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

}  // namespace

EstimationResult bayes_estimator(const SufficientStats& stats, const Prior& prior,
                                 const Loss& loss, double T) {
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be > 0");
  const auto lrep = validate_loss(loss, 10.0, 0.5, linspace(-50.0, 50.0, 2001));
  if (!lrep.pass()) throw Error(ErrorCode::ValidationFailed, "loss is not in the admissible class");
  const auto prep = validate_prior(prior, linspace(prior.support.lo, prior.support.hi, 1001));
  if (!prep.pass()) throw Error(ErrorCode::ValidationFailed, "prior is not in the admissible class");

  const Posterior post(stats, prior);
  const auto& S = prior.support;
  std::vector<double> cuts = post.breakpoints();
  for (double v : linspace(S.lo, S.hi, 65)) cuts.push_back(v);
  const RealFunction probes[] = {[&](double s) { return post.density(s); }};
  const PanelMesh mesh(S.lo, S.hi, cuts, probes);
  const auto nodes = mesh.nodes();
  const auto weights = mesh.weights();
  std::vector<double> wpi(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) wpi[i] = weights[i] * post.density(nodes[i]);

  const double rt = std::sqrt(T);
  auto risk = [&](double v) {
    NeumaierSum acc;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc.add(wpi[i] * loss.fn(rt * (v - nodes[i])));
    return acc.value();
  };

  // Near the minimum the loss kink at s = v must be a panel edge, or the
  // minimizer snaps to the node set; refine with adaptive quadrature there.
  QuadratureOptions fine;
  fine.rel_tol = 1e-12;
  fine.abs_tol = 0.0;
  auto exact_risk = [&](double v) {
    std::vector<double> pts = post.breakpoints();
    pts.push_back(v);
    auto g = [&](double s) { return post.density(s) * loss.fn(rt * (v - s)); };
    try {
      return adaptive_quad_split(g, S.lo, S.hi, pts, fine).value;
    } catch (const QuadratureError& e) {
      return e.best_estimate();
    }
  };

  const auto grid = linspace(S.lo, S.hi, 512);
  std::size_t best = 0;
  double best_r = risk(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double r = risk(grid[i]);
    if (r < best_r) {
      best_r = r;
      best = i;
    }
  }
  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  constexpr double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = exact_risk(c);
  double fd = exact_risk(d);
  const double tol = 1e-8 * S.width();
  while (hi - lo > tol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = exact_risk(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = exact_risk(d);
    }
  }
  double estimate = 0.5 * (lo + hi);
  if (exact_risk(grid[best]) < exact_risk(estimate)) estimate = grid[best];
  return {estimate, EstimatorKind::Bayes, stats, T};
}

LossReport validate_loss(const Loss& loss, double H, double gamma, const std::vector<double>& grid) {
  LossReport rep;
  const auto& l = loss.fn;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };

  bool even = true;
  bool nonneg = true;
  bool nontrivial = false;
  for (double u : grid) {
    const double v = l(u);
    if (!(v >= 0.0)) nonneg = false;
    if (!close(v, l(-u))) even = false;
    if (v > 0.0) nontrivial = true;
  }
  const double at0 = l(0.0);
  const bool continuous0 = std::abs(at0) <= 1e-12 && std::abs(l(1e-8)) <= 1e-4 && std::abs(l(-1e-8)) <= 1e-4;
  rep.a1 = even && nonneg && nontrivial && continuous0;

  std::vector<double> pos;
  for (double u : grid) {
    if (u >= 0.0) pos.push_back(u);
  }
  std::sort(pos.begin(), pos.end());
  rep.a2 = true;
  for (std::size_t i = 1; i < pos.size(); ++i) {
    const double a = l(pos[i - 1]);
    const double b = l(pos[i]);
    if (b < a - 1e-12 * std::max(1.0, std::abs(a))) rep.a2 = false;
  }

  rep.a3 = true;
  for (double u : grid) {
    if (!(std::abs(l(u)) <= loss.majorant_A * (1.0 + std::pow(std::abs(u), loss.majorant_b)))) {
      rep.a3 = false;
    }
  }

  double inf_out = std::numeric_limits<double>::infinity();
  double sup_in = -std::numeric_limits<double>::infinity();
  const double inner = std::pow(H, gamma);
  for (double u : grid) {
    const double v = l(u);
    if (std::abs(u) > H) inf_out = std::min(inf_out, v);
    if (std::abs(u) <= inner) sup_in = std::max(sup_in, v);
  }
  rep.a4 = !std::isfinite(inf_out) || !std::isfinite(sup_in) || inf_out - sup_in >= 0.0;
  return rep;
}

PriorReport validate_prior(const Prior& prior, const std::vector<double>& grid) {
  PriorReport rep;
  const auto& p = prior.density;
  std::vector<double> xs = grid;
  std::sort(xs.begin(), xs.end());

  rep.nonnegative = true;
  rep.majorant = true;
  for (double x : xs) {
    const double v = p(x);
    if (!(v >= 0.0)) rep.nonnegative = false;
    if (!(v <= prior.majorant_A * (1.0 + std::pow(std::abs(x), prior.majorant_b)))) {
      rep.majorant = false;
    }
  }

  // A continuous density's largest neighbour jump shrinks under refinement;
  // a jump discontinuity keeps it.
  double coarse = 0.0;
  double fine = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double a = p(xs[i - 1]);
    const double b = p(xs[i]);
    const double m = p(0.5 * (xs[i - 1] + xs[i]));
    coarse = std::max(coarse, std::abs(b - a));
    fine = std::max({fine, std::abs(m - a), std::abs(b - m)});
  }
  rep.continuous = coarse <= 1e-9 || fine <= 0.75 * coarse;

  try {
    QuadratureOptions opt;
    opt.rel_tol = 1e-11;
    opt.abs_tol = 1e-13;
    rep.mass = adaptive_quad_split(p, prior.support.lo, prior.support.hi, prior.features, opt).value;
  } catch (const QuadratureError& e) {
    rep.mass = e.best_estimate();
  }
  rep.unit_mass = std::abs(rep.mass - 1.0) <= 1e-8;
  return rep;
}

// ---------------------------------------------------------------------------
// LAN

LanStatistic lan_statistic(const SamplePath& path, const WFParams& params) {
  params.validate();
  LanStatistic out;
  out.mutation_valid = params.lan_regime();
  const std::size_t n = path.steps();
  const double dt = path.dt;
  NeumaierSum acc[3];
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = path.values[i - 1];
    const double dx = path.values[i] - x;
    const double drift = 0.5 * (params.s * x * (1.0 - x) - params.theta2 * x + params.theta1 * (1.0 - x));
    const double innov = dx - drift * dt;
    const double xc = clamp_to_interior(x, dt);
    acc[0].add(0.5 * innov);
    acc[1].add(innov / (2.0 * xc));
    acc[2].add(-innov / (2.0 * (1.0 - xc)));
  }
  const double scale = 1.0 / std::sqrt(path.T);
  for (int k = 0; k < 3; ++k) out.delta[k] = scale * acc[k].value();
  if (!out.mutation_valid) {
    out.delta[1] = out.delta[2] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

double lan_remainder(const SamplePath& path, const WFParams& params, const std::array<double, 3>& u) {
  return lan_remainder(path, params, u, fisher_matrix(params));
}

double lan_remainder(const SamplePath& path, const WFParams& params, const std::array<double, 3>& u,
                     const FisherMatrix& info) {
  params.validate();
  const bool mutation = u[1] != 0.0 || u[2] != 0.0;
  if (mutation && !params.lan_regime()) {
    throw Error(ErrorCode::LanRegimeRequired, "mutation directions need theta1, theta2 >= 1");
  }
  if (u[0] == 0.0 && !mutation) return 0.0;

  double quad = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (u[i] == 0.0 || u[j] == 0.0) continue;
      quad += info(i, j) * u[i] * u[j];
    }
  }
  if (!std::isfinite(quad)) {
    throw Error(ErrorCode::MomentInfinite, "information is infinite in the requested direction");
  }

  const std::size_t n = path.steps();
  const double dt = path.dt;
  NeumaierSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = path.values[i];
    if (!mutation) {
      acc.add(0.25 * u[0] * u[0] * x * (1.0 - x));
      continue;
    }
    const double xc = clamp_to_interior(x, dt);
    const double v = xc * (1.0 - xc);
    const double inner = 0.5 * (u[0] * v + u[1] * (1.0 - xc) - u[2] * xc);
    acc.add(inner * inner / v);
  }
  const double integral = dt * acc.value();

  double nu = 0.0;
  if (path.start == StartSpec::Kind::Stationary) {
    const double rt = std::sqrt(path.T);
    const WFParams moved{params.s + u[0] / rt, params.theta1 + u[1] / rt, params.theta2 + u[2] / rt};
    moved.validate();
    const double x0 = path.values.front();
    auto log_f = [&](const WFParams& p) {
      return p.s * x0 + (p.theta1 - 1.0) * std::log(x0) + (p.theta2 - 1.0) * std::log1p(-x0) -
             log_wf_normalizer(p.s, p.theta1, p.theta2);
    };
    nu = log_f(moved) - log_f(params);
  }
  return nu + 0.5 * quad - integral / (2.0 * path.T);
}

}  // namespace wflab
