#include "wflab/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "wflab/error.hpp"

namespace wflab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_open(const Interval& iv, double x, const char* what) {
  if (!(x > iv.l && x < iv.r)) {
    std::ostringstream os;
    os << what << " = " << x << " outside (" << iv.l << ", " << iv.r << ")";
    throw Error(ErrorCode::StateOutOfRange, os.str());
  }
}

void check_closed(const Interval& iv, double x, const char* what) {
  if (!(x >= iv.l && x <= iv.r)) {
    std::ostringstream os;
    os << what << " = " << x << " outside [" << iv.l << ", " << iv.r << "]";
    throw Error(ErrorCode::StateOutOfRange, os.str());
  }
}

double min_edge_width(const Interval& iv) {
  return 64.0 * std::numeric_limits<double>::epsilon() *
         std::max({std::abs(iv.l), std::abs(iv.r), iv.r - iv.l});
}

}  // namespace

// ---------------------------------------------------------------------------
// DiffusionSpec

void DiffusionSpec::validate() const {
  if (!(interval.l < interval.r) || !std::isfinite(interval.l) || !std::isfinite(interval.r)) {
    throw Error(ErrorCode::InvalidArgument, "interval must be finite with l < r");
  }
  if (!diffusion_sq) throw Error(ErrorCode::InvalidArgument, "diffusion_sq is required");
  if (!drift && !log_scale_integrand && !log_scale) {
    throw Error(ErrorCode::InvalidArgument, "drift or log-scale data is required");
  }
}

double DiffusionSpec::two_mu_over_sigma_sq(const ParamVector& p, double x) const {
  if (log_scale_integrand) return log_scale_integrand(p, x);
  return 2.0 * drift(p, x) / diffusion_sq(x);
}

double DiffusionSpec::psi(const ParamVector& p, double x) const {
  if (log_scale) return log_scale(p, x);
  const double mid = 0.5 * (interval.l + interval.r);
  if (x == mid) return 0.0;
  QuadratureOptions opt;
  opt = opt.relaxed(0.1);
  auto integrand = [&](double y) { return two_mu_over_sigma_sq(p, y); };
  // Near a boundary e the quadrature is limited by the rounding of x - e.
  // Within `edge` of it the integrand is replaced by k / (y - e) + c, fitted
  // at distances edge and 2 edge, and integrated in closed form.
  const double edge = 1e-6 * (interval.r - interval.l);
  for (double e : {interval.l, interval.r}) {
    const double d = x - e;
    if (std::abs(d) >= edge) continue;
    const double d1 = e == interval.l ? edge : -edge;
    const double g1 = integrand(e + d1);
    const double g2 = integrand(e + 2.0 * d1);
    const double k = (g1 - g2) / (1.0 / d1 - 0.5 / d1);
    const double c = g1 - k / d1;
    return adaptive_quad(integrand, mid, e + d1, opt).value + k * std::log(d / d1) + c * (d - d1);
  }
  return adaptive_quad(integrand, mid, x, opt).value;
}

double DiffusionSpec::log_speed(const ParamVector& p, double x) const {
  return std::numbers::ln2 - std::log(diffusion_sq(x)) + psi(p, x);
}

// ---------------------------------------------------------------------------
// Invariant law

InvariantLaw::InvariantLaw(DiffusionSpec spec, ParamVector params, const QuadratureOptions& options)
    : spec_(std::move(spec)), params_(std::move(params)), options_(options) {
  spec_.validate();
  const auto& iv = spec_.interval;
  const double shift = spec_.log_speed(params_, 0.5 * (iv.l + iv.r));
  auto integrand = [&](double x) { return std::exp(spec_.log_speed(params_, x) - shift); };
  auto res = integrate_checked(integrand, iv.l, iv.r, options_);
  if (res.status == IntegralStatus::Divergent) {
    throw Error(ErrorCode::NotPositiveRecurrent, "speed measure has infinite mass");
  }
  if (res.status == IntegralStatus::BudgetExceeded) {
    throw QuadratureError("normalizer did not converge", res.result.value,
                          res.result.abs_error_estimate);
  }
  log_normalizer_ = shift + std::log(res.result.value);
}

double InvariantLaw::log_density(double x) const {
  check_open(spec_.interval, x, "x");
  return spec_.log_speed(params_, x) - log_normalizer_;
}

double InvariantLaw::density(double x) const { return std::exp(log_density(x)); }

double InvariantLaw::expectation(const RealFunction& h) const {
  auto integrand = [&](double x) {
    return h(x) * std::exp(spec_.log_speed(params_, x) - log_normalizer_);
  };
  auto res = integrate_checked(integrand, spec_.interval.l, spec_.interval.r, options_);
  if (res.status == IntegralStatus::Divergent) {
    throw Error(ErrorCode::MomentInfinite, "expectation diverges at a boundary");
  }
  if (res.status == IntegralStatus::BudgetExceeded) {
    throw QuadratureError("expectation did not converge", res.result.value,
                          res.result.abs_error_estimate);
  }
  return res.result.value;
}

double invariant_density(const DiffusionSpec& spec, const ParamVector& params, double x) {
  return InvariantLaw(spec, params).density(x);
}

// ---------------------------------------------------------------------------
// kappa integrals

namespace {

enum class Side { Left, Right };

double kappa(const DiffusionSpec& spec, const ParamVector& p, double a, double b, Side side,
             const QuadratureOptions& options) {
  spec.validate();
  const auto& iv = spec.interval;
  check_closed(iv, a, "a");
  check_closed(iv, b, "b");
  if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "kappa requires a < b");
  const auto inner_opt = options.relaxed();

  auto outer = [&](double xi) {
    const double psi_xi = spec.psi(p, xi);
    auto inner = [&](double eta) { return std::exp(spec.log_speed(p, eta) - psi_xi); };
    auto res = side == Side::Left ? integrate_checked(inner, iv.l, xi, inner_opt)
                                  : integrate_checked(inner, xi, iv.r, inner_opt);
    if (res.status == IntegralStatus::Divergent) {
      throw Error(ErrorCode::BoundaryNotAccessibleIntegrable,
                  "speed measure not integrable at the boundary");
    }
    if (res.status == IntegralStatus::BudgetExceeded) {
      throw QuadratureError("inner kappa integral did not converge", res.result.value,
                            res.result.abs_error_estimate);
    }
    return res.result.value;
  };
  return adaptive_quad(outer, a, b, options).value;
}

}  // namespace

double kappa_l(const DiffusionSpec& spec, const ParamVector& params, double a, double b,
               const QuadratureOptions& options) {
  return kappa(spec, params, a, b, Side::Left, options);
}

double kappa_r(const DiffusionSpec& spec, const ParamVector& params, double a, double b,
               const QuadratureOptions& options) {
  return kappa(spec, params, a, b, Side::Right, options);
}

// ---------------------------------------------------------------------------
// Hitting-time recursion
//
// Both branches are solved in "left" form. For x > b the problem is mirrored
// through y = l + r - x so that the boundary the inner integral reaches is
// always the lower end of the mesh.

namespace {

struct Branch {
  const DiffusionSpec* spec;
  const ParamVector* params;
  const RealFunction* h;
  double l;
  double r;
  bool mirrored;
  double target;  // b in branch coordinates

  // Near the mirrored end l + r - y rounds onto r; keep states inside.
  double to_state(double y) const {
    if (!mirrored) return y;
    const double x = l + r - y;
    return x < r ? x : std::nextafter(r, l);
  }
  double from_state(double x) const { return mirrored ? l + r - x : x; }
  double psi(double y) const { return spec->psi(*params, to_state(y)); }
  double log_speed(double y) const { return spec->log_speed(*params, to_state(y)); }
  double weight(double y) const { return (h && *h) ? (*h)(to_state(y)) : 1.0; }
};

struct BranchSolution {
  std::unique_ptr<PanelMesh> mesh;
  std::vector<double> node_log_speed;
  std::vector<std::vector<double>> U;     // U[n][node]
  std::vector<std::vector<double>> edge;  // edge[n][panel]: U_n at the panel's lower edge

  double at(int n, double y) const {
    if (y <= mesh->lower()) return edge[n][0];
    if (y >= mesh->upper()) return 0.0;
    return edge[n][mesh->panel_starting_at(y)];
  }
};

BranchSolution solve_branch(const Branch& br, double lower, std::span<const double> points,
                            int q) {
  BranchSolution sol;
  const Interval iv{br.l, br.r};
  std::vector<RealFunction> probes{
      [&](double y) { return std::exp(br.log_speed(y)) * br.weight(y); },
      [&](double y) { return std::exp(br.log_speed(y)); },
      [&](double y) { return std::exp(-br.psi(y)); },
  };
  MeshOptions mopt;
  mopt.min_width_left = min_edge_width(iv);
  sol.mesh = std::make_unique<PanelMesh>(lower, br.target, points, probes, mopt);
  const auto& mesh = *sol.mesh;
  const auto& rule = mesh.rule();
  const int p = mesh.order();
  const std::size_t K = mesh.panels().size();
  const std::size_t N = mesh.size();

  std::vector<double> node_psi(N);
  std::vector<double> node_h(N);
  sol.node_log_speed.resize(N);
  for (std::size_t k = 0; k < K; ++k) {
    for (int i = 0; i < p; ++i) {
      const double y = mesh.node(k, i);
      const std::size_t idx = k * p + i;
      node_psi[idx] = br.psi(y);
      sol.node_log_speed[idx] = br.log_speed(y);
      node_h[idx] = br.weight(y);
    }
  }
  std::vector<double> edge_psi(K + 1);
  for (std::size_t k = 0; k < K; ++k) edge_psi[k] = br.psi(mesh.panels()[k].lo);
  edge_psi[K] = br.psi(br.target);

  sol.U.assign(q + 1, std::vector<double>(N, 1.0));
  sol.edge.assign(q + 1, std::vector<double>(K + 1, 1.0));

  std::vector<double> mt(N);
  std::vector<double> panel_total(K);
  std::vector<double> g(p);
  for (int n = 1; n <= q; ++n) {
    const auto& prev = sol.U[n - 1];
    double carry = 0.0;  // int_lower^{lo_k} exp(L - psi(lo_k)) h U_{n-1}
    for (std::size_t k = 0; k < K; ++k) {
      const auto& pan = mesh.panels()[k];
      const double half = 0.5 * (pan.hi - pan.lo);
      const double ref = edge_psi[k + 1];
      const double carried = k == 0 ? 0.0 : carry * std::exp(edge_psi[k] - ref);
      double gsum = 0.0;
      for (int i = 0; i < p; ++i) {
        const std::size_t idx = k * p + i;
        g[i] = std::exp(sol.node_log_speed[idx] - ref) * node_h[idx] * prev[idx];
        gsum += rule.weights()[i] * g[i];
      }
      double tot = 0.0;
      for (int j = 0; j < p; ++j) {
        double inner = 0.0;
        for (int i = 0; i < p; ++i) inner += rule.cumulative(j, i) * g[i];
        const std::size_t idx = k * p + j;
        mt[idx] = std::exp(ref - node_psi[idx]) * (carried + half * inner);
        tot += rule.weights()[j] * mt[idx];
      }
      panel_total[k] = half * tot;
      carry = carried + half * gsum;
    }

    auto& U = sol.U[n];
    auto& edge = sol.edge[n];
    double acc = 0.0;
    edge[K] = 0.0;
    for (std::size_t k = K; k-- > 0;) {
      const auto& pan = mesh.panels()[k];
      const double half = 0.5 * (pan.hi - pan.lo);
      for (int j = 0; j < p; ++j) {
        double within = 0.0;
        for (int i = 0; i < p; ++i) within += rule.cumulative(j, i) * mt[k * p + i];
        U[k * p + j] = n * (acc + panel_total[k] - half * within);
      }
      acc += panel_total[k];
      edge[k] = n * acc;
    }
  }
  return sol;
}

template <class Functional>
MomentValue evaluate_with_truncation(const Branch& br, std::span<const double> points, int q,
                                     Functional&& functional) {
  const auto full = solve_branch(br, br.l, points, q);
  const double value = functional(full);
  if (!std::isfinite(value)) return {kInf, true};
  std::vector<double> partial;
  for (double level : kTruncationLevels) {
    const double lower = br.l + (br.target - br.l) * level;
    const auto sol = solve_branch(br, lower, points, q);
    partial.push_back(functional(sol));
  }
  if (grows_without_bound(partial)) return {kInf, true};
  return {value, false};
}

Branch make_branch(const DiffusionSpec& spec, const ParamVector& p, const RealFunction& h,
                   double x, double b) {
  Branch br{&spec, &p, &h, spec.interval.l, spec.interval.r, x > b, 0.0};
  br.target = br.from_state(b);
  return br;
}

}  // namespace

MomentValue hitting_moment_checked(const DiffusionSpec& spec, const ParamVector& params,
                                   double x, double b, int q, const RealFunction& h) {
  spec.validate();
  if (q < 0) throw Error(ErrorCode::InvalidArgument, "moment order must be >= 0");
  check_closed(spec.interval, x, "x");
  check_open(spec.interval, b, "b");
  if (q == 0) return {1.0, false};
  if (x == b) return {0.0, false};

  const Branch br = make_branch(spec, params, h, x, b);
  const double y = br.from_state(x);
  const double pts[] = {y};
  return evaluate_with_truncation(br, pts, q, [&](const BranchSolution& s) { return s.at(q, y); });
}

double hitting_moment(const DiffusionSpec& spec, const ParamVector& params, double x, double b,
                      int q, const RealFunction& h) {
  const auto m = hitting_moment_checked(spec, params, x, b, q, h);
  if (m.divergent) {
    std::ostringstream os;
    os << "order-" << q << " hitting moment diverges";
    throw Error(ErrorCode::MomentInfinite, os.str());
  }
  return m.value;
}

double regeneration_rate(const DiffusionSpec& spec, const ParamVector& params, double a,
                         double b) {
  if (!(a < b)) throw Error(ErrorCode::DegenerateCycle, "regeneration levels need a < b");
  const double up = hitting_moment(spec, params, a, b, 1);
  const double down = hitting_moment(spec, params, b, a, 1);
  return 1.0 / (up + down);
}

// ---------------------------------------------------------------------------
// Ergodicity checks

ErgodicityReport check_uniform_ergodicity(const DiffusionSpec& spec,
                                          const std::vector<ParamVector>& grid, double a,
                                          double b) {
  if (grid.empty()) throw Error(ErrorCode::EmptyParameterGrid, "parameter grid is empty");
  check_open(spec.interval, a, "a");
  check_open(spec.interval, b, "b");
  ErgodicityReport rep;
  rep.grid = grid;
  rep.kappa_l_min = kInf;
  rep.kappa_r_min = kInf;
  for (const auto& p : grid) {
    rep.kappa_l_min = std::min(rep.kappa_l_min, kappa_l(spec, p, a, b));
    rep.kappa_r_min = std::min(rep.kappa_r_min, kappa_r(spec, p, a, b));
  }
  rep.pass = rep.kappa_l_min > 0.0 && rep.kappa_r_min > 0.0;
  return rep;
}

ErgodicityReport check_unbounded_conditions(const DiffusionSpec& spec,
                                            const std::vector<ParamVector>& grid,
                                            const RealFunction& h, double b, double x,
                                            const InitialLaw& nu) {
  if (grid.empty()) throw Error(ErrorCode::EmptyParameterGrid, "parameter grid is empty");
  spec.validate();
  check_open(spec.interval, b, "b");
  check_open(spec.interval, x, "x");
  if (x == b) throw Error(ErrorCode::InvalidArgument, "x must differ from b");
  if (nu.kind == InitialLaw::Kind::PointMass) check_open(spec.interval, nu.x0, "nu.x0");

  ErgodicityReport rep;
  rep.grid = grid;
  rep.kappa_l_min = kInf;
  rep.kappa_r_min = kInf;
  std::array<double, 3> sup{0.0, 0.0, 0.0};

  for (const auto& p : grid) {
    rep.kappa_l_min = std::min(rep.kappa_l_min, kappa_l(spec, p, std::min(x, b), std::max(x, b)));
    rep.kappa_r_min = std::min(rep.kappa_r_min, kappa_r(spec, p, std::min(x, b), std::max(x, b)));

    const Branch br = make_branch(spec, p, h, x, b);
    const double y = br.from_state(x);
    const double pts[] = {y};
    const auto u1 = evaluate_with_truncation(br, pts, 1,
                                             [&](const BranchSolution& s) { return s.at(1, y); });
    const auto u2 = evaluate_with_truncation(
        br, pts, 2, [&](const BranchSolution& s) { return 0.5 * s.at(2, y); });
    sup[0] = std::max(sup[0], u1.divergent ? kInf : u1.value);
    sup[1] = std::max(sup[1], u2.divergent ? kInf : u2.value);

    double u3 = 0.0;
    if (nu.kind == InitialLaw::Kind::PointMass) {
      if (nu.x0 != b) {
        const Branch bn = make_branch(spec, p, h, nu.x0, b);
        const double yn = bn.from_state(nu.x0);
        const double pn[] = {yn};
        const auto v = evaluate_with_truncation(
            bn, pn, 1, [&](const BranchSolution& s) { return s.at(1, yn); });
        u3 = v.divergent ? kInf : v.value;
      }
    } else {
      const InvariantLaw law(spec, p);
      const double log_g = law.log_normalizer();
      for (bool right : {false, true}) {
        const double probe_x = right ? spec.interval.r : spec.interval.l;
        const Branch bs = make_branch(spec, p, h, probe_x, b);
        const auto v = evaluate_with_truncation(bs, {}, 1, [&](const BranchSolution& s) {
          const auto& mesh = *s.mesh;
          std::vector<double> vals(mesh.size());
          for (std::size_t i = 0; i < vals.size(); ++i) {
            vals[i] = s.U[1][i] * std::exp(s.node_log_speed[i] - log_g);
          }
          return mesh.integrate(vals);
        });
        u3 += v.divergent ? kInf : v.value;
      }
    }
    sup[2] = std::max(sup[2], u3);
  }

  rep.unbounded_suprema = sup;
  for (int i = 0; i < 3; ++i) rep.condition_pass[i] = std::isfinite(sup[i]);
  rep.pass = rep.kappa_l_min > 0.0 && rep.kappa_r_min > 0.0 && rep.condition_pass[0] &&
             rep.condition_pass[1] && rep.condition_pass[2];
  return rep;
}

}  // namespace wflab
