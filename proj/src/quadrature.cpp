#include "wflab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <queue>
#include <sstream>

#include "wflab/error.hpp"

namespace wflab {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Kronrod abscissae/weights; odd indices are the embedded Gauss nodes.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool left_end;
  bool right_end;

  bool operator<(const Segment& other) const { return error < other.error; }
};

// Keep nodes strictly inside (a, b) even when the panel is a few ulp wide.
double inside(double x, double a, double b) {
  if (x <= a) return std::nextafter(a, b);
  if (x >= b) return std::nextafter(b, a);
  return x;
}

Segment gk15(const RealFunction& f, double a, double b, bool left_end, bool right_end) {
  const double centr = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);
  const double dhlgth = std::abs(hlgth);

  double fv1[7];
  double fv2[7];
  const double fc = f(centr);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  for (int j = 0; j < 7; ++j) {
    const double absc = hlgth * kXgk[j];
    const double f1 = f(inside(centr - absc, a, b));
    const double f2 = f(inside(centr + absc, a, b));
    fv1[j] = f1;
    fv2[j] = f2;
    const double fsum = f1 + f2;
    resk += kWgk[j] * fsum;
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  const double reskh = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }
  resabs *= dhlgth;
  resasc *= dhlgth;
  double err = std::abs((resk - resg) * hlgth);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    err = std::max(50.0 * kEps * resabs, err);
  }
  return {a, b, resk * hlgth, err, left_end, right_end};
}

bool too_narrow(const Segment& s) {
  const double scale = std::max(std::abs(s.a), std::abs(s.b));
  return (s.b - s.a) <= 1024.0 * kEps * std::max(scale, std::numeric_limits<double>::min());
}

// Width below which an endpoint panel is no longer refined: within it the
// distance to a nonzero endpoint e is resolved by x only to eps |e|.
double tail_width(double e) { return 1e7 * kEps * std::abs(e); }

// Replaces an endpoint panel of width w by the integral of a power law
// c |x - e|^alpha fitted on geometric panels out to 625 w. Successive fits
// are combined by Richardson extrapolation against the O(|x - e|) correction;
// their disagreement plus the rounding of x - e is the error. Returns false when the integrand does not
// look like an integrable power law there, or the fit is no better than the
// panel's own error.
bool power_law_tail(const RealFunction& f, double a, double b, Segment& seg) {
  const bool at_right = seg.right_end;
  const double e = at_right ? b : a;
  const double w = seg.b - seg.a;
  const double W = 625.0 * w;
  if (W >= 0.5 * (b - a)) return false;
  double J[4];
  double width = W;
  for (double& j : J) {
    const double lo = at_right ? e - width : e + 0.2 * width;
    const double hi = at_right ? e - 0.2 * width : e + width;
    j = gk15(f, lo, hi, false, false).value;
    width *= 0.2;
  }
  double t[3];
  double expo = 0.0;  // alpha + 1
  double reach = W;
  for (int k = 0; k < 3; ++k) {
    const double r = J[k + 1] / J[k];
    if (!(r > 0.0 && r < 1.0)) return false;
    expo = -std::log(r) / std::log(5.0);
    t[k] = J[k] * std::pow(w / reach, expo) / (1.0 - r);
    reach *= 0.2;
  }
  const double r01 = (5.0 * t[1] - t[0]) / 4.0;
  const double r12 = (5.0 * t[2] - t[1]) / 4.0;
  if (!std::isfinite(r01) || !std::isfinite(r12)) return false;
  // Rounding of x - e on the innermost panel perturbs the fitted exponent.
  const double noise = kEps * std::abs(e) / w * std::abs(expo - 1.0) * (1.0 + std::log(625.0));
  const double err = std::abs(r12 - r01) + (noise + 50.0 * kEps) * std::abs(r12);
  if (!(err < seg.error)) return false;
  seg.value = r12;
  seg.error = err;
  return true;
}

struct RawOutcome {
  QuadratureResult result;
  bool converged = false;
  bool finite = true;
};

RawOutcome integrate_raw(const RealFunction& f, double a, double b,
                         const QuadratureOptions& opt) {
  RawOutcome out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  if (!(a < b)) {
    auto flipped = integrate_raw(f, b, a, opt);
    flipped.result.value = -flipped.result.value;
    return flipped;
  }

  std::priority_queue<Segment> heap;
  std::vector<Segment> frozen;
  std::size_t evals = 15;
  Segment whole = gk15(f, a, b, true, true);
  double total = whole.value;
  double total_err = whole.error;
  heap.push(whole);

  auto recompute = [&]() {
    std::vector<double> vals;
    std::vector<double> errs;
    auto copy = heap;
    while (!copy.empty()) {
      vals.push_back(copy.top().value);
      errs.push_back(copy.top().error);
      copy.pop();
    }
    for (const auto& s : frozen) {
      vals.push_back(s.value);
      errs.push_back(s.error);
    }
    total = compensated_sum(vals);
    total_err = compensated_sum(errs);
  };

  std::optional<Segment> tail_candidate[2];  // left, right endpoint
  std::size_t iterations = 0;
  while (true) {
    if (!std::isfinite(total) || !std::isfinite(total_err)) {
      out.finite = false;
      break;
    }
    if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
      recompute();
      if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        out.converged = true;
        break;
      }
    }
    if (heap.empty() || evals + 30 > opt.max_evaluations) break;

    Segment worst = heap.top();
    heap.pop();
    const bool one_end = worst.left_end != worst.right_end;
    if (one_end && worst.b - worst.a <= tail_width(worst.right_end ? b : a)) {
      evals += 60;
      Segment trial = worst;
      if (power_law_tail(f, a, b, trial)) {
        if (trial.error <= 0.5 * std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
          frozen.push_back(trial);
          recompute();
          continue;
        }
        // Refinement may still do better; keep the fit in case it does not.
        auto& best = tail_candidate[worst.right_end ? 1 : 0];
        if (!best || trial.error < best->error) best = trial;
      }
    }
    if (too_narrow(worst)) {
      const auto& best = tail_candidate[worst.right_end ? 1 : 0];
      if (one_end && best) {
        const auto inside = [&](const Segment& t) { return t.a >= best->a && t.b <= best->b; };
        std::vector<Segment> kept;
        std::vector<Segment> inner;
        double replaced_err = worst.error;
        while (!heap.empty()) {
          const Segment t = heap.top();
          heap.pop();
          if (inside(t)) {
            replaced_err += t.error;
            inner.push_back(t);
          } else {
            kept.push_back(t);
          }
        }
        std::vector<Segment> kept_frozen;
        for (const auto& t : frozen) {
          if (inside(t)) {
            replaced_err += t.error;
          } else {
            kept_frozen.push_back(t);
          }
        }
        if (best->error < replaced_err) {
          for (const auto& t : kept) heap.push(t);
          frozen = std::move(kept_frozen);
          frozen.push_back(*best);
          recompute();
          continue;
        }
        for (const auto& t : kept) heap.push(t);
        for (const auto& t : inner) heap.push(t);
      }
      frozen.push_back(worst);
      recompute();
      continue;
    }
    double mid;
    if (worst.left_end && !worst.right_end) {
      mid = worst.a + 0.2 * (worst.b - worst.a);
    } else if (worst.right_end && !worst.left_end) {
      mid = worst.b - 0.2 * (worst.b - worst.a);
    } else {
      mid = 0.5 * (worst.a + worst.b);
    }
    Segment left = gk15(f, worst.a, mid, worst.left_end, false);
    Segment right = gk15(f, mid, worst.b, false, worst.right_end);
    evals += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    if (++iterations % 64 == 0) recompute();
  }
  if (out.finite) recompute();
  out.result = {total, total_err, evals};
  if (!std::isfinite(total)) out.finite = false;
  return out;
}

std::string describe(double a, double b, const QuadratureResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << "no convergence on [" << a << ", " << b << "] after " << r.evaluations
     << " evaluations (estimate " << r.value << ", error " << r.abs_error_estimate << ")";
  return os.str();
}

}  // namespace

double compensated_sum(std::span<const double> values) {
  NeumaierSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

QuadratureResult adaptive_quad(const RealFunction& f, double a, double b, double rel_tol,
                               double abs_tol) {
  QuadratureOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  return adaptive_quad(f, a, b, opt);
}

QuadratureResult adaptive_quad(const RealFunction& f, double a, double b,
                               const QuadratureOptions& options) {
  auto raw = integrate_raw(f, a, b, options);
  if (!raw.converged) {
    throw QuadratureError(describe(a, b, raw.result), raw.result.value,
                          raw.result.abs_error_estimate);
  }
  return raw.result;
}

bool grows_without_bound(std::span<const double> partial_sums) {
  if (partial_sums.size() < 4) return false;
  const std::size_t n = partial_sums.size();
  for (std::size_t j = n - 3; j < n; ++j) {
    const double prev = partial_sums[j - 1];
    const double cur = partial_sums[j];
    if (!std::isfinite(cur)) continue;
    if (!(std::abs(cur - prev) > 0.1 * std::abs(prev))) return false;
  }
  return true;
}

CheckedIntegral integrate_checked(const RealFunction& f, double a, double b,
                                  const QuadratureOptions& options) {
  auto raw = integrate_raw(f, a, b, options);
  if (raw.converged) return {IntegralStatus::Converged, raw.result};

  const double len = b - a;
  std::vector<double> partials;
  for (double level : kTruncationLevels) {
    const double d = len * level;
    auto part = integrate_raw(f, a + d, b - d, options);
    partials.push_back(part.result.value);
  }
  if (!raw.finite || grows_without_bound(partials)) {
    QuadratureResult r = raw.result;
    r.value = std::numeric_limits<double>::infinity();
    return {IntegralStatus::Divergent, r};
  }
  return {IntegralStatus::BudgetExceeded, raw.result};
}

QuadratureResult adaptive_quad_split(const RealFunction& f, double a, double b,
                                     std::span<const double> points,
                                     const QuadratureOptions& options) {
  std::vector<double> cuts{a};
  for (double p : points) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> vals;
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto piece = adaptive_quad(f, cuts[i], cuts[i + 1], options);
    vals.push_back(piece.value);
    total.abs_error_estimate += piece.abs_error_estimate;
    total.evaluations += piece.evaluations;
  }
  total.value = compensated_sum(vals);
  return total;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre

namespace {

// P_0..P_{n} at x.
void legendre_all(int n, double x, std::vector<double>& p) {
  p.assign(n + 1, 0.0);
  p[0] = 1.0;
  if (n >= 1) p[1] = x;
  for (int k = 1; k < n; ++k) {
    p[k + 1] = ((2.0 * k + 1.0) * x * p[k] - k * p[k - 1]) / (k + 1.0);
  }
}

}  // namespace

GaussLegendre::GaussLegendre(int points) {
  if (points < 2) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre needs >= 2 points");
  const int n = points;
  nodes_.resize(n);
  weights_.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 1; k < n; ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes_[n - 1 - i] = x;
    weights_[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }

  // Interpolant coefficients c_k = (2k+1)/2 sum_i w_i P_k(t_i) f_i; the
  // antiderivative of P_k from -1 is (P_{k+1} - P_{k-1})/(2k+1), P_0 -> t+1.
  std::vector<double> pi;
  std::vector<double> pj;
  cumulative_.assign(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<std::vector<double>> p_at_nodes(n);
  for (int i = 0; i < n; ++i) legendre_all(n, nodes_[i], p_at_nodes[i]);
  for (int j = 0; j < n; ++j) {
    const auto& pt = p_at_nodes[j];
    std::vector<double> integ(n);
    integ[0] = nodes_[j] + 1.0;
    for (int k = 1; k < n; ++k) integ[k] = (pt[k + 1] - pt[k - 1]) / (2.0 * k + 1.0);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) {
        acc += (2.0 * k + 1.0) / 2.0 * p_at_nodes[i][k] * integ[k];
      }
      cumulative_[static_cast<std::size_t>(j) * n + i] = weights_[i] * acc;
    }
  }
}

std::vector<double> GaussLegendre::legendre_coefficients(std::span<const double> values) const {
  const int n = size();
  std::vector<double> c(n, 0.0);
  std::vector<double> p;
  for (int i = 0; i < n; ++i) {
    legendre_all(n - 1, nodes_[i], p);
    for (int k = 0; k < n; ++k) c[k] += weights_[i] * p[k] * values[i];
  }
  for (int k = 0; k < n; ++k) c[k] *= (2.0 * k + 1.0) / 2.0;
  return c;
}

const GaussLegendre& gauss_legendre(int points) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[points];
  if (!slot) slot = std::make_unique<GaussLegendre>(points);
  return *slot;
}

// ---------------------------------------------------------------------------
// PanelMesh

PanelMesh::PanelMesh(double a, double b, std::span<const double> breakpoints,
                     std::span<const RealFunction> probes, const MeshOptions& options)
    : a_(a), b_(b), rule_(&gauss_legendre(options.order)) {
  if (!(a < b)) throw Error(ErrorCode::InvalidArgument, "mesh interval must satisfy a < b");
  std::vector<double> cuts{a};
  for (double p : breakpoints) {
    if (p > a && p < b) cuts.push_back(p);
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const int n = rule_->size();
  std::vector<double> samples(n);
  auto smooth = [&](const Panel& p) {
    for (const auto& probe : probes) {
      double scale = 0.0;
      for (int i = 0; i < n; ++i) {
        const double x = p.lo + 0.5 * (p.hi - p.lo) * (rule_->nodes()[i] + 1.0);
        samples[i] = probe(x);
        if (!std::isfinite(samples[i])) return false;
        scale = std::max(scale, std::abs(samples[i]));
      }
      if (scale == 0.0) continue;
      const auto c = rule_->legendre_coefficients(samples);
      const double tail = std::max({std::abs(c[n - 1]), std::abs(c[n - 2]), std::abs(c[n - 3])});
      if (tail > options.smoothness_tol * scale) return false;
    }
    return true;
  };
  auto at_floor = [&](const Panel& p) {
    const double w = p.hi - p.lo;
    const double scale = std::max(std::abs(p.lo), std::abs(p.hi));
    if (w <= 1024.0 * kEps * scale) return true;
    // A power law at an endpoint never looks resolved; stop at the resolution
    // of the coordinates there.
    if ((p.lo == a || p.hi == b) && w <= 64.0 * kEps * std::max({std::abs(a), std::abs(b), b - a})) {
      return true;
    }
    if (p.lo == a && w <= options.min_width_left) return true;
    if (p.hi == b && w <= options.min_width_right) return true;
    return false;
  };

  std::vector<Panel> work;
  for (std::size_t i = cuts.size() - 1; i > 0; --i) work.push_back({cuts[i - 1], cuts[i]});
  while (!work.empty()) {
    Panel p = work.back();
    work.pop_back();
    if (panels_.size() + work.size() >= options.max_panels) {
      resolved_ = false;
      panels_.push_back(p);
      continue;
    }
    if (at_floor(p) || smooth(p)) {
      panels_.push_back(p);
      continue;
    }
    const double w = p.hi - p.lo;
    double mid;
    if (p.lo == a && p.hi != b) {
      mid = p.lo + 0.2 * w;
    } else if (p.hi == b && p.lo != a) {
      mid = p.hi - 0.2 * w;
    } else {
      mid = p.lo + 0.5 * w;
    }
    work.push_back({mid, p.hi});
    work.push_back({p.lo, mid});
  }
  std::sort(panels_.begin(), panels_.end(),
            [](const Panel& x, const Panel& y) { return x.lo < y.lo; });
}

double PanelMesh::node(std::size_t panel, int i) const {
  const auto& p = panels_[panel];
  return p.lo + 0.5 * (p.hi - p.lo) * (rule_->nodes()[i] + 1.0);
}

double PanelMesh::weight(std::size_t panel, int i) const {
  const auto& p = panels_[panel];
  return 0.5 * (p.hi - p.lo) * rule_->weights()[i];
}

std::vector<double> PanelMesh::nodes() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t k = 0; k < panels_.size(); ++k) {
    for (int i = 0; i < order(); ++i) out.push_back(node(k, i));
  }
  return out;
}

std::vector<double> PanelMesh::weights() const {
  std::vector<double> out;
  out.reserve(size());
  for (std::size_t k = 0; k < panels_.size(); ++k) {
    for (int i = 0; i < order(); ++i) out.push_back(weight(k, i));
  }
  return out;
}

double PanelMesh::integrate(std::span<const double> values) const {
  std::vector<double> terms;
  terms.reserve(values.size());
  const auto w = weights();
  for (std::size_t i = 0; i < values.size() && i < w.size(); ++i) terms.push_back(w[i] * values[i]);
  return compensated_sum(terms);
}

std::size_t PanelMesh::panel_starting_at(double x) const {
  auto it = std::lower_bound(panels_.begin(), panels_.end(), x,
                             [](const Panel& p, double v) { return p.lo < v; });
  if (it == panels_.end() || it->lo != x) {
    throw Error(ErrorCode::InvalidArgument, "point is not a mesh breakpoint");
  }
  return static_cast<std::size_t>(it - panels_.begin());
}

}  // namespace wflab
