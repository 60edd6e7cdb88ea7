#include "monolab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "monolab/parallel.hpp"

namespace monolab {

namespace {

double panel_scale(const QuadratureConfig& cfg) { return std::ldexp(1.0, -cfg.level); }

// Calls visit(x, w) for every node of the tensor rule (same rule on each axis),
// restricted to |x| < cut. Odometer order is fixed, so sums are reproducible.
template <class Visit>
void tensor_visit(int n, const AxisRule& rule, double cut, Visit&& visit) {
  const int m = static_cast<int>(rule.nodes.size());
  if (m == 0) return;
  int idx[kMaxDim] = {0, 0, 0, 0};
  Vec x(n);
  const double cut2 = cut * cut;
  while (true) {
    double w = 1.0;
    double r2 = 0.0;
    for (int a = 0; a < n; ++a) {
      x[a] = rule.nodes[idx[a]];
      w *= rule.weights[idx[a]];
      r2 += x[a] * x[a];
    }
    if (r2 < cut2) visit(x, w, r2);
    int a = 0;
    while (a < n && ++idx[a] == m) idx[a++] = 0;
    if (a == n) break;
  }
}

struct TimeNode {
  double s;
  double w;
};

void append_gauss(std::vector<TimeNode>& out, double lo, double hi, int order) {
  const auto& gl = gauss_legendre(order);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) out.push_back({mid + half * gl.nodes[i], half * gl.weights[i]});
}

// Nodes for [lo, hi], hi <= 0, in ascending s. With hi == 0 the interval is cut
// dyadically toward 0 and closed with a midpoint slice; otherwise it is cut so
// that each piece [a, b] has a / b <= 2.
std::vector<TimeNode> time_nodes(double lo, double hi, const QuadratureConfig& cfg) {
  std::vector<TimeNode> out;
  if (hi == 0.0) {
    double a = lo;
    for (int j = 0; j < cfg.dyadic_depth; ++j) {
      append_gauss(out, a, 0.5 * a, cfg.slices_per_scale);
      a *= 0.5;
    }
    out.push_back({0.5 * a, -a});
    return out;
  }
  std::vector<double> cuts{hi};
  while (cuts.back() * 2.0 > lo) cuts.push_back(cuts.back() * 2.0);
  cuts.push_back(lo);
  for (std::size_t i = cuts.size() - 1; i > 0; --i) append_gauss(out, cuts[i], cuts[i - 1], cfg.slices_per_scale);
  return out;
}

std::vector<double> integrate_nodes(const std::vector<TimeNode>& nodes, const Integrand& f, int components,
                                    const KernelSpec& kernel, const QuadratureConfig& cfg,
                                    const SpatialSupport& support) {
  std::vector<std::vector<double>> per(nodes.size());
  parallel_for(nodes.size(), cfg.workers, [&](std::size_t i) {
    per[i] = slice_integral_multi(f, components, kernel, nodes[i].s, cfg, support);
  });
  std::vector<double> total(static_cast<std::size_t>(components), 0.0);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (int c = 0; c < components; ++c) total[c] += nodes[i].w * per[i][c];
  return total;
}

}  // namespace

void QuadratureConfig::validate() const {
  if (!(r_tail >= 4.0)) throw ArgumentError("quad.r_tail must be >= 4");
  if (nodes < 8) throw ArgumentError("quad.nodes must be >= 8");
  if (!(panel_width > 0.0)) throw ArgumentError("quad.panel_width must be positive");
  if (slices_per_scale < 1) throw ArgumentError("quad.slices_per_scale must be >= 1");
  if (dyadic_depth < 1) throw ArgumentError("quad.dyadic_depth must be >= 1");
  if (levels < 1) throw ArgumentError("quad.levels must be >= 1");
  if (level < 0) throw ArgumentError("refinement level must be >= 0");
  if (workers < 1) throw ArgumentError("workers must be >= 1");
}

QuadratureConfig QuadratureConfig::refined(int l) const {
  QuadratureConfig c = *this;
  c.level = level + l;
  return c;
}

const GaussLegendre& gauss_legendre(int order) {
  if (order < 1) throw ArgumentError("Gauss-Legendre order must be >= 1");
  static std::mutex mutex;
  static std::map<int, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  GaussLegendre gl;
  gl.nodes.resize(order);
  gl.weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[i] = -x;
    gl.nodes[order - 1 - i] = x;
    gl.weights[i] = gl.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) gl.nodes[order / 2] = 0.0;
  return cache.emplace(order, std::move(gl)).first->second;
}

AxisRule axis_rule(double lo, double hi, std::span<const double> breakpoints, double max_panel, int order) {
  if (!(hi > lo)) throw ArgumentError("axis rule needs hi > lo");
  if (!(max_panel > 0.0)) throw ArgumentError("panel width must be positive");
  std::vector<double> cuts{lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto& gl = gauss_legendre(order);
  AxisRule rule;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double len = cuts[i + 1] - cuts[i];
    const int panels = std::max(1, static_cast<int>(std::ceil(len / max_panel - 1e-9)));
    const double w = len / panels;
    for (int p = 0; p < panels; ++p) {
      const double a = cuts[i] + p * w;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        rule.nodes.push_back(a + 0.5 * w * (gl.nodes[k] + 1.0));
        rule.weights.push_back(0.5 * w * gl.weights[k]);
      }
    }
  }
  return rule;
}

std::vector<double> slice_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double s,
                                         const QuadratureConfig& cfg, const SpatialSupport& support) {
  if (!(s < 0.0)) throw ArgumentError("slice integral needs s < 0");
  const NormalChart& chart = kernel.chart;
  const int n = chart.dim();
  const double t = -s;
  const double sigma = std::sqrt(2.0 * t);
  const double cut = std::min({cfg.r_tail * sigma, support.radius, chart.domain_radius()});
  std::vector<double> total(static_cast<std::size_t>(components), 0.0);
  if (!(cut > 0.0)) return total;

  std::vector<double> breaks{0.0};
  for (double b : support.breakpoints) breaks.push_back(b), breaks.push_back(-b);
  const double panel = std::min(cfg.panel_width * sigma, support.max_panel) * panel_scale(cfg);
  const AxisRule rule = axis_rule(-cut, cut, breaks, panel, cfg.nodes);

  std::vector<double> vals(static_cast<std::size_t>(components));
  tensor_visit(n, rule, cut, [&](const Vec& x, double w, double r2) {
    const MetricEval m = chart.eval(x);
    const double k = kernel_value(kernel.kind, n, r2, t, m);
    if (k == 0.0) return;
    std::fill(vals.begin(), vals.end(), 0.0);
    f(SliceSample{x, s, m}, vals);
    const double wk = w * k * m.sqrt_det;
    for (int c = 0; c < components; ++c) total[c] += wk * vals[c];
  });
  return total;
}

double slice_integral(const ScalarIntegrand& f, const KernelSpec& kernel, double s, const QuadratureConfig& cfg,
                      const SpatialSupport& support) {
  const Integrand vf = [&](const SliceSample& p, std::span<double> out) { out[0] = f(p); };
  return slice_integral_multi(vf, 1, kernel, s, cfg, support)[0];
}

std::vector<double> time_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double s_lo,
                                        double s_hi, const QuadratureConfig& cfg, const SpatialSupport& support) {
  if (!(s_lo < s_hi) || s_hi > 0.0) throw ArgumentError("time integral needs s_lo < s_hi <= 0");
  return integrate_nodes(time_nodes(s_lo, s_hi, cfg), f, components, kernel, cfg, support);
}

std::vector<double> spacetime_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double r,
                                             const QuadratureConfig& cfg, const SpatialSupport& support) {
  if (!(r > 0.0) || r > kernel.chart.radius()) throw ArgumentError("spacetime integral needs 0 < r <= chart radius");
  return time_integral_multi(f, components, kernel, -r * r, 0.0, cfg, support);
}

double spacetime_integral(const ScalarIntegrand& f, const KernelSpec& kernel, double r, const QuadratureConfig& cfg,
                          const SpatialSupport& support) {
  const Integrand vf = [&](const SliceSample& p, std::span<double> out) { out[0] = f(p); };
  return spacetime_integral_multi(vf, 1, kernel, r, cfg, support)[0];
}

std::vector<double> box_integral_multi(const std::function<void(const Vec&, std::span<double>)>& f, int components,
                                       int n, double half_width, std::span<const double> breakpoints,
                                       double max_panel, int order) {
  if (n < 1 || n > kMaxDim) throw ArgumentError("dimension out of range");
  const AxisRule rule = axis_rule(-half_width, half_width, breakpoints, max_panel, order);
  std::vector<double> total(static_cast<std::size_t>(components), 0.0);
  std::vector<double> vals(static_cast<std::size_t>(components));
  tensor_visit(n, rule, std::numeric_limits<double>::infinity(), [&](const Vec& x, double w, double) {
    std::fill(vals.begin(), vals.end(), 0.0);
    f(x, vals);
    for (int c = 0; c < components; ++c) total[c] += w * vals[c];
  });
  return total;
}

std::vector<double> gauss_measure_integral_multi(const std::function<void(const Vec&, std::span<double>)>& f,
                                                 int components, int n, double variance, const QuadratureConfig& cfg,
                                                 std::span<const double> breakpoints) {
  if (!(variance > 0.0)) throw ArgumentError("variance must be positive");
  if (n < 1 || n > kMaxDim) throw ArgumentError("dimension out of range");
  const double sd = std::sqrt(variance);
  const double cut = cfg.r_tail * sd;
  std::vector<double> breaks{0.0};
  for (double b : breakpoints) breaks.push_back(b), breaks.push_back(-b);
  const AxisRule rule = axis_rule(-cut, cut, breaks, cfg.panel_width * sd * panel_scale(cfg), cfg.nodes);
  const double norm = std::pow(2.0 * M_PI * variance, -0.5 * n);
  std::vector<double> total(static_cast<std::size_t>(components), 0.0);
  std::vector<double> vals(static_cast<std::size_t>(components));
  tensor_visit(n, rule, cut, [&](const Vec& x, double w, double r2) {
    std::fill(vals.begin(), vals.end(), 0.0);
    f(x, vals);
    const double wd = w * norm * std::exp(-0.5 * r2 / variance);
    for (int c = 0; c < components; ++c) total[c] += wd * vals[c];
  });
  return total;
}

ErrorEstimate refine_and_estimate_error(const std::function<double(const QuadratureConfig&)>& task,
                                        const QuadratureConfig& cfg) {
  if (cfg.levels < 2) throw ArgumentError("error estimation needs at least 2 refinement levels");
  ErrorEstimate est;
  for (int l = 0; l < cfg.levels; ++l) est.level_values.push_back(task(cfg.refined(l)));
  const auto& v = est.level_values;
  est.value = v.back();
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double roundoff = 1e3 * std::numeric_limits<double>::epsilon() * scale + 1e-300;

  std::vector<double> diffs;
  for (std::size_t i = 1; i < v.size(); ++i) diffs.push_back(std::abs(v[i] - v[i - 1]));
  est.error = diffs.back();
  est.observed_order = std::numeric_limits<double>::infinity();
  if (diffs.size() >= 2) {
    const double prev = diffs[diffs.size() - 2], last = diffs.back();
    if (last > roundoff) {
      if (prev <= roundoff) {
        est.converging = false;
        est.observed_order = 0.0;
      } else {
        est.observed_order = std::log2(prev / last);
        est.converging = last < prev;
        // Richardson bound on the remaining error of the finest level.
        if (est.converging) est.error = std::max(est.error / 3.0, last / (std::exp2(est.observed_order) - 1.0));
      }
    }
  }
  return est;
}

}  // namespace monolab
