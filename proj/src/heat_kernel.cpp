#include "monolab/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace monolab {

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "gauss") return KernelKind::GaussG;
  if (name == "parametrix0") return KernelKind::ParametrixU;
  throw ArgumentError("unknown kernel kind '" + name + "' (expected gauss or parametrix0)");
}

std::string to_string(KernelKind kind) { return kind == KernelKind::GaussG ? "gauss" : "parametrix0"; }

double gauss_kernel(const NormalChart& chart, const Vec& x, double t) {
  if (!(t > 0.0)) throw ArgumentError("heat kernel requires t > 0");
  chart.require_in_domain(x);
  const int n = chart.dim();
  return std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-x.squaredNorm() / (4.0 * t));
}

double parametrix_phi0(const NormalChart& chart, const Vec& x) {
  const MetricEval m = metric_at(chart, x);
  return 1.0 / std::sqrt(m.sqrt_det);
}

double parametrix_kernel(const NormalChart& chart, const Vec& x, double t, int order) {
  if (order != 0) throw ArgumentError("parametrix coefficients beyond order 0 are not implemented");
  return gauss_kernel(chart, x, t) * parametrix_phi0(chart, x);
}

double kernel_eval(const KernelSpec& spec, const Vec& x, double t) {
  return spec.kind == KernelKind::GaussG ? gauss_kernel(spec.chart, x, t) : parametrix_kernel(spec.chart, x, t);
}

std::pair<double, double> kernel_comparability(const NormalChart& chart, double radius, std::pair<double, double> t_range,
                                               int per_axis, int time_samples) {
  if (!(radius > 0.0) || radius >= 0.5 * chart.radius())
    throw ArgumentError("comparability radius must lie in (0, radius/2)");
  const auto [t_lo, t_hi] = t_range;
  if (!(t_lo > 0.0) || t_hi < t_lo || time_samples < 1) throw ArgumentError("empty comparability grid");
  const auto pts = sample_ball(chart.dim(), radius, per_axis);
  if (pts.empty()) throw ArgumentError("empty comparability grid");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int it = 0; it < time_samples; ++it) {
    const double t = time_samples == 1 ? t_lo : t_lo * std::pow(t_hi / t_lo, double(it) / (time_samples - 1));
    for (const Vec& x : pts) {
      const double g = gauss_kernel(chart, x, t);
      if (g <= 0.0) continue;  // underflow far in the tail
      const double ratio = parametrix_kernel(chart, x, t) / g;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  return {lo, hi};
}

}  // namespace monolab
