#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "monolab/geometry.hpp"

namespace monolab {

enum class KernelKind { GaussG, ParametrixU };

KernelKind parse_kernel_kind(const std::string& name);  // "gauss" | "parametrix0"
std::string to_string(KernelKind kind);

struct KernelSpec {
  KernelKind kind = KernelKind::GaussG;
  NormalChart chart = NormalChart::euclidean(2);
};

/// (4 pi t)^(-n/2) exp(-|x|^2 / (4t)).
double gauss_kernel(const NormalChart& chart, const Vec& x, double t);

/// det(g(x))^(-1/4), the leading parametrix coefficient.
double parametrix_phi0(const NormalChart& chart, const Vec& x);

/// Order-0 parametrix G(x, t) phi0(x). Higher orders are not available.
double parametrix_kernel(const NormalChart& chart, const Vec& x, double t, int order = 0);

/// Kernel value from a precomputed metric; no domain checks.
inline double kernel_value(KernelKind kind, int n, double r2, double t, const MetricEval& m) {
  const double g = std::pow(4.0 * M_PI * t, -0.5 * n) * std::exp(-r2 / (4.0 * t));
  return kind == KernelKind::GaussG ? g : g / std::sqrt(m.sqrt_det);
}

double kernel_eval(const KernelSpec& spec, const Vec& x, double t);

/// (inf, sup) of U / G over a grid in B(0, radius) x [t_lo, t_hi].
std::pair<double, double> kernel_comparability(const NormalChart& chart, double radius, std::pair<double, double> t_range,
                                               int per_axis = 21, int time_samples = 5);

}  // namespace monolab
