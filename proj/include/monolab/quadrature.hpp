#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "monolab/heat_kernel.hpp"

namespace monolab {

/// Space-time quadrature policy for heat-kernel weighted integrals.
///
/// Each time slice t = -s is integrated with composite Gauss-Legendre panels whose
/// width scales with sigma = sqrt(2t), so the kernel always looks like a unit
/// Gaussian in y = x / sigma; nodes with |y| > r_tail are dropped. Time is split
/// into dyadic intervals accumulating at s = 0, each with its own Gauss rule.
struct QuadratureConfig {
  double r_tail = 8.0;
  int nodes = 8;               ///< Gauss-Legendre nodes per panel along each axis
  double panel_width = 2.0;    ///< panel width in units of sigma
  int slices_per_scale = 40;   ///< Gauss-Legendre nodes per dyadic time interval
  int dyadic_depth = 20;       ///< dyadic intervals before the tail slice at s -> 0
  int levels = 3;              ///< refinement levels for error estimation
  int level = 0;               ///< current refinement level; halves every spatial panel width `level` times
  int workers = 1;

  void validate() const;
  QuadratureConfig refined(int level) const;
};

/// What the integrand looks like in space.
struct SpatialSupport {
  double radius = std::numeric_limits<double>::infinity();  ///< integrand vanishes for |x| >= radius
  std::vector<double> breakpoints;                           ///< per-axis kink locations
  double max_panel = std::numeric_limits<double>::infinity();
};

struct SliceSample {
  const Vec& x;
  double s;
  const MetricEval& metric;
};

using Integrand = std::function<void(const SliceSample&, std::span<double>)>;
using ScalarIntegrand = std::function<double(const SliceSample&)>;

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

const GaussLegendre& gauss_legendre(int order);

/// Composite Gauss-Legendre rule on [lo, hi] with breaks at `breakpoints` and panels no wider than max_panel.
struct AxisRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
AxisRule axis_rule(double lo, double hi, std::span<const double> breakpoints, double max_panel, int order);

/// Integral of f(x) K(x, -s) dV_g over the chart, s < 0.
std::vector<double> slice_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double s,
                                         const QuadratureConfig& cfg, const SpatialSupport& support = {});
double slice_integral(const ScalarIntegrand& f, const KernelSpec& kernel, double s, const QuadratureConfig& cfg,
                      const SpatialSupport& support = {});

/// Integral over s in [s_lo, s_hi] (s_hi <= 0) of the slice integral.
std::vector<double> time_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double s_lo,
                                        double s_hi, const QuadratureConfig& cfg, const SpatialSupport& support = {});

/// Integral over S_r = chart x (-r^2, 0).
std::vector<double> spacetime_integral_multi(const Integrand& f, int components, const KernelSpec& kernel, double r,
                                             const QuadratureConfig& cfg, const SpatialSupport& support = {});
double spacetime_integral(const ScalarIntegrand& f, const KernelSpec& kernel, double r, const QuadratureConfig& cfg,
                          const SpatialSupport& support = {});

/// Tensor Gauss-Legendre integral of f over the cube [-half_width, half_width]^n (unweighted).
std::vector<double> box_integral_multi(const std::function<void(const Vec&, std::span<double>)>& f, int components,
                                       int n, double half_width, std::span<const double> breakpoints,
                                       double max_panel, int order);

/// Integral of f against the centred Gauss measure of the given variance on R^n.
std::vector<double> gauss_measure_integral_multi(const std::function<void(const Vec&, std::span<double>)>& f,
                                                 int components, int n, double variance, const QuadratureConfig& cfg,
                                                 std::span<const double> breakpoints = {});

struct ErrorEstimate {
  double value = 0.0;
  double error = 0.0;
  double observed_order = 0.0;  ///< log2 of successive difference ratios; +inf at round-off
  bool converging = true;
  std::vector<double> level_values;
};

/// Evaluates task on cfg.levels successively refined configurations.
ErrorEstimate refine_and_estimate_error(const std::function<double(const QuadratureConfig&)>& task,
                                        const QuadratureConfig& cfg);

}  // namespace monolab
