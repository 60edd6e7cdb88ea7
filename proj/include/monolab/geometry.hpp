#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "monolab/types.hpp"

namespace monolab {

enum class MetricFamily { Euclidean, ConstCurvature, Perturbed, Custom };

/// Metric, inverse metric and volume density at one point.
struct MetricEval {
  Mat g;
  Mat g_inv;
  double sqrt_det = 1.0;
};

/// Metric with first and second coordinate derivatives.
/// dg[k] = d_k g, d2g[k][l] = d_k d_l g.
struct MetricJet {
  Mat g;
  std::array<Mat, kMaxDim> dg;
  std::array<std::array<Mat, kMaxDim>, kMaxDim> d2g;
};

/// Christoffel symbols of the second kind, gamma[k](i, j) = Gamma^k_ij.
struct Christoffel {
  int n = 0;
  std::array<Mat, kMaxDim> gamma;

  double operator()(int k, int i, int j) const { return gamma[k](i, j); }
};

/// Dense rank-4 tensor with n^4 components, row-major in (i, j, k, l).
struct Tensor4 {
  int n = 0;
  std::vector<double> data;

  explicit Tensor4(int dim = 0) : n(dim), data(static_cast<std::size_t>(dim * dim * dim * dim), 0.0) {}
  double& operator()(int i, int j, int k, int l) { return data[((i * n + j) * n + k) * n + l]; }
  double operator()(int i, int j, int k, int l) const { return data[((i * n + j) * n + k) * n + l]; }
};

/// A metric in geodesic normal coordinates centred at p, restricted to B(p, radius).
///
/// Built-in families share the form g(x) = I + c(x) (|x|^2 I - x x^T), so that
/// g(x) x = x (Gauss lemma): radial lines are unit-speed geodesics and the
/// distance to the centre is |x|. A chart may be a rescaled view of another
/// chart, in which case every sampler evaluates the parent at scale() * x.
class NormalChart {
 public:
  using MetricSampler = std::function<Mat(const Vec&)>;

  static NormalChart euclidean(int n, double radius = 1.0);
  static NormalChart constant_curvature(int n, double curvature, double radius = 1.0);
  static NormalChart unit_sphere(int n, double radius = 1.0) { return constant_curvature(n, 1.0, radius); }
  /// g = I + eps * a(x) (|x|^2 I - x x^T) with a bounded smooth shape function a in [1/2, 3/2].
  static NormalChart perturbed(int n, double eps, int shape = 0, double radius = 1.0);
  /// User metric; derivatives by 4th-order central differences with step 1e-3 * radius.
  static NormalChart custom(int n, double radius, MetricSampler metric, double domain_radius);

  int dim() const { return n_; }
  /// Chart radius delta_p in this chart's coordinates.
  double radius() const { return radius_ / scale_; }
  /// Radius of the region on which the samplers are valid (metric SPD).
  double domain_radius() const { return domain_radius_ / scale_; }
  double scale() const { return scale_; }
  MetricFamily family() const { return family_; }
  double curvature() const { return curvature_; }
  double epsilon() const { return epsilon_; }
  int shape() const { return shape_; }
  std::string tag() const;

  bool in_domain(const Vec& x) const;
  void require_in_domain(const Vec& x) const;

  /// Unchecked evaluation; callers validate the domain.
  MetricEval eval(const Vec& x) const;
  MetricJet jet(const Vec& x) const;

  /// View with metric y -> g(r y).
  NormalChart rescaled(double r) const;

 private:
  struct CoefJet {
    double c = 0.0;
    Vec grad;
    Mat hess;
  };

  NormalChart() = default;
  CoefJet coefficient(const Vec& p, int order) const;
  MetricJet custom_jet(const Vec& p) const;

  int n_ = 2;
  double radius_ = 1.0;
  double domain_radius_ = 1.0;
  double scale_ = 1.0;
  MetricFamily family_ = MetricFamily::Euclidean;
  double curvature_ = 0.0;
  double epsilon_ = 0.0;
  int shape_ = 0;
  MetricSampler sampler_;
};

MetricEval metric_at(const NormalChart& chart, const Vec& x);
double distance_to_center(const NormalChart& chart, const Vec& x);
Christoffel christoffel_at(const NormalChart& chart, const Vec& x);
Christoffel christoffel_from_jet(const MetricJet& jet, const Mat& g_inv);

/// Lower-index curvature tensor R_ijkl = g(R(d_i, d_j) d_l, d_k); R_ijij > 0 on the sphere.
Tensor4 riemann_at(const NormalChart& chart, const Vec& x);

struct CurvatureNorms {
  double riemann = 0.0;   ///< sup of |R| components in a g-orthonormal frame
  double covariant = 0.0; ///< same for the covariant derivative nabla R
};

CurvatureNorms curvature_norms_at(const NormalChart& chart, const Vec& x);

/// sup over samples of |Rm| + |nabla Rm| (g-orthonormal frame component sup norm).
double curvature_bound_estimate(const NormalChart& chart, std::span<const Vec> samples);

NormalChart rescale_chart(const NormalChart& chart, double r);

/// g^ij (d_ij f - Gamma^k_ij d_k f) from the coordinate gradient and Hessian of f at x.
double laplace_beltrami(const NormalChart& chart, const Vec& x, const Vec& grad, const Mat& hess);

/// Closed-form volume density for constant curvature charts: (sn_K(rho) / rho)^(n-1).
double constant_curvature_density(int n, double curvature, double rho);

/// Default sample cloud inside B(0, fraction * radius) for curvature estimation.
std::vector<Vec> sample_ball(int n, double radius, int per_axis);

}  // namespace monolab
