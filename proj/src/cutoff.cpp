#include "monolab/cutoff.hpp"

#include <cmath>

namespace monolab {

CutoffEval cutoff_eval(const CutoffProfile& profile, const NormalChart& chart, const Vec& x) {
  const int n = chart.dim();
  chart.require_in_domain(x);
  CutoffEval out;
  out.grad = Vec::Zero(n);
  const double rho = x.norm();
  const auto rad = profile.radial(rho);
  out.chi = rad.value;
  if (rho <= profile.inner || rho >= profile.outer) return out;

  const Vec u = x / rho;
  out.grad = rad.d1 * u;
  const Mat hess = rad.d2 * u * u.transpose() + rad.d1 / rho * (Mat::Identity(n, n) - u * u.transpose());
  out.laplacian = laplace_beltrami(chart, x, out.grad, hess);
  return out;
}

CutoffProfile build_cutoff(const NormalChart& chart) {
  CutoffProfile p;
  p.inner = 0.25 * chart.radius();
  p.outer = 0.5 * chart.radius();
  const int n = chart.dim();
  // Sample the annulus along the coordinate axes and diagonals.
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  dirs.push_back(Vec::Ones(n).normalized());
  dirs.push_back(-Vec::Ones(n).normalized());
  constexpr int kRadial = 64;
  for (const Vec& d : dirs) {
    for (int k = 0; k <= kRadial; ++k) {
      const double rho = p.inner + (p.outer - p.inner) * k / kRadial;
      const Vec x = rho * d;
      const CutoffEval e = cutoff_eval(p, chart, x);
      const MetricEval m = chart.eval(x);
      p.grad_bound = std::max(p.grad_bound, std::sqrt(e.grad.dot(m.g_inv * e.grad)));
      p.lap_bound = std::max(p.lap_bound, std::abs(e.laplacian));
    }
  }
  return p;
}

}  // namespace monolab
