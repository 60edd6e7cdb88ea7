#pragma once

#include "monolab/geometry.hpp"

namespace monolab {

/// Radial cutoff: 1 on [0, inner], 0 on [outer, inf), quintic smoothstep between.
struct CutoffProfile {
  double inner = 0.25;
  double outer = 0.5;
  double grad_bound = 0.0;  ///< sup |grad_g chi| over the annulus samples
  double lap_bound = 0.0;   ///< sup |Laplace_g chi| over the annulus samples

  struct Radial {
    double value, d1, d2;
  };

  /// chi(rho), chi'(rho), chi''(rho).
  Radial radial(double rho) const {
    if (rho <= inner) return {1.0, 0.0, 0.0};
    if (rho >= outer) return {0.0, 0.0, 0.0};
    const double w = outer - inner;
    const double s = (rho - inner) / w;
    const double s2 = s * s;
    return {1.0 - s2 * s * (10.0 - 15.0 * s + 6.0 * s2), -30.0 * s2 * (1.0 - s) * (1.0 - s) / w,
            -60.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (w * w)};
  }

  /// Same cutoff seen in coordinates y = x / r.
  CutoffProfile rescaled(double r) const {
    return {inner / r, outer / r, grad_bound * r, lap_bound * r * r};
  }
};

struct CutoffEval {
  double chi = 1.0;
  Vec grad;  ///< coordinate differential d_i chi
  double laplacian = 0.0;
};

/// Cutoff with plateau B(0, radius/4) and support B(0, radius/2); records its derivative bounds.
CutoffProfile build_cutoff(const NormalChart& chart);

CutoffEval cutoff_eval(const CutoffProfile& profile, const NormalChart& chart, const Vec& x);

}  // namespace monolab
