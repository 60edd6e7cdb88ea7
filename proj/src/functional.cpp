#include "monolab/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace monolab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// r^-2 u(r y, r^2 s).
class RescaledPhase : public PhaseField {
 public:
  RescaledPhase(std::shared_ptr<const PhaseField> base, double r) : base_(std::move(base)), r_(r) {}
  double value(const Vec& y, double s) const override { return base_->value(r_ * y, r_ * r_ * s) / (r_ * r_); }
  PhaseSample sample(const Vec& y, double s) const override {
    PhaseSample p = base_->sample(r_ * y, r_ * r_ * s);
    p.value /= r_ * r_;
    p.grad /= r_;
    return p;
  }
  std::vector<double> kinks() const override {
    std::vector<double> k = base_->kinks();
    for (double& v : k) v /= r_;
    return k;
  }
  bool identically_zero() const override { return base_->identically_zero(); }

 private:
  std::shared_ptr<const PhaseField> base_;
  double r_;
};

struct Truncated {
  double w[2];
  Vec grad[2];
};

// Charts satisfy the Gauss lemma, so the geodesic distance to the centre is |x|.
Truncated truncate(const MonotonicityInput& in, const Vec& x, double s) {
  Truncated t;
  const double rho = x.norm();
  const auto rad = in.cutoff.radial(rho);
  Vec dchi = Vec::Zero(x.size());
  if (rad.d1 != 0.0) dchi = rad.d1 / rho * x;
  for (int i = 0; i < 2; ++i) {
    const PhaseField& f = in.pair.phase(i == 0 ? 1 : -1);
    if (f.identically_zero() || rad.value == 0.0) {
      t.w[i] = 0.0;
      t.grad[i] = Vec::Zero(x.size());
      continue;
    }
    const PhaseSample p = f.sample(x, s);
    t.w[i] = p.value * rad.value;
    t.grad[i] = rad.value * p.grad + p.value * dchi;
  }
  return t;
}

SpatialSupport support_of(const MonotonicityInput& in) {
  SpatialSupport sup;
  sup.radius = in.cutoff.outer;
  sup.breakpoints = in.pair.kinks();
  if (!std::isfinite(in.cutoff.outer)) return sup;  // cutoff disabled
  for (double b : {in.cutoff.inner, in.cutoff.outer}) {
    sup.breakpoints.push_back(b);
    sup.breakpoints.push_back(-b);
  }
  sup.max_panel = 0.5 * (in.cutoff.outer - in.cutoff.inner);
  return sup;
}

double grad_sq(const Vec& v, const MetricEval& m) { return v.dot(m.g_inv * v); }

Integrand energy_integrand(const MonotonicityInput& in) {
  return [&in](const SliceSample& p, std::span<double> out) {
    const Truncated t = truncate(in, p.x, p.s);
    out[0] = grad_sq(t.grad[0], p.metric);
    out[1] = grad_sq(t.grad[1], p.metric);
  };
}

Integrand mass_integrand(const MonotonicityInput& in) {
  return [&in](const SliceSample& p, std::span<double> out) {
    const Truncated t = truncate(in, p.x, p.s);
    out[0] = t.w[0] * t.w[0];
    out[1] = t.w[1] * t.w[1];
  };
}

bool null_pair(const MonotonicityInput& in) {
  return in.pair.plus->identically_zero() && in.pair.minus->identically_zero();
}

void require_radius(const MonotonicityInput& in, double r, double fraction, const char* what) {
  if (!(r > 0.0) || r > fraction * in.chart.radius() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << what << ": r = " << r << " outside (0, " << fraction << " delta_p]";
    throw ArgumentError(os.str());
  }
}

int sign_index(int sign) {
  if (sign != 1 && sign != -1) throw ArgumentError("sign must be +1 or -1");
  return sign > 0 ? 0 : 1;
}

std::array<double, 2> energies_with(const MonotonicityInput& in, double r, const QuadratureConfig& cfg) {
  if (null_pair(in)) return {0.0, 0.0};
  const auto v = spacetime_integral_multi(energy_integrand(in), 2, in.kernel, r, cfg, support_of(in));
  return {v[0], v[1]};
}

std::array<double, 2> boundary_with(const MonotonicityInput& in, double r, const QuadratureConfig& cfg) {
  if (null_pair(in)) return {0.0, 0.0};
  const auto v = slice_integral_multi(energy_integrand(in), 2, in.kernel, -r * r, cfg, support_of(in));
  return {v[0], v[1]};
}

double phi_from(double r, const std::array<double, 2>& a) { return a[0] * a[1] / std::pow(r, 4); }

// Iterated Gauss-Legendre over the ball |x| < radius: each axis runs over the chord left by the previous ones.
std::array<double, 2> ball_integral(const std::function<void(const Vec&, std::span<double>)>& f, int n, double radius,
                                    const std::vector<double>& breakpoints, int order) {
  std::array<double, 2> total{0.0, 0.0};
  Vec x = Vec::Zero(n);
  std::function<void(int, double, double)> visit = [&](int axis, double rem2, double weight) {
    const double half = std::sqrt(std::max(0.0, rem2));
    if (half == 0.0) return;
    // x = half sin(theta) absorbs the square-root edge behaviour of the chord lengths.
    std::vector<double> br;
    for (double b : breakpoints)
      if (std::abs(b) < half) br.push_back(std::asin(b / half));
    const AxisRule rule = axis_rule(-0.5 * M_PI, 0.5 * M_PI, br, M_PI / 8, order);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      x[axis] = half * std::sin(rule.nodes[i]);
      const double w = weight * rule.weights[i] * half * std::cos(rule.nodes[i]);
      if (axis + 1 < n) {
        visit(axis + 1, rem2 - x[axis] * x[axis], w);
      } else {
        double v[2] = {0.0, 0.0};
        f(x, v);
        total[0] += w * v[0];
        total[1] += w * v[1];
      }
    }
    x[axis] = 0.0;
  };
  visit(0, radius * radius, 1.0);
  return total;
}

}  // namespace

MonotonicityInput MonotonicityInput::make(const NormalChart& chart, TwoPhasePair pair, KernelKind kind,
                                          const QuadratureConfig& quad) {
  if (!pair.plus || !pair.minus) throw ArgumentError("pair has no phases");
  if (pair.admissibility.validity_checked && !(pair.admissibility.nonnegative && pair.admissibility.disjoint))
    throw PreconditionError("pair '" + pair.family + "' failed its validity check");
  quad.validate();
  MonotonicityInput in;
  in.chart = chart;
  in.pair = std::move(pair);
  in.cutoff = build_cutoff(chart);
  in.kernel = {kind, chart};
  in.quad = quad;
  return in;
}

MonotonicityInput MonotonicityInput::rescaled(double r) const {
  MonotonicityInput out = *this;
  out.chart = chart.rescaled(r);
  out.kernel.chart = out.chart;
  out.cutoff = cutoff.rescaled(r);
  out.pair.plus = std::make_shared<RescaledPhase>(pair.plus, r);
  out.pair.minus = std::make_shared<RescaledPhase>(pair.minus, r);
  return out;
}

std::array<double, 2> phase_energies(const MonotonicityInput& in, double r) {
  require_radius(in, r, 0.5, "phase_energy");
  return energies_with(in, r, in.quad);
}

double phase_energy(const MonotonicityInput& in, double r, int sign) {
  const int i = sign_index(sign);
  return phase_energies(in, r)[i];
}

std::array<double, 2> boundary_energies(const MonotonicityInput& in, double r) {
  require_radius(in, r, 0.5, "boundary_energy");
  return boundary_with(in, r, in.quad);
}

double boundary_energy(const MonotonicityInput& in, double r, int sign) {
  const int i = sign_index(sign);
  return boundary_energies(in, r)[i];
}

double phi(const MonotonicityInput& in, double r) { return phi_from(r, phase_energies(in, r)); }

std::vector<PhiPoint> phi_curve(const MonotonicityInput& in, const std::vector<double>& radii) {
  std::vector<PhiPoint> out;
  for (double r : radii) {
    require_radius(in, r, 0.5, "phi_curve");
    PhiPoint p;
    p.r = r;
    const auto a = energies_with(in, r, in.quad);
    p.a_plus = a[0];
    p.a_minus = a[1];
    p.phi = phi_from(r, a);
    if (in.quad.levels >= 2 && p.phi != 0.0) {
      const ErrorEstimate e = refine_and_estimate_error(
          [&](const QuadratureConfig& c) { return c.level == 0 ? p.phi : phi_from(r, energies_with(in, r, c)); }, in.quad);
      p.err_est = e.error;
    }
    out.push_back(p);
  }
  return out;
}

bool DyadicLadder::prop1_all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const LadderEntry& e) { return e.prop1_pass; });
}

DyadicLadder dyadic_ladder(const MonotonicityInput& in, int k_min, int k_max, double c0, double c1) {
  if (k_max < k_min) throw ArgumentError("dyadic ladder needs k_min <= k_max");
  require_radius(in, std::pow(4.0, -k_min), 0.5, "dyadic_ladder");
  DyadicLadder lad;
  lad.k_min = k_min;
  lad.k_max = k_max;
  lad.c0 = c0;
  lad.c1 = c1;

  std::vector<std::array<double, 2>> a;
  for (int k = k_min; k <= k_max + 1; ++k) a.push_back(energies_with(in, std::pow(4.0, -k), in.quad));

  for (int k = k_min; k <= k_max; ++k) {
    const auto& cur = a[k - k_min];
    const auto& next = a[k - k_min + 1];
    LadderEntry e;
    e.k = k;
    e.r = std::pow(4.0, -k);
    e.a_plus = cur[0];
    e.a_minus = cur[1];
    const double scale = std::pow(4.0, 4 * k);
    e.b_plus = scale * cur[0];
    e.b_minus = scale * cur[1];
    e.delta_k = c1 * (1.0 / std::sqrt(e.b_plus) + 1.0 / std::sqrt(e.b_minus) + std::pow(4.0, -2 * k));
    e.phi = phi_from(e.r, cur);
    const double den = cur[0] * cur[1];
    e.prop1_ratio = den > 0.0 ? 256.0 * next[0] * next[1] / den : kNaN;
    e.prop1_active = e.b_plus >= c0 && e.b_minus >= c0;
    e.prop1_pass = !e.prop1_active || !(e.prop1_ratio > 1.0 + e.delta_k);
    e.prop2_active = e.prop1_active && 256.0 * next[0] > cur[0];
    e.prop2_ratio = cur[1] > 0.0 ? next[1] / cur[1] : kNaN;
    if (e.prop2_active && std::isfinite(e.prop2_ratio)) lad.prop2_max_ratio = std::max(lad.prop2_max_ratio, e.prop2_ratio);
    lad.entries.push_back(e);
  }
  lad.next_a_plus = a.back()[0];
  lad.next_a_minus = a.back()[1];
  return lad;
}

ScaleDerivativeRecord scale_derivative(const MonotonicityInput& in, double r, double fd_step) {
  require_radius(in, r, 0.25, "scale_derivative");
  if (!(fd_step > 0.0 && fd_step < 0.5)) throw ArgumentError("finite-difference step must lie in (0, 1/2)");
  ScaleDerivativeRecord rec;
  rec.r = r;
  rec.fd_step = fd_step;
  if (null_pair(in)) return rec;

  const MonotonicityInput sc = in.rescaled(r);
  auto phit = [&](double rho, const QuadratureConfig& c) { return phi_from(rho, energies_with(sc, rho, c)); };
  auto direct = [](const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return -4.0 * a[0] * a[1] + 2.0 * b[0] * a[1] + 2.0 * a[0] * b[1];
  };

  const auto a = energies_with(sc, 1.0, sc.quad);
  const auto b = boundary_with(sc, 1.0, sc.quad);
  rec.a_plus = a[0];
  rec.a_minus = a[1];
  rec.b_plus = b[0];
  rec.b_minus = b[1];
  rec.direct = direct(a, b);
  const double h = fd_step;
  rec.finite_difference = (phit(1.0 + h, sc.quad) - phit(1.0 - h, sc.quad)) / (2.0 * h);
  rec.scale = 4.0 * a[0] * a[1];

  const SliceQuotientTerms q = slice_quotient_terms(sc, -1.0);
  rec.lambda_plus = q.mass[0] > 0.0 ? q.grad[0] / q.mass[0] : 0.0;
  rec.lambda_minus = q.mass[1] > 0.0 ? q.grad[1] / q.mass[1] : 0.0;

  if (rec.scale == 0.0) return rec;
  rec.mismatch = std::abs(rec.direct - rec.finite_difference) / rec.scale;

  // Quadrature part: one refinement of the direct formula. Difference-quotient part: Richardson with step 2h.
  const QuadratureConfig fine = sc.quad.refined(1);
  const double direct_fine = direct(energies_with(sc, 1.0, fine), boundary_with(sc, 1.0, fine));
  const double fd2 = (phit(1.0 + 2.0 * h, sc.quad) - phit(1.0 - 2.0 * h, sc.quad)) / (4.0 * h);
  rec.err_est = (std::abs(direct_fine - rec.direct) + std::abs(fd2 - rec.finite_difference) / 3.0) / rec.scale;
  rec.pass = rec.mismatch <= std::max(0.02, rec.err_est);
  return rec;
}

SliceQuotientTerms slice_quotient_terms(const MonotonicityInput& in, double s) {
  SliceQuotientTerms out;
  if (null_pair(in)) return out;
  const Integrand f = [&in](const SliceSample& p, std::span<double> o) {
    const Truncated t = truncate(in, p.x, p.s);
    for (int i = 0; i < 2; ++i) {
      o[2 * i] = grad_sq(t.grad[i], p.metric);
      o[2 * i + 1] = t.w[i] * t.w[i];
    }
  };
  const auto v = slice_integral_multi(f, 4, in.kernel, s, in.quad, support_of(in));
  out.grad = {v[0], v[2]};
  out.mass = {v[1], v[3]};
  return out;
}

EnergyInequalityRecord energy_inequality_check(const MonotonicityInput& in, double r) {
  require_radius(in, r, 0.5, "energy_inequality_check");
  EnergyInequalityRecord rec;
  rec.r = r;
  if (null_pair(in)) return rec;
  const double r2 = r * r;
  const SpatialSupport sup = support_of(in);
  const Integrand mass = mass_integrand(in);

  rec.energy = energies_with(in, r, in.quad);
  const auto m = slice_integral_multi(mass, 2, in.kernel, -r2, in.quad, sup);
  rec.slice_mass = {m[0], m[1]};

  constexpr int kSlices = 9;
  rec.inf_mass = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (int j = 0; j < kSlices; ++j) {
    const double s = -r2 * (1.0 + 3.0 * j / (kSlices - 1));
    const auto v = slice_integral_multi(mass, 2, in.kernel, s, in.quad, sup);
    for (int i = 0; i < 2; ++i) rec.inf_mass[i] = std::min(rec.inf_mass[i], v[i]);
  }

  const auto ann = time_integral_multi(mass, 2, in.kernel, -4.0 * r2, -r2, in.quad, sup);
  rec.annulus = {ann[0], ann[1]};

  const double r4 = r2 * r2;
  for (int i = 0; i < 2; ++i) {
    const double a = rec.energy[i];
    rec.c_slice[i] = std::max(0.0, (a - 0.5 * rec.slice_mass[i]) / (r4 + r2 * std::sqrt(rec.slice_mass[i])));
    rec.c_inf[i] = a / (r4 + rec.inf_mass[i]);
    rec.c_annulus[i] = a / (r4 + rec.annulus[i] / r2);
  }
  return rec;
}

bool stable_sequence(const std::vector<double>& v, double factor, double floor) {
  double seen = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
    if (i > 0 && v[i] > factor * seen + floor) return false;
    seen = std::max(seen, v[i]);
  }
  return true;
}

EnergyLadderRecord energy_inequality_ladder(const MonotonicityInput& in, const std::vector<double>& radii) {
  std::vector<double> rs = radii;
  std::sort(rs.begin(), rs.end(), std::greater<>());
  EnergyLadderRecord out;
  std::vector<double> cs, ci, ca;
  for (double r : rs) {
    const EnergyInequalityRecord e = energy_inequality_check(in, r);
    cs.push_back(std::max(e.c_slice[0], e.c_slice[1]));
    ci.push_back(std::max(e.c_inf[0], e.c_inf[1]));
    ca.push_back(std::max(e.c_annulus[0], e.c_annulus[1]));
    out.entries.push_back(e);
  }
  auto maxof = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
  out.c_slice = maxof(cs);
  out.c_inf = maxof(ci);
  out.c_annulus = maxof(ca);
  out.stable_slice = stable_sequence(cs, 2.0, 1e-3);
  out.stable_inf = stable_sequence(ci, 2.0, 1e-3);
  out.stable_annulus = stable_sequence(ca, 2.0, 1e-3);
  out.pass = out.stable_slice && out.stable_inf && out.stable_annulus;
  return out;
}

Theorem1Record theorem1_check(const MonotonicityInput& in, const DyadicLadder& ladder, double guard) {
  Theorem1Record rec;
  rec.guard = guard;
  for (const LadderEntry& e : ladder.entries) rec.sup_phi = std::max(rec.sup_phi, e.phi);
  rec.non_exploding = ladder.prop1_all_pass();

  if (!null_pair(in)) {
    // Unweighted L2 norms over the lower parabolic cylinder of radius delta_p.
    const double d = in.chart.radius();
    const int n = in.chart.dim();
    const std::vector<double> br = in.pair.kinks();
    const auto& gl = gauss_legendre(16);
    for (int j = 0; j < 16; ++j) {
      const double s = -0.5 * d * d * (1.0 - gl.nodes[j]);
      const auto v = ball_integral(
          [&](const Vec& x, std::span<double> out) {
            const double vol = in.chart.eval(x).sqrt_det;
            const double up = in.pair.plus->value(x, s), um = in.pair.minus->value(x, s);
            out[0] = up * up * vol;
            out[1] = um * um * vol;
          },
          n, d, br, in.quad.nodes);
      rec.l2_plus += 0.5 * d * d * gl.weights[j] * v[0];
      rec.l2_minus += 0.5 * d * d * gl.weights[j] * v[1];
    }
  }
  rec.q = std::pow(1.0 + rec.l2_plus + rec.l2_minus, 2);
  rec.ratio = rec.sup_phi / rec.q;
  rec.pass = rec.ratio <= guard && rec.non_exploding;
  return rec;
}

Theorem2Record theorem2_check(const MonotonicityInput& in, double epsilon, const DyadicLadder& ladder) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ArgumentError("epsilon must lie in (0, 1]");
  Theorem2Record rec;
  rec.epsilon = epsilon;
  const int n = in.chart.dim();

  // Growth bound on parabolic shells max(|x|, sqrt|s|) ~ rho inside Q_{delta_p / 2}.
  std::vector<Vec> dirs;
  for (int a = 0; a < n; ++a) {
    Vec e = Vec::Zero(n);
    e[a] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  dirs.push_back(Vec::Ones(n).normalized());
  dirs.push_back(-Vec::Ones(n).normalized());
  constexpr int kShells = 6;
  std::vector<double> shell_sup(kShells, 0.0);
  std::vector<GrowthViolation> samples;
  std::vector<int> shell_of;
  for (int j = 0; j < kShells; ++j) {
    const double rho = 0.5 * in.chart.radius() * std::pow(4.0, -j);
    for (double fx : {0.0, 0.3, 0.6, 1.0})
      for (double fs : {0.0, 0.3, 0.6, 1.0}) {
        if (fx < 1.0 && fs < 1.0) continue;  // stay on the shell boundary
        const double s = -std::pow(fs * rho, 2);
        for (const Vec& d : dirs) {
          const Vec x = fx * rho * d;
          const double u = std::max(in.pair.plus->value(x, s), in.pair.minus->value(x, s));
          const double ratio = u / std::pow(x.squaredNorm() + std::abs(s), 0.5 * epsilon);
          shell_sup[j] = std::max(shell_sup[j], ratio);
          samples.push_back({x, s, ratio});
          shell_of.push_back(j);
        }
      }
  }
  rec.growth_constant = *std::max_element(shell_sup.begin(), shell_sup.end());
  const double limit = 4.0 * shell_sup[0] + 1e-12;
  std::vector<const GrowthViolation*> bad;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (shell_of[i] > 0 && samples[i].ratio > limit) bad.push_back(&samples[i]);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "growth bound |u| <= C (|x|^2 + |s|)^(eps/2) fails for eps = " << epsilon << " at " << bad.size()
       << " samples (outer-shell constant " << shell_sup[0] << ")";
    for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 8); ++i)
      os << "\n  |x| = " << bad[i]->x.norm() << ", s = " << bad[i]->s << ", ratio = " << bad[i]->ratio;
    throw PreconditionError(os.str());
  }

  const auto& es = ladder.entries;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const double rho = es[i].r, re = std::pow(rho, epsilon);
    double c = 0.0;
    for (std::size_t j = i + 1; j < es.size(); ++j)
      c = std::max(c, (es[j].phi - (1.0 + re) * es[i].phi) / re);
    rec.rho.push_back(rho);
    rec.constant_at_rho.push_back(c);
    rec.fitted_constant = std::max(rec.fitted_constant, c);
  }
  rec.stable = stable_sequence(rec.constant_at_rho, 2.0, 1e-3);
  rec.pass = std::isfinite(rec.fitted_constant) && rec.stable;
  return rec;
}

PositivityRecord positivity_measure(const MonotonicityInput& in, double r, int sign) {
  require_radius(in, r, 0.25, "positivity_measure");
  const int idx = sign_index(sign);
  PositivityRecord rec;
  rec.r = r;
  rec.sign = sign;
  if (in.pair.phase(sign).identically_zero()) return rec;
  const Integrand ind = [&in, idx](const SliceSample& p, std::span<double> out) {
    out[0] = truncate(in, p.x, p.s).w[idx] > 0.0 ? 1.0 : 0.0;
  };
  rec.measure = time_integral_multi(ind, 1, in.kernel, -0.25 * r * r, -r * r / 16.0, in.quad, support_of(in))[0];
  rec.scaled_measure = rec.measure / (r * r);
  const double outer = energies_with(in, r, in.quad)[idx];
  rec.energy_ratio = outer > 0.0 ? energies_with(in, 0.25 * r, in.quad)[idx] / outer : 0.0;
  return rec;
}

}  // namespace monolab
