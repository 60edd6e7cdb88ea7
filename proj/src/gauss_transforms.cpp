#include "monolab/gauss_transforms.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat sqrt_spd(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("metric sample is not positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

template <class Map>
Mat fd_jacobian(const Map& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Mat j(n, n);
  for (int c = 0; c < n; ++c) {
    Vec xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    j.col(c) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return j;
}

std::vector<double> gauss_moments(const GaussFunction& f, const GaussMeasure& mu, const QuadratureConfig& cfg) {
  return gauss_measure_integral_multi(
      [&f](const Vec& x, std::span<double> o) {
        const PhaseSample p = f.eval(x);
        o[0] = p.value;
        o[1] = p.value * p.value;
        o[2] = p.grad.squaredNorm();
      },
      3, mu.n, mu.variance, cfg, f.kinks);
}

std::vector<double> grid_samples(int n, double radius) {
  const int per_axis = n <= 2 ? 33 : (n == 3 ? 17 : 9);
  std::vector<double> axis;
  for (int i = 0; i < per_axis; ++i) axis.push_back(-radius + 2.0 * radius * i / (per_axis - 1));
  return axis;
}

}  // namespace

double GaussMeasure::density(const Vec& x) const {
  return std::pow(2.0 * M_PI * variance, -0.5 * n) * std::exp(-0.5 * x.squaredNorm() / variance);
}

double GaussMeasure::mass(const QuadratureConfig& cfg) const {
  return gauss_measure_integral_multi([](const Vec&, std::span<double> o) { o[0] = 1.0; }, 1, n, variance, cfg)[0];
}

GaussMeasure GaussMeasure::at_time(int n, double s) {
  if (!(s < 0.0)) throw ArgumentError("Gauss slice needs s < 0");
  return {n, -2.0 * s};
}

GaussFunction half_space_power(const Vec& direction, double power, double side) {
  if (!(power > 0.0)) throw ArgumentError("power must be positive");
  const Vec e = direction.normalized();
  GaussFunction f;
  f.eval = [e, power, side](const Vec& x) {
    const double t = side * e.dot(x);
    if (t <= 0.0) return PhaseSample{0.0, Vec::Zero(x.size())};
    return PhaseSample{std::pow(t, power), (power * std::pow(t, power - 1.0) * side) * e};
  };
  return f;
}

GaussFunction constant_function(int, double c) {
  GaussFunction f;
  f.eval = [c](const Vec& x) { return PhaseSample{c, Vec::Zero(x.size())}; };
  f.kinks.clear();
  return f;
}

PoincareRecord gaussian_poincare_check(const GaussFunction& f, const GaussMeasure& mu, double tol,
                                       const QuadratureConfig& cfg) {
  const auto m = gauss_moments(f, mu, cfg);
  if (m[0] == 0.0) throw DegenerateInput("Poincare check: int f dnu = 0");
  PoincareRecord rec;
  rec.average = m[0];
  rec.l2 = m[1];
  rec.energy = m[2];
  rec.lhs = std::log(1.0 / rec.average) * rec.l2;
  rec.rhs = 2.0 * rec.energy;
  rec.margin = rec.rhs - rec.lhs;
  rec.in_hypothesis = rec.average < 1.0 && rec.energy > 0.0;
  rec.pass = rec.lhs <= rec.rhs + tol;
  return rec;
}

double rayleigh_quotient(const GaussFunction& f, const GaussMeasure& mu, const QuadratureConfig& cfg) {
  const auto m = gauss_moments(f, mu, cfg);
  if (m[1] == 0.0) throw DegenerateInput("Rayleigh quotient: int f^2 dnu = 0");
  return m[2] / m[1];
}

BkpRecord bkp_sum(const GaussFunction& f_plus, const GaussFunction& f_minus, const GaussMeasure& mu, double tol,
                  const QuadratureConfig& cfg) {
  std::vector<double> br = f_plus.kinks;
  br.insert(br.end(), f_minus.kinks.begin(), f_minus.kinks.end());
  const auto m = gauss_measure_integral_multi(
      [&](const Vec& x, std::span<double> o) {
        const PhaseSample p = f_plus.eval(x), q = f_minus.eval(x);
        o[0] = p.grad.squaredNorm();
        o[1] = p.value * p.value;
        o[2] = q.grad.squaredNorm();
        o[3] = q.value * q.value;
        o[4] = p.value * q.value > 0.0 ? 1.0 : 0.0;
      },
      5, mu.n, mu.variance, cfg, br);
  if (m[4] > 0.0) throw PreconditionError("BKP sum: the positivity sets of f+ and f- overlap");
  if (m[1] == 0.0 || m[3] == 0.0) throw DegenerateInput("BKP sum: a function vanishes");
  BkpRecord rec;
  rec.lambda_plus = m[0] / m[1];
  rec.lambda_minus = m[2] / m[3];
  rec.sum = rec.lambda_plus + rec.lambda_minus;
  rec.deficit = rec.sum - 1.0;
  rec.pass = rec.deficit >= -tol;
  return rec;
}

FirstTransform::FirstTransform(const NormalChart& chart, double r)
    : rescaled_(chart.rescaled(r)), r_(r), identity_(chart.family() != MetricFamily::Custom) {}

Vec FirstTransform::ray_map(const Vec& x) const {
  rescaled_.require_in_domain(x);
  const auto& gl = gauss_legendre(16);
  Vec y = Vec::Zero(x.size());
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = 0.5 * (1.0 + gl.nodes[i]);
    y += 0.5 * gl.weights[i] * (sqrt_spd(rescaled_.eval(t * x).g) * x);
  }
  return y;
}

Vec FirstTransform::map(const Vec& x) const {
  if (identity_) {
    rescaled_.require_in_domain(x);
    return x;
  }
  return ray_map(x);
}

Mat FirstTransform::jacobian(const Vec& x) const {
  if (identity_) return Mat::Identity(x.size(), x.size());
  return fd_jacobian([this](const Vec& p) { return ray_map(p); }, x, 1e-5);
}

Vec FirstTransform::inverse(const Vec& y) const {
  if (identity_) return map(y);
  Vec x = y;
  for (int it = 0; it < 50; ++it) {
    const Vec f = ray_map(x) - y;
    if (f.norm() <= 1e-13 * (1.0 + y.norm())) return x;
    x -= jacobian(x).partialPivLu().solve(f);
  }
  throw NumericalError("first transform inverse did not converge");
}

double FirstTransform::metric_deviation(const Vec& x) const {
  const Mat j = jacobian(x);
  const MetricEval m = rescaled_.eval(x);
  return spectral_norm(j * m.g_inv * j.transpose() - Mat::Identity(x.size(), x.size()));
}

DeviationField::DeviationField(const NormalChart& chart, double r, KernelKind kind, double s)
    : first_(chart, r), kind_(kind), measure_(GaussMeasure::at_time(chart.dim(), s)) {}

double DeviationField::valid_radius() const { return 0.95 * first_.chart().domain_radius(); }

double DeviationField::operator()(const Vec& y) const {
  if (y.norm() > valid_radius()) throw DomainError("deviation field evaluated outside the chart");
  const Vec x = first_.inverse(y);
  const MetricEval m = first_.chart().eval(x);
  const double t = 0.5 * measure_.variance;
  const double rho_x = kernel_value(kind_, measure_.n, x.squaredNorm(), t, m) * m.sqrt_det;
  const double rho_y = rho_x / first_.jacobian(x).determinant();
  return rho_y / measure_.density(y) - 1.0;
}

SecondTransform::SecondTransform(std::function<double(const Vec&)> a, double variance)
    : a_(std::move(a)), variance_(variance) {
  if (!(variance > 0.0)) throw ArgumentError("variance must be positive");
}

double SecondTransform::radial(const Vec& dir, double rho) const {
  const double a = a_(rho * dir);
  if (!(a > -1.0)) throw DomainError("second transform: A <= -1, log(1 + A) undefined");
  return variance_ * std::log1p(a) / rho;
}

Vec SecondTransform::psi(const Vec& z) const {
  const double rho = z.norm();
  if (rho == 0.0) return Vec::Zero(z.size());
  const Vec dir = z / rho;
  if (rho > 1.0) return dir * radial(dir, rho);
  // Quintic P(rho) = rho^3 (a + b rho + c rho^2) matching value, slope and curvature at rho = 1.
  constexpr double h = 1e-3;
  const double q0 = radial(dir, 1.0), qp = radial(dir, 1.0 + h), qm = radial(dir, 1.0 - h);
  const double d1 = (qp - qm) / (2.0 * h), d2 = (qp - 2.0 * q0 + qm) / (h * h);
  Eigen::Matrix3d m;
  m << 1, 1, 1, 3, 4, 5, 6, 12, 20;
  const Eigen::Vector3d c = m.partialPivLu().solve(Eigen::Vector3d(q0, d1, d2));
  return dir * (rho * rho * rho * (c[0] + rho * (c[1] + rho * c[2])));
}

Mat SecondTransform::jacobian(const Vec& z) const {
  return fd_jacobian([this](const Vec& p) { return map(p); }, z, 1e-5);
}

PushforwardRecord pushforward_deviation(const NormalChart& chart, double r, KernelKind kind, double s,
                                        double sample_radius, const QuadratureConfig& cfg) {
  if (s != -0.5 && s != -1.0) throw ArgumentError("pushforward deviation needs s = -1/2 or s = -1");
  if (!(r > 0.0) || r > 0.25 * chart.radius() * (1.0 + 1e-12))
    throw ArgumentError("pushforward deviation needs 0 < r <= delta_p / 4");
  const DeviationField field(chart, r, kind, s);
  const GaussMeasure mu = field.measure();
  const double v = mu.variance;
  const SecondTransform second([&field](const Vec& y) { return field(y); }, v);
  const int n = chart.dim();
  const double r2 = r * r;

  // Signed density ratio of the pushforward in z against the Gauss density.
  auto ratio = [&](const Vec& z, Mat* jac) {
    const Vec y = second.map(z);
    const Mat j = second.jacobian(z);
    if (jac) *jac = j;
    return (1.0 + field(y)) * std::exp(-0.5 * (y.squaredNorm() - z.squaredNorm()) / v) * j.determinant();
  };

  PushforwardRecord rec;
  rec.r = r;
  rec.s = s;
  rec.min_jacobian = kInf;
  const std::vector<double> axis = grid_samples(n, sample_radius);
  std::vector<int> idx(n, 0);
  const int m = static_cast<int>(axis.size());
  Vec z(n);
  for (;;) {
    for (int a = 0; a < n; ++a) z[a] = axis[idx[a]];
    const double rho = z.norm();
    if (rho <= sample_radius) {
      Mat j;
      rec.sup_deviation = std::max(rec.sup_deviation, std::abs(ratio(z, &j) - 1.0));
      rec.min_jacobian = std::min(rec.min_jacobian, j.determinant());
      rec.dpsi_constant = std::max(rec.dpsi_constant, spectral_norm(j - Mat::Identity(n, n)) / r2);
      rec.a_constant = std::max(rec.a_constant, std::abs(field(z)) / (r2 * std::pow(1.0 + rho, 2)));
      if (rho > 1.0) rec.psi_constant = std::max(rec.psi_constant, second.psi(z).norm() / (r2 * rho));
      rec.first_metric_deviation = std::max(rec.first_metric_deviation, field.first().metric_deviation(z) / r2);
    }
    int a = 0;
    while (a < n && ++idx[a] == m) idx[a++] = 0;
    if (a == n) break;
  }

  QuadratureConfig mc = cfg;
  mc.r_tail = std::min(cfg.r_tail, 0.9 * field.valid_radius() / std::sqrt(v));
  rec.mass = gauss_measure_integral_multi([&](const Vec& x, std::span<double> o) { o[0] = ratio(x, nullptr); }, 1, n, v,
                                          mc)[0];
  return rec;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("slope fit needs two or more points");
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) return kInf;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

PushforwardLadder pushforward_ladder(const NormalChart& chart, const std::vector<double>& radii, KernelKind kind,
                                     double s, double sample_radius, const QuadratureConfig& cfg) {
  PushforwardLadder lad;
  std::vector<double> devs;
  for (double r : radii) {
    lad.entries.push_back(pushforward_deviation(chart, r, kind, s, sample_radius, cfg));
    devs.push_back(lad.entries.back().sup_deviation);
    lad.mass_constant = std::max(lad.mass_constant, std::abs(lad.entries.back().mass - 1.0) / (r * r));
  }
  lad.slope = fit_loglog_slope(radii, devs);
  return lad;
}

ManifoldBkpRecord manifold_bkp_deficit(const MonotonicityInput& in, double r) {
  if (!(r > 0.0) || r > 0.25 * in.chart.radius() * (1.0 + 1e-12))
    throw ArgumentError("manifold BKP deficit needs 0 < r <= delta_p / 4");
  const MonotonicityInput sc = in.rescaled(r);
  const SliceQuotientTerms q = slice_quotient_terms(sc, -1.0);
  if (!(q.mass[0] > 0.0) || !(q.mass[1] > 0.0)) {
    std::ostringstream os;
    os << "manifold BKP deficit: a rescaled phase vanishes on the s = -1 slice at r = " << r
       << " (its rescaled energy then stays bounded)";
    throw DegenerateInput(os.str());
  }
  ManifoldBkpRecord rec;
  rec.r = r;
  rec.lambda_plus = q.grad[0] / q.mass[0];
  rec.lambda_minus = q.grad[1] / q.mass[1];
  rec.sum = rec.lambda_plus + rec.lambda_minus;
  rec.deficit = rec.sum - 1.0;
  rec.negative_part = std::max(0.0, -rec.deficit);
  rec.consequence_constant = rec.negative_part / (r * r);

  MonotonicityInput bare = sc;
  bare.cutoff.inner = bare.cutoff.outer = kInf;
  try {
    const SliceQuotientTerms b = slice_quotient_terms(bare, -1.0);
    rec.untruncated_deficit = b.grad[0] / b.mass[0] + b.grad[1] / b.mass[1] - 1.0;
  } catch (const DomainError&) {
    // grid pairs are not defined outside their box
    rec.untruncated_deficit = std::numeric_limits<double>::quiet_NaN();
  }
  return rec;
}

ManifoldBkpLadder manifold_bkp_ladder(const MonotonicityInput& in, const std::vector<double>& radii) {
  ManifoldBkpLadder lad;
  std::vector<double> pos_r, pos_v, un_r, un_v;
  for (double r : radii) {
    const ManifoldBkpRecord e = manifold_bkp_deficit(in, r);
    lad.entries.push_back(e);
    lad.negative_constant = std::max(lad.negative_constant, e.consequence_constant);
    if (e.negative_part > 0.0) {
      pos_r.push_back(r);
      pos_v.push_back(e.negative_part);
    }
    if (std::isfinite(e.untruncated_deficit)) {
      un_r.push_back(r);
      un_v.push_back(std::abs(e.untruncated_deficit));
    }
  }
  lad.negative_vanishes = pos_r.empty();
  if (lad.negative_vanishes)
    lad.negative_slope = kInf;
  else
    lad.negative_slope = pos_r.size() >= 2 ? fit_loglog_slope(pos_r, pos_v) : std::numeric_limits<double>::quiet_NaN();
  lad.untruncated_slope = un_r.size() >= 2 ? fit_loglog_slope(un_r, un_v) : std::numeric_limits<double>::quiet_NaN();
  return lad;
}

}  // namespace monolab
