#include "monolab/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tangential coefficient of the constant-curvature metric as a function of w = K |x|^2:
// F(w) = (S(w) - 1) / w with S(w) = sin^2(sqrt w) / w (sinh for w < 0).
struct SeriesJet {
  double f = 0.0, df = 0.0, d2f = 0.0;
};

SeriesJet tangential_series(double w) {
  SeriesJet out;
  if (std::abs(w) <= 4.0) {
    // a_m = (-1)^(m+1) 2^(2m-1) / (2m)!, F = sum_{m>=2} a_m w^(m-2).
    double a = 1.0;  // a_1
    double wp2 = 0.0, wp1 = 0.0, wp = 1.0;  // w^(p-2), w^(p-1), w^p
    for (int m = 2; m < 30; ++m) {
      a *= -4.0 / ((2.0 * m - 1.0) * (2.0 * m));
      const int p = m - 2;
      out.f += a * wp;
      out.df += a * p * wp1;
      out.d2f += a * p * (p - 1) * wp2;
      wp2 = wp1;
      wp1 = wp;
      wp *= w;
    }
    return out;
  }
  double n0, n1, n2;
  if (w > 0) {
    const double r = std::sqrt(w);
    n0 = 1.0 - std::cos(2 * r);
    n1 = std::sin(2 * r) / r;
    n2 = std::cos(2 * r) / w - std::sin(2 * r) / (2 * w * r);
  } else {
    const double m = -w, r = std::sqrt(m);
    n0 = 1.0 - std::cosh(2 * r);
    n1 = std::sinh(2 * r) / r;
    n2 = std::cosh(2 * r) / w + std::sinh(2 * r) / (2 * m * r);
  }
  const double s0 = n0 / (2 * w);
  const double s1 = n1 / (2 * w) - n0 / (2 * w * w);
  const double s2 = n2 / (2 * w) - n1 / (w * w) + n0 / (w * w * w);
  out.f = (s0 - 1.0) / w;
  out.df = (s1 - out.f) / w;
  out.d2f = (s2 - 2 * out.df) / w;
  return out;
}

Vec shape_wavevector(int n, int shape) {
  static constexpr double k0[kMaxDim] = {1.0, 2.0, 3.0, 4.0};
  static constexpr double k1[kMaxDim] = {2.0, -1.0, 1.0, -2.0};
  Vec k(n);
  for (int i = 0; i < n; ++i) k[i] = shape == 0 ? k0[i] : k1[i];
  return k;
}

// M(p) = |p|^2 I - p p^T and its derivatives.
double dM(const Vec& p, int k, int i, int j) {
  return 2.0 * p[k] * (i == j) - (i == k) * p[j] - p[i] * (j == k);
}

double d2M(int k, int l, int i, int j) {
  return 2.0 * (k == l) * (i == j) - (i == k) * (j == l) - (i == l) * (j == k);
}

Mat inverse_sqrt_spd(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const Vec ev = es.eigenvalues();
  Mat d = Mat::Zero(g.rows(), g.cols());
  for (int i = 0; i < g.rows(); ++i) d(i, i) = 1.0 / std::sqrt(ev[i]);
  return es.eigenvectors() * d * es.eigenvectors().transpose();
}

// Components of a rank-r tensor (flattened row-major, dimension n) in the frame E.
std::vector<double> to_frame(std::vector<double> t, int n, int rank, const Mat& e) {
  std::vector<double> tmp(t.size());
  int stride = 1;
  for (int axis = rank - 1; axis >= 0; --axis) {
    const std::size_t total = t.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
      const int a = static_cast<int>(idx / stride) % n;
      const std::size_t base = idx - static_cast<std::size_t>(a) * stride;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += t[base + static_cast<std::size_t>(i) * stride] * e(i, a);
      tmp[idx] = acc;
    }
    t.swap(tmp);
    stride *= n;
  }
  return t;
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

NormalChart NormalChart::euclidean(int n, double radius) {
  if (n < 1 || n > kMaxDim) throw ArgumentError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  if (!(radius > 0.0 && radius <= 1.0)) throw ArgumentError("chart radius must lie in (0, 1]");
  NormalChart c;
  c.n_ = n;
  c.radius_ = radius;
  c.domain_radius_ = kInf;
  c.family_ = MetricFamily::Euclidean;
  return c;
}

NormalChart NormalChart::constant_curvature(int n, double curvature, double radius) {
  NormalChart c = euclidean(n, radius);
  c.family_ = MetricFamily::ConstCurvature;
  c.curvature_ = curvature;
  // Conjugate point at pi / sqrt(K); the metric degenerates there.
  c.domain_radius_ = curvature > 0 ? M_PI / std::sqrt(curvature) : kInf;
  if (radius >= c.domain_radius_) throw ArgumentError("chart radius exceeds injectivity radius");
  return c;
}

NormalChart NormalChart::perturbed(int n, double eps, int shape, double radius) {
  if (std::abs(eps) > 0.1) throw ArgumentError("perturbation amplitude must satisfy |eps| <= 0.1");
  if (shape != 0 && shape != 1) throw ArgumentError("unknown perturbation shape id " + std::to_string(shape));
  NormalChart c = euclidean(n, radius);
  c.family_ = MetricFamily::Perturbed;
  c.epsilon_ = eps;
  c.shape_ = shape;
  // a(x) <= 3/2, so the tangential eigenvalue 1 + eps a |x|^2 stays positive inside this radius.
  c.domain_radius_ = eps < 0 ? 1.0 / std::sqrt(1.5 * -eps) : kInf;
  return c;
}

NormalChart NormalChart::custom(int n, double radius, MetricSampler metric, double domain_radius) {
  NormalChart c = euclidean(n, radius);
  if (!metric) throw ArgumentError("custom chart requires a metric sampler");
  if (!(domain_radius >= radius)) throw ArgumentError("domain radius must cover the chart radius");
  c.family_ = MetricFamily::Custom;
  c.sampler_ = std::move(metric);
  c.domain_radius_ = domain_radius;
  return c;
}

std::string NormalChart::tag() const {
  std::ostringstream os;
  switch (family_) {
    case MetricFamily::Euclidean: os << "Euclidean"; break;
    case MetricFamily::ConstCurvature: os << "ConstCurvature(" << curvature_ << ")"; break;
    case MetricFamily::Perturbed: os << "Perturbed(" << epsilon_ << "," << shape_ << ")"; break;
    case MetricFamily::Custom: os << "Custom"; break;
  }
  if (scale_ != 1.0) os << "@scale=" << scale_;
  return os.str();
}

bool NormalChart::in_domain(const Vec& x) const {
  return x.size() == n_ && scale_ * x.norm() < domain_radius_;
}

void NormalChart::require_in_domain(const Vec& x) const {
  if (x.size() != n_) throw ArgumentError("point dimension does not match chart");
  if (!in_domain(x)) {
    std::ostringstream os;
    os << "point |x| = " << x.norm() << " outside chart domain (radius " << domain_radius() << ")";
    throw DomainError(os.str());
  }
}

NormalChart::CoefJet NormalChart::coefficient(const Vec& p, int order) const {
  CoefJet cj;
  cj.grad = Vec::Zero(n_);
  cj.hess = Mat::Zero(n_, n_);
  if (family_ == MetricFamily::ConstCurvature) {
    const double k = curvature_;
    const double q = p.squaredNorm();
    const SeriesJet s = tangential_series(k * q);
    cj.c = k * s.f;
    if (order >= 1) {
      const double c1 = k * k * s.df;
      cj.grad = 2.0 * c1 * p;
      if (order >= 2) {
        const double c2 = k * k * k * s.d2f;
        cj.hess = 4.0 * c2 * p * p.transpose() + 2.0 * c1 * Mat::Identity(n_, n_);
      }
    }
  } else if (family_ == MetricFamily::Perturbed) {
    const Vec k = shape_wavevector(n_, shape_);
    const double phase = k.dot(p);
    const double sn = std::sin(phase), cs = std::cos(phase);
    const double e = epsilon_;
    if (shape_ == 0) {
      cj.c = e * (1.0 + 0.5 * sn);
      cj.grad = e * 0.5 * cs * k;
      cj.hess = -e * 0.5 * sn * k * k.transpose();
    } else {
      cj.c = e * (1.0 + 0.5 * cs);
      cj.grad = -e * 0.5 * sn * k;
      cj.hess = -e * 0.5 * cs * k * k.transpose();
    }
  }
  return cj;
}

MetricEval NormalChart::eval(const Vec& x) const {
  MetricEval m;
  const Vec p = scale_ * x;
  if (family_ == MetricFamily::Custom) {
    m.g = sampler_(p);
    Eigen::LLT<Mat> llt(m.g);
    if (llt.info() != Eigen::Success) throw NumericalError("custom metric sample is not positive definite");
    m.g_inv = llt.solve(Mat::Identity(n_, n_));
    double det = 1.0;
    const Mat l = llt.matrixL();
    for (int i = 0; i < n_; ++i) det *= l(i, i);
    m.sqrt_det = det;
    return m;
  }
  if (family_ == MetricFamily::Euclidean || n_ == 1) {
    m.g = Mat::Identity(n_, n_);
    m.g_inv = m.g;
    m.sqrt_det = 1.0;
    return m;
  }
  const double q = p.squaredNorm();
  const double c = coefficient(p, 0).c;
  const double lam = 1.0 + c * q;
  const Mat id = Mat::Identity(n_, n_);
  const Mat ppt = p * p.transpose();
  m.g = id + c * (q * id - ppt);
  if (q > 0.0) {
    m.g_inv = id / lam + (1.0 - 1.0 / lam) * ppt / q;
  } else {
    m.g_inv = id;
  }
  m.sqrt_det = std::pow(lam, 0.5 * (n_ - 1));
  return m;
}

MetricJet NormalChart::custom_jet(const Vec& p) const {
  MetricJet j;
  const double h = 1e-3 * radius_;
  j.g = sampler_(p);
  auto d1 = [&](const std::function<Mat(const Vec&)>& f, const Vec& at, int k) {
    Vec e = Vec::Zero(n_);
    e[k] = h;
    return Mat((-f(at + 2 * e) + 8 * f(at + e) - 8 * f(at - e) + f(at - 2 * e)) / (12 * h));
  };
  for (int k = 0; k < n_; ++k) {
    j.dg[k] = d1(sampler_, p, k);
    for (int l = 0; l < n_; ++l) {
      auto dk = [&](const Vec& at) { return d1(sampler_, at, k); };
      j.d2g[k][l] = d1(dk, p, l);
    }
  }
  return j;
}

MetricJet NormalChart::jet(const Vec& x) const {
  const Vec p = scale_ * x;
  MetricJet j;
  if (family_ == MetricFamily::Custom) {
    j = custom_jet(p);
  } else {
    const Mat id = Mat::Identity(n_, n_);
    const double q = p.squaredNorm();
    const CoefJet cj = coefficient(p, 2);
    const Mat mm = q * id - p * p.transpose();
    j.g = id + cj.c * mm;
    for (int k = 0; k < n_; ++k) {
      Mat dmk(n_, n_);
      for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b) dmk(a, b) = dM(p, k, a, b);
      j.dg[k] = cj.grad[k] * mm + cj.c * dmk;
    }
    for (int k = 0; k < n_; ++k) {
      for (int l = 0; l < n_; ++l) {
        Mat d2(n_, n_);
        for (int a = 0; a < n_; ++a)
          for (int b = 0; b < n_; ++b)
            d2(a, b) = cj.hess(k, l) * mm(a, b) + cj.grad[k] * dM(p, l, a, b) + cj.grad[l] * dM(p, k, a, b) +
                       cj.c * d2M(k, l, a, b);
        j.d2g[k][l] = d2;
      }
    }
  }
  for (int k = 0; k < n_; ++k) {
    j.dg[k] *= scale_;
    for (int l = 0; l < n_; ++l) j.d2g[k][l] *= scale_ * scale_;
  }
  return j;
}

NormalChart NormalChart::rescaled(double r) const {
  if (!(r > 0.0)) throw ArgumentError("rescale factor must be positive");
  if (r > 1.0) throw ArgumentError("rescale factor must not exceed 1");
  NormalChart c = *this;
  c.scale_ = scale_ * r;
  return c;
}

MetricEval metric_at(const NormalChart& chart, const Vec& x) {
  chart.require_in_domain(x);
  return chart.eval(x);
}

double distance_to_center(const NormalChart& chart, const Vec& x) {
  chart.require_in_domain(x);
  return x.norm();
}

Christoffel christoffel_from_jet(const MetricJet& jet, const Mat& g_inv) {
  const int n = static_cast<int>(jet.g.rows());
  Christoffel ch;
  ch.n = n;
  for (int k = 0; k < n; ++k) {
    ch.gamma[k] = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) acc += g_inv(k, l) * (jet.dg[i](j, l) + jet.dg[j](i, l) - jet.dg[l](i, j));
        ch.gamma[k](i, j) = ch.gamma[k](j, i) = 0.5 * acc;
      }
  }
  return ch;
}

Christoffel christoffel_at(const NormalChart& chart, const Vec& x) {
  chart.require_in_domain(x);
  const MetricJet jet = chart.jet(x);
  return christoffel_from_jet(jet, jet.g.inverse());
}

Tensor4 riemann_at(const NormalChart& chart, const Vec& x) {
  chart.require_in_domain(x);
  const int n = chart.dim();
  const MetricJet jet = chart.jet(x);
  const Mat g_inv = jet.g.inverse();
  const Christoffel ch = christoffel_from_jet(jet, g_inv);

  std::array<Mat, kMaxDim> dginv;
  for (int i = 0; i < n; ++i) dginv[i] = -g_inv * jet.dg[i] * g_inv;

  // dgamma[i][l](j, k) = d_i Gamma^l_jk
  std::array<std::array<Mat, kMaxDim>, kMaxDim> dgamma;
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) {
      dgamma[i][l] = Mat::Zero(n, n);
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double acc = 0.0;
          for (int m = 0; m < n; ++m) {
            const double t = jet.dg[j](k, m) + jet.dg[k](j, m) - jet.dg[m](j, k);
            const double dt = jet.d2g[i][j](k, m) + jet.d2g[i][k](j, m) - jet.d2g[i][m](j, k);
            acc += dginv[i](l, m) * t + g_inv(l, m) * dt;
          }
          dgamma[i][l](j, k) = 0.5 * acc;
        }
    }

  Tensor4 r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double up = dgamma[i][l](j, k) - dgamma[j][l](i, k);
          for (int m = 0; m < n; ++m) up += ch(l, i, m) * ch(m, j, k) - ch(l, j, m) * ch(m, i, k);
          // store R^l_ijk temporarily at (i, j, k, l)
          r(i, j, k, l) = up;
        }
  Tensor4 lower(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double acc = 0.0;
          for (int m = 0; m < n; ++m) acc += jet.g(k, m) * r(i, j, l, m);
          lower(i, j, k, l) = acc;
        }
  return lower;
}

CurvatureNorms curvature_norms_at(const NormalChart& chart, const Vec& x) {
  const int n = chart.dim();
  CurvatureNorms out;
  if (n == 1) return out;
  const MetricEval m = metric_at(chart, x);
  const Tensor4 r = riemann_at(chart, x);
  const Christoffel ch = christoffel_at(chart, x);
  const Mat frame = inverse_sqrt_spd(m.g);
  out.riemann = sup_abs(to_frame(r.data, n, 4, frame));

  // nabla_m R_ijkl: central differences of R plus connection terms.
  const double h = 1e-4 * std::max(chart.radius(), 1e-12);
  const std::size_t n4 = r.data.size();
  std::vector<double> cov(n4 * static_cast<std::size_t>(n), 0.0);
  for (int mu = 0; mu < n; ++mu) {
    Vec e = Vec::Zero(n);
    e[mu] = h;
    const Tensor4 rp = riemann_at(chart, x + e);
    const Tensor4 rm = riemann_at(chart, x - e);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double v = (rp(i, j, k, l) - rm(i, j, k, l)) / (2 * h);
            for (int p = 0; p < n; ++p) {
              v -= ch(p, mu, i) * r(p, j, k, l) + ch(p, mu, j) * r(i, p, k, l) + ch(p, mu, k) * r(i, j, p, l) +
                   ch(p, mu, l) * r(i, j, k, p);
            }
            cov[static_cast<std::size_t>(mu) * n4 + (((i * n + j) * n + k) * n + l)] = v;
          }
  }
  out.covariant = sup_abs(to_frame(cov, n, 5, frame));
  return out;
}

double curvature_bound_estimate(const NormalChart& chart, std::span<const Vec> samples) {
  if (samples.empty()) throw ArgumentError("curvature estimate needs at least one sample");
  double sup = 0.0;
  for (const Vec& x : samples) {
    if (x.norm() > 0.5 * chart.radius() * (1 + 1e-12))
      throw ArgumentError("curvature samples must lie in B(0, radius/2)");
    const CurvatureNorms c = curvature_norms_at(chart, x);
    sup = std::max(sup, c.riemann + c.covariant);
  }
  return sup;
}

NormalChart rescale_chart(const NormalChart& chart, double r) { return chart.rescaled(r); }

double laplace_beltrami(const NormalChart& chart, const Vec& x, const Vec& grad, const Mat& hess) {
  const int n = chart.dim();
  const MetricJet jet = chart.jet(x);
  const Mat g_inv = jet.g.inverse();
  const Christoffel ch = christoffel_from_jet(jet, g_inv);
  double lap = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double conn = 0.0;
      for (int k = 0; k < n; ++k) conn += ch(k, i, j) * grad[k];
      lap += g_inv(i, j) * (hess(i, j) - conn);
    }
  return lap;
}

double constant_curvature_density(int n, double curvature, double rho) {
  if (rho == 0.0 || curvature == 0.0) return 1.0;
  const double sk = std::sqrt(std::abs(curvature));
  const double sn = curvature > 0 ? std::sin(sk * rho) / (sk * rho) : std::sinh(sk * rho) / (sk * rho);
  return std::pow(sn, n - 1);
}

std::vector<Vec> sample_ball(int n, double radius, int per_axis) {
  std::vector<Vec> out;
  if (per_axis < 1) return out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const double step = per_axis == 1 ? 0.0 : 2.0 * radius / (per_axis - 1);
  while (true) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = per_axis == 1 ? 0.0 : -radius + step * idx[static_cast<std::size_t>(i)];
    if (x.norm() <= radius) out.push_back(x);
    int a = 0;
    while (a < n && ++idx[static_cast<std::size_t>(a)] == per_axis) idx[static_cast<std::size_t>(a++)] = 0;
    if (a == n) break;
  }
  return out;
}

}  // namespace monolab
