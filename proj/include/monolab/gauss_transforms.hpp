#pragma once

#include <functional>
#include <vector>

#include "monolab/functional.hpp"

namespace monolab {

/// Centred Gauss measure (2 pi v)^(-n/2) exp(-|x|^2 / (2v)) dx.
struct GaussMeasure {
  int n = 1;
  double variance = 1.0;

  double density(const Vec& x) const;
  /// Quadrature total mass; 1 up to rounding.
  double mass(const QuadratureConfig& cfg = {}) const;
  /// The slice measure of the Euclidean heat kernel at time s < 0 has variance -2s.
  static GaussMeasure at_time(int n, double s);
};

/// A test function with its gradient; kinks lists axis coordinates where it is not smooth.
struct GaussFunction {
  std::function<PhaseSample(const Vec&)> eval;
  std::vector<double> kinks{0.0};
};

/// ((side * e.x)^+)^power.
GaussFunction half_space_power(const Vec& direction, double power, double side = 1.0);
/// The constant c.
GaussFunction constant_function(int n, double c);

struct PoincareRecord {
  double average = 0.0;  ///< int f dnu
  double l2 = 0.0;       ///< int f^2 dnu
  double energy = 0.0;   ///< int |grad f|^2 dnu
  double lhs = 0.0;      ///< log(1 / average) * l2
  double rhs = 0.0;      ///< 2 * energy
  double margin = 0.0;   ///< rhs - lhs
  bool in_hypothesis = true;  ///< average < 1 and a nontrivial gradient
  bool pass = true;           ///< lhs <= rhs + tol
};

/// Throws DegenerateInput when int f dnu = 0.
PoincareRecord gaussian_poincare_check(const GaussFunction& f, const GaussMeasure& mu, double tol = 1e-9,
                                       const QuadratureConfig& cfg = {});

/// int |grad f|^2 / int f^2; throws DegenerateInput when the denominator vanishes.
double rayleigh_quotient(const GaussFunction& f, const GaussMeasure& mu, const QuadratureConfig& cfg = {});

struct BkpRecord {
  double lambda_plus = 0.0, lambda_minus = 0.0, sum = 0.0, deficit = 0.0;
  bool pass = true;  ///< deficit >= -tol
};

/// Throws PreconditionError if f+ f- > 0 on a quadrature node, DegenerateInput if either vanishes.
BkpRecord bkp_sum(const GaussFunction& f_plus, const GaussFunction& f_minus, const GaussMeasure& mu, double tol = 1e-3,
                  const QuadratureConfig& cfg = {});

/// y = phi_1(x) = int_0^1 gbar^(1/2)(t x) x dt on the rescaled chart gbar = g(r .).
class FirstTransform {
 public:
  FirstTransform(const NormalChart& chart, double r);

  const NormalChart& chart() const { return rescaled_; }
  double r() const { return r_; }
  /// Ray integral by 16-point Gauss-Legendre; exact identity on Gauss-lemma charts up to rounding.
  Vec ray_map(const Vec& x) const;
  Vec map(const Vec& x) const;
  Mat jacobian(const Vec& x) const;  ///< dy/dx
  Vec inverse(const Vec& y) const;
  /// || J gbar^-1 J^T - I ||_2: how far |grad_gbar w|^2 is from the flat |grad_y w|^2.
  double metric_deviation(const Vec& x) const;
  bool is_identity() const { return identity_; }

 private:
  NormalChart rescaled_;
  double r_;
  bool identity_;
};

/// Density of the kernel slice measure pushed through the first map, relative to the Gauss density:
/// A(y) = rho_y(y) / gauss(y) - 1.
class DeviationField {
 public:
  DeviationField(const NormalChart& chart, double r, KernelKind kind, double s);
  double operator()(const Vec& y) const;
  const FirstTransform& first() const { return first_; }
  GaussMeasure measure() const { return measure_; }
  /// Largest |y| at which the field is defined.
  double valid_radius() const;

 private:
  FirstTransform first_;
  KernelKind kind_;
  GaussMeasure measure_;
};

/// z -> y = z + psi(z) with z.psi(z) = v log(1 + A(z)) for |z| > 1, v the Gauss variance (the identity
/// reads z.psi = log(1 + A) at v = 1). Inside B_1, psi = zhat P(|z|) with a quintic P, P = O(|z|^3) at
/// the origin and matching the outer radial profile to second order at |z| = 1.
class SecondTransform {
 public:
  SecondTransform(std::function<double(const Vec&)> a, double variance = 1.0);
  Vec psi(const Vec& z) const;
  Vec map(const Vec& z) const { return z + psi(z); }
  Mat jacobian(const Vec& z) const;  ///< dy/dz = I + D psi

 private:
  double radial(const Vec& dir, double rho) const;  ///< v log(1 + A(rho dir)) / rho
  std::function<double(const Vec&)> a_;
  double variance_;
};

struct PushforwardRecord {
  double r = 0.0, s = 0.0;
  double sup_deviation = 0.0;  ///< sup over |z| <= sample_radius of |pushforward density / gauss - 1|
  double mass = 0.0;           ///< total pushforward mass in z coordinates
  double a_constant = 0.0;     ///< max |A(y)| / (r^2 (1 + |y|)^2)
  double psi_constant = 0.0;   ///< max |psi(z)| / (r^2 |z|) on 1 < |z|
  double dpsi_constant = 0.0;  ///< max |D psi(z)| / r^2
  double min_jacobian = 0.0;   ///< smallest det(dy/dz) on samples
  double first_metric_deviation = 0.0;  ///< max || J gbar^-1 J^T - I || / r^2
};

/// s in {-1/2, -1}; r <= delta_p / 4.
PushforwardRecord pushforward_deviation(const NormalChart& chart, double r, KernelKind kind, double s,
                                        double sample_radius = 2.0, const QuadratureConfig& cfg = {});

/// Least-squares slope of log y against log x. +inf when every y is zero.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct PushforwardLadder {
  std::vector<PushforwardRecord> entries;
  double slope = 0.0;          ///< of sup_deviation against r
  double mass_constant = 0.0;  ///< max |mass - 1| / r^2
};

PushforwardLadder pushforward_ladder(const NormalChart& chart, const std::vector<double>& radii, KernelKind kind,
                                     double s, double sample_radius = 2.0, const QuadratureConfig& cfg = {});

struct ManifoldBkpRecord {
  double r = 0.0;
  double lambda_plus = 0.0, lambda_minus = 0.0, sum = 0.0, deficit = 0.0;
  double negative_part = 0.0;          ///< max(0, -deficit)
  double consequence_constant = 0.0;   ///< negative_part / r^2, the C in lambda+ + lambda- >= 1 - C r^2
  double untruncated_deficit = 0.0;    ///< same quotients with the cutoff removed: curvature effect alone
};

/// Rayleigh quotients of the rescaled phases at s = -1; throws DegenerateInput if a phase vanishes there.
ManifoldBkpRecord manifold_bkp_deficit(const MonotonicityInput& in, double r);

struct ManifoldBkpLadder {
  std::vector<ManifoldBkpRecord> entries;
  double negative_slope = 0.0;    ///< +inf when the negative part vanishes on the whole ladder
  bool negative_vanishes = false;
  double negative_constant = 0.0; ///< max negative_part / r^2
  double untruncated_slope = 0.0; ///< of |untruncated_deficit|
};

ManifoldBkpLadder manifold_bkp_ladder(const MonotonicityInput& in, const std::vector<double>& radii);

}  // namespace monolab
