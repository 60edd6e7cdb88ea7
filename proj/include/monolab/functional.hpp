#pragma once

#include <array>
#include <string>
#include <vector>

#include "monolab/cutoff.hpp"
#include "monolab/quadrature.hpp"
#include "monolab/solutions.hpp"

namespace monolab {

/// Everything phi(r) depends on. Phases are truncated as w = u chi.
struct MonotonicityInput {
  NormalChart chart = NormalChart::euclidean(2);
  TwoPhasePair pair;
  CutoffProfile cutoff;
  KernelSpec kernel;
  QuadratureConfig quad;

  static MonotonicityInput make(const NormalChart& chart, TwoPhasePair pair, KernelKind kind,
                                const QuadratureConfig& quad);

  /// View at scale r: chart g(r.), phases r^-2 u(r y, r^2 s), cutoff chi(r y).
  MonotonicityInput rescaled(double r) const;
};

/// (A+(r), A-(r)): kernel-weighted Dirichlet energies of w+- over S_r.
std::array<double, 2> phase_energies(const MonotonicityInput& in, double r);
double phase_energy(const MonotonicityInput& in, double r, int sign);

/// (B+(r), B-(r)): the s = -r^2 slice of the energy integrand.
std::array<double, 2> boundary_energies(const MonotonicityInput& in, double r);
double boundary_energy(const MonotonicityInput& in, double r, int sign);

double phi(const MonotonicityInput& in, double r);

struct PhiPoint {
  double r = 0.0, phi = 0.0, a_plus = 0.0, a_minus = 0.0, err_est = 0.0;
};

/// phi at each radius; err_est from refine_and_estimate_error when in.quad.levels >= 2, else 0.
std::vector<PhiPoint> phi_curve(const MonotonicityInput& in, const std::vector<double>& radii);

struct LadderEntry {
  int k = 0;
  double r = 0.0;
  double a_plus = 0.0, a_minus = 0.0;
  double b_plus = 0.0, b_minus = 0.0;
  double delta_k = 0.0;
  double phi = 0.0;
  double prop1_ratio = 0.0;  ///< NaN when A+_k A-_k = 0
  bool prop1_active = false;
  bool prop1_pass = true;
  bool prop2_active = false;
  double prop2_ratio = 0.0;  ///< A-_{k+1} / A-_k, NaN when A-_k = 0
};

struct DyadicLadder {
  int k_min = 0, k_max = 0;
  double c0 = 10.0, c1 = 1.0;
  std::vector<LadderEntry> entries;
  double next_a_plus = 0.0, next_a_minus = 0.0;  ///< A+-_{k_max + 1}
  double prop2_max_ratio = 0.0;                   ///< largest active prop2 ratio; 1 - this bounds the observed epsilon
  bool prop1_all_pass() const;
};

DyadicLadder dyadic_ladder(const MonotonicityInput& in, int k_min, int k_max, double c0, double c1);

/// Integrals of |grad_g w+-|^2 and w+-^2 against the kernel on the slice s.
struct SliceQuotientTerms {
  std::array<double, 2> grad{}, mass{};
};

SliceQuotientTerms slice_quotient_terms(const MonotonicityInput& in, double s);

struct ScaleDerivativeRecord {
  double r = 0.0;
  double a_plus = 0.0, a_minus = 0.0, b_plus = 0.0, b_minus = 0.0;  ///< rescaled, at rho = 1
  double direct = 0.0;
  double finite_difference = 0.0;
  double fd_step = 0.0;
  double scale = 0.0;       ///< 4 A+ A-, the size of the individual terms
  double mismatch = 0.0;    ///< |direct - fd| / scale
  double err_est = 0.0;     ///< relative quadrature + difference-quotient error estimate
  double lambda_plus = 0.0, lambda_minus = 0.0;  ///< Rayleigh quotients at s = -1; 0 for a vanishing phase
  bool pass = true;
};

ScaleDerivativeRecord scale_derivative(const MonotonicityInput& in, double r, double fd_step = 0.02);

struct EnergyInequalityRecord {
  double r = 0.0;
  std::array<double, 2> energy{};      ///< A+-(r)
  std::array<double, 2> slice_mass{};  ///< int w^2 dnu^{-r^2}
  std::array<double, 2> inf_mass{};    ///< inf over s in [-4r^2, -r^2] of int w^2 dnu^s
  std::array<double, 2> annulus{};     ///< double integral of w^2 over S_2r \ S_r
  std::array<double, 2> c_slice{};     ///< smallest C_M in the slice-mass estimate (fixed coefficient 1/2)
  std::array<double, 2> c_inf{};       ///< smallest C_M in the infimum estimate
  std::array<double, 2> c_annulus{};   ///< smallest C_M in the annulus estimate
};

EnergyInequalityRecord energy_inequality_check(const MonotonicityInput& in, double r);

struct EnergyLadderRecord {
  std::vector<EnergyInequalityRecord> entries;  ///< decreasing r
  double c_slice = 0.0, c_inf = 0.0, c_annulus = 0.0;  ///< fitted over the ladder
  bool stable_slice = true, stable_inf = true, stable_annulus = true;
  bool pass = true;
};

EnergyLadderRecord energy_inequality_ladder(const MonotonicityInput& in, const std::vector<double>& radii);

/// True when no value at a smaller r exceeds factor * (max over larger r) + floor; values ordered by decreasing r.
bool stable_sequence(const std::vector<double>& by_decreasing_r, double factor = 2.0, double floor = 1e-6);

struct Theorem1Record {
  double l2_plus = 0.0, l2_minus = 0.0;  ///< double integrals of u^2 over B(0, delta_p) x (-delta_p^2, 0)
  double q = 0.0;                        ///< (1 + l2_plus + l2_minus)^2
  double sup_phi = 0.0;
  double ratio = 0.0;
  double guard = 100.0;
  bool non_exploding = true;  ///< phi(4^-(k+1)) <= (1 + delta_k) phi(4^-k) whenever b+-_k >= C0
  bool pass = true;
};

Theorem1Record theorem1_check(const MonotonicityInput& in, const DyadicLadder& ladder, double guard = 100.0);

struct GrowthViolation {
  Vec x;
  double s = 0.0;
  double ratio = 0.0;
};

struct Theorem2Record {
  double epsilon = 1.0;
  double growth_constant = 0.0;         ///< fitted C_eps on samples
  std::vector<double> rho;              ///< ladder radii, decreasing
  std::vector<double> constant_at_rho;  ///< smallest C_M using pairs r <= rho
  double fitted_constant = 0.0;
  bool stable = true;
  bool pass = true;
};

/// Throws PreconditionError listing violating samples if the growth bound fails.
Theorem2Record theorem2_check(const MonotonicityInput& in, double epsilon, const DyadicLadder& ladder);

struct PositivityRecord {
  double r = 0.0;
  int sign = 1;
  double measure = 0.0;         ///< nu-measure of {w > 0} in S_{r/2} \ S_{r/4}
  double scaled_measure = 0.0;  ///< measure / r^2, the same set after rescaling to unit size
  double energy_ratio = 0.0;    ///< A(r/4) / A(r); 0 when A(r) = 0
};

PositivityRecord positivity_measure(const MonotonicityInput& in, double r, int sign);

}  // namespace monolab
