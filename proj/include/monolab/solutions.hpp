#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "monolab/geometry.hpp"

namespace monolab {

/// Uniform spatial grid on [-half_width, half_width]^n times a time mesh on [-T, 0].
struct SpaceTimeGrid {
  int n = 2;
  double half_width = 1.0;
  double h = 1.0 / 32.0;
  int per_axis = 65;           ///< nodes per axis, 2 half_width / h + 1
  std::vector<double> times;   ///< strictly increasing, times.front() = -T, times.back() = 0

  /// Steps shrink geometrically toward s = 0: dt = min(dt0, (1 - q) |s|), floored at dt0 (1 - q) q^8.
  static SpaceTimeGrid graded(int n, double half_width, double h, double q, double dt0);
  static SpaceTimeGrid uniform(int n, double half_width, double h, double T, int steps);

  double T() const { return -times.front(); }
  std::size_t node_count() const;
  Vec node(std::size_t index) const;
  std::size_t index(const int* multi) const;
  void validate() const;
};

/// Values on every node of a SpaceTimeGrid; values[m] is the spatial field at times[m].
class GridFunction {
 public:
  explicit GridFunction(SpaceTimeGrid grid);

  const SpaceTimeGrid& grid() const { return grid_; }
  std::vector<double>& level(std::size_t m) { return values_[m]; }
  const std::vector<double>& level(std::size_t m) const { return values_[m]; }

  /// Multilinear in space, linear in time.
  double value(const Vec& x, double s) const;
  /// Nodal central differences (one-sided on the boundary), interpolated like value().
  Vec gradient(const Vec& x, double s) const;

 private:
  struct Stencil {
    std::size_t base;
    double frac[kMaxDim];
  };
  Stencil locate(const Vec& x) const;
  std::size_t time_interval(double s, double& weight) const;
  double nodal_derivative(const std::vector<double>& v, std::size_t idx, int axis) const;

  SpaceTimeGrid grid_;
  std::vector<std::vector<double>> values_;
  std::vector<std::size_t> stride_;
};

struct PhaseSample {
  double value = 0.0;
  Vec grad;  ///< coordinate differential
};

/// One nonnegative phase u(x, s) of a two-phase pair.
class PhaseField {
 public:
  virtual ~PhaseField() = default;
  virtual double value(const Vec& x, double s) const = 0;
  virtual PhaseSample sample(const Vec& x, double s) const = 0;
  /// Axis coordinates at which the field has kinks (quadrature breakpoints).
  virtual std::vector<double> kinks() const { return {}; }
  virtual bool identically_zero() const { return false; }
};

/// amplitude * ((side * x.e)^+)^power * (1 + drift * s).
class RampPhase : public PhaseField {
 public:
  RampPhase(double amplitude, Vec direction, double side, double power, double drift);
  double value(const Vec& x, double s) const override;
  PhaseSample sample(const Vec& x, double s) const override;
  std::vector<double> kinks() const override { return {0.0}; }
  bool identically_zero() const override { return amplitude_ == 0.0; }

 private:
  double amplitude_;
  Vec direction_;
  double side_, power_, drift_;
};

class ZeroPhase : public PhaseField {
 public:
  double value(const Vec&, double) const override { return 0.0; }
  PhaseSample sample(const Vec& x, double) const override { return {0.0, Vec::Zero(x.size())}; }
  bool identically_zero() const override { return true; }
};

/// (side * v + shift)^+ for a grid field v.
class GridPhase : public PhaseField {
 public:
  GridPhase(std::shared_ptr<const GridFunction> field, double side, double shift = 0.0);
  double value(const Vec& x, double s) const override;
  PhaseSample sample(const Vec& x, double s) const override;

 private:
  std::shared_ptr<const GridFunction> field_;
  double side_, shift_;
};

struct AdmissibilityRecord {
  bool validity_checked = false;
  double min_plus = 0.0, min_minus = 0.0;  ///< nonnegativity margins
  double max_product = 0.0;                ///< disjointness defect max u+ u-
  double product_limit = 0.0;
  bool nonnegative = true, disjoint = true;

  bool residual_checked = false;
  double residual_min_plus = 0.0, residual_min_minus = 0.0;  ///< min of discrete (Delta_g - d_t) u + 1
  double residual_threshold = 0.0;                           ///< -tol - C sqrt(h)
  std::size_t residual_nodes = 0, interface_nodes = 0;
  std::vector<double> weak_plus, weak_minus;  ///< normalized bump pairings
  double weak_min = 0.0;
  bool supercaloric = true, weak_pass = true;

  double origin_value = 0.0;  ///< max(u+, u-) at (0, 0), recorded only

  bool pass() const { return nonnegative && disjoint && supercaloric && weak_pass; }
};

struct TwoPhasePair {
  std::string family;
  std::shared_ptr<const PhaseField> plus, minus;
  std::shared_ptr<const GridFunction> field;  ///< underlying grid field for numeric pairs
  AdmissibilityRecord admissibility;

  const PhaseField& phase(int sign) const { return sign > 0 ? *plus : *minus; }
  std::vector<double> kinks() const;
};

struct FamilyParams {
  double alpha = 1.0, beta = 1.0;  ///< TwoPlaneCaloric amplitudes
  double exponent = 0.5;           ///< PowerWedge beta in (0, 1]
  double drift = 0.5;              ///< DriftTwoPlane c in [0, 1/2]
  std::vector<double> direction;   ///< unit normal of the interface; defaults to e_1
  std::uint64_t seed = 1;          ///< NumericPair
  int modes = 4;                   ///< NumericPair source modes
  int bumps = 3;                   ///< NumericPair initial bumps
  double overlap = 0.0;            ///< NumericPair: u- = (overlap - v)^+, injects overlap when > 0
  double theta = 1.0;              ///< NumericPair solver: 1 backward Euler, 1/2 Crank-Nicolson
};

/// Null | TwoPlaneCaloric | PowerWedge | DriftTwoPlane | NumericPair (needs a grid).
TwoPhasePair make_family(const std::string& name, const FamilyParams& params, const NormalChart& chart,
                         const SpaceTimeGrid* grid = nullptr);

using SpaceTimeSampler = std::function<double(const Vec&, double)>;

/// theta-scheme for d_t u = Delta_g u - source on the grid, Dirichlet data from boundary.
GridFunction solve_heat(const NormalChart& chart, const SpaceTimeSampler& source, const std::function<double(const Vec&)>& initial,
                        const SpaceTimeSampler& boundary, const SpaceTimeGrid& grid, double theta = 1.0);

/// Divergence-form Delta_g applied to nodal values at an interior node.
double discrete_laplacian(const NormalChart& chart, const SpaceTimeGrid& grid, const std::vector<double>& u,
                          std::size_t node);

struct ResidualOptions {
  double tol = 1e-10;
  double slack = 1.0;  ///< C in the -tol - C sqrt(h) threshold
  int workers = 1;
};

AdmissibilityRecord supercaloric_residual_check(const TwoPhasePair& pair, const NormalChart& chart,
                                                const SpaceTimeGrid& grid, const ResidualOptions& opts = {});
AdmissibilityRecord pair_validity_check(const TwoPhasePair& pair, const SpaceTimeGrid& grid, double tol);

/// Runs both checks and stores the merged record in pair.admissibility.
void certify_pair(TwoPhasePair& pair, const NormalChart& chart, const SpaceTimeGrid& grid, const ResidualOptions& opts);

}  // namespace monolab
