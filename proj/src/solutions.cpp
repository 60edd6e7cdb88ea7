#include "monolab/solutions.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "monolab/parallel.hpp"
#include "monolab/quadrature.hpp"

namespace monolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using ColMatrix = Eigen::SparseMatrix<double>;

// SplitMix64: small, portable and fully specified, so seeds reproduce across platforms.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

void multi_index(const SpaceTimeGrid& grid, std::size_t idx, int* out) {
  for (int a = 0; a < grid.n; ++a) {
    out[a] = static_cast<int>(idx % grid.per_axis);
    idx /= grid.per_axis;
  }
}

bool is_boundary(const SpaceTimeGrid& grid, const int* mi) {
  for (int a = 0; a < grid.n; ++a)
    if (mi[a] == 0 || mi[a] == grid.per_axis - 1) return true;
  return false;
}

Mat flux_tensor(const NormalChart& chart, const Vec& x) {
  const MetricEval m = chart.eval(x);
  return m.sqrt_det * m.g_inv;
}

// Calls emit(column, coefficient) for the divergence-form stencil of Delta_g at an interior node.
template <class Emit>
void laplacian_row(const NormalChart& chart, const SpaceTimeGrid& grid, std::size_t node, Emit&& emit) {
  const int n = grid.n;
  int mi[kMaxDim];
  multi_index(grid, node, mi);
  const Vec x = grid.node(node);
  const double h = grid.h, h2 = h * h;
  const double inv_vol = 1.0 / chart.eval(x).sqrt_det;
  std::size_t stride[kMaxDim];
  stride[0] = 1;
  for (int a = 1; a < n; ++a) stride[a] = stride[a - 1] * grid.per_axis;

  double centre = 0.0;
  for (int a = 0; a < n; ++a) {
    Vec xp = x, xm = x;
    xp[a] += 0.5 * h;
    xm[a] -= 0.5 * h;
    const double ap = flux_tensor(chart, xp)(a, a), am = flux_tensor(chart, xm)(a, a);
    emit(node + stride[a], inv_vol * ap / h2);
    emit(node - stride[a], inv_vol * am / h2);
    centre -= (ap + am) / h2;
    if (n == 1) continue;
    Vec yp = x, ym = x;
    yp[a] += h;
    ym[a] -= h;
    const Mat Ap = flux_tensor(chart, yp), Am = flux_tensor(chart, ym);
    for (int b = 0; b < n; ++b) {
      if (b == a) continue;
      const double cp = inv_vol * Ap(a, b) / (4.0 * h2), cm = inv_vol * Am(a, b) / (4.0 * h2);
      emit(node + stride[a] + stride[b], cp);
      emit(node + stride[a] - stride[b], -cp);
      emit(node - stride[a] + stride[b], -cm);
      emit(node - stride[a] - stride[b], cm);
    }
  }
  emit(node, inv_vol * centre);
}

RowMatrix assemble_laplacian(const NormalChart& chart, const SpaceTimeGrid& grid) {
  const std::size_t N = grid.node_count();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * (1 + 2 * grid.n + 2 * grid.n * (grid.n - 1)));
  int mi[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    multi_index(grid, i, mi);
    if (is_boundary(grid, mi)) continue;
    laplacian_row(chart, grid, i, [&](std::size_t col, double c) {
      trip.emplace_back(static_cast<int>(i), static_cast<int>(col), c);
    });
  }
  RowMatrix L(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

void require_grid_in_chart(const NormalChart& chart, const SpaceTimeGrid& grid) {
  if (grid.n != chart.dim()) throw ArgumentError("grid dimension does not match chart");
  Vec corner = Vec::Constant(grid.n, grid.half_width);
  chart.require_in_domain(corner);
}

Vec unit_direction(const std::vector<double>& dir, int n) {
  Vec e = Vec::Zero(n);
  if (dir.empty()) {
    e[0] = 1.0;
    return e;
  }
  if (static_cast<int>(dir.size()) != n) throw ArgumentError("pair.direction must have one entry per dimension");
  for (int i = 0; i < n; ++i) e[i] = dir[i];
  if (!(e.norm() > 0.0)) throw ArgumentError("pair.direction must be nonzero");
  return e / e.norm();
}

struct BumpSpec {
  Vec centre;
  double rho;
  double s_centre, s_half;
};

std::vector<BumpSpec> weak_battery(const SpaceTimeGrid& grid) {
  const double d = grid.half_width, T = grid.T();
  std::vector<Vec> centres{Vec::Zero(grid.n)};
  for (int a = 0; a < grid.n; ++a)
    for (double sg : {1.0, -1.0}) {
      Vec c = Vec::Zero(grid.n);
      c[a] = sg * 0.25 * d;
      centres.push_back(c);
    }
  std::vector<BumpSpec> out;
  for (const auto& [sc, sw] : {std::pair{-0.5 * T, 0.25 * T}, std::pair{-0.12 * T, 0.08 * T}})
    for (const Vec& c : centres) out.push_back({c, 0.2 * d, sc, sw});
  return out;
}

// Normalized pairing of (Delta_g - d_t) u + 1 with a nonnegative bump, after integration by parts.
std::pair<double, double> weak_pairing(const TwoPhasePair& pair, const NormalChart& chart, const BumpSpec& b) {
  const int n = chart.dim();
  const auto& gl = gauss_legendre(16);
  std::vector<double> breaks;
  for (int a = 0; a < n; ++a) breaks.push_back(-b.centre[a]);
  const double rho2 = b.rho * b.rho;
  auto integrand = [&](const Vec& y, std::span<double> out) {
    const double q = y.squaredNorm() / rho2;
    if (q >= 1.0) return;
    const Vec x = b.centre + y;
    const double om = 1.0 - q;
    const double B = om * om * om * om;
    const Vec grad = -8.0 * om * om * om / rho2 * y;
    const Mat hess = 48.0 * om * om / (rho2 * rho2) * y * y.transpose() - 8.0 * om * om * om / rho2 * Mat::Identity(n, n);
    const double lapB = laplace_beltrami(chart, x, grad, hess);
    const double vol = chart.eval(x).sqrt_det;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double tau = gl.nodes[k];
      const double s = b.s_centre + b.s_half * tau;
      const double w = gl.weights[k] * b.s_half * vol;
      const double ot = 1.0 - tau * tau;
      const double Ts = ot * ot * ot * ot;
      const double dTs = -8.0 * tau * ot * ot * ot / b.s_half;
      const double adj = Ts * lapB + dTs * B;
      out[0] += w * (pair.plus->value(x, s) * adj + B * Ts);
      out[1] += w * (pair.minus->value(x, s) * adj + B * Ts);
      out[2] += w * B * Ts;
    }
  };
  const auto v = box_integral_multi(integrand, 3, n, b.rho, breaks, 0.5 * b.rho, 8);
  return {v[0] / v[2], v[1] / v[2]};
}

}  // namespace

// ---------------------------------------------------------------------------- grid

SpaceTimeGrid SpaceTimeGrid::graded(int n, double half_width, double h, double q, double dt0) {
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("grid.q must lie in (0, 1)");
  if (!(dt0 > 0.0)) throw ArgumentError("grid.dt0 must be positive");
  SpaceTimeGrid g;
  g.n = n;
  g.half_width = half_width;
  g.h = h;
  g.per_axis = static_cast<int>(std::lround(2.0 * half_width / h)) + 1;
  const double T = half_width * half_width;
  const double floor = dt0 * (1.0 - q) * std::pow(q, 8);
  double s = -T;
  g.times.push_back(s);
  while (s < 0.0) {
    const double dt = std::max(std::min(dt0, (1.0 - q) * -s), floor);
    s = (-s <= dt * (1.0 + 1e-9)) ? 0.0 : s + dt;
    g.times.push_back(s);
  }
  g.validate();
  return g;
}

SpaceTimeGrid SpaceTimeGrid::uniform(int n, double half_width, double h, double T, int steps) {
  if (steps < 1) throw ArgumentError("need at least one time step");
  if (!(T > 0.0)) throw ArgumentError("time span must be positive");
  SpaceTimeGrid g;
  g.n = n;
  g.half_width = half_width;
  g.h = h;
  g.per_axis = static_cast<int>(std::lround(2.0 * half_width / h)) + 1;
  for (int m = 0; m <= steps; ++m) g.times.push_back(m == steps ? 0.0 : -T + T * m / steps);
  g.validate();
  return g;
}

void SpaceTimeGrid::validate() const {
  if (n < 1 || n > kMaxDim) throw ArgumentError("grid dimension out of range");
  if (!(h > 0.0) || !(half_width > 0.0)) throw ArgumentError("grid.h and half width must be positive");
  if (std::abs((per_axis - 1) * h - 2.0 * half_width) > 1e-9 * half_width)
    throw ArgumentError("grid.h must divide the cube width");
  if (per_axis < 5 || (per_axis - 1) % 2 != 0) throw ArgumentError("grid needs an even number (>= 4) of cells per axis");
  if (times.size() < 2 || times.back() != 0.0) throw ArgumentError("time mesh must end at 0");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ArgumentError("time mesh must be strictly increasing");
}

std::size_t SpaceTimeGrid::node_count() const {
  std::size_t c = 1;
  for (int a = 0; a < n; ++a) c *= static_cast<std::size_t>(per_axis);
  return c;
}

Vec SpaceTimeGrid::node(std::size_t index) const {
  Vec x(n);
  for (int a = 0; a < n; ++a) {
    x[a] = -half_width + h * static_cast<double>(index % per_axis);
    index /= per_axis;
  }
  return x;
}

std::size_t SpaceTimeGrid::index(const int* multi) const {
  std::size_t idx = 0;
  for (int a = n - 1; a >= 0; --a) idx = idx * per_axis + static_cast<std::size_t>(multi[a]);
  return idx;
}

// ---------------------------------------------------------------------------- grid function

GridFunction::GridFunction(SpaceTimeGrid grid) : grid_(std::move(grid)) {
  grid_.validate();
  values_.assign(grid_.times.size(), std::vector<double>(grid_.node_count(), 0.0));
  stride_.resize(grid_.n);
  stride_[0] = 1;
  for (int a = 1; a < grid_.n; ++a) stride_[a] = stride_[a - 1] * grid_.per_axis;
}

GridFunction::Stencil GridFunction::locate(const Vec& x) const {
  Stencil st{0, {0, 0, 0, 0}};
  const double tol = 1e-12 * grid_.half_width;
  for (int a = 0; a < grid_.n; ++a) {
    if (std::abs(x[a]) > grid_.half_width + tol) {
      std::ostringstream os;
      os << "point coordinate " << x[a] << " outside grid cube of half width " << grid_.half_width;
      throw DomainError(os.str());
    }
    const double f = (x[a] + grid_.half_width) / grid_.h;
    const int i = std::clamp(static_cast<int>(std::floor(f)), 0, grid_.per_axis - 2);
    st.base += stride_[a] * i;
    st.frac[a] = f - i;
  }
  return st;
}

std::size_t GridFunction::time_interval(double s, double& weight) const {
  const auto& t = grid_.times;
  if (s < t.front() - 1e-12 * grid_.T() || s > 0.0) throw DomainError("time outside grid range");
  std::size_t m = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
  m = std::clamp<std::size_t>(m, 1, t.size() - 1) - 1;
  weight = std::clamp((s - t[m]) / (t[m + 1] - t[m]), 0.0, 1.0);
  return m;
}

double GridFunction::nodal_derivative(const std::vector<double>& v, std::size_t idx, int axis) const {
  const int i = static_cast<int>((idx / stride_[axis]) % grid_.per_axis);
  const std::size_t s = stride_[axis];
  const double h = grid_.h;
  if (i == 0) return (-3.0 * v[idx] + 4.0 * v[idx + s] - v[idx + 2 * s]) / (2.0 * h);
  if (i == grid_.per_axis - 1) return (3.0 * v[idx] - 4.0 * v[idx - s] + v[idx - 2 * s]) / (2.0 * h);
  return (v[idx + s] - v[idx - s]) / (2.0 * h);
}

double GridFunction::value(const Vec& x, double s) const {
  const Stencil st = locate(x);
  double wt;
  const std::size_t m = time_interval(s, wt);
  const int n = grid_.n;
  double out = 0.0;
  for (int corner = 0; corner < (1 << n); ++corner) {
    std::size_t idx = st.base;
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const bool up = corner >> a & 1;
      idx += up ? stride_[a] : 0;
      w *= up ? st.frac[a] : 1.0 - st.frac[a];
    }
    out += w * ((1.0 - wt) * values_[m][idx] + wt * values_[m + 1][idx]);
  }
  return out;
}

Vec GridFunction::gradient(const Vec& x, double s) const {
  const Stencil st = locate(x);
  double wt;
  const std::size_t m = time_interval(s, wt);
  const int n = grid_.n;
  Vec g = Vec::Zero(n);
  for (int corner = 0; corner < (1 << n); ++corner) {
    std::size_t idx = st.base;
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const bool up = corner >> a & 1;
      idx += up ? stride_[a] : 0;
      w *= up ? st.frac[a] : 1.0 - st.frac[a];
    }
    for (int a = 0; a < n; ++a)
      g[a] += w * ((1.0 - wt) * nodal_derivative(values_[m], idx, a) + wt * nodal_derivative(values_[m + 1], idx, a));
  }
  return g;
}

// ---------------------------------------------------------------------------- phases

RampPhase::RampPhase(double amplitude, Vec direction, double side, double power, double drift)
    : amplitude_(amplitude), direction_(std::move(direction)), side_(side), power_(power), drift_(drift) {}

double RampPhase::value(const Vec& x, double s) const {
  const double d = side_ * direction_.dot(x);
  if (d <= 0.0 || amplitude_ == 0.0) return 0.0;
  return amplitude_ * std::pow(d, power_) * (1.0 + drift_ * s);
}

PhaseSample RampPhase::sample(const Vec& x, double s) const {
  PhaseSample out{0.0, Vec::Zero(x.size())};
  const double d = side_ * direction_.dot(x);
  if (d <= 0.0 || amplitude_ == 0.0) return out;
  const double time = 1.0 + drift_ * s;
  const double dp = power_ == 1.0 ? 1.0 : std::pow(d, power_ - 1.0);
  out.value = amplitude_ * dp * d * time;
  out.grad = amplitude_ * power_ * dp * time * side_ * direction_;
  return out;
}

GridPhase::GridPhase(std::shared_ptr<const GridFunction> field, double side, double shift)
    : field_(std::move(field)), side_(side), shift_(shift) {}

double GridPhase::value(const Vec& x, double s) const {
  return std::max(0.0, side_ * field_->value(x, s) + shift_);
}

PhaseSample GridPhase::sample(const Vec& x, double s) const {
  PhaseSample out{value(x, s), Vec::Zero(x.size())};
  if (out.value > 0.0) out.grad = side_ * field_->gradient(x, s);
  return out;
}

std::vector<double> TwoPhasePair::kinks() const {
  std::vector<double> k = plus->kinks();
  for (double v : minus->kinks()) k.push_back(v);
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

// ---------------------------------------------------------------------------- solver

double discrete_laplacian(const NormalChart& chart, const SpaceTimeGrid& grid, const std::vector<double>& u,
                          std::size_t node) {
  int mi[kMaxDim];
  multi_index(grid, node, mi);
  if (is_boundary(grid, mi)) throw ArgumentError("discrete Laplacian needs an interior node");
  double acc = 0.0;
  laplacian_row(chart, grid, node, [&](std::size_t col, double c) { acc += c * u[col]; });
  return acc;
}

GridFunction solve_heat(const NormalChart& chart, const SpaceTimeSampler& source,
                        const std::function<double(const Vec&)>& initial, const SpaceTimeSampler& boundary,
                        const SpaceTimeGrid& grid, double theta) {
  if (!(theta >= 0.5 && theta <= 1.0)) throw ArgumentError("theta must lie in [1/2, 1] for unconditional stability");
  grid.validate();
  require_grid_in_chart(chart, grid);
  const std::size_t N = grid.node_count();
  const RowMatrix L = assemble_laplacian(chart, grid);

  std::vector<Vec> nodes(N);
  std::vector<char> boundary_node(N);
  int mi[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    nodes[i] = grid.node(i);
    multi_index(grid, i, mi);
    boundary_node[i] = is_boundary(grid, mi);
  }

  GridFunction u(grid);
  for (std::size_t i = 0; i < N; ++i) u.level(0)[i] = initial(nodes[i]);

  ColMatrix identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  identity.setIdentity();
  std::map<double, std::unique_ptr<Eigen::SparseLU<ColMatrix>>> factors;
  auto factor_for = [&](double dt) -> Eigen::SparseLU<ColMatrix>& {
    auto it = factors.find(dt);
    if (it != factors.end()) return *it->second;
    // Boundary rows of L are empty, so these rows of A reduce to the identity.
    ColMatrix A = identity - theta * dt * ColMatrix(L);
    auto lu = std::make_unique<Eigen::SparseLU<ColMatrix>>();
    lu->compute(A);
    if (lu->info() != Eigen::Success) {
      std::ostringstream os;
      os << "heat solver factorization failed (dt = " << dt << ", nodes = " << N << "): " << lu->lastErrorMessage();
      throw NumericalError(os.str());
    }
    return *factors.emplace(dt, std::move(lu)).first->second;
  };

  Eigen::VectorXd f_old(N), f_new(N), rhs(N);
  for (std::size_t i = 0; i < N; ++i) f_old[i] = boundary_node[i] ? 0.0 : source(nodes[i], grid.times[0]);
  for (std::size_t m = 0; m + 1 < grid.times.size(); ++m) {
    const double s_new = grid.times[m + 1];
    const double dt = s_new - grid.times[m];
    const Eigen::Map<const Eigen::VectorXd> prev(u.level(m).data(), static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) f_new[i] = boundary_node[i] ? 0.0 : source(nodes[i], s_new);
    rhs = prev;
    if (theta < 1.0) rhs += (1.0 - theta) * dt * (L * prev);
    rhs -= dt * (theta * f_new + (1.0 - theta) * f_old);
    for (std::size_t i = 0; i < N; ++i)
      if (boundary_node[i]) rhs[i] = boundary(nodes[i], s_new);
    const Eigen::VectorXd next = factor_for(dt).solve(rhs);
    if (!next.allFinite()) throw NumericalError("heat solver produced non-finite values");
    std::copy(next.data(), next.data() + N, u.level(m + 1).begin());
    f_old.swap(f_new);
  }
  return u;
}

// ---------------------------------------------------------------------------- families

TwoPhasePair make_family(const std::string& name, const FamilyParams& p, const NormalChart& chart,
                         const SpaceTimeGrid* grid) {
  const int n = chart.dim();
  TwoPhasePair pair;
  pair.family = name;
  if (name == "Null") {
    pair.plus = std::make_shared<ZeroPhase>();
    pair.minus = std::make_shared<ZeroPhase>();
    return pair;
  }
  const Vec e = unit_direction(p.direction, n);
  if (name == "TwoPlaneCaloric") {
    if (!(p.alpha >= 0.0) || !(p.beta >= 0.0)) throw ArgumentError("TwoPlaneCaloric amplitudes must be nonnegative");
    pair.plus = std::make_shared<RampPhase>(p.alpha, e, 1.0, 1.0, 0.0);
    pair.minus = std::make_shared<RampPhase>(p.beta, e, -1.0, 1.0, 0.0);
    return pair;
  }
  if (name == "PowerWedge") {
    if (!(p.exponent > 0.0 && p.exponent <= 1.0)) throw ArgumentError("PowerWedge exponent must lie in (0, 1]");
    pair.plus = std::make_shared<RampPhase>(1.0, e, 1.0, 1.0 + p.exponent, 0.0);
    pair.minus = std::make_shared<RampPhase>(1.0, e, -1.0, 1.0 + p.exponent, 0.0);
    return pair;
  }
  if (name == "DriftTwoPlane") {
    if (!(p.drift >= 0.0 && p.drift <= 0.5)) throw ArgumentError("DriftTwoPlane drift must lie in [0, 1/2]");
    pair.plus = std::make_shared<RampPhase>(1.0, e, 1.0, 1.0, p.drift);
    pair.minus = std::make_shared<RampPhase>(1.0, e, -1.0, 1.0, p.drift);
    return pair;
  }
  if (name == "NumericPair") {
    if (grid == nullptr) throw ArgumentError("NumericPair needs a space-time grid");
    if (p.modes < 1 || p.bumps < 0) throw ArgumentError("NumericPair needs modes >= 1 and bumps >= 0");
    SplitMix rng(p.seed);
    struct Mode {
      Vec k;
      double omega, phase, amp;
    };
    std::vector<Mode> modes;
    double total = 0.0;
    for (int m = 0; m < p.modes; ++m) {
      Mode md{Vec(n), 0, 0, 0};
      for (int a = 0; a < n; ++a) md.k[a] = rng.uniform(-3.0, 3.0);
      md.omega = rng.uniform(-2.0, 2.0);
      md.phase = rng.uniform(0.0, 2.0 * M_PI);
      md.amp = rng.uniform(0.5, 1.0) * (rng.uniform(0.0, 1.0) < 0.5 ? -1.0 : 1.0);
      total += std::abs(md.amp);
      modes.push_back(md);
    }
    for (auto& md : modes) md.amp *= 0.9 / total;
    struct Bump {
      Vec c;
      double amp, width;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < p.bumps; ++b) {
      Bump bp{Vec(n), 0, 0};
      for (int a = 0; a < n; ++a) bp.c[a] = rng.uniform(-0.5, 0.5) * grid->half_width;
      bp.amp = rng.uniform(-0.3, 0.3) * grid->half_width;
      bp.width = rng.uniform(0.1, 0.25) * grid->half_width;
      bumps.push_back(bp);
    }
    auto source = [modes](const Vec& x, double s) {
      double f = 0.0;
      for (const auto& md : modes) f += md.amp * std::sin(md.k.dot(x) + md.omega * s + md.phase);
      return f;
    };
    auto initial = [bumps, e](const Vec& x) {
      double v = e.dot(x);
      for (const auto& b : bumps) v += b.amp * std::exp(-(x - b.c).squaredNorm() / (2.0 * b.width * b.width));
      return v;
    };
    auto field = std::make_shared<GridFunction>(
        solve_heat(chart, source, initial, [initial](const Vec& x, double) { return initial(x); }, *grid, p.theta));
    // Constants solve the homogeneous equation, so shifting keeps the source and puts the free boundary through (0, 0).
    const double centre = field->value(Vec::Zero(n), 0.0);
    for (std::size_t m = 0; m < grid->times.size(); ++m)
      for (double& v : field->level(m)) v -= centre;
    pair.field = field;
    pair.plus = std::make_shared<GridPhase>(field, 1.0);
    pair.minus = std::make_shared<GridPhase>(field, -1.0, p.overlap);
    return pair;
  }
  throw ArgumentError("unknown pair family '" + name + "'");
}

// ---------------------------------------------------------------------------- checks

AdmissibilityRecord pair_validity_check(const TwoPhasePair& pair, const SpaceTimeGrid& grid, double tol) {
  AdmissibilityRecord rec;
  rec.validity_checked = true;
  rec.min_plus = rec.min_minus = kInf;
  double scale = 0.0;
  const std::size_t N = grid.node_count();
  std::vector<Vec> nodes(N);
  for (std::size_t i = 0; i < N; ++i) nodes[i] = grid.node(i);
  for (double s : grid.times)
    for (const Vec& x : nodes) {
      const double up = pair.plus->value(x, s), um = pair.minus->value(x, s);
      rec.min_plus = std::min(rec.min_plus, up);
      rec.min_minus = std::min(rec.min_minus, um);
      rec.max_product = std::max(rec.max_product, up * um);
      scale = std::max({scale, std::abs(up), std::abs(um)});
    }
  rec.product_limit = tol * scale * scale;
  rec.nonnegative = rec.min_plus >= -tol && rec.min_minus >= -tol;
  rec.disjoint = rec.max_product <= rec.product_limit;
  const Vec origin = Vec::Zero(grid.n);
  rec.origin_value = std::max(pair.plus->value(origin, 0.0), pair.minus->value(origin, 0.0));
  return rec;
}

AdmissibilityRecord supercaloric_residual_check(const TwoPhasePair& pair, const NormalChart& chart,
                                                const SpaceTimeGrid& grid, const ResidualOptions& opts) {
  require_grid_in_chart(chart, grid);
  AdmissibilityRecord rec;
  rec.residual_checked = true;
  const std::size_t N = grid.node_count();
  const RowMatrix L = assemble_laplacian(chart, grid);
  std::vector<Vec> nodes(N);
  std::vector<char> interior(N);
  int mi[kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    nodes[i] = grid.node(i);
    multi_index(grid, i, mi);
    interior[i] = !is_boundary(grid, mi);
  }

  struct LevelResult {
    double min_plus = kInf, min_minus = kInf;
    std::size_t used = 0, excluded = 0;
  };
  const std::size_t levels = grid.times.size() - 1;
  std::vector<LevelResult> per(levels);
  auto sample_level = [&](std::size_t m, std::vector<double>& up, std::vector<double>& um) {
    up.resize(N);
    um.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
      up[i] = pair.plus->value(nodes[i], grid.times[m]);
      um[i] = pair.minus->value(nodes[i], grid.times[m]);
    }
  };
  parallel_for(levels, opts.workers, [&](std::size_t l) {
    const std::size_t m = l + 1;
    std::vector<double> up0, um0, up1, um1;
    sample_level(m - 1, up0, um0);
    sample_level(m, up1, um1);
    const double dt = grid.times[m] - grid.times[m - 1];
    LevelResult& r = per[l];
    for (std::size_t i = 0; i < N; ++i) {
      if (!interior[i]) continue;
      bool plus_present = false, minus_present = false;
      double lap_p = 0.0, lap_m = 0.0;
      for (RowMatrix::InnerIterator it(L, static_cast<Eigen::Index>(i)); it; ++it) {
        const auto j = static_cast<std::size_t>(it.col());
        plus_present |= up1[j] > 0.0 || up0[j] > 0.0;
        minus_present |= um1[j] > 0.0 || um0[j] > 0.0;
        lap_p += it.value() * up1[j];
        lap_m += it.value() * um1[j];
      }
      if (plus_present && minus_present) {
        ++r.excluded;
        continue;
      }
      ++r.used;
      r.min_plus = std::min(r.min_plus, lap_p - (up1[i] - up0[i]) / dt + 1.0);
      r.min_minus = std::min(r.min_minus, lap_m - (um1[i] - um0[i]) / dt + 1.0);
    }
  });
  rec.residual_min_plus = rec.residual_min_minus = kInf;
  for (const auto& r : per) {
    rec.residual_min_plus = std::min(rec.residual_min_plus, r.min_plus);
    rec.residual_min_minus = std::min(rec.residual_min_minus, r.min_minus);
    rec.residual_nodes += r.used;
    rec.interface_nodes += r.excluded;
  }
  rec.residual_threshold = -opts.tol - opts.slack * std::sqrt(grid.h);
  rec.supercaloric = rec.residual_min_plus >= rec.residual_threshold && rec.residual_min_minus >= rec.residual_threshold;

  const auto battery = weak_battery(grid);
  rec.weak_plus.resize(battery.size());
  rec.weak_minus.resize(battery.size());
  parallel_for(battery.size(), opts.workers, [&](std::size_t b) {
    const auto [p, q] = weak_pairing(pair, chart, battery[b]);
    rec.weak_plus[b] = p;
    rec.weak_minus[b] = q;
  });
  rec.weak_min = kInf;
  for (std::size_t b = 0; b < battery.size(); ++b) rec.weak_min = std::min({rec.weak_min, rec.weak_plus[b], rec.weak_minus[b]});
  rec.weak_pass = rec.weak_min >= -opts.tol;
  return rec;
}

void certify_pair(TwoPhasePair& pair, const NormalChart& chart, const SpaceTimeGrid& grid, const ResidualOptions& opts) {
  AdmissibilityRecord rec = supercaloric_residual_check(pair, chart, grid, opts);
  const AdmissibilityRecord val = pair_validity_check(pair, grid, opts.tol);
  rec.validity_checked = true;
  rec.min_plus = val.min_plus;
  rec.min_minus = val.min_minus;
  rec.max_product = val.max_product;
  rec.product_limit = val.product_limit;
  rec.nonnegative = val.nonnegative;
  rec.disjoint = val.disjoint;
  rec.origin_value = val.origin_value;
  pair.admissibility = rec;
}

}  // namespace monolab
