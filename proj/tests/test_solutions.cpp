#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "monolab/solutions.hpp"

using namespace monolab;

namespace {

double max_abs_error(const GridFunction& u, const std::function<double(const Vec&, double)>& exact, std::size_t level) {
  const auto& g = u.grid();
  double err = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    err = std::max(err, std::abs(u.level(level)[i] - exact(g.node(i), g.times[level])));
  return err;
}

// u* = cos(x_1) e^s and the source making it an exact solution of d_t u = Delta_g u - source.
struct Manufactured {
  NormalChart chart;
  double exact(const Vec& x, double s) const { return std::cos(x[0]) * std::exp(s); }
  double source(const Vec& x, double s) const {
    const int n = chart.dim();
    Vec grad = Vec::Zero(n);
    Mat hess = Mat::Zero(n, n);
    grad[0] = -std::sin(x[0]) * std::exp(s);
    hess(0, 0) = -std::cos(x[0]) * std::exp(s);
    return laplace_beltrami(chart, x, grad, hess) - exact(x, s);
  }
  GridFunction solve(const SpaceTimeGrid& grid, double theta) const {
    return solve_heat(
        chart, [this](const Vec& x, double s) { return source(x, s); },
        [this, &grid](const Vec& x) { return exact(x, grid.times.front()); },
        [this](const Vec& x, double s) { return exact(x, s); }, grid, theta);
  }
};

}  // namespace

TEST_CASE("space-time grids") {
  const auto g = SpaceTimeGrid::graded(2, 1.0, 1.0 / 16, 0.5, 1.0 / 32);
  CHECK(g.per_axis == 33);
  CHECK(g.times.front() == -1.0);
  CHECK(g.times.back() == 0.0);
  for (std::size_t i = 1; i < g.times.size(); ++i) {
    CHECK(g.times[i] > g.times[i - 1]);
    CHECK(g.times[i] - g.times[i - 1] <= 1.0 / 32 + 1e-15);
  }
  // grading: the last steps are much finer than dt0
  CHECK(g.times.back() - g.times[g.times.size() - 2] < 1e-3);
  CHECK(g.node(0)[0] == -1.0);
  CHECK(g.node(g.node_count() - 1)[1] == 1.0);
  CHECK_THROWS_AS(SpaceTimeGrid::graded(2, 1.0, 0.3, 0.5, 0.1), ArgumentError);
  CHECK_THROWS_AS(SpaceTimeGrid::graded(2, 1.0, 0.125, 1.0, 0.1), ArgumentError);
  const auto u = SpaceTimeGrid::uniform(3, 0.5, 0.125, 0.25, 10);
  CHECK(u.times.size() == 11u);
  CHECK(u.node_count() == 9u * 9u * 9u);
}

TEST_CASE("grid function interpolation") {
  GridFunction f(SpaceTimeGrid::uniform(2, 1.0, 0.25, 1.0, 4));
  const auto& g = f.grid();
  for (std::size_t m = 0; m < g.times.size(); ++m)
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const Vec x = g.node(i);
      f.level(m)[i] = 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[0] * x[1] + g.times[m];
    }
  Vec x(2);
  x << 0.31, -0.77;
  CHECK(f.value(x, -0.4) == doctest::Approx(1.0 + 0.62 + 2.31 - 0.5 * 0.31 * 0.77 - 0.4).epsilon(1e-14));
  const Vec grad = f.gradient(x, -0.4);
  CHECK(grad[0] == doctest::Approx(2.0 - 0.5 * 0.77).epsilon(1e-13));
  CHECK(grad[1] == doctest::Approx(-3.0 + 0.5 * 0.31).epsilon(1e-13));
  Vec out(2);
  out << 1.2, 0.0;
  CHECK_THROWS_AS(f.value(out, -0.5), DomainError);
  CHECK_THROWS_AS(f.value(x, 0.1), DomainError);
}

TEST_CASE("heat solver: translated Gaussian") {
  const auto chart = NormalChart::euclidean(2);
  const double s0 = 0.05;
  auto exact = [s0](const Vec& x, double s) {
    const double tau = s0 + s + 0.25;
    return s0 / tau * std::exp(-x.squaredNorm() / (4.0 * tau));
  };
  double prev = 0.0;
  for (int level = 0; level < 2; ++level) {
    const double h = 1.0 / (16 << level);
    const auto grid = SpaceTimeGrid::uniform(2, 1.0, h, 0.25, 64 << (2 * level));
    const GridFunction u = solve_heat(
        chart, [](const Vec&, double) { return 0.0; }, [&](const Vec& x) { return exact(x, -0.25); }, exact, grid, 0.5);
    const double err = max_abs_error(u, exact, grid.times.size() - 1);
    CHECK(err < 5e-3);
    if (level == 1) CHECK(prev / err > 3.0);
    prev = err;
  }
}

TEST_CASE("heat solver: unit source gives the linear-in-time interior profile") {
  const auto chart = NormalChart::euclidean(2);
  const auto grid = SpaceTimeGrid::uniform(2, 1.0, 1.0 / 16, 0.01, 20);
  const GridFunction u = solve_heat(
      chart, [](const Vec&, double) { return 1.0; }, [](const Vec&) { return 0.0; },
      [](const Vec&, double) { return 0.0; }, grid, 1.0);
  CHECK(u.value(Vec::Zero(2), 0.0) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(u.value(Vec::Zero(2), -0.005) == doctest::Approx(-0.005).epsilon(1e-6));
}

TEST_CASE("heat solver: manufactured solution converges on a perturbed metric") {
  Manufactured ms{NormalChart::perturbed(2, 0.05)};
  std::vector<double> errs;
  for (int level = 0; level < 3; ++level) {
    const auto grid = SpaceTimeGrid::uniform(2, 1.0, 1.0 / (8 << level), 0.25, 64);
    errs.push_back(max_abs_error(ms.solve(grid, 0.5), [&](const Vec& x, double s) { return ms.exact(x, s); },
                                 grid.times.size() - 1));
  }
  CHECK(std::log2(errs[0] / errs[1]) >= 1.8);
  CHECK(std::log2(errs[1] / errs[2]) >= 1.8);

  std::vector<double> finals;
  for (int level = 0; level < 3; ++level) {
    const auto grid = SpaceTimeGrid::uniform(2, 1.0, 1.0 / 16, 0.25, 8 << level);
    finals.push_back(ms.solve(grid, 1.0).value(Vec::Zero(2), 0.0));
  }
  const double order = std::log2(std::abs(finals[1] - finals[0]) / std::abs(finals[2] - finals[1]));
  CHECK(order >= 0.9);
}

TEST_CASE("backward Euler keeps nonnegative data nonnegative") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& chart : {NormalChart::euclidean(2), NormalChart::perturbed(2, 0.05), NormalChart::unit_sphere(2)}) {
    const auto grid = SpaceTimeGrid::graded(2, 1.0, 1.0 / 16, 0.5, 1.0 / 32);
    std::vector<double> centres;
    for (int i = 0; i < 6; ++i) centres.push_back(U(rng) - 0.5);
    const double a = U(rng);
    auto init = [&](const Vec& x) { return std::max(0.0, std::sin(4.0 * x[0] + centres[0]) * std::cos(3.0 * x[1] + centres[1])); };
    const GridFunction u = solve_heat(
        chart, [a](const Vec& x, double) { return -a * x.squaredNorm(); }, init,
        [](const Vec&, double) { return 0.0; }, grid, 1.0);
    double mn = 0.0;
    for (std::size_t m = 0; m < grid.times.size(); ++m)
      for (double v : u.level(m)) mn = std::min(mn, v);
    CHECK(mn >= -1e-12);
  }
}

TEST_CASE("solver rejects bad parameters") {
  const auto grid = SpaceTimeGrid::uniform(2, 1.0, 0.25, 0.1, 2);
  auto zero = [](const Vec&, double) { return 0.0; };
  auto zero0 = [](const Vec&) { return 0.0; };
  CHECK_THROWS_AS(solve_heat(NormalChart::euclidean(2), zero, zero0, zero, grid, 0.3), ArgumentError);
  CHECK_THROWS_AS(solve_heat(NormalChart::euclidean(3), zero, zero0, zero, grid, 1.0), ArgumentError);
}

TEST_CASE("discrete Laplacian of linear and quadratic functions") {
  const auto grid = SpaceTimeGrid::uniform(2, 1.0, 0.125, 0.1, 1);
  std::vector<double> lin(grid.node_count()), quad(grid.node_count());
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const Vec x = grid.node(i);
    lin[i] = 3.0 * x[0] - x[1];
    quad[i] = x.squaredNorm();
  }
  const std::size_t mid = grid.node_count() / 2 + 3;
  CHECK(std::abs(discrete_laplacian(NormalChart::euclidean(2), grid, lin, mid)) < 1e-12);
  CHECK(discrete_laplacian(NormalChart::euclidean(2), grid, quad, mid) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(discrete_laplacian(NormalChart::euclidean(2), grid, lin, 0), ArgumentError);
}

TEST_CASE("analytic families") {
  const auto chart = NormalChart::euclidean(2);
  const auto grid = SpaceTimeGrid::graded(2, 1.0, 1.0 / 16, 0.5, 1.0 / 16);
  ResidualOptions opts;

  SUBCASE("Null") {
    auto pair = make_family("Null", {}, chart);
    certify_pair(pair, chart, grid, opts);
    CHECK(pair.admissibility.pass());
    CHECK(pair.admissibility.residual_min_plus == 1.0);
    CHECK(pair.admissibility.max_product == 0.0);
    CHECK(pair.plus->identically_zero());
  }
  SUBCASE("TwoPlaneCaloric") {
    FamilyParams p;
    p.alpha = 2.0;
    p.beta = 0.5;
    auto pair = make_family("TwoPlaneCaloric", p, chart);
    Vec x(2);
    x << 0.3, 0.1;
    CHECK(pair.plus->value(x, -0.2) == doctest::Approx(0.6));
    CHECK(pair.minus->value(-x, -0.2) == doctest::Approx(0.15));
    CHECK(pair.minus->value(x, -0.2) == 0.0);
    certify_pair(pair, chart, grid, opts);
    const auto& r = pair.admissibility;
    CHECK(r.pass());
    CHECK(r.max_product == 0.0);
    CHECK(r.residual_min_plus == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.residual_min_minus == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.interface_nodes > 0u);
    CHECK(r.weak_min > 0.0);
    CHECK(r.origin_value == 0.0);
  }
  SUBCASE("DriftTwoPlane") {
    FamilyParams p;
    p.drift = 0.5;
    auto pair = make_family("DriftTwoPlane", p, chart);
    certify_pair(pair, chart, grid, opts);
    const auto& r = pair.admissibility;
    CHECK(r.pass());
    CHECK(r.residual_min_plus == doctest::Approx(1.0 - 0.5 * (1.0 - grid.h)).epsilon(1e-10));
    CHECK(r.residual_min_plus >= 0.5);
    p.drift = 0.6;
    CHECK_THROWS_AS(make_family("DriftTwoPlane", p, chart), ArgumentError);
  }
  SUBCASE("PowerWedge") {
    FamilyParams p;
    p.exponent = 0.5;
    auto pair = make_family("PowerWedge", p, chart);
    certify_pair(pair, chart, grid, opts);
    const auto& r = pair.admissibility;
    CHECK(r.pass());
    CHECK(r.residual_min_plus >= 1.0 - 1e-12);
    CHECK(r.weak_min >= -1e-10);
    p.exponent = 0.0;
    CHECK_THROWS_AS(make_family("PowerWedge", p, chart), ArgumentError);
    p.exponent = 1.5;
    CHECK_THROWS_AS(make_family("PowerWedge", p, chart), ArgumentError);
  }
  CHECK_THROWS_AS(make_family("Bogus", {}, chart), ArgumentError);
  FamilyParams bad;
  bad.direction = {1.0};
  CHECK_THROWS_AS(make_family("TwoPlaneCaloric", bad, chart), ArgumentError);
}

TEST_CASE("caloric pair on the sphere stays supercaloric with slack") {
  const auto chart = NormalChart::unit_sphere(2);
  const auto grid = SpaceTimeGrid::graded(2, 1.0, 1.0 / 16, 0.5, 1.0 / 16);
  auto pair = make_family("TwoPlaneCaloric", {}, chart);
  certify_pair(pair, chart, grid, {});
  CHECK(pair.admissibility.pass());
  CHECK(pair.admissibility.residual_min_plus < 1.0);
  CHECK(pair.admissibility.residual_min_plus > 0.0);
}

TEST_CASE("numeric pairs") {
  const auto chart = NormalChart::perturbed(2, 0.05);
  const auto grid = SpaceTimeGrid::graded(2, 1.0, 1.0 / 16, 0.5, 1.0 / 32);
  FamilyParams p;
  p.seed = 11;
  auto pair = make_family("NumericPair", p, chart, &grid);
  certify_pair(pair, chart, grid, {});
  const auto& r = pair.admissibility;
  CHECK(r.nonnegative);
  CHECK(r.disjoint);
  CHECK(r.supercaloric);
  CHECK(r.weak_pass);
  CHECK(r.residual_min_plus >= 0.1 - 1e-9);
  CHECK(r.origin_value == doctest::Approx(0.0).epsilon(1e-12));

  // same seed reproduces the same field
  auto again = make_family("NumericPair", p, chart, &grid);
  Vec x(2);
  x << 0.21, -0.13;
  CHECK(again.plus->value(x, -0.3) == pair.plus->value(x, -0.3));

  p.overlap = 0.05;
  auto bad = make_family("NumericPair", p, chart, &grid);
  const auto v = pair_validity_check(bad, grid, 1e-10);
  CHECK_FALSE(v.disjoint);
  CHECK_FALSE(v.pass());

  CHECK_THROWS_AS(make_family("NumericPair", {}, chart), ArgumentError);
}
