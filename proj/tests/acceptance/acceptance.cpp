// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "monolab/scenario.hpp"

#ifndef MONOLAB_SCENARIO_DIR
#define MONOLAB_SCENARIO_DIR "scenarios"
#endif

using namespace monolab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

bool near(double v, double target, double tol) { return std::abs(v - target) <= tol; }

MonotonicityInput input(const NormalChart& chart, const std::string& family, FamilyParams p = {}) {
  return MonotonicityInput::make(chart, make_family(family, p, chart), KernelKind::GaussG, QuadratureConfig{});
}

std::vector<double> dyadic(int k_min, int k_max) {
  std::vector<double> r;
  for (int k = k_min; k <= k_max; ++k) r.push_back(std::pow(4.0, -k));
  return r;
}

std::vector<std::filesystem::path> shipped() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(MONOLAB_SCENARIO_DIR))
    if (e.path().extension() == ".cfg") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome ac1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto curve = phi_curve(input(NormalChart::euclidean(2), "TwoPlaneCaloric"), dyadic(2, 5));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = 0.0;
  for (const auto& p : curve) worst = std::max(worst, std::abs(p.phi - 0.25) / 0.25);
  return {worst <= 0.01 && secs <= 60.0, "max rel err " + fmt("%.2e", worst) + ", " + fmt("%.1f", secs) + " s"};
}

Outcome ac2() {
  const DyadicLadder lad = dyadic_ladder(input(NormalChart::euclidean(2), "TwoPlaneCaloric"), 2, 4, 10, 1);
  double ratio_err = 0.0, b_err = 0.0;
  for (const auto& e : lad.entries) {
    ratio_err = std::max(ratio_err, std::abs(e.prop1_ratio - 1.0));
    const double b = std::pow(4.0, 2 * e.k) / 2;
    b_err = std::max({b_err, std::abs(e.b_plus - b) / b, std::abs(e.b_minus - b) / b});
  }
  return {ratio_err <= 0.02 && b_err <= 0.05,
          "prop1 |ratio-1| " + fmt("%.2e", ratio_err) + ", b_k rel err " + fmt("%.2e", b_err)};
}

Outcome ac3() {
  const Vec e1 = Vec::Unit(2, 0);
  const BkpRecord b = bkp_sum(half_space_power(e1, 1), half_space_power(e1, 1, -1), {2, 2.0});
  const bool ok = near(b.lambda_plus, 0.5, 1e-3) && near(b.lambda_minus, 0.5, 1e-3) && near(b.sum, 1.0, 1e-3);
  return {ok, "lambda " + fmt("%.6f", b.lambda_plus) + " + " + fmt("%.6f", b.lambda_minus) + " = " + fmt("%.6f", b.sum)};
}

Outcome ac4() {
  const PoincareRecord p = gaussian_poincare_check(half_space_power(Vec::Unit(1, 0), 1), {1, 1.0});
  const double margin = 1.0 - 0.5 * std::log(2 * M_PI) * 0.5;
  const bool ok = near(p.lhs, 0.45947, 1e-3) && near(p.rhs, 1.0, 1e-3) && near(p.margin, margin, 2e-3) && p.pass;
  return {ok, "lhs " + fmt("%.6f", p.lhs) + ", rhs " + fmt("%.6f", p.rhs) + ", margin " + fmt("%.6f", p.margin)};
}

const std::vector<double> kTransformRadii{0.2, 0.1, 0.05, 0.025};

Outcome ac5() {
  const ManifoldBkpLadder l = manifold_bkp_ladder(input(NormalChart::unit_sphere(2), "TwoPlaneCaloric"), kTransformRadii);
  const bool negative_ok = l.negative_vanishes || l.negative_slope >= 1.8;
  std::string d = l.negative_vanishes ? "negative deficit vanishes on the ladder"
                                      : "negative deficit slope " + fmt("%.3f", l.negative_slope);
  d += ", untruncated deficit slope " + fmt("%.3f", l.untruncated_slope);
  return {negative_ok && l.untruncated_slope >= 1.8, d};
}

Outcome ac6() {
  const PushforwardLadder l = pushforward_ladder(NormalChart::unit_sphere(2), kTransformRadii, KernelKind::GaussG, -0.5);
  // Fit C on the largest radius, then require the smaller ones to stay inside 1 +- 1.25 C r^2.
  const auto& top = l.entries.front();
  const double c = std::abs(top.mass - 1.0) / (top.r * top.r);
  bool mass_ok = true;
  for (const auto& e : l.entries) mass_ok = mass_ok && std::abs(e.mass - 1.0) <= 1.25 * c * e.r * e.r + 1e-10;
  return {l.slope >= 1.8 && mass_ok,
          "sup deviation slope " + fmt("%.3f", l.slope) + ", mass constant " + fmt("%.3e", c)};
}

Outcome ac7() {
  double phi0_err = 0.0;
  for (int n : {2, 3}) {
    const NormalChart sphere = NormalChart::unit_sphere(n);
    for (int i = 1; i <= 20; ++i) {
      const double rho = 0.045 * i;
      Vec x = Vec::Zero(n);
      x[0] = rho * std::cos(0.3 * i);
      x[1] = rho * std::sin(0.3 * i);
      const double expect = std::pow(std::sin(rho) / rho, -0.5 * (n - 1));
      phi0_err = std::max(phi0_err, std::abs(parametrix_phi0(sphere, x) - expect));
    }
  }

  // Crank-Nicolson from U(., t0) as near-delta data; t = t0 + (s + T).
  const NormalChart sphere = NormalChart::unit_sphere(2);
  const double t0 = 5e-4, t1 = 1e-2, T = t1 - t0;
  const SpaceTimeGrid grid = SpaceTimeGrid::uniform(2, 0.6, 0.01, T, 380);
  auto U = [&](const Vec& x, double s) { return parametrix_kernel(sphere, x, t0 + s + T); };
  const GridFunction u = solve_heat(
      sphere, [](const Vec&, double) { return 0.0; }, [&](const Vec& x) { return U(x, -T); }, U, grid, 0.5);
  double worst = 0.0;
  for (double t : {1e-3, 2e-3, 4e-3, 7e-3, 1e-2}) {
    const double s = t - t0 - T;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      const Vec x = grid.node(i);
      if (x.norm() > 0.3) continue;
      num = std::max(num, std::abs(u.value(x, s) - U(x, s)));
      den = std::max(den, U(x, s));
    }
    worst = std::max(worst, num / den);
  }
  return {phi0_err <= 1e-6 && worst <= 0.05,
          "phi0 max err " + fmt("%.2e", phi0_err) + ", max|u-U|/max U " + fmt("%.3e", worst)};
}

Outcome ac8() {
  const NormalChart chart = NormalChart::perturbed(2, 0.05);
  auto exact = [](const Vec& x, double s) { return std::cos(x[0]) * std::exp(s); };
  auto source = [&](const Vec& x, double s) {
    Vec grad = Vec::Zero(2);
    Mat hess = Mat::Zero(2, 2);
    grad[0] = -std::sin(x[0]) * std::exp(s);
    hess(0, 0) = -std::cos(x[0]) * std::exp(s);
    return laplace_beltrami(chart, x, grad, hess) - exact(x, s);
  };
  auto solve = [&](const SpaceTimeGrid& g, double theta) {
    return solve_heat(chart, source, [&](const Vec& x) { return exact(x, g.times.front()); }, exact, g, theta);
  };
  std::vector<double> errs;
  for (int level = 0; level < 3; ++level) {
    const auto g = SpaceTimeGrid::uniform(2, 1.0, 1.0 / (8 << level), 0.25, 64);
    const GridFunction u = solve(g, 0.5);
    double e = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i)
      e = std::max(e, std::abs(u.level(g.times.size() - 1)[i] - exact(g.node(i), 0.0)));
    errs.push_back(e);
  }
  const double p1 = std::log2(errs[0] / errs[1]), p2 = std::log2(errs[1] / errs[2]);
  std::vector<double> finals;
  for (int level = 0; level < 3; ++level) {
    const auto g = SpaceTimeGrid::uniform(2, 1.0, 1.0 / 16, 0.25, 8 << level);
    finals.push_back(solve(g, 1.0).value(Vec::Zero(2), 0.0));
  }
  const double q = std::log2(std::abs(finals[1] - finals[0]) / std::abs(finals[2] - finals[1]));
  return {std::min(p1, p2) >= 1.8 && q >= 0.9,
          "spatial orders " + fmt("%.3f", p1) + ", " + fmt("%.3f", p2) + "; temporal order " + fmt("%.3f", q)};
}

Outcome ac9() {
  bool ok = true;
  std::string d;
  const auto radii = dyadic(2, 5);
  for (double beta : {0.25, 0.5}) {
    FamilyParams p;
    p.exponent = beta;
    const MonotonicityInput in = input(NormalChart::euclidean(2), "PowerWedge", p);
    std::vector<double> a, ph;
    for (double r : radii) {
      a.push_back(phase_energies(in, r)[0]);
      ph.push_back(phi(in, r));
    }
    const double sa = fit_loglog_slope(radii, a), sp = fit_loglog_slope(radii, ph);
    const DyadicLadder lad = dyadic_ladder(in, 2, 5, 10, 1);
    bool ratios = true;
    for (const auto& e : lad.entries) ratios = ratios && e.prop1_ratio < 1.0;
    const Theorem2Record t2 = theorem2_check(in, 1.0, lad);
    ok = ok && near(sa, 2 + 2 * beta, 0.1) && near(sp, 4 * beta, 0.2) && ratios && t2.pass && t2.stable;
    d += (d.empty() ? "" : "; ") + fmt("beta %.2f: ", beta) + "A slope " + fmt("%.3f", sa) + ", phi slope " +
         fmt("%.3f", sp) + (ratios ? ", prop1 < 1" : ", prop1 ratio >= 1") + (t2.pass ? ", thm2 ok" : ", thm2 fail");
  }
  return {ok, d};
}

Outcome ac11() {
  bool ok = true;
  std::string d;
  for (const char* fam : {"TwoPlaneCaloric", "DriftTwoPlane"}) {
    const ScaleDerivativeRecord s = scale_derivative(input(NormalChart::euclidean(2), fam), 1.0 / 16);
    ok = ok && s.pass;
    d += (d.empty() ? "" : "; ") + std::string(fam) + " mismatch " + fmt("%.2e", s.mismatch) + " (allowed " +
         fmt("%.2e", std::max(0.02, s.err_est)) + ")";
  }
  return {ok, d};
}

// The suite runs once per worker count; AC10 reads the first run's reports, AC12 compares the CSVs.
struct SuiteRuns {
  std::filesystem::path root;
  int code1 = -1, code8 = -1;
};

Outcome ac10(const SuiteRuns& runs, const std::vector<std::filesystem::path>& configs) {
  bool ok = configs.size() == 6;
  int numeric = 0;
  bool drift_negative = false;
  double worst = 0.0;
  for (const auto& p : configs) {
    const ScenarioConfig cfg = load_config(p);
    numeric += cfg.family == "NumericPair";
    const auto report = nlohmann::json::parse(slurp(runs.root / "w1" / cfg.id / "report.json"));
    bool seen = false;
    for (const auto& c : report["checks"]) {
      if (c["name"] == "admissibility" && cfg.family == "DriftTwoPlane")
        drift_negative = c["values"]["residual_min_plus"].get<double>() < 1.0 - 1e-6;
      if (c["name"] != "thm1") continue;
      seen = true;
      ok = ok && c["pass"].get<bool>() && c["values"]["non_exploding"].get<bool>();
      if (c["values"]["ratio"].is_number()) worst = std::max(worst, c["values"]["ratio"].get<double>());
      else ok = false;
    }
    ok = ok && seen;
  }
  ok = ok && numeric == 2 && drift_negative && worst <= 100.0;
  return {ok, "max ratio " + fmt("%.4f", worst) + " over " + std::to_string(configs.size()) + " scenarios, suite exit " +
                  std::to_string(runs.code1)};
}

Outcome ac12(const SuiteRuns& runs, const std::vector<std::filesystem::path>& configs) {
  bool ok = runs.code1 == runs.code8;
  int files = 0;
  for (const auto& p : configs) {
    const std::string id = load_config(p).id;
    for (const char* name : {"ladder.csv", "phi_curve.csv"}) {
      const std::string a = slurp(runs.root / "w1" / id / name), b = slurp(runs.root / "w8" / id / name);
      ok = ok && !a.empty() && a == b;
      ++files;
    }
  }
  return {ok, std::to_string(files) + " CSV files compared between --workers 1 and 8"};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> only(argv + 1, argv + argc);
  auto wanted = [&](const std::string& id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

  bool all = true;
  auto report = [&](const std::string& id, const std::function<Outcome()>& f) {
    if (!wanted(id)) return;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  };

  report("AC1", ac1);
  report("AC2", ac2);
  report("AC3", ac3);
  report("AC4", ac4);
  report("AC5", ac5);
  report("AC6", ac6);
  report("AC7", ac7);
  report("AC8", ac8);
  report("AC9", ac9);

  if (wanted("AC10") || wanted("AC11") || wanted("AC12")) {
    const auto configs = shipped();
    SuiteRuns runs;
    if (wanted("AC10") || wanted("AC12")) {
      runs.root = std::filesystem::temp_directory_path() / "monolab_acceptance";
      std::filesystem::remove_all(runs.root);
      std::ostringstream sink;
      RunOptions w1, w8;
      w8.workers = 8;
      runs.code1 = check_suite(configs, runs.root / "w1", w1, sink);
      if (wanted("AC12")) runs.code8 = check_suite(configs, runs.root / "w8", w8, sink);
    }
    report("AC10", [&] { return ac10(runs, configs); });
    report("AC11", ac11);
    report("AC12", [&] { return ac12(runs, configs); });
  }
  return all ? 0 : 1;
}
