#include "monolab/scenario.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace monolab {

const char* const kLadderHeader =
    "k,r,A_plus,A_minus,b_plus,b_minus,delta_k,phi,prop1_ratio,prop1_pass,prop2_active,prop2_ratio";
const char* const kPhiCurveHeader = "r,phi,A_plus,A_minus,err_est";

namespace {

using Json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

long to_int(const std::string& v) {
  long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) throw std::invalid_argument("expected an integer, got '" + v + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_doubles(const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(s));
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
  return out;
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&t](const std::string& key, double ScenarioConfig::*field) {
      t[key] = [field](ScenarioConfig& c, const std::string& v) { c.*field = to_double(v); };
    };
    auto quad_num = [&t](const std::string& key, double QuadratureConfig::*field) {
      t[key] = [field](ScenarioConfig& c, const std::string& v) { c.quad.*field = to_double(v); };
    };
    auto quad_int = [&t](const std::string& key, int QuadratureConfig::*field) {
      t[key] = [field](ScenarioConfig& c, const std::string& v) { c.quad.*field = static_cast<int>(to_int(v)); };
    };
    auto pair_num = [&t](const std::string& key, double FamilyParams::*field) {
      t[key] = [field](ScenarioConfig& c, const std::string& v) { c.params.*field = to_double(v); };
    };
    auto tol_num = [&t](const std::string& key, double Tolerances::*field) {
      t[key] = [field](ScenarioConfig& c, const std::string& v) { c.tol.*field = to_double(v); };
    };

    t["scenario.id"] = [](ScenarioConfig& c, const std::string& v) { c.id = v; };
    t["manifold.family"] = [](ScenarioConfig& c, const std::string& v) { c.manifold = v; };
    t["manifold.n"] = [](ScenarioConfig& c, const std::string& v) { c.n = static_cast<int>(to_int(v)); };
    num("manifold.radius", &ScenarioConfig::radius);
    num("manifold.curvature", &ScenarioConfig::curvature);
    num("manifold.epsilon", &ScenarioConfig::epsilon);
    t["manifold.shape"] = [](ScenarioConfig& c, const std::string& v) { c.shape = static_cast<int>(to_int(v)); };

    t["pair.family"] = [](ScenarioConfig& c, const std::string& v) { c.family = v; };
    pair_num("pair.alpha", &FamilyParams::alpha);
    pair_num("pair.beta", &FamilyParams::beta);
    pair_num("pair.exponent", &FamilyParams::exponent);
    pair_num("pair.drift", &FamilyParams::drift);
    pair_num("pair.overlap", &FamilyParams::overlap);
    pair_num("pair.theta", &FamilyParams::theta);
    t["pair.direction"] = [](ScenarioConfig& c, const std::string& v) { c.params.direction = to_doubles(v); };
    t["pair.seed"] = [](ScenarioConfig& c, const std::string& v) {
      const long s = to_int(v);
      if (s < 0) throw std::invalid_argument("seed must be nonnegative");
      c.params.seed = static_cast<std::uint64_t>(s);
    };
    t["pair.modes"] = [](ScenarioConfig& c, const std::string& v) { c.params.modes = static_cast<int>(to_int(v)); };
    t["pair.bumps"] = [](ScenarioConfig& c, const std::string& v) { c.params.bumps = static_cast<int>(to_int(v)); };

    t["kernel.kind"] = [](ScenarioConfig& c, const std::string& v) {
      try {
        c.kernel = parse_kernel_kind(v);
      } catch (const ArgumentError& e) {
        throw std::invalid_argument(e.what());
      }
    };

    num("grid.half_width", &ScenarioConfig::grid_half_width);
    num("grid.h", &ScenarioConfig::grid_h);
    num("grid.q", &ScenarioConfig::grid_q);
    num("grid.dt0", &ScenarioConfig::grid_dt0);

    quad_num("quad.r_tail", &QuadratureConfig::r_tail);
    quad_int("quad.nodes", &QuadratureConfig::nodes);
    quad_num("quad.panel_width", &QuadratureConfig::panel_width);
    quad_int("quad.slices_per_scale", &QuadratureConfig::slices_per_scale);
    quad_int("quad.dyadic_depth", &QuadratureConfig::dyadic_depth);
    quad_int("quad.levels", &QuadratureConfig::levels);

    t["ladder.k_min"] = [](ScenarioConfig& c, const std::string& v) { c.k_min = static_cast<int>(to_int(v)); };
    t["ladder.k_max"] = [](ScenarioConfig& c, const std::string& v) { c.k_max = static_cast<int>(to_int(v)); };
    num("ladder.c0", &ScenarioConfig::c0);
    num("ladder.c1", &ScenarioConfig::c1);

    t["checks"] = [](ScenarioConfig& c, const std::string& v) { c.checks = split_list(v); };

    t["transforms.radii"] = [](ScenarioConfig& c, const std::string& v) { c.transform_radii = to_doubles(v); };
    num("transforms.s", &ScenarioConfig::transform_s);
    num("transforms.sample_radius", &ScenarioConfig::sample_radius);
    num("derivative.r", &ScenarioConfig::derivative_r);
    num("derivative.fd_step", &ScenarioConfig::fd_step);
    num("positivity.r", &ScenarioConfig::positivity_r);
    num("poincare.power", &ScenarioConfig::poincare_power);
    num("poincare.variance", &ScenarioConfig::poincare_variance);
    num("bkp.power", &ScenarioConfig::bkp_power);
    num("bkp.variance", &ScenarioConfig::bkp_variance);

    tol_num("tol.validity", &Tolerances::validity);
    tol_num("tol.residual", &Tolerances::residual);
    tol_num("tol.slack", &Tolerances::slack);
    tol_num("tol.phi_rel", &Tolerances::phi_rel);
    tol_num("tol.poincare", &Tolerances::poincare);
    tol_num("tol.bkp", &Tolerances::bkp);
    tol_num("tol.guard", &Tolerances::guard);
    tol_num("tol.epsilon", &Tolerances::epsilon);
    tol_num("tol.slope", &Tolerances::slope);
    t["expect.phi"] = [](ScenarioConfig& c, const std::string& v) { c.expect_phi = to_double(v); };
    t["output.dir"] = [](ScenarioConfig& c, const std::string& v) { c.out_dir = v; };
    return t;
  }();
  return table;
}

Json number(double v) {
  // JSON has no nan / inf; keep them readable as strings.
  if (std::isfinite(v)) return v;
  return format_number(v);
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

std::vector<double> ladder_radii(const ScenarioConfig& c) {
  std::vector<double> r;
  for (int k = c.k_min; k <= c.k_max; ++k) r.push_back(std::pow(4.0, -k));
  return r;
}

bool all_finite_nonneg(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x) && x >= 0.0; });
}

void write_file(const std::filesystem::path& p, const std::string& content, std::vector<std::filesystem::path>& out) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << content;
  if (!f) throw ConfigError("write failed for " + p.string());
  out.push_back(p);
}

}  // namespace

Tolerances Tolerances::scaled(double s) const {
  if (!(s > 0.0)) throw ConfigError("--tol-scale must be positive");
  Tolerances t = *this;
  t.validity *= s;
  t.residual *= s;
  t.slack *= s;
  t.phi_rel *= s;
  t.poincare *= s;
  t.bkp *= s;
  return t;
}

NormalChart ScenarioConfig::chart() const {
  if (manifold == "euclidean") return NormalChart::euclidean(n, radius);
  if (manifold == "sphere") return NormalChart::unit_sphere(n, radius);
  if (manifold == "constant_curvature") return NormalChart::constant_curvature(n, curvature, radius);
  if (manifold == "perturbed") return NormalChart::perturbed(n, epsilon, shape, radius);
  throw ConfigError(source.string() + ": key 'manifold.family': unknown family '" + manifold +
                    "' (expected euclidean, sphere, constant_curvature or perturbed)");
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"phi_curve", "ladder", "prop1",    "prop2",
                                              "thm1",      "thm2",   "e322",     "poincare",
                                              "bkp",       "bkp_perturbed", "pushforward", "scale_derivative",
                                              "positivity"};
  return names;
}

void ScenarioConfig::validate() const {
  const std::string where = source.string() + ": ";
  auto fail = [&](const std::string& key, const std::string& msg) { throw ConfigError(where + "key '" + key + "': " + msg); };
  if (family.empty()) fail("pair.family", "required");
  if (checks.empty()) fail("checks", "at least one check is required");
  for (const auto& c : checks) {
    const auto& k = known_checks();
    if (std::find(k.begin(), k.end(), c) == k.end()) fail("checks", "unknown check '" + c + "'");
    if (std::count(checks.begin(), checks.end(), c) > 1) fail("checks", "check '" + c + "' listed twice");
  }
  if (n < 1 || n > kMaxDim) fail("manifold.n", "dimension must lie in [1, 4]");
  if (!(radius > 0.0 && radius <= 1.0)) fail("manifold.radius", "delta_p must lie in (0, 1]");
  try {
    (void)chart();
    QuadratureConfig q = quad;
    q.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(where + e.what());
  }
  if (k_max < k_min) fail("ladder.k_max", "must be >= ladder.k_min");
  if (std::pow(4.0, -k_min) > 0.5 * radius * (1.0 + 1e-12))
    fail("ladder.k_min", "4^-k_min must not exceed delta_p / 2");
  if (!(c0 > 0.0) || !(c1 > 0.0)) fail("ladder.c0", "C0 and C1 must be positive");
  for (double r : transform_radii)
    if (!(r > 0.0 && r <= 0.25 * radius * (1.0 + 1e-12))) fail("transforms.radii", "radii must lie in (0, delta_p / 4]");
  if (transform_radii.size() < 2) fail("transforms.radii", "need at least two radii for a slope fit");
  if (transform_s != -0.5 && transform_s != -1.0) fail("transforms.s", "must be -0.5 or -1");
  if (!(derivative_r > 0.0 && derivative_r <= 0.25 * radius)) fail("derivative.r", "must lie in (0, delta_p / 4]");
  if (!(positivity_r > 0.0 && positivity_r <= 0.25 * radius)) fail("positivity.r", "must lie in (0, delta_p / 4]");
  if (!(grid_half_width > 0.0 && grid_h > 0.0)) fail("grid.h", "grid sizes must be positive");
  if (!(tol.epsilon > 0.0 && tol.epsilon <= 1.0)) fail("tol.epsilon", "must lie in (0, 1]");
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  cfg.source = origin;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = origin + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(at + "unknown key '" + key + "'");
    if (seen.count(key)) throw ConfigError(at + "key '" + key + "' already set on line " + std::to_string(seen[key]));
    seen[key] = lineno;
    if (value.empty()) throw ConfigError(at + "key '" + key + "' has no value");
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(at + "key '" + key + "': " + e.what());
    }
  }
  if (cfg.id.empty()) cfg.id = std::filesystem::path(origin).stem().string();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  ScenarioConfig cfg = parse_config(ss.str(), path.string());
  cfg.validate();
  return cfg;
}

bool ReportDocument::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ReportDocument run_scenario(const ScenarioConfig& config, const RunOptions& opts) {
  config.validate();
  ReportDocument doc;
  doc.scenario = config.id;
  const Tolerances tol = config.tol.scaled(opts.tol_scale);
  const KernelKind kind = opts.kernel.value_or(config.kernel);
  const NormalChart chart = config.chart();
  QuadratureConfig quad = config.quad;
  quad.workers = std::max(1, opts.workers);

  doc.metadata["version"] = "0.1.0";
  doc.metadata["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION);
  doc.metadata["workers"] = quad.workers;
  doc.metadata["tol_scale"] = opts.tol_scale;
  doc.metadata["kernel"] = to_string(kind);
  doc.metadata["chart"] = chart.tag();
  doc.metadata["family"] = config.family;
  doc.metadata["seed"] = config.params.seed;
  {
    const CutoffProfile chi = build_cutoff(chart);
    doc.metadata["cutoff"] = {{"inner", chi.inner}, {"outer", chi.outer}, {"grad_bound", chi.grad_bound},
                              {"lap_bound", chi.lap_bound}};
  }

  SpaceTimeGrid grid;
  TwoPhasePair pair;
  try {
    grid = SpaceTimeGrid::graded(chart.dim(), config.grid_half_width, config.grid_h, config.grid_q, config.grid_dt0);
    pair = make_family(config.family, config.params, chart, &grid);
  } catch (const ArgumentError& e) {
    throw ConfigError(config.source.string() + ": " + e.what());
  }

  {
    CheckRecord adm;
    adm.name = "admissibility";
    try {
      certify_pair(pair, chart, grid, {tol.residual, tol.slack, quad.workers});
      const AdmissibilityRecord& a = pair.admissibility;
      Json& v = adm.values;
      v["min_plus"] = number(a.min_plus);
      v["min_minus"] = number(a.min_minus);
      v["max_product"] = number(a.max_product);
      v["product_limit"] = number(a.product_limit);
      v["residual_min_plus"] = number(a.residual_min_plus);
      v["residual_min_minus"] = number(a.residual_min_minus);
      v["residual_threshold"] = number(a.residual_threshold);
      v["residual_nodes"] = a.residual_nodes;
      v["interface_nodes"] = a.interface_nodes;
      v["weak_min"] = number(a.weak_min);
      v["nonnegative"] = a.nonnegative;
      v["disjoint"] = a.disjoint;
      v["supercaloric"] = a.supercaloric;
      v["weak_pass"] = a.weak_pass;
      v["origin_value"] = number(a.origin_value);
      v["vanishes_at_origin"] = a.origin_value <= tol.validity;
      adm.pass = a.pass();
      if (!adm.pass) adm.note = "pair is not an admissible two-phase supersolution pair";
    } catch (const std::exception& e) {
      adm.pass = false;
      adm.note = e.what();
    }
    doc.checks.push_back(adm);
  }

  std::optional<MonotonicityInput> input;
  std::string input_error;
  try {
    input = MonotonicityInput::make(chart, pair, kind, quad);
  } catch (const std::exception& e) {
    input_error = e.what();
  }

  const std::vector<double> radii = ladder_radii(config);
  auto need_ladder = [&] {
    if (!doc.ladder) doc.ladder = dyadic_ladder(*input, config.k_min, config.k_max, config.c0, config.c1);
    return *doc.ladder;
  };
  const Vec e1 = Vec::Unit(chart.dim(), 0);

  for (const std::string& name : config.checks) {
    CheckRecord rec;
    rec.name = name;
    Json& v = rec.values;
    try {
      const bool needs_input = name != "poincare" && name != "bkp" && name != "pushforward";
      if (needs_input && !input) throw PreconditionError(input_error);

      if (name == "phi_curve") {
        doc.phi_curve = phi_curve(*input, radii);
        std::vector<double> r, p, err;
        for (const auto& pt : doc.phi_curve) {
          r.push_back(pt.r);
          p.push_back(pt.phi);
          err.push_back(pt.err_est);
        }
        v["r"] = numbers(r);
        v["phi"] = numbers(p);
        v["err_est"] = numbers(err);
        rec.pass = all_finite_nonneg(p);
        if (config.expect_phi) {
          const double e = *config.expect_phi;
          double worst = 0.0;
          for (double x : p) worst = std::max(worst, std::abs(x - e) / std::abs(e));
          v["expected"] = e;
          v["max_rel_error"] = number(worst);
          v["rel_tol"] = tol.phi_rel;
          rec.pass = rec.pass && worst <= tol.phi_rel;
        }
      } else if (name == "ladder") {
        const DyadicLadder& lad = need_ladder();
        std::vector<double> bp, bm, a;
        bool identity = true;
        for (const auto& e : lad.entries) {
          bp.push_back(e.b_plus);
          bm.push_back(e.b_minus);
          a.push_back(e.a_plus);
          a.push_back(e.a_minus);
          identity = identity && e.b_plus == std::pow(4.0, 4 * e.k) * e.a_plus &&
                     e.b_minus == std::pow(4.0, 4 * e.k) * e.a_minus;
        }
        v["k_min"] = lad.k_min;
        v["k_max"] = lad.k_max;
        v["c0"] = lad.c0;
        v["c1"] = lad.c1;
        v["b_plus"] = numbers(bp);
        v["b_minus"] = numbers(bm);
        v["b_identity"] = identity;
        rec.pass = all_finite_nonneg(a) && identity;
      } else if (name == "prop1") {
        const DyadicLadder& lad = need_ladder();
        std::vector<double> ratio, delta;
        int active = 0;
        for (const auto& e : lad.entries) {
          ratio.push_back(e.prop1_ratio);
          delta.push_back(e.delta_k);
          active += e.prop1_active;
        }
        v["ratio"] = numbers(ratio);
        v["delta_k"] = numbers(delta);
        v["active"] = active;
        rec.pass = lad.prop1_all_pass();
        if (active == 0) rec.note = "vacuous: no scale with b+- >= C0";
      } else if (name == "prop2") {
        const DyadicLadder& lad = need_ladder();
        std::vector<double> ratio;
        bool ok = true;
        for (const auto& e : lad.entries)
          if (e.prop2_active) {
            ratio.push_back(e.prop2_ratio);
            ok = ok && e.prop2_ratio < 1.0;
          }
        v["active_ratios"] = numbers(ratio);
        v["max_ratio"] = number(lad.prop2_max_ratio);
        v["observed_epsilon"] = ratio.empty() ? Json(nullptr) : number(1.0 - lad.prop2_max_ratio);
        rec.pass = ok;
        if (ratio.empty()) rec.note = "vacuous: dichotomy branch never active";
      } else if (name == "thm1") {
        const Theorem1Record t = theorem1_check(*input, need_ladder(), tol.guard);
        v["l2_plus"] = number(t.l2_plus);
        v["l2_minus"] = number(t.l2_minus);
        v["q"] = number(t.q);
        v["sup_phi"] = number(t.sup_phi);
        v["ratio"] = number(t.ratio);
        v["guard"] = t.guard;
        v["non_exploding"] = t.non_exploding;
        rec.pass = t.pass;
      } else if (name == "thm2") {
        const Theorem2Record t = theorem2_check(*input, tol.epsilon, need_ladder());
        v["epsilon"] = t.epsilon;
        v["growth_constant"] = number(t.growth_constant);
        v["rho"] = numbers(t.rho);
        v["constant_at_rho"] = numbers(t.constant_at_rho);
        v["fitted_constant"] = number(t.fitted_constant);
        v["stable"] = t.stable;
        rec.pass = t.pass;
      } else if (name == "e322") {
        doc.e322 = energy_inequality_ladder(*input, radii);
        const EnergyLadderRecord& e = *doc.e322;
        std::vector<double> cs, ci, ca;
        for (const auto& x : e.entries) {
          cs.push_back(std::max(x.c_slice[0], x.c_slice[1]));
          ci.push_back(std::max(x.c_inf[0], x.c_inf[1]));
          ca.push_back(std::max(x.c_annulus[0], x.c_annulus[1]));
        }
        v["r"] = numbers(radii);
        v["c_slice"] = numbers(cs);
        v["c_inf"] = numbers(ci);
        v["c_annulus"] = numbers(ca);
        v["fitted_c_slice"] = number(e.c_slice);
        v["fitted_c_inf"] = number(e.c_inf);
        v["fitted_c_annulus"] = number(e.c_annulus);
        v["stable"] = e.pass;
        rec.pass = e.pass;
      } else if (name == "poincare") {
        const PoincareRecord p = gaussian_poincare_check(half_space_power(e1, config.poincare_power),
                                                         {chart.dim(), config.poincare_variance}, tol.poincare, quad);
        v["average"] = number(p.average);
        v["l2"] = number(p.l2);
        v["energy"] = number(p.energy);
        v["lhs"] = number(p.lhs);
        v["rhs"] = number(p.rhs);
        v["margin"] = number(p.margin);
        v["in_hypothesis"] = p.in_hypothesis;
        rec.pass = p.pass && p.in_hypothesis;
      } else if (name == "bkp") {
        const BkpRecord b = bkp_sum(half_space_power(e1, config.bkp_power), half_space_power(e1, config.bkp_power, -1.0),
                                    {chart.dim(), config.bkp_variance}, tol.bkp, quad);
        v["lambda_plus"] = number(b.lambda_plus);
        v["lambda_minus"] = number(b.lambda_minus);
        v["sum"] = number(b.sum);
        v["deficit"] = number(b.deficit);
        rec.pass = b.pass;
      } else if (name == "bkp_perturbed") {
        doc.bkp_perturbed = manifold_bkp_ladder(*input, config.transform_radii);
        const ManifoldBkpLadder& l = *doc.bkp_perturbed;
        std::vector<double> d, u;
        for (const auto& e : l.entries) {
          d.push_back(e.deficit);
          u.push_back(e.untruncated_deficit);
        }
        v["r"] = numbers(config.transform_radii);
        v["deficit"] = numbers(d);
        v["untruncated_deficit"] = numbers(u);
        v["negative_vanishes"] = l.negative_vanishes;
        v["negative_slope"] = number(l.negative_slope);
        v["negative_constant"] = number(l.negative_constant);
        v["untruncated_slope"] = number(l.untruncated_slope);
        rec.pass = l.negative_vanishes || l.negative_slope >= tol.slope;
        if (l.negative_vanishes) rec.note = "negative part of the deficit vanishes on the whole ladder";
      } else if (name == "pushforward") {
        doc.pushforward =
            pushforward_ladder(chart, config.transform_radii, kind, config.transform_s, config.sample_radius, quad);
        const PushforwardLadder& l = *doc.pushforward;
        std::vector<double> dev, mass;
        double cpsi = 0.0, cdpsi = 0.0, ca = 0.0, minj = INFINITY;
        for (const auto& e : l.entries) {
          dev.push_back(e.sup_deviation);
          mass.push_back(e.mass);
          cpsi = std::max(cpsi, e.psi_constant);
          cdpsi = std::max(cdpsi, e.dpsi_constant);
          ca = std::max(ca, e.a_constant);
          minj = std::min(minj, e.min_jacobian);
        }
        v["r"] = numbers(config.transform_radii);
        v["s"] = config.transform_s;
        v["sup_deviation"] = numbers(dev);
        v["mass"] = numbers(mass);
        v["slope"] = number(l.slope);
        v["mass_constant"] = number(l.mass_constant);
        v["psi_constant"] = number(cpsi);
        v["dpsi_constant"] = number(cdpsi);
        v["a_constant"] = number(ca);
        v["min_jacobian"] = number(minj);
        const bool flat = *std::max_element(dev.begin(), dev.end()) <= 1e-10;
        rec.pass = (flat || l.slope >= tol.slope) && minj > 0.0;
        if (flat) rec.note = "flat chart: deviation at rounding level";
      } else if (name == "scale_derivative") {
        const ScaleDerivativeRecord s = scale_derivative(*input, config.derivative_r, config.fd_step);
        v["r"] = s.r;
        v["A_plus"] = number(s.a_plus);
        v["A_minus"] = number(s.a_minus);
        v["B_plus"] = number(s.b_plus);
        v["B_minus"] = number(s.b_minus);
        v["direct"] = number(s.direct);
        v["finite_difference"] = number(s.finite_difference);
        v["scale"] = number(s.scale);
        v["mismatch"] = number(s.mismatch);
        v["err_est"] = number(s.err_est);
        v["lambda_plus"] = number(s.lambda_plus);
        v["lambda_minus"] = number(s.lambda_minus);
        rec.pass = s.pass;
      } else if (name == "positivity") {
        bool ok = true;
        for (int sign : {1, -1}) {
          const PositivityRecord p = positivity_measure(*input, config.positivity_r, sign);
          Json s;
          s["measure"] = number(p.measure);
          s["scaled_measure"] = number(p.scaled_measure);
          s["energy_ratio"] = number(p.energy_ratio);
          const bool hypothesis = p.energy_ratio >= 1.0 / 256;
          s["hypothesis"] = hypothesis;
          v[sign > 0 ? "plus" : "minus"] = s;
          ok = ok && std::isfinite(p.measure) && p.measure >= 0.0 && (!hypothesis || p.measure > 0.0);
        }
        v["r"] = config.positivity_r;
        rec.pass = ok;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      rec.pass = false;
      rec.note = e.what();
    }
    doc.checks.push_back(std::move(rec));
  }
  return doc;
}

std::vector<std::filesystem::path> write_report(const ReportDocument& doc, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  const auto f = format_number;

  std::ostringstream phi, phidat;
  phi << kPhiCurveHeader << '\n';
  phidat << "# r phi err_est\n";
  for (const auto& p : doc.phi_curve) {
    phi << f(p.r) << ',' << f(p.phi) << ',' << f(p.a_plus) << ',' << f(p.a_minus) << ',' << f(p.err_est) << '\n';
    phidat << f(p.r) << ' ' << f(p.phi) << ' ' << f(p.err_est) << '\n';
  }
  write_file(dir / "phi_curve.csv", phi.str(), out);
  write_file(dir / "phi_curve.dat", phidat.str(), out);

  std::ostringstream lad, laddat;
  lad << kLadderHeader << '\n';
  laddat << "# k r b_plus b_minus phi prop1_ratio\n";
  if (doc.ladder)
    for (const auto& e : doc.ladder->entries) {
      lad << e.k << ',' << f(e.r) << ',' << f(e.a_plus) << ',' << f(e.a_minus) << ',' << f(e.b_plus) << ','
          << f(e.b_minus) << ',' << f(e.delta_k) << ',' << f(e.phi) << ',' << f(e.prop1_ratio) << ','
          << (e.prop1_pass ? 1 : 0) << ',' << (e.prop2_active ? 1 : 0) << ',' << f(e.prop2_ratio) << '\n';
      laddat << e.k << ' ' << f(e.r) << ' ' << f(e.b_plus) << ' ' << f(e.b_minus) << ' ' << f(e.phi) << ' '
             << f(e.prop1_ratio) << '\n';
    }
  write_file(dir / "ladder.csv", lad.str(), out);
  write_file(dir / "ladder.dat", laddat.str(), out);

  if (doc.pushforward) {
    std::ostringstream d;
    d << "# r sup_deviation mass\n";
    for (const auto& e : doc.pushforward->entries) d << f(e.r) << ' ' << f(e.sup_deviation) << ' ' << f(e.mass) << '\n';
    write_file(dir / "pushforward.dat", d.str(), out);
  }
  if (doc.bkp_perturbed) {
    std::ostringstream d;
    d << "# r lambda_plus lambda_minus deficit untruncated_deficit\n";
    for (const auto& e : doc.bkp_perturbed->entries)
      d << f(e.r) << ' ' << f(e.lambda_plus) << ' ' << f(e.lambda_minus) << ' ' << f(e.deficit) << ' '
        << f(e.untruncated_deficit) << '\n';
    write_file(dir / "bkp_deficit.dat", d.str(), out);
  }
  if (doc.e322) {
    std::ostringstream d;
    d << "# r c_slice c_inf c_annulus\n";
    for (const auto& e : doc.e322->entries)
      d << f(e.r) << ' ' << f(std::max(e.c_slice[0], e.c_slice[1])) << ' ' << f(std::max(e.c_inf[0], e.c_inf[1])) << ' '
        << f(std::max(e.c_annulus[0], e.c_annulus[1])) << '\n';
    write_file(dir / "e322.dat", d.str(), out);
  }

  Json report;
  report["scenario"] = doc.scenario;
  report["pass"] = doc.pass();
  report["metadata"] = doc.metadata;
  Json checks = Json::array();
  for (const auto& c : doc.checks) {
    Json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    if (!c.note.empty()) j["note"] = c.note;
    j["values"] = c.values;
    checks.push_back(j);
  }
  report["checks"] = checks;
  write_file(dir / "report.json", report.dump(2) + "\n", out);
  return out;
}

int check_suite(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_root,
                const RunOptions& opts, std::ostream& log) {
  if (configs.empty()) {
    log << "error: no scenario configs given\n";
    return 2;
  }
  std::vector<ScenarioConfig> parsed;
  try {
    for (const auto& p : configs) parsed.push_back(load_config(p));
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return 2;
  }
  bool ok = true;
  for (const auto& cfg : parsed) {
    try {
      const ReportDocument doc = run_scenario(cfg, opts);
      write_report(doc, out_root / cfg.id);
      for (const auto& c : doc.checks) {
        log << cfg.id << ' ' << c.name << ' ' << (c.pass ? "PASS" : "FAIL");
        if (!c.note.empty()) log << "  (" << c.note << ')';
        log << '\n';
      }
      ok = ok && doc.pass();
    } catch (const ConfigError& e) {
      log << "error: " << e.what() << '\n';
      return 2;
    }
  }
  return ok ? 0 : 1;
}

}  // namespace monolab
