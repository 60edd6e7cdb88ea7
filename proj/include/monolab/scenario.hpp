#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "monolab/gauss_transforms.hpp"

namespace monolab {

/// Bad scenario file or flag: exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double validity = 1e-10;  ///< pair nonnegativity / disjointness
  double residual = 1e-10;  ///< supercaloric residual
  double slack = 1.0;       ///< C in the -tol - C sqrt(h) residual threshold
  double phi_rel = 0.01;    ///< relative tolerance against expect.phi
  double poincare = 1e-9;
  double bkp = 1e-3;
  double guard = 100.0;     ///< regression guard for thm1
  double epsilon = 1.0;     ///< growth exponent for thm2
  double slope = 1.8;       ///< minimum fitted log-slope for O(r^2) quantities

  /// Scales every tolerance except the guard, epsilon and slope.
  Tolerances scaled(double s) const;
};

struct ScenarioConfig {
  std::string id;
  std::filesystem::path source;

  std::string manifold = "euclidean";  ///< euclidean | sphere | constant_curvature | perturbed
  int n = 2;
  double radius = 1.0;  ///< delta_p
  double curvature = 1.0;
  double epsilon = 0.05;
  int shape = 0;

  std::string family;
  FamilyParams params;
  KernelKind kernel = KernelKind::GaussG;

  double grid_half_width = 1.0, grid_h = 1.0 / 16, grid_q = 0.5, grid_dt0 = 1.0 / 32;
  QuadratureConfig quad;

  int k_min = 2, k_max = 5;
  double c0 = 10.0, c1 = 1.0;

  std::vector<std::string> checks;

  std::vector<double> transform_radii{0.2, 0.1, 0.05, 0.025};
  double transform_s = -0.5;
  double sample_radius = 2.0;
  double derivative_r = 1.0 / 16, fd_step = 0.02;
  double positivity_r = 1.0 / 16;
  double poincare_power = 1.0, poincare_variance = 1.0;
  double bkp_power = 1.0, bkp_variance = 2.0;

  Tolerances tol;
  std::optional<double> expect_phi;
  std::string out_dir;  ///< output.dir; empty means the runner decides

  NormalChart chart() const;
  void validate() const;
};

/// Check names accepted in `checks`.
const std::vector<std::string>& known_checks();

/// Flat `section.key = value` text; '#' starts a comment. Throws ConfigError naming the line and key.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

struct CheckRecord {
  std::string name;
  bool pass = true;
  std::string note;
  nlohmann::ordered_json values = nlohmann::ordered_json::object();
};

struct ReportDocument {
  std::string scenario;
  std::vector<CheckRecord> checks;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
  std::vector<PhiPoint> phi_curve;
  std::optional<DyadicLadder> ladder;
  std::optional<PushforwardLadder> pushforward;
  std::optional<ManifoldBkpLadder> bkp_perturbed;
  std::optional<EnergyLadderRecord> e322;

  bool pass() const;
};

struct RunOptions {
  int workers = 1;
  double tol_scale = 1.0;
  std::optional<KernelKind> kernel;
};

ReportDocument run_scenario(const ScenarioConfig& config, const RunOptions& opts = {});

/// Writes ladder.csv, phi_curve.csv, report.json and *.dat into dir; returns the paths written.
std::vector<std::filesystem::path> write_report(const ReportDocument& doc, const std::filesystem::path& dir);

/// Exact CSV header of ladder.csv.
extern const char* const kLadderHeader;
extern const char* const kPhiCurveHeader;

/// %.17g, with nan / inf spelled out.
std::string format_number(double v);

/// Runs every config, writes under out_root/<id>, prints one line per check. Returns 0, 1 or 2.
int check_suite(const std::vector<std::filesystem::path>& configs, const std::filesystem::path& out_root,
                const RunOptions& opts, std::ostream& log);

}  // namespace monolab
