#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "monolab/scenario.hpp"

using namespace monolab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("monolab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg").validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kNull =
    "scenario.id = null\n"
    "pair.family = Null\n"
    "ladder.k_min = 2\n"
    "ladder.k_max = 3\n"
    "checks = phi_curve, ladder, prop1, prop2, thm1\n";

}  // namespace

TEST_CASE("parser reads sections, lists and comments") {
  const auto c = parse_config(
      "# comment\n"
      "manifold.family = sphere   # trailing\n"
      "manifold.n = 3\n"
      "pair.family = PowerWedge\n"
      "pair.exponent = 0.25\n"
      "pair.direction = 0, 1, 0\n"
      "transforms.radii = 0.2, 0.1\n"
      "kernel.kind = parametrix0\n"
      "checks = phi_curve, thm1\n"
      "expect.phi = 0.25\n",
      "dir/my_case.cfg");
  CHECK(c.id == "my_case");
  CHECK(c.manifold == "sphere");
  CHECK(c.n == 3);
  CHECK(c.params.exponent == 0.25);
  CHECK(c.params.direction == std::vector<double>{0, 1, 0});
  CHECK(c.transform_radii == std::vector<double>{0.2, 0.1});
  CHECK(c.kernel == KernelKind::ParametrixU);
  CHECK(c.checks == std::vector<std::string>{"phi_curve", "thm1"});
  CHECK(*c.expect_phi == 0.25);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("parser diagnostics name the line and key") {
  CHECK(error_of("pair.family = Null\nchecks = thm1\nladder.kmin = 2\n").find("t.cfg:3: unknown key 'ladder.kmin'") !=
        std::string::npos);
  CHECK(error_of("pair.family = Null\npair.family = Null\n").find("t.cfg:2: key 'pair.family' already set on line 1") !=
        std::string::npos);
  CHECK(error_of("pair.family = Null\nmanifold.n = two\n").find("t.cfg:2: key 'manifold.n'") != std::string::npos);
  CHECK(error_of("pair.family = Null\nmanifold.n 2\n").find("t.cfg:2: expected 'key = value'") != std::string::npos);
  CHECK(error_of("pair.family = Null\nchecks = thm1, thm9\n").find("unknown check 'thm9'") != std::string::npos);
  CHECK(error_of("pair.family = Null\nchecks = thm1\nladder.k_min = 0\n").find("ladder.k_min") != std::string::npos);
  CHECK(error_of("pair.family = Null\nchecks = thm1\nkernel.kind = heat\n").find("kernel.kind") != std::string::npos);
  CHECK(error_of("pair.family = Null\nchecks = pushforward\ntransforms.radii = 0.3, 0.1\n").find("transforms.radii") !=
        std::string::npos);
  CHECK(error_of("checks = thm1\n").find("pair.family") != std::string::npos);
}

TEST_CASE("tolerance scaling leaves the guard and slope alone") {
  const Tolerances t = Tolerances{}.scaled(10.0);
  CHECK(t.residual == doctest::Approx(1e-9));
  CHECK(t.phi_rel == doctest::Approx(0.1));
  CHECK(t.guard == 100.0);
  CHECK(t.slope == 1.8);
  CHECK_THROWS_AS(Tolerances{}.scaled(0.0), ConfigError);
}

TEST_CASE("format_number round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 6.25e-2, -1e-300, 12345678.9}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(-INFINITY) == "-inf");
}

TEST_CASE("null scenario: zero curves, every check passes, one record per check") {
  const auto cfg = parse_config(kNull, "null.cfg");
  const ReportDocument doc = run_scenario(cfg);
  CHECK(doc.pass());
  REQUIRE(doc.checks.size() == cfg.checks.size() + 1);
  CHECK(doc.checks.front().name == "admissibility");
  for (std::size_t i = 0; i < cfg.checks.size(); ++i) CHECK(doc.checks[i + 1].name == cfg.checks[i]);
  for (const auto& p : doc.phi_curve) {
    CHECK(p.phi == 0.0);
    CHECK(p.a_plus == 0.0);
  }
  REQUIRE(doc.ladder);
  for (const auto& e : doc.ladder->entries) CHECK(e.b_plus == 0.0);
}

TEST_CASE("write_report: exact headers, idempotent, unwritable target") {
  const ReportDocument doc = run_scenario(parse_config(kNull, "null.cfg"));
  const auto dir = scratch("write");
  const auto paths = write_report(doc, dir);
  CHECK(paths.size() == 5);
  const std::string ladder = slurp(dir / "ladder.csv"), phi = slurp(dir / "phi_curve.csv"),
                    report = slurp(dir / "report.json");
  CHECK(ladder.rfind(std::string(kLadderHeader) + "\n", 0) == 0);
  CHECK(phi.rfind("r,phi,A_plus,A_minus,err_est\n", 0) == 0);
  CHECK(ladder.back() == '\n');
  CHECK(phi.find("0.0625,0,0,0,") != std::string::npos);
  CHECK(report.find("\"scenario\": \"null\"") != std::string::npos);

  write_report(doc, dir);
  CHECK(slurp(dir / "ladder.csv") == ladder);
  CHECK(slurp(dir / "phi_curve.csv") == phi);
  CHECK(slurp(dir / "report.json") == report);

  std::ofstream(dir / "blocker") << "x";
  CHECK_THROWS_AS(write_report(doc, dir / "blocker" / "sub"), ConfigError);
}

TEST_CASE("suite exit codes") {
  const auto dir = scratch("suite");
  std::ostringstream log;
  CHECK(check_suite({}, dir, {}, log) == 2);

  std::ofstream(dir / "null.cfg") << kNull;
  CHECK(check_suite({dir / "null.cfg"}, dir / "out", {}, log) == 0);
  CHECK(std::filesystem::exists(dir / "out" / "null" / "ladder.csv"));
  CHECK(log.str().find("null prop1 PASS") != std::string::npos);

  std::ofstream(dir / "overlap.cfg") << "scenario.id = overlap\n"
                                        "pair.family = NumericPair\n"
                                        "pair.overlap = 0.3\n"
                                        "grid.h = 0.125\n"
                                        "ladder.k_min = 2\n"
                                        "ladder.k_max = 2\n"
                                        "checks = phi_curve\n";
  log.str("");
  CHECK(check_suite({dir / "null.cfg", dir / "overlap.cfg"}, dir / "out", {}, log) == 1);
  CHECK(log.str().find("overlap admissibility FAIL") != std::string::npos);
  CHECK(log.str().find("overlap phi_curve FAIL") != std::string::npos);

  std::ofstream(dir / "bad.cfg") << "pair.family = Null\nchecks = nope\n";
  CHECK(check_suite({dir / "null.cfg", dir / "bad.cfg"}, dir / "out", {}, log) == 2);
}
