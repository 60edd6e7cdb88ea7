#include <glob.h>

#include <algorithm>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "monolab/scenario.hpp"

namespace {

std::filesystem::path default_out_root() {
  const char* env = std::getenv("MONOLAB_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("monolab_out");
}

std::vector<std::filesystem::path> expand(const std::vector<std::string>& patterns) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : patterns) {
    glob_t g{};
    if (glob(p.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace monolab;
  CLI::App app{"monolab: two-phase monotonicity functional lab"};
  app.require_subcommand(1);

  int workers = 1;
  double tol_scale = 1.0;
  std::string kernel;
  app.add_option("--workers", workers, "worker threads for quadrature and residual checks")
      ->check(CLI::PositiveNumber);
  app.add_option("--tol-scale", tol_scale, "multiplies every numeric tolerance")->check(CLI::PositiveNumber);
  app.add_option("--kernel", kernel, "override the scenario kernel")->check(CLI::IsMember({"gauss", "parametrix0"}));

  auto* run = app.add_subcommand("run", "run one scenario");
  std::string config, out;
  run->add_option("--config", config, "scenario file")->required();
  run->add_option("--out", out, "output directory (default: output.dir or $MONOLAB_OUT/<id>)");

  auto* suite = app.add_subcommand("suite", "run every scenario matching the patterns");
  std::vector<std::string> patterns;
  std::string suite_out;
  suite->add_option("--glob", patterns, "config glob, repeatable")->required();
  suite->add_option("--out", suite_out, "output root (default: $MONOLAB_OUT or ./monolab_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  RunOptions opts;
  opts.workers = workers;
  opts.tol_scale = tol_scale;
  if (!kernel.empty()) opts.kernel = parse_kernel_kind(kernel);

  if (*suite) {
    const auto files = expand(patterns);
    return check_suite(files, suite_out.empty() ? default_out_root() : std::filesystem::path(suite_out), opts,
                       std::cout);
  }

  try {
    const ScenarioConfig cfg = load_config(config);
    std::filesystem::path dir = out;
    if (dir.empty()) dir = cfg.out_dir.empty() ? default_out_root() / cfg.id : std::filesystem::path(cfg.out_dir);
    const ReportDocument doc = run_scenario(cfg, opts);
    write_report(doc, dir);
    for (const auto& c : doc.checks) {
      std::cout << cfg.id << ' ' << c.name << ' ' << (c.pass ? "PASS" : "FAIL");
      if (!c.note.empty()) std::cout << "  (" << c.note << ')';
      std::cout << '\n';
    }
    std::cout << "wrote " << dir.string() << '\n';
    return doc.pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
