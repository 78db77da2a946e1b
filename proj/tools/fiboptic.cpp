// fiboptic: runs law suites and describes instance files.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fiboptic/fiboptic.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fiboptic::ShapeError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string suite_list() {
  std::string s;
  for (const auto& n : fiboptic::suite_names()) s += "  " + n + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiboptic: finite optics law checker"};
  app.require_subcommand(1);

  fiboptic::SuiteConfig cfg;
  std::string instances_path;
  auto* check = app.add_subcommand("check", "run a named suite");
  check->add_option("--suite", cfg.suite, "suite name")->required();
  check->add_option("--max-size", cfg.max_size, "largest object size")->capture_default_str();
  check->add_option("--residual-bound", cfg.residual_bound, "largest residual size")->capture_default_str();
  check->add_option("--entry-bound", cfg.entry_bound, "largest matrix entry size")->capture_default_str();
  check->add_option("--probe-bound", cfg.probe_bound, "largest probe size for polynomial counts")->capture_default_str();
  check->add_option("--denominators", cfg.denominators, "kernel denominator grid")->capture_default_str();
  check->add_option("--ceiling", cfg.ceiling, "enumeration ceiling")->capture_default_str();
  check->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
  check->add_option("--samples", cfg.samples, "samples per sampled case")->capture_default_str();
  check->add_option("--pair-budget", cfg.pair_budget, "pairs above which a case is sampled")->capture_default_str();
  check->add_option("--multirow-samples", cfg.multirow_samples, "seeded multi-row triples")->capture_default_str();
  check->add_option("--roundtrip-budget", cfg.roundtrip_budget, "representatives above which a round trip is sampled")
      ->capture_default_str();
  check->add_option("--roundtrip-samples", cfg.roundtrip_samples, "samples per sampled round trip")->capture_default_str();
  check->add_option("--format", cfg.format, "json or text")
      ->check(CLI::IsMember({"json", "text"}))
      ->capture_default_str();
  check->add_option("--instances", instances_path, "JSON array of {source,target} instances");
  check->add_flag("--timing", cfg.timing, "record wall-clock duration_ms");

  std::string describe_path;
  auto* describe = app.add_subcommand("describe", "summarise an instance file");
  describe->add_option("file", describe_path, "JSON instance file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*check) {
    const auto& names = fiboptic::suite_names();
    if (std::find(names.begin(), names.end(), cfg.suite) == names.end()) {
      std::cerr << "unknown suite: " << cfg.suite << "\n\n" << check->help() << "\nsuites:\n" << suite_list();
      return 2;
    }
    try {
      if (!instances_path.empty()) {
        try {
          cfg.instances = fiboptic::json::parse(slurp(instances_path));
        } catch (const fiboptic::json::parse_error& e) {
          std::cerr << "malformed instance file: " << e.what() << "\n";
          return 2;
        }
      }
      auto report = fiboptic::run_suite(cfg);
      if (cfg.format == "json")
        std::cout << fiboptic::json(report).dump(2) << "\n";
      else
        std::cout << fiboptic::render_text(report);
      return report.ok() ? 0 : 1;
    } catch (const fiboptic::json::exception& e) {
      std::cerr << "malformed instance file: " << e.what() << "\n";
      return 2;
    } catch (const fiboptic::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    std::cout << fiboptic::describe_text(slurp(describe_path)) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
