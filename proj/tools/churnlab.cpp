#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "churnlab/ntk/session.hpp"
#include "churnlab/runner/experiment.hpp"
#include "churnlab/runner/plots.hpp"
#include "churnlab/runner/summary.hpp"

namespace fs = std::filesystem;
using namespace churnlab;

namespace {

int cmd_run(const fs::path& config_path, std::optional<std::uint64_t> seed, std::optional<fs::path> out) {
  const runner::ExperimentConfig config = runner::load_config(config_path);
  const runner::ExperimentResult result = runner::run_experiment(config, seed, out);
  for (const auto& r : result.runs) {
    std::cout << r.condition << " seed " << r.seed << ": final return " << r.final_return << " after " << r.updates
              << " updates" << (r.diverged ? " (diverged)" : "") << '\n';
  }
  std::cout << "output: " << result.output_dir.string() << '\n';
  return 0;
}

int cmd_probe(const std::string& name, double alpha, std::uint64_t seed, int points) {
  for (const auto& rec : ntk::run_probe_session(name, alpha, seed, points)) {
    nlohmann::json line = {{"probe_name", rec.probe_name},
                           {"alpha", rec.alpha},
                           {"kernel", rec.estimate.kernel},
                           {"predicted", rec.estimate.predicted},
                           {"measured", rec.estimate.measured},
                           {"residual", rec.estimate.residual}};
    std::cout << line.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"churnlab: churn measurement and reduction on toy RL tasks"};
  app.require_subcommand(1);

  fs::path config_path;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  auto* run = app.add_subcommand("run", "train every condition and seed of a config");
  run->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run only this seed");
  run->add_option("--out", out, "output directory (overrides the config)");

  std::vector<fs::path> dirs;
  std::optional<fs::path> csv_path;
  auto* summarize = app.add_subcommand("summarize", "mean and standard error per condition as CSV");
  summarize->add_option("dirs", dirs, "run directories")->required();
  summarize->add_option("--csv", csv_path, "write to a file instead of stdout");

  fs::path plot_dir = "plots";
  auto* plot = app.add_subcommand("plot", "SVG return and churn charts");
  plot->add_option("dirs", dirs, "run directories")->required();
  plot->add_option("--out", plot_dir, "chart directory")->capture_default_str();

  std::string probe_name;
  double alpha = 1e-5;
  std::uint64_t probe_seed = 0;
  int points = 100;
  auto* probe = app.add_subcommand("probe", "first-order NTK churn predictions on tiny networks");
  probe->add_option("--probe", probe_name, "value_churn | policy_value_deviation")->required();
  probe->add_option("--alpha", alpha, "plain gradient step size")->required();
  probe->add_option("--seed", probe_seed)->capture_default_str();
  probe->add_option("--points", points, "random probe pairs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, out);
    if (*summarize) {
      const auto rows = runner::summarize(dirs);
      if (csv_path) runner::write_summary_csv(rows, *csv_path);
      else runner::write_summary_csv(rows, std::cout);
      return 0;
    }
    if (*plot) {
      for (const auto& p : runner::emit_plots(dirs, plot_dir, std::cerr)) std::cout << p.string() << '\n';
      return 0;
    }
    if (*probe) return cmd_probe(probe_name, alpha, probe_seed, points);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
