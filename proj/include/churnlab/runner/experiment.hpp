#pragma once

#include <map>
#include <optional>

#include "churnlab/runner/config.hpp"

namespace churnlab::runner {

/// Post-warm-up count of regularized updates whose realized ratio
/// lambda * |L_reg| / |L_main| fell inside [beta / 2, 2 beta].
struct RatioBand {
  std::int64_t updates = 0;
  std::int64_t in_band = 0;

  double fraction() const { return updates > 0 ? static_cast<double>(in_band) / static_cast<double>(updates) : 0.0; }
};

inline constexpr std::int64_t kRatioWarmupUpdates = 200;

/// In-memory digest of one seed's run; the same numbers are in metrics.jsonl.
struct SeedResult {
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::int64_t, double>> eval_curve;  // (env step, mean return)
  double final_return = 0.0;
  std::int64_t updates = 0;
  // metric name -> per-lag mean over training (index 0 is lag 1)
  std::map<std::string, std::vector<double>> churn_by_lag;
  // metric name -> mean over all reports and lags
  std::map<std::string, double> churn_average;
  // metric name -> mean single-update churn over training
  std::map<std::string, double> update_churn_average;
  std::optional<double> trust_region_mean_abs;
  std::optional<double> trust_region_violation;
  RatioBand value_ratio;
  RatioBand policy_ratio;
  bool diverged = false;  // non-finite loss or return observed
};

/// Trains one seed and writes run_dir/metrics.jsonl.
SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& run_dir);

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::vector<SeedResult> runs;
};

/// Validates everything first (no files on error), then runs every sweep
/// condition and seed under <output>/<condition>/seed_<k>/ and writes
/// summary.csv and plots/ at the output root.
ExperimentResult run_experiment(const ExperimentConfig& config, std::optional<std::uint64_t> seed_override = {},
                                std::optional<std::filesystem::path> output_override = {});

/// Mean undiscounted return of `episodes` exploration-free episodes.
double evaluate_policy(agents::Agent& agent, env::Environment& env, int episodes);

}  // namespace churnlab::runner
