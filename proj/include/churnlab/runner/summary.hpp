#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace churnlab::runner {

struct MeanSe {
  double mean = 0.0;
  std::optional<double> se;  // empty for a single value: never fabricated
  int n = 0;
};

/// Sample mean and standard error sigma_hat / sqrt(n) with the (n - 1) variance.
MeanSe mean_se(const std::vector<double>& values);

/// Per-run scalars extracted from one metrics.jsonl.
struct RunDigest {
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::int64_t, double>> returns;  // (step, eval return)
  std::vector<std::pair<std::string, double>> scalars;   // (metric, value)
};

RunDigest digest_run(const std::filesystem::path& metrics_file);

/// All metrics.jsonl files found under the given paths (a path may also be the file itself).
std::vector<std::filesystem::path> find_metric_files(const std::vector<std::filesystem::path>& paths);

struct SummaryRow {
  std::string condition;
  std::string metric;
  MeanSe stats;
};

/// Per condition and metric: mean and standard error across seeds of the final
/// evaluation return and of each churn metric's training average. Throws
/// ConfigError when no metrics are found.
std::vector<SummaryRow> summarize(const std::vector<std::filesystem::path>& paths);

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

}  // namespace churnlab::runner
