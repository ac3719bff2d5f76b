#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace churnlab::runner {

/// One line of metrics.jsonl: {"run", "seed", "step", "kind", ...payload}.
/// kind is one of return | churn | update_churn | probe | diagnostics.
struct MetricRecord {
  std::string run;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  std::string kind;
  nlohmann::json payload;
};

/// Append-only JSON-lines writer. Steps must be non-decreasing.
class MetricLog {
 public:
  MetricLog(const std::filesystem::path& path, std::string run, std::uint64_t seed);

  void write(std::int64_t step, const std::string& kind, const nlohmann::json& payload);
  void flush();

 private:
  std::ofstream out_;
  std::string run_;
  std::uint64_t seed_;
  std::int64_t last_step_ = 0;
};

/// Parses a metrics file. A truncated final line (killed run) is ignored.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

}  // namespace churnlab::runner
