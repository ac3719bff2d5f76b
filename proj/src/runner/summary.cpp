#include "churnlab/runner/summary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "churnlab/common.hpp"
#include "churnlab/runner/metric_log.hpp"

namespace churnlab::runner {

MeanSe mean_se(const std::vector<double>& values) {
  require(!values.empty(), "mean_se: no values");
  MeanSe m;
  m.n = static_cast<int>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / m.n;
  if (m.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.se = std::sqrt(ss / (m.n - 1)) / std::sqrt(static_cast<double>(m.n));
  }
  return m;
}

RunDigest digest_run(const std::filesystem::path& metrics_file) {
  RunDigest d;
  std::map<std::string, std::pair<double, std::int64_t>> churn, churn_lag1, update_churn, probes;
  std::int64_t band_updates = 0, band_in = 0, pband_updates = 0, pband_in = 0;
  for (const MetricRecord& r : read_metrics(metrics_file)) {
    d.condition = r.run;
    d.seed = r.seed;
    if (r.kind == "return") {
      d.returns.emplace_back(r.step, r.payload.at("value").get<double>());
    } else if (r.kind == "churn") {
      const std::string name = r.payload.at("metric_name");
      const double v = r.payload.at("value");
      auto& acc = churn[name];
      acc.first += v;
      ++acc.second;
      if (r.payload.at("lag").get<int>() == 1) {
        auto& l1 = churn_lag1[name];
        l1.first += v;
        ++l1.second;
      }
    } else if (r.kind == "update_churn") {
      auto& acc = update_churn[r.payload.at("metric_name").get<std::string>()];
      acc.first += r.payload.at("value").get<double>();
      ++acc.second;
    } else if (r.kind == "probe") {
      const auto& m = r.payload.at("measured");
      if (m.is_number()) {
        auto& acc = probes[r.payload.at("probe_name").get<std::string>()];
        acc.first += m.get<double>();
        ++acc.second;
      }
    } else if (r.kind == "diagnostics") {
      band_updates += r.payload.value("value_ratio_updates", std::int64_t{0});
      band_in += r.payload.value("value_ratio_in_band", std::int64_t{0});
      pband_updates += r.payload.value("policy_ratio_updates", std::int64_t{0});
      pband_in += r.payload.value("policy_ratio_in_band", std::int64_t{0});
    }
  }
  if (!d.returns.empty()) d.scalars.emplace_back("final_return", d.returns.back().second);
  for (const auto& [name, acc] : churn) d.scalars.emplace_back("churn_avg:" + name, acc.first / acc.second);
  for (const auto& [name, acc] : churn_lag1) d.scalars.emplace_back("churn_lag1:" + name, acc.first / acc.second);
  for (const auto& [name, acc] : update_churn)
    d.scalars.emplace_back("update_churn_avg:" + name, acc.first / acc.second);
  for (const auto& [name, acc] : probes) d.scalars.emplace_back("probe_avg:" + name, acc.first / acc.second);
  if (band_updates > 0)
    d.scalars.emplace_back("value_ratio_in_band", static_cast<double>(band_in) / static_cast<double>(band_updates));
  if (pband_updates > 0)
    d.scalars.emplace_back("policy_ratio_in_band", static_cast<double>(pband_in) / static_cast<double>(pband_updates));
  return d;
}

std::vector<std::filesystem::path> find_metric_files(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : paths) {
    if (std::filesystem::is_regular_file(p)) {
      out.push_back(p);
    } else if (std::filesystem::is_directory(p)) {
      for (const auto& e : std::filesystem::recursive_directory_iterator(p))
        if (e.is_regular_file() && e.path().filename() == "metrics.jsonl") out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<std::filesystem::path>& paths) {
  const std::vector<std::filesystem::path> files = find_metric_files(paths);
  if (files.empty()) throw ConfigError("summarize: no metrics.jsonl found in the given directories");
  std::map<std::pair<std::string, std::string>, std::vector<double>> grouped;
  for (const auto& f : files) {
    const RunDigest d = digest_run(f);
    for (const auto& [metric, value] : d.scalars) grouped[{d.condition, metric}].push_back(value);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : grouped) rows.push_back({key.first, key.second, mean_se(values)});
  return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out.precision(10);
  out << "condition,metric,n_seeds,mean,standard_error\n";
  for (const SummaryRow& r : rows) {
    out << r.condition << ',' << r.metric << ',' << r.stats.n << ',' << r.stats.mean << ',';
    if (r.stats.se) out << *r.stats.se;
    else out << "NA";
    out << '\n';
  }
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("summary: cannot write " + path.string());
  write_summary_csv(rows, out);
}

}  // namespace churnlab::runner
