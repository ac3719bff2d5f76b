#include "churnlab/runner/metric_log.hpp"

#include "churnlab/common.hpp"

namespace churnlab::runner {

using nlohmann::json;

MetricLog::MetricLog(const std::filesystem::path& path, std::string run, std::uint64_t seed)
    : out_(path, std::ios::trunc), run_(std::move(run)), seed_(seed) {
  if (!out_) throw ConfigError("metrics: cannot open " + path.string() + " for writing");
}

void MetricLog::write(std::int64_t step, const std::string& kind, const json& payload) {
  require(step >= last_step_, "metrics: steps must be non-decreasing");
  last_step_ = step;
  json line = payload;
  line["run"] = run_;
  line["seed"] = seed_;
  line["step"] = step;
  line["kind"] = kind;
  out_ << line.dump() << '\n';
}

void MetricLog::flush() { out_.flush(); }

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("metrics: cannot open " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw ConfigError("metrics: malformed line in " + path.string());
    }
    MetricRecord r;
    r.run = j.value("run", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.step = j.value("step", std::int64_t{0});
    r.kind = j.value("kind", "");
    j.erase("run");
    j.erase("seed");
    j.erase("step");
    j.erase("kind");
    r.payload = std::move(j);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace churnlab::runner
