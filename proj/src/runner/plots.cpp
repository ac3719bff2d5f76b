#include "churnlab/runner/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "churnlab/common.hpp"
#include "churnlab/runner/metric_log.hpp"
#include "churnlab/runner/summary.hpp"

namespace churnlab::runner {

namespace {

constexpr double kWidth = 640, kHeight = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

/// Series built from per-seed curves sharing x positions: mean and standard error at each x.
Series aggregate(const std::string& label, const std::vector<std::map<double, double>>& per_seed) {
  std::map<double, std::vector<double>> at_x;
  for (const auto& curve : per_seed)
    for (const auto& [x, y] : curve) at_x[x].push_back(y);
  Series s;
  s.label = label;
  bool any_se = false;
  std::vector<double> se;
  for (const auto& [x, ys] : at_x) {
    const MeanSe m = mean_se(ys);
    s.x.push_back(x);
    s.mean.push_back(m.mean);
    se.push_back(m.se.value_or(0.0));
    any_se = any_se || m.se.has_value();
  }
  if (any_se) s.se = std::move(se);
  return s;
}

}  // namespace

AxisRange chart_range(const Chart& chart) {
  AxisRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
              std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Series& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double band = s.se.empty() ? 0.0 : s.se[i];
      r.x_min = std::min(r.x_min, s.x[i]);
      r.x_max = std::max(r.x_max, s.x[i]);
      r.y_min = std::min(r.y_min, s.mean[i] - band);
      r.y_max = std::max(r.y_max, s.mean[i] + band);
    }
  }
  if (!std::isfinite(r.x_min)) return {};
  if (r.x_max == r.x_min) r.x_max = r.x_min + 1.0;
  if (r.y_max == r.y_min) {
    r.y_min -= 0.5;
    r.y_max += 0.5;
  }
  return r;
}

std::string render_svg(const Chart& chart) {
  const AxisRange r = chart_range(chart);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (x - r.x_min) / (r.x_max - r.x_min) * pw; };
  const auto py = [&](double y) { return kTop + (r.y_max - y) / (r.y_max - r.y_min) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(chart.title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = r.x_min + (r.x_max - r.x_min) * i / 4.0;
    const double fy = r.y_min + (r.y_max - r.y_min) * i / 4.0;
    o << "<text x=\"" << px(fx) << "\" y=\"" << kTop + ph + 15 << "\" text-anchor=\"middle\">" << fmt(fx)
      << "</text>\n";
    o << "<text x=\"" << kLeft - 5 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">" << fmt(fy) << "</text>\n";
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << py(fy) << "\" y2=\"" << py(fy)
      << "\" stroke=\"#eeeeee\"/>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n";
  o << "<text transform=\"translate(15," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.se.empty() && s.x.size() > 1) {
      o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << ',' << py(s.mean[i] + s.se[i]) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) o << px(s.x[i]) << ',' << py(s.mean[i] - s.se[i]) << ' ';
      o << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) o << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
    o << "\"/>\n";
    const double ly = kTop + 15 + 16.0 * static_cast<double>(k);
    o << "<line x1=\"" << kLeft + pw + 10 << "\" x2=\"" << kLeft + pw + 30 << "\" y1=\"" << ly << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kLeft + pw + 35 << "\" y=\"" << ly + 4 << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& run_paths,
                                              const std::filesystem::path& out_dir, std::ostream& notices) {
  // condition -> per-seed curves
  std::map<std::string, std::vector<std::map<double, double>>> returns;
  std::map<std::string, std::map<std::string, std::vector<std::map<double, double>>>> churn;  // metric -> condition

  for (const auto& file : find_metric_files(run_paths)) {
    std::map<double, double> ret;
    std::map<std::string, std::map<double, std::pair<double, int>>> lag_acc;
    std::string condition;
    for (const MetricRecord& r : read_metrics(file)) {
      condition = r.run;
      if (r.kind == "return") {
        ret[static_cast<double>(r.step)] = r.payload.at("value").get<double>();
      } else if (r.kind == "churn") {
        auto& acc = lag_acc[r.payload.at("metric_name").get<std::string>()][r.payload.at("lag").get<double>()];
        acc.first += r.payload.at("value").get<double>();
        ++acc.second;
      }
    }
    if (!ret.empty()) returns[condition].push_back(std::move(ret));
    for (const auto& [metric, by_lag] : lag_acc) {
      std::map<double, double> curve;
      for (const auto& [lag, acc] : by_lag) curve[lag] = acc.first / acc.second;
      churn[metric][condition].push_back(std::move(curve));
    }
  }

  std::vector<std::filesystem::path> written;
  const auto write = [&](const Chart& chart, const std::string& name) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path p = out_dir / name;
    std::ofstream(p) << render_svg(chart);
    written.push_back(p);
  };

  if (returns.empty()) {
    notices << "plot: no return records; skipping return_vs_step.svg\n";
  } else {
    Chart c{"Evaluation return", "environment step", "return", {}};
    for (const auto& [cond, curves] : returns) c.series.push_back(aggregate(cond, curves));
    write(c, "return_vs_step.svg");
  }
  if (churn.empty()) {
    notices << "plot: no churn records; skipping churn_vs_lag charts\n";
  } else {
    for (const auto& [metric, by_cond] : churn) {
      Chart c{"Churn vs lag: " + metric, "lag (snapshots)", metric, {}};
      for (const auto& [cond, curves] : by_cond) c.series.push_back(aggregate(cond, curves));
      write(c, "churn_vs_lag_" + metric + ".svg");
    }
  }
  return written;
}

}  // namespace churnlab::runner
