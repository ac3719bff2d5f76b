#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace churnlab::runner {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> se;  // empty: no shading
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

struct AxisRange {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

/// Data range of all series including the shaded mean +- se band.
AxisRange chart_range(const Chart& chart);

std::string render_svg(const Chart& chart);

/// Writes return_vs_step.svg and churn_vs_lag_<metric>.svg into out_dir, one
/// series per condition. Metric kinds without records are skipped with a notice.
std::vector<std::filesystem::path> emit_plots(const std::vector<std::filesystem::path>& run_paths,
                                              const std::filesystem::path& out_dir, std::ostream& notices);

}  // namespace churnlab::runner
