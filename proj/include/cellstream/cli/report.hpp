#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cellstream/curriculum.hpp"
#include "cellstream/trainer/train.hpp"

namespace cellstream::cli {

// Parses a per-run metrics CSV; malformed content is reported as
// "<file>:<line>: <problem>".
std::vector<trainer::EpochMetrics> parse_metrics_csv(
    const std::filesystem::path& path);

// One line chart; multiple named series share the axes.
struct ChartSeries {
  std::string label;
  std::string color;  // SVG color
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<ChartSeries>& series);

// Loss curves (train/validation) and validation accuracy for one run.
void write_run_figure(const std::filesystem::path& loss_path,
                      const std::filesystem::path& acc_path,
                      const std::string& run_name,
                      const std::vector<trainer::EpochMetrics>& epochs);

void write_competence_figure(const std::filesystem::path& path,
                             const curriculum::CurriculumParams& params,
                             int t_max);

}  // namespace cellstream::cli
