#include "cellstream/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cellstream::cli {

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_field(const std::string& v, const std::filesystem::path& path,
                   int lineno, const std::string& column) {
  std::istringstream ss(v);
  double out = 0.0;
  ss >> out;
  if (ss.fail() || !ss.eof())
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                             ": cannot parse '" + v + "' in column " + column);
  return out;
}

}  // namespace

std::vector<trainer::EpochMetrics> parse_metrics_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open metrics CSV: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ":1: empty metrics file");
  const std::vector<std::string> expected{"epoch",    "train_loss", "val_loss",
                                          "val_acc",  "lr",         "eligible"};
  if (split_csv_row(line) != expected)
    throw std::runtime_error(path.string() + ":1: unexpected header '" + line +
                             "'");

  std::vector<trainer::EpochMetrics> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_csv_row(line);
    if (fields.size() != expected.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(expected.size()) +
                               " fields, got " + std::to_string(fields.size()));
    trainer::EpochMetrics m;
    m.epoch = static_cast<int>(parse_field(fields[0], path, lineno, "epoch"));
    m.train_loss = parse_field(fields[1], path, lineno, "train_loss");
    m.val_loss = parse_field(fields[2], path, lineno, "val_loss");
    m.val_acc = parse_field(fields[3], path, lineno, "val_acc");
    m.lr = parse_field(fields[4], path, lineno, "lr");
    m.eligible = static_cast<std::size_t>(
        parse_field(fields[5], path, lineno, "eligible"));
    out.push_back(m);
  }
  if (out.empty())
    throw std::runtime_error(path.string() + ": no data rows");
  return out;
}

namespace {

struct Mapper {
  double x_min, x_max, y_min, y_max;
  double px0, px1, py0, py1;  // pixel rect; py0 is the TOP edge

  double sx(double x) const {
    return px0 + (x - x_min) / (x_max - x_min) * (px1 - px0);
  }
  double sy(double y) const {
    return py1 - (y - y_min) / (y_max - y_min) * (py1 - py0);
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(6) << v;
  return ss.str();
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path,
                          const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<ChartSeries>& series) {
  if (series.empty())
    throw std::invalid_argument("chart needs at least one series");
  double x_min = series[0].x.front(), x_max = x_min;
  double y_min = series[0].y.front(), y_max = y_min;
  for (const ChartSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw std::invalid_argument("series '" + s.label + "' is empty or ragged");
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  const int width = 640, height = 400;
  Mapper m{x_min, x_max, y_min, y_max, 60.0, width - 15.0, 30.0, height - 45.0};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";

  // axes
  svg << "<line x1=\"" << m.px0 << "\" y1=\"" << m.py1 << "\" x2=\"" << m.px1
      << "\" y2=\"" << m.py1 << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << m.px0 << "\" y1=\"" << m.py0 << "\" x2=\"" << m.px0
      << "\" y2=\"" << m.py1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double fx = x_min + (x_max - x_min) * i / 5.0;
    double fy = y_min + (y_max - y_min) * i / 5.0;
    svg << "<text x=\"" << m.sx(fx) << "\" y=\"" << m.py1 + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"10\">" << fmt(fx) << "</text>\n";
    svg << "<text x=\"" << m.px0 - 6 << "\" y=\"" << m.sy(fy) + 3
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"10\">" << fmt(fy) << "</text>\n";
    svg << "<line x1=\"" << m.px0 << "\" y1=\"" << m.sy(fy) << "\" x2=\""
        << m.px1 << "\" y2=\"" << m.sy(fy)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }
  svg << "<text x=\"" << (m.px0 + m.px1) / 2 << "\" y=\"" << height - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"11\">" << x_label << "</text>\n";
  svg << "<text x=\"14\" y=\"" << (m.py0 + m.py1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
      << "transform=\"rotate(-90 14 " << (m.py0 + m.py1) / 2 << ")\">" << y_label
      << "</text>\n";

  double legend_y = m.py0 + 6;
  for (const ChartSeries& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << fmt(m.sx(s.x[i])) << ',' << fmt(m.sy(s.y[i])) << ' ';
    svg << "\"/>\n";
    svg << "<line x1=\"" << m.px1 - 130 << "\" y1=\"" << legend_y << "\" x2=\""
        << m.px1 - 110 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
        << "\" stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << m.px1 - 105 << "\" y=\"" << legend_y + 3
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.label
        << "</text>\n";
    legend_y += 14;
  }
  svg << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << svg.str();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_run_figure(const std::filesystem::path& loss_path,
                      const std::filesystem::path& acc_path,
                      const std::string& run_name,
                      const std::vector<trainer::EpochMetrics>& epochs) {
  if (epochs.empty()) throw std::invalid_argument("run has no epochs");
  ChartSeries train_loss{"train loss", "#1f77b4", {}, {}};
  ChartSeries val_loss{"val loss", "#d62728", {}, {}};
  ChartSeries val_acc{"val accuracy", "#2ca02c", {}, {}};
  for (const trainer::EpochMetrics& e : epochs) {
    double t = e.epoch;
    train_loss.x.push_back(t);
    train_loss.y.push_back(e.train_loss);
    val_loss.x.push_back(t);
    val_loss.y.push_back(e.val_loss);
    val_acc.x.push_back(t);
    val_acc.y.push_back(e.val_acc);
  }
  write_line_chart_svg(loss_path, run_name + " loss", "epoch", "loss",
                       {train_loss, val_loss});
  write_line_chart_svg(acc_path, run_name + " validation accuracy", "epoch",
                       "accuracy [%]", {val_acc});
}

void write_competence_figure(const std::filesystem::path& path,
                             const curriculum::CurriculumParams& params,
                             int t_max) {
  ChartSeries c{"competence c(t)", "#1f77b4", {}, {}};
  for (int t = 0; t <= t_max; ++t) {
    c.x.push_back(t);
    c.y.push_back(curriculum::competence(t, params));
  }
  write_line_chart_svg(path, "competence schedule", "epoch", "c(t)", {c});
}

}  // namespace cellstream::cli
