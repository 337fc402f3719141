#pragma once

#include <string>
#include <vector>

namespace mwgan {

struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Line chart as a standalone SVG string: one polyline per series, axes with
/// min/max ticks, legend in draw order. Deterministic bytes for fixed input.
std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                            const std::string& y_label);

// Reads metrics CSVs (exact header required), plots the KL column against the
// epoch column and writes the SVG. Labels default to the file stems.
void plot_metrics_files(const std::vector<std::string>& csv_paths,
                        const std::vector<std::string>& labels, const std::string& out_svg);

}  // namespace mwgan
