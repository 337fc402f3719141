#include "mwgan/plot.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "mwgan/io.hpp"
#include "mwgan/train.hpp"

namespace mwgan {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 64, kRight = 180, kTop = 24, kBottom = 48;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                            const std::string& y_label) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool have_data = false;
  for (const auto& s : series) {
    if (s.xs.size() != s.ys.size()) {
      throw std::invalid_argument("plot: series '" + s.label + "' has mismatched lengths");
    }
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      if (!have_data) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        have_data = true;
      } else {
        xmin = std::min(xmin, s.xs[i]);
        xmax = std::max(xmax, s.xs[i]);
        ymin = std::min(ymin, s.ys[i]);
        ymax = std::max(ymax, s.ys[i]);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto sy = [&](double y) { return kTop + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" +
         fmt(kLeft + plot_w) + "\" y2=\"" + fmt(kTop + plot_h) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(kTop + plot_h) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  // tick labels
  svg += "<text x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kHeight - 28) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(xmin) + "</text>\n";
  svg += "<text x=\"" + fmt(kLeft + plot_w) + "\" y=\"" + fmt(kHeight - 28) +
         "\" font-size=\"12\" text-anchor=\"middle\">" + fmt(xmax) + "</text>\n";
  svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(kTop + plot_h) +
         "\" font-size=\"12\" text-anchor=\"end\">" + fmt(ymin) + "</text>\n";
  svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(kTop + 10) +
         "\" font-size=\"12\" text-anchor=\"end\">" + fmt(ymax) + "</text>\n";
  // axis labels
  svg += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 8) +
         "\" font-size=\"13\" text-anchor=\"middle\">" + esc(x_label) + "</text>\n";
  svg += "<text x=\"14\" y=\"" + fmt(kTop + plot_h / 2) +
         "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " +
         fmt(kTop + plot_h / 2) + ")\">" + esc(y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!s.xs.empty()) {
      std::string points;
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
        if (!points.empty()) points += " ";
        points += fmt(sx(s.xs[i])) + "," + fmt(sy(s.ys[i]));
      }
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    }
    const double ly = kTop + 16 + 18 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt(kWidth - kRight + 12) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
           fmt(kWidth - kRight + 36) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"/>\n";
    svg += "<text x=\"" + fmt(kWidth - kRight + 42) + "\" y=\"" + fmt(ly) +
           "\" font-size=\"12\">" + esc(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void plot_metrics_files(const std::vector<std::string>& csv_paths,
                        const std::vector<std::string>& labels, const std::string& out_svg) {
  if (csv_paths.empty()) throw std::invalid_argument("plot: no input CSVs");
  if (!labels.empty() && labels.size() != csv_paths.size()) {
    throw std::invalid_argument("plot: got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(csv_paths.size()) + " files");
  }
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < csv_paths.size(); ++i) {
    const CsvTable table = read_csv(csv_paths[i]);
    std::string header;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      if (c) header += ",";
      header += table.header[c];
    }
    if (header != kMetricsHeader) {
      throw std::runtime_error("plot: " + csv_paths[i] + " has header '" + header +
                               "', expected '" + kMetricsHeader + "'");
    }
    PlotSeries s;
    s.label = labels.empty() ? std::filesystem::path(csv_paths[i]).stem().string() : labels[i];
    for (const auto& row : table.rows) {
      s.xs.push_back(std::stod(row[0]));
      s.ys.push_back(std::stod(row[3]));  // kl column
    }
    series.push_back(std::move(s));
  }
  write_text_file(out_svg, render_line_svg(series, "epoch", "k-mer KL (nats)"));
}

}  // namespace mwgan
