#include <algorithm>
#include <cmath>
#include <sstream>

#include "chunkbench/cli.h"

namespace chunkbench {

namespace {

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Round axis maximum to 1, 2 or 5 times a power of ten.
double nice_ceiling(double x) {
  if (x <= 0.0) return 1.0;
  const double p = std::pow(10.0, std::floor(std::log10(x)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * p >= x) return m * p;
  }
  return 10.0 * p;
}

}  // namespace

std::string render_bar_chart(const std::string& title, const std::string& axis_label,
                             const BarSeries& series) {
  if (series.labels.size() != series.values.size() ||
      (!series.errors.empty() && series.errors.size() != series.values.size())) {
    throw ConfigError("bar chart series lengths differ");
  }
  constexpr double kLabelWidth = 230.0;
  constexpr double kPlotWidth = 480.0;
  constexpr double kBarHeight = 18.0;
  constexpr double kGap = 6.0;
  constexpr double kTop = 40.0;
  constexpr double kBottom = 50.0;

  const std::size_t n = series.values.size();
  double max_value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_value = std::max(max_value, series.values[i]);
    if (!series.errors.empty()) max_value = std::max(max_value, series.errors[i].high);
  }
  const double axis_max = nice_ceiling(max_value);
  const double scale = kPlotWidth / axis_max;
  const double height = kTop + static_cast<double>(n) * (kBarHeight + kGap) + kBottom;
  const double width = kLabelWidth + kPlotWidth + 90.0;
  const double axis_y = kTop + static_cast<double>(n) * (kBarHeight + kGap);

  std::ostringstream svg;
  svg.setf(std::ios::fixed);
  svg.precision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";

  for (int t = 0; t <= 5; ++t) {
    const double v = axis_max * t / 5.0;
    const double x = kLabelWidth + v * scale;
    svg << "<line x1=\"" << x << "\" y1=\"" << kTop - 4 << "\" x2=\"" << x << "\" y2=\""
        << axis_y << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << axis_y + 16 << "\" text-anchor=\"middle\">";
    svg.precision(axis_max < 1.0 ? 3 : (axis_max < 10.0 ? 2 : 1));
    svg << v << "</text>\n";
    svg.precision(2);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double y = kTop + static_cast<double>(i) * (kBarHeight + kGap);
    const double w = std::max(0.0, series.values[i]) * scale;
    svg << "<text x=\"" << kLabelWidth - 8 << "\" y=\"" << y + kBarHeight * 0.72
        << "\" text-anchor=\"end\">" << escape_xml(series.labels[i]) << "</text>\n";
    svg << "<rect x=\"" << kLabelWidth << "\" y=\"" << y << "\" width=\"" << w
        << "\" height=\"" << kBarHeight << "\" fill=\"#4c72b0\"/>\n";
    double value_x = kLabelWidth + w;
    if (!series.errors.empty()) {
      const double lo = kLabelWidth + std::max(0.0, series.errors[i].low) * scale;
      const double hi = kLabelWidth + std::max(0.0, series.errors[i].high) * scale;
      const double mid = y + kBarHeight / 2;
      svg << "<line x1=\"" << lo << "\" y1=\"" << mid << "\" x2=\"" << hi << "\" y2=\"" << mid
          << "\" stroke=\"black\"/>\n";
      for (double x : {lo, hi}) {
        svg << "<line x1=\"" << x << "\" y1=\"" << y + 4 << "\" x2=\"" << x << "\" y2=\""
            << y + kBarHeight - 4 << "\" stroke=\"black\"/>\n";
      }
      value_x = std::max(value_x, hi);
    }
    svg.precision(3);
    svg << "<text x=\"" << value_x + 5 << "\" y=\"" << y + kBarHeight * 0.72 << "\">"
        << series.values[i] << "</text>\n";
    svg.precision(2);
  }

  svg << "<line x1=\"" << kLabelWidth << "\" y1=\"" << axis_y << "\" x2=\""
      << kLabelWidth + kPlotWidth << "\" y2=\"" << axis_y << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kLabelWidth + kPlotWidth / 2 << "\" y=\"" << axis_y + 38
      << "\" text-anchor=\"middle\">" << escape_xml(axis_label) << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace chunkbench
