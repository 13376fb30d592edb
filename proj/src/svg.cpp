#include "cle_ekf/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <vector>

namespace cle_ekf::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
constexpr std::size_t kMaxVertices = 2000;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_line_plot(std::ostream& out, std::span<const double> values, double delta, const PlotLabels& labels) {
  std::vector<std::pair<double, double>> points;
  const std::size_t n = values.size();
  const std::size_t bucket = std::max<std::size_t>(1, (2 * n + kMaxVertices - 1) / kMaxVertices);
  for (std::size_t start = 0; start < n; start += bucket) {
    const std::size_t stop = std::min(n, start + bucket);
    const auto [lo, hi] = std::minmax_element(values.begin() + static_cast<std::ptrdiff_t>(start),
                                              values.begin() + static_cast<std::ptrdiff_t>(stop));
    auto first = lo, second = hi;
    if (first > second) std::swap(first, second);
    points.emplace_back(static_cast<double>(first - values.begin()) * delta, *first);
    if (second != first) points.emplace_back(static_cast<double>(second - values.begin()) * delta, *second);
  }

  double xmax = points.empty() ? 1.0 : points.back().first;
  double ymin = 0.0, ymax = 1.0;
  if (!points.empty()) {
    ymin = std::min_element(points.begin(), points.end(), [](auto a, auto b) { return a.second < b.second; })->second;
    ymax = std::max_element(points.begin(), points.end(), [](auto a, auto b) { return a.second < b.second; })->second;
  }
  ymin = std::min(ymin, 0.0);
  if (ymax <= ymin) ymax = ymin + 1.0;
  if (xmax <= 0.0) xmax = 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + pw * x / xmax; };
  auto sy = [&](double y) { return kTop + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(labels.title)
      << "</text>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmax * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << sx(fx) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << num(fx)
        << "</text>\n";
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << escape(labels.x) << "</text>\n";
  out << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">" << escape(labels.y) << "</text>\n";
  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1\" points=\"";
  for (const auto& [x, y] : points) out << num(sx(x)) << ',' << num(sy(y)) << ' ';
  out << "\"/>\n</svg>\n";
}

}  // namespace cle_ekf::svg
