#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace cle_ekf::svg {

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
};

/// Writes a standalone SVG line chart of (k * delta, values[k]).
/// Long series are thinned to at most 2000 vertices, keeping each bucket's extremes.
void write_line_plot(std::ostream& out, std::span<const double> values, double delta, const PlotLabels& labels);

}  // namespace cle_ekf::svg
