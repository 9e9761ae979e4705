// io.hpp - CSV serialization for results and allocations, and the optional
// sweep chart. All floats are written with 17 significant digits so files
// round-trip bit-exactly.
#pragma once

#include <string>
#include <vector>

#include "daur/model.hpp"

namespace daur {

std::string format_double(double v);

// Allocation round-trip (named sections, one value per line).
std::string allocation_to_csv(const Allocation& a);
Allocation allocation_from_csv(const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

struct SweepSeries {
  std::string label;
  std::vector<double> x, y;
};

// Minimal static SVG line chart (one polyline per series).
std::string sweep_chart_svg(const std::string& x_label, const std::string& y_label,
                            const std::vector<SweepSeries>& series);

} // namespace daur
