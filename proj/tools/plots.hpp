#pragma once

// Minimal SVG figures: histogram, heatmap, scatter.

#include "capspace/common.hpp"

#include <string>
#include <vector>

namespace capspace::cli::plots {

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Equal-width bins, min(values, max_bins) of them; one bin for constant data.
Histogram histogram(const std::vector<double>& values, int max_bins = 30);

/// Empty input yields a placeholder figure; `warning` is set then.
std::string histogram_svg(const std::vector<double>& values, const std::string& title, const std::string& xlabel,
                          std::string* warning = nullptr);

/// Square matrix drawn cell by cell, block-averaged down to at most max_cells per side.
std::string heatmap_svg(const Matrix& m, const std::string& title, int max_cells = 200,
                        std::string* warning = nullptr);

struct Point {
  double x, y;
  std::string label;
};

/// Labels are drawn for points whose label is non-empty.
std::string scatter_svg(const std::vector<Point>& pts, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel, std::string* warning = nullptr);

}  // namespace capspace::cli::plots
