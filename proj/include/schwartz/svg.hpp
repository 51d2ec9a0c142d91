#pragma once

// Minimal SVG line plots (one polyline per series), no plotting runtime needed.

#include <string>
#include <vector>

namespace schwartz {

struct PlotSeries {
    std::string name;
    std::vector<double> x, y;
    bool dashed = false;
};

/// Non-positive or non-finite values are skipped on a log axis.
std::string render_svg(const std::string& title, const std::string& x_label,
                       const std::vector<PlotSeries>& series, bool log_y);

} // namespace schwartz
