#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace evcalib {

struct LineSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG line chart with axes and min/max tick labels.
std::string svg_line_plot(const std::vector<LineSeries>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label);

struct BoxStats {
    std::string group;
    std::string method;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
};

/// Quartile boxes with median lines, grouped along the x axis, one colour per method.
std::string svg_box_plot(const std::vector<BoxStats>& boxes, const std::string& title, const std::string& y_label);

}  // namespace evcalib
