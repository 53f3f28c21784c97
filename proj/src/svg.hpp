#ifndef MAPOS_SVG_HPP
#define MAPOS_SVG_HPP

#include <string>
#include <vector>

#include "metrics.hpp"

// Small self-contained SVG chart writer (inline styling, no external assets).
// Output is deterministic for identical inputs.
namespace mapos::report {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);

struct BoxSpec {
    std::string label;
    eval::BoxStats stats;
};

std::string box_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<BoxSpec>& boxes);

} // namespace mapos::report

#endif
