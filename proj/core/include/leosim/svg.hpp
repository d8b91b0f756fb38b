#pragma once

#include <string>
#include <vector>

namespace leo::svg {

// Self-contained SVG charts: axes, polylines, bars, legend. The data files
// are the primary artifact, these are a reading aid with no plotting
// dependency.

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    bool dashed = false;
};

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series,
                       int width = 760, int height = 480);

struct BarGroup {
    std::string label;                 // x-axis group (e.g. user type)
    std::vector<double> values;        // one value per series
};

std::string grouped_bar_chart(const std::string& title, const std::string& y_label,
                              const std::vector<std::string>& series_labels,
                              const std::vector<BarGroup>& groups, int width = 760,
                              int height = 480);

void write_file(const std::string& path, const std::string& content);

}  // namespace leo::svg
