#include "leosim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace leo::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct AxisScale {
    double lo = 0.0, hi = 1.0;
    std::vector<double> ticks;
};

// Round limits outward to a tidy tick step (1/2/5 ladder).
AxisScale nice_scale(double lo, double hi) {
    if (!(hi > lo)) hi = lo + 1.0;
    const double span = hi - lo;
    const double raw_step = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * m >= raw_step) {
            step = mag * m;
            break;
        }
    }
    AxisScale s;
    s.lo = std::floor(lo / step) * step;
    s.hi = std::ceil(hi / step) * step;
    for (double v = s.lo; v <= s.hi + step * 0.5; v += step) s.ticks.push_back(v);
    return s;
}

struct Frame {
    int width, height;
    int left = 70, right = 20, top = 40, bottom = 55;
    AxisScale xs, ys;

    double px(double x) const {
        return left + (x - xs.lo) / (xs.hi - xs.lo) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - ys.lo) / (ys.hi - ys.lo) * (height - top - bottom);
    }
};

void open_svg(std::ostringstream& out, int width, int height) {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void draw_axes(std::ostringstream& out, const Frame& f, const std::string& title,
               const std::string& x_label, const std::string& y_label) {
    out << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
    out << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\""
        << f.width - f.right << "\" y2=\"" << f.height - f.bottom
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
        << f.height - f.bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (double t : f.xs.ticks) {
        const double x = f.px(t);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << f.height - f.bottom << "\" x2=\""
            << fmt(x) << "\" y2=\"" << f.height - f.bottom + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << f.height - f.bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : f.ys.ticks) {
        const double y = f.py(t);
        out << "<line x1=\"" << f.left - 5 << "\" y1=\"" << fmt(y) << "\" x2=\"" << f.left
            << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << f.left - 8 << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    out << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (f.top + f.height - f.bottom) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 18 " << (f.top + f.height - f.bottom) / 2 << ")\">" << y_label
        << "</text>\n";
}

void draw_legend(std::ostringstream& out, const Frame& f,
                 const std::vector<std::pair<std::string, bool>>& entries) {
    const int x = f.left + 12;
    int y = f.top + 8;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        out << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 26 << "\" y2=\"" << y
            << "\" stroke=\"" << color << "\" stroke-width=\"2\""
            << (entries[i].second ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
        out << "<text x=\"" << x + 32 << "\" y=\"" << y + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << entries[i].first
            << "</text>\n";
        y += 17;
    }
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series, int width,
                       int height) {
    if (series.empty()) throw std::invalid_argument("line_chart: no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!std::isfinite(xmin)) throw std::invalid_argument("line_chart: no points");

    Frame f{width, height};
    f.xs = nice_scale(xmin, xmax);
    f.ys = nice_scale(std::min(0.0, ymin), ymax);

    std::ostringstream out;
    open_svg(out, width, height);
    draw_axes(out, f, title, x_label, y_label);
    std::vector<std::pair<std::string, bool>> legend;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        legend.push_back({s.label, s.dashed});
        if (s.points.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPaletteSize]
            << "\" stroke-width=\"1.8\"" << (s.dashed ? " stroke-dasharray=\"6 3\"" : "")
            << " points=\"";
        for (const auto& [x, y] : s.points) out << fmt(f.px(x)) << "," << fmt(f.py(y)) << " ";
        out << "\"/>\n";
    }
    draw_legend(out, f, legend);
    out << "</svg>\n";
    return out.str();
}

std::string grouped_bar_chart(const std::string& title, const std::string& y_label,
                              const std::vector<std::string>& series_labels,
                              const std::vector<BarGroup>& groups, int width, int height) {
    if (groups.empty() || series_labels.empty())
        throw std::invalid_argument("grouped_bar_chart: empty input");
    double ymin = 0.0, ymax = 0.0;
    for (const auto& g : groups)
        for (double v : g.values) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }

    Frame f{width, height};
    f.xs = {0.0, static_cast<double>(groups.size()), {}};
    f.ys = nice_scale(ymin, ymax);

    std::ostringstream out;
    open_svg(out, width, height);
    draw_axes(out, f, title, "", y_label);

    const double group_w = (width - f.left - f.right) / static_cast<double>(groups.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(series_labels.size());
    const double y0 = f.py(std::max(0.0, f.ys.lo));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const double gx = f.left + gi * group_w + group_w * 0.1;
        for (std::size_t si = 0; si < g.values.size() && si < series_labels.size(); ++si) {
            const double v = g.values[si];
            const double y = f.py(v);
            const double top = std::min(y, y0);
            const double h = std::fabs(y - y0);
            out << "<rect x=\"" << fmt(gx + si * bar_w) << "\" y=\"" << fmt(top) << "\" width=\""
                << fmt(bar_w * 0.92) << "\" height=\"" << fmt(h) << "\" fill=\""
                << kPalette[si % kPaletteSize] << "\"/>\n";
        }
        out << "<text x=\"" << fmt(gx + group_w * 0.4) << "\" y=\"" << f.height - f.bottom + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << g.label
            << "</text>\n";
    }
    std::vector<std::pair<std::string, bool>> legend;
    for (const auto& s : series_labels) legend.push_back({s, false});
    draw_legend(out, f, legend);
    out << "</svg>\n";
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace leo::svg
