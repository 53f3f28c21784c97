#include "svg.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "textio.hpp"

namespace mapos::report {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) { return fmt_double(v, 6); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
    double map(double v, double a, double b) const {
        if (hi == lo) return (a + b) / 2.0;
        return a + (v - lo) / (hi - lo) * (b - a);
    }
};

Range pad_range(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi))) return {0.0, 1.0};
    if (hi < lo) std::swap(lo, hi);
    double span = hi - lo;
    if (span <= 0.0) span = std::abs(hi) > 0 ? std::abs(hi) * 0.1 : 1.0;
    return {lo - 0.05 * span, hi + 0.05 * span};
}

void chart_frame(std::string& svg, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const Range& xr, const Range& yr) {
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
           "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
           num(kHeight) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2) +
           "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">" +
           escape(title) + "</text>\n";

    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;
    svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) +
           "\" y2=\"" + num(y0) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) +
           "\" y2=\"" + num(y1) + "\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 4; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
        const double px = xr.map(fx, x0, x1);
        svg += "<line x1=\"" + num(px) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px) +
               "\" y2=\"" + num(y0 + 5) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(px) + "\" y=\"" + num(y0 + 20) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               fmt_double(fx, 4) + "</text>\n";
        const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        const double py = yr.map(fy, y0, y1);
        svg += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(py) + "\" x2=\"" + num(x0) +
               "\" y2=\"" + num(py) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(py + 4) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               fmt_double(fy, 4) + "</text>\n";
    }
    svg += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 12) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
           escape(x_label) + "</text>\n";
    svg += "<text x=\"18\" y=\"" + num((y0 + y1) / 2) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 " +
           num((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
}

} // namespace

std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series) {
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw numeric_error("chart series '" + s.label + "' has mismatched x/y sizes");
        for (double v : s.x) {
            xlo = std::min(xlo, v);
            xhi = std::max(xhi, v);
        }
        for (double v : s.y) {
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    }
    if (series.empty() || xlo > xhi) {
        xlo = 0;
        xhi = 1;
        ylo = 0;
        yhi = 1;
    }
    const Range xr = pad_range(xlo, xhi);
    const Range yr = pad_range(ylo, yhi);

    std::string svg;
    chart_frame(svg, title, x_label, y_label, xr, yr);
    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 8];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            pts += num(xr.map(s.x[i], x0, x1)) + "," + num(yr.map(s.y[i], y0, y1));
            if (i + 1 < s.x.size()) pts += " ";
        }
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            svg += "<circle cx=\"" + num(xr.map(s.x[i], x0, x1)) + "\" cy=\"" +
                   num(yr.map(s.y[i], y0, y1)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        const double ly = kTop + 16.0 * static_cast<double>(si);
        svg += "<rect x=\"" + num(x1 - 150) + "\" y=\"" + num(ly) +
               "\" width=\"12\" height=\"4\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + num(x1 - 132) + "\" y=\"" + num(ly + 6) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(s.label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string box_chart_svg(const std::string& title, const std::string& y_label,
                          const std::vector<BoxSpec>& boxes) {
    double ylo = 1e300, yhi = -1e300;
    for (const auto& b : boxes) {
        ylo = std::min(ylo, b.stats.whisker_lo);
        yhi = std::max(yhi, b.stats.whisker_hi);
    }
    if (boxes.empty() || ylo > yhi) {
        ylo = 0;
        yhi = 1;
    }
    const Range yr = pad_range(ylo, yhi);
    const Range xr{0.0, static_cast<double>(boxes.size())};

    std::string svg;
    chart_frame(svg, title, "", y_label, xr, yr);
    const double x0 = kLeft, x1 = kWidth - kRight;
    const double y0 = kHeight - kBottom, y1 = kTop;

    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& st = boxes[i].stats;
        const char* color = kPalette[i % 8];
        const double cx = xr.map(static_cast<double>(i) + 0.5, x0, x1);
        const double half = (x1 - x0) / static_cast<double>(boxes.size()) * 0.25;
        const double q1y = yr.map(st.q1, y0, y1);
        const double q3y = yr.map(st.q3, y0, y1);
        const double medy = yr.map(st.median, y0, y1);
        const double wly = yr.map(st.whisker_lo, y0, y1);
        const double why = yr.map(st.whisker_hi, y0, y1);
        svg += "<line x1=\"" + num(cx) + "\" y1=\"" + num(wly) + "\" x2=\"" + num(cx) +
               "\" y2=\"" + num(why) + "\" stroke=\"black\"/>\n";
        for (double wy : {wly, why})
            svg += "<line x1=\"" + num(cx - half / 2) + "\" y1=\"" + num(wy) + "\" x2=\"" +
                   num(cx + half / 2) + "\" y2=\"" + num(wy) + "\" stroke=\"black\"/>\n";
        svg += "<rect x=\"" + num(cx - half) + "\" y=\"" + num(q3y) + "\" width=\"" +
               num(2 * half) + "\" height=\"" + num(q1y - q3y) + "\" fill=\"" + color +
               "\" fill-opacity=\"0.35\" stroke=\"" + color + "\"/>\n";
        svg += "<line x1=\"" + num(cx - half) + "\" y1=\"" + num(medy) + "\" x2=\"" +
               num(cx + half) + "\" y2=\"" + num(medy) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + num(cx) + "\" y=\"" + num(y0 + 20) +
               "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
               escape(boxes[i].label) + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace mapos::report
