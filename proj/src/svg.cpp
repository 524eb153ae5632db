#include "evcalib/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace evcalib {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

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

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) {
        lo = 0.0;
        hi = 1.0;
    } else if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
}

void header(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::string& x_label, const std::string& y_label,
          bool x_ticks) {
    const double bx = f.py(f.y0), lx = f.px(f.x0), rx = f.px(f.x1), ty = f.py(f.y1);
    os << "<polyline fill=\"none\" stroke=\"black\" points=\"" << lx << ',' << ty << ' ' << lx << ',' << bx << ' '
       << rx << ',' << bx << "\"/>\n";
    os << "<text x=\"" << lx - 6 << "\" y=\"" << bx << "\" text-anchor=\"end\">" << num(f.y0) << "</text>\n";
    os << "<text x=\"" << lx - 6 << "\" y=\"" << ty + 4 << "\" text-anchor=\"end\">" << num(f.y1) << "</text>\n";
    if (x_ticks) {
        os << "<text x=\"" << lx << "\" y=\"" << bx + 16 << "\" text-anchor=\"middle\">" << num(f.x0) << "</text>\n";
        os << "<text x=\"" << rx << "\" y=\"" << bx + 16 << "\" text-anchor=\"middle\">" << num(f.x1) << "</text>\n";
    }
    os << "<text x=\"" << (lx + rx) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
       << escape(x_label) << "</text>\n";
    os << "<text x=\"16\" y=\"" << (ty + bx) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (ty + bx) / 2 << ")\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string svg_line_plot(const std::vector<LineSeries>& series, const std::string& title, const std::string& x_label,
                          const std::string& y_label) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const LineSeries& s : series)
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    widen(x0, x1);
    widen(y0, y1);
    const Frame f{x0, x1, y0, y1};

    std::ostringstream os;
    header(os, title);
    axes(os, f, x_label, y_label, true);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const LineSeries& s = series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
            os << (i ? " " : "") << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
        os << "\"/>\n";
        if (!s.label.empty())
            os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\""
               << colour << "\">" << escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_box_plot(const std::vector<BoxStats>& boxes, const std::string& title, const std::string& y_label) {
    std::vector<std::string> groups, methods;
    auto index_of = [](std::vector<std::string>& v, const std::string& s) {
        auto it = std::find(v.begin(), v.end(), s);
        if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
        v.push_back(s);
        return v.size() - 1;
    };
    double y0 = 0.0, y1 = -std::numeric_limits<double>::infinity();
    for (const BoxStats& b : boxes) {
        index_of(groups, b.group);
        index_of(methods, b.method);
        y0 = std::min(y0, b.p25);
        y1 = std::max(y1, b.p75);
    }
    widen(y0, y1);
    const double slots = static_cast<double>(std::max<std::size_t>(groups.size(), 1));
    const Frame f{0.0, slots, y0, y1};

    std::ostringstream os;
    header(os, title);
    axes(os, f, "group", y_label, false);
    const double group_w = f.px(1.0) - f.px(0.0);
    const double box_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(methods.size(), 1));
    for (const BoxStats& b : boxes) {
        const std::size_t g = index_of(groups, b.group);
        const std::size_t m = index_of(methods, b.method);
        const char* colour = kPalette[m % std::size(kPalette)];
        const double x = f.px(static_cast<double>(g)) + group_w * 0.1 + box_w * static_cast<double>(m);
        os << "<rect x=\"" << num(x) << "\" y=\"" << num(f.py(b.p75)) << "\" width=\"" << num(box_w * 0.9)
           << "\" height=\"" << num(std::max(0.5, f.py(b.p25) - f.py(b.p75))) << "\" fill=\"" << colour
           << "\" fill-opacity=\"0.4\" stroke=\"" << colour << "\"/>\n";
        os << "<line x1=\"" << num(x) << "\" x2=\"" << num(x + box_w * 0.9) << "\" y1=\"" << num(f.py(b.p50))
           << "\" y2=\"" << num(f.py(b.p50)) << "\" stroke=\"black\"/>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
        os << "<text x=\"" << num(f.px(g + 0.5)) << "\" y=\"" << kHeight - kBottom + 16
           << "\" text-anchor=\"middle\" font-size=\"9\">" << escape(groups[g]) << "</text>\n";
    for (std::size_t m = 0; m < methods.size(); ++m)
        os << "<text x=\"" << kWidth - kRight - 4 << "\" y=\"" << kTop + 14 * (m + 1) << "\" text-anchor=\"end\" fill=\""
           << kPalette[m % std::size(kPalette)] << "\">" << escape(methods[m]) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace evcalib
