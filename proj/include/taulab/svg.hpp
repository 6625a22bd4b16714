#pragma once

// Minimal self-contained SVG plots: lines with a shaded +-STD band, and
// grouped bars with error whiskers.

#include "taulab/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace taulab::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> std;  ///< empty for no band
};

struct BarGroup {
    std::string label;
    std::vector<double> values;  ///< one per series
    std::vector<double> errors;  ///< optional, same length as values
};

namespace detail {

inline const char* color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return palette[i % 6];
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        default: o += c;
        }
    }
    return o;
}

struct Frame {
    double w = 480, h = 320, left = 60, right = 20, top = 36, bottom = 48;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (w - left - right); }
    double py(double y) const { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); }
};

inline void pad_range(double& lo, double& hi) {
    if (!(lo < hi)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
}

inline std::string axes(const Frame& f, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel, bool x_ticks) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.w) + "\" height=\"" + num(f.h) +
                    "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(f.w / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" + escape(title) +
         "</text>\n";
    s += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.h - f.bottom) + "\" x2=\"" + num(f.w - f.right) +
         "\" y2=\"" + num(f.h - f.bottom) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(f.left) + "\" y1=\"" + num(f.top) + "\" x2=\"" + num(f.left) + "\" y2=\"" +
         num(f.h - f.bottom) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<text x=\"" + num(f.left - 4) + "\" y=\"" + num(f.py(yv) + 4) + "\" text-anchor=\"end\">" +
             format_double(std::round(yv * 100) / 100) + "</text>\n";
        if (x_ticks) {
            const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
            s += "<text x=\"" + num(f.px(xv)) + "\" y=\"" + num(f.h - f.bottom + 14) +
                 "\" text-anchor=\"middle\">" + format_double(std::round(xv * 10) / 10) + "</text>\n";
        }
    }
    s += "<text x=\"" + num(f.w / 2) + "\" y=\"" + num(f.h - 10) + "\" text-anchor=\"middle\">" + escape(xlabel) +
         "</text>\n";
    s += "<text transform=\"translate(14," + num(f.h / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(ylabel) + "</text>\n";
    return s;
}

inline std::string legend(const Frame& f, const std::vector<std::string>& labels) {
    std::string s;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = f.top + 6 + 14.0 * static_cast<double>(i);
        s += "<rect x=\"" + num(f.w - f.right - 110) + "\" y=\"" + num(y - 8) + "\" width=\"10\" height=\"10\" fill=\"" +
             color(i) + "\"/>\n";
        s += "<text x=\"" + num(f.w - f.right - 96) + "\" y=\"" + num(y + 1) + "\">" + escape(labels[i]) + "</text>\n";
    }
    return s;
}

}  // namespace detail

inline std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series) {
    detail::Frame f;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double sd = i < s.std.size() ? s.std[i] : 0.0;
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.mean[i] - sd);
            yhi = std::max(yhi, s.mean[i] + sd);
        }
    }
    if (!std::isfinite(xlo)) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    detail::pad_range(ylo, yhi);
    if (!(xlo < xhi)) detail::pad_range(xlo, xhi);
    f.x0 = xlo, f.x1 = xhi, f.y0 = ylo, f.y1 = yhi;
    std::string out = detail::axes(f, title, xlabel, ylabel, true);
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        labels.push_back(s.label);
        if (s.x.empty()) continue;
        if (!s.std.empty()) {
            std::string pts;
            for (std::size_t i = 0; i < s.x.size(); ++i)
                pts += detail::num(f.px(s.x[i])) + "," + detail::num(f.py(s.mean[i] + s.std[i])) + " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                pts += detail::num(f.px(s.x[i])) + "," + detail::num(f.py(s.mean[i] - s.std[i])) + " ";
            out += "<polygon points=\"" + pts + "\" fill=\"" + detail::color(k) + "\" fill-opacity=\"0.2\"/>\n";
        }
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i)
            pts += detail::num(f.px(s.x[i])) + "," + detail::num(f.py(s.mean[i])) + " ";
        out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + detail::color(k) +
               "\" stroke-width=\"2\"/>\n";
    }
    out += detail::legend(f, labels);
    out += "</svg>\n";
    return out;
}

inline std::string bar_chart(const std::string& title, const std::string& ylabel,
                             const std::vector<std::string>& series_labels, const std::vector<BarGroup>& groups) {
    detail::Frame f;
    double ylo = 0.0, yhi = 0.0;
    for (const auto& g : groups)
        for (std::size_t i = 0; i < g.values.size(); ++i) {
            const double e = i < g.errors.size() ? g.errors[i] : 0.0;
            ylo = std::min(ylo, g.values[i] - e);
            yhi = std::max(yhi, g.values[i] + e);
        }
    detail::pad_range(ylo, yhi);
    f.y0 = ylo, f.y1 = yhi;
    f.x0 = 0.0, f.x1 = std::max<double>(1.0, static_cast<double>(groups.size()));
    std::string out = detail::axes(f, title, "", ylabel, false);
    const double slot = (f.px(1.0) - f.px(0.0));
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& grp = groups[g];
        const std::size_t m = std::max<std::size_t>(1, grp.values.size());
        const double bw = 0.7 * slot / static_cast<double>(m);
        const double start = f.px(static_cast<double>(g)) + 0.15 * slot;
        for (std::size_t i = 0; i < grp.values.size(); ++i) {
            const double x = start + bw * static_cast<double>(i);
            const double ya = f.py(std::max(0.0, grp.values[i])), yb = f.py(std::min(0.0, grp.values[i]));
            out += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(ya) + "\" width=\"" + detail::num(bw) +
                   "\" height=\"" + detail::num(yb - ya) + "\" fill=\"" + detail::color(i) + "\"/>\n";
            if (i < grp.errors.size()) {
                const double cx = x + bw / 2;
                out += "<line x1=\"" + detail::num(cx) + "\" y1=\"" + detail::num(f.py(grp.values[i] - grp.errors[i])) +
                       "\" x2=\"" + detail::num(cx) + "\" y2=\"" + detail::num(f.py(grp.values[i] + grp.errors[i])) +
                       "\" stroke=\"black\"/>\n";
            }
        }
        out += "<text x=\"" + detail::num(f.px(static_cast<double>(g) + 0.5)) + "\" y=\"" +
               detail::num(f.h - f.bottom + 14) + "\" text-anchor=\"middle\">" + detail::escape(grp.label) +
               "</text>\n";
    }
    out += detail::legend(f, series_labels);
    out += "</svg>\n";
    return out;
}

}  // namespace taulab::svg
