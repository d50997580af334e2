#pragma once
// Small self-contained SVG writers: line plots, a director quiver and a
// biaxiality heat map. Output is a pure function of the input, so files are
// byte-stable across runs.

#include "qtensor/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace qtensor::plot {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool markers = false;
};

struct LinePlot {
    std::string title, xlabel, ylabel;
    bool logx = false, logy = false;
    std::vector<Series> series;
    std::vector<std::string> notes;  ///< extra lines printed under the title
};

namespace detail {

inline constexpr double kW = 640, kH = 440, kLeft = 80, kRight = 20, kTop = 50, kBottom = 60;

inline std::string fmt(const char* f, double v) {
    char b[64];
    std::snprintf(b, sizeof b, f, v);
    return b;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

inline std::string tick_label(double v) {
    if (v == 0.0) return "0";
    const double a = std::abs(v);
    return (a >= 1e4 || a < 1e-2) ? fmt("%.0e", v) : fmt("%g", v);
}

/// Roughly five round tick positions covering [lo, hi].
inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

struct Axis {
    double lo = 0, hi = 1;
    bool log = false;
    double map(double v, double a, double b) const {
        const double u = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
        return a + u * (b - a);
    }
    std::vector<std::pair<double, std::string>> ticks() const {
        std::vector<std::pair<double, std::string>> out;
        if (log) {
            for (int e = static_cast<int>(std::ceil(lo - 1e-9)); e <= static_cast<int>(std::floor(hi + 1e-9)); ++e)
                out.emplace_back(std::pow(10.0, e), fmt("1e%.0f", static_cast<double>(e)));
        } else {
            for (double v : linear_ticks(lo, hi)) out.emplace_back(v, tick_label(v));
        }
        return out;
    }
};

inline Axis fit_axis(const std::vector<double>& v, bool log) {
    Axis a;
    a.log = log;
    double lo = INFINITY, hi = -INFINITY;
    for (double x : v) {
        if (!std::isfinite(x) || (log && x <= 0.0)) continue;
        const double u = log ? std::log10(x) : x;
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    if (!(lo <= hi)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (log) {
        lo = std::floor(lo);
        hi = std::ceil(hi);
        if (hi <= lo) hi = lo + 1.0;
    } else {
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
            const double pad = std::max(1e-3, 0.05 * std::abs(hi));
            lo -= pad;
            hi += pad;
        } else {
            const double pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
    }
    a.lo = lo;
    a.hi = hi;
    return a;
}

inline void header(std::ostream& os, double w, double h) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
       << w << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

inline void text(std::ostream& os, double x, double y, const std::string& s, const char* anchor = "middle",
                 const char* extra = "") {
    os << "<text x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", y) << "\" text-anchor=\"" << anchor << "\" "
       << extra << ">" << escape(s) << "</text>\n";
}

}  // namespace detail

inline void write_line_plot(std::ostream& os, const LinePlot& p) {
    using namespace detail;
    std::vector<double> xs, ys;
    for (const auto& s : p.series) {
        xs.insert(xs.end(), s.x.begin(), s.x.end());
        ys.insert(ys.end(), s.y.begin(), s.y.end());
    }
    const Axis ax = fit_axis(xs, p.logx), ay = fit_axis(ys, p.logy);
    const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;

    header(os, kW, kH);
    text(os, kW / 2, 22, p.title, "middle", "font-size=\"15\"");
    for (std::size_t i = 0; i < p.notes.size(); ++i) text(os, kW / 2, 38 + 13.0 * i, p.notes[i], "middle", "font-size=\"11\"");
    os << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\"" << y0 - y1
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (const auto& [v, lab] : ax.ticks()) {
        const double x = ax.map(v, x0, x1);
        os << "<line x1=\"" << fmt("%.1f", x) << "\" y1=\"" << y0 << "\" x2=\"" << fmt("%.1f", x) << "\" y2=\"" << y0 + 5
           << "\" stroke=\"black\"/>\n";
        text(os, x, y0 + 18, lab);
    }
    for (const auto& [v, lab] : ay.ticks()) {
        const double y = ay.map(v, y0, y1);
        os << "<line x1=\"" << x0 - 5 << "\" y1=\"" << fmt("%.1f", y) << "\" x2=\"" << x0 << "\" y2=\"" << fmt("%.1f", y)
           << "\" stroke=\"black\"/>\n";
        text(os, x0 - 8, y + 4, lab, "end");
    }
    text(os, (x0 + x1) / 2, kH - 18, p.xlabel);
    os << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << (y0 + y1) / 2 << ")\">" << escape(p.ylabel) << "</text>\n";

    for (std::size_t k = 0; k < p.series.size(); ++k) {
        const auto& s = p.series[k];
        std::string pts;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((p.logx && s.x[i] <= 0.0) || (p.logy && s.y[i] <= 0.0)) continue;
            const double px = ax.map(s.x[i], x0, x1), py = ay.map(s.y[i], y0, y1);
            pts += fmt("%.2f", px) + "," + fmt("%.2f", py) + " ";
            if (s.markers)
                os << "<circle cx=\"" << fmt("%.2f", px) << "\" cy=\"" << fmt("%.2f", py) << "\" r=\"3\" fill=\"" << s.color
                   << "\"/>\n";
        }
        if (!pts.empty())
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
        if (!s.label.empty()) {
            const double ly = y1 + 16 + 16.0 * k;
            os << "<line x1=\"" << x1 - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << x1 - 130 << "\" y2=\"" << ly - 4
               << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            text(os, x1 - 125, ly, s.label, "start");
        }
    }
    os << "</svg>\n";
}

/// Principal-eigenvector field projected to the plane, one headless segment per node.
inline void write_quiver(std::ostream& os, const QField& q, const std::string& title) {
    using namespace detail;
    const auto& g = q.grid();
    const double size = 520, margin = 40, top = 40;
    detail::header(os, size + 2 * margin, size + margin + top);
    text(os, (size + 2 * margin) / 2, 24, title, "middle", "font-size=\"15\"");
    os << "<rect x=\"" << margin << "\" y=\"" << top << "\" width=\"" << size << "\" height=\"" << size
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double cell = size / g.N;
    const double len = 0.4 * cell;
    for (int l = 0; l <= g.N; ++l)
        for (int m = 0; m <= g.N; ++m) {
            const Vec3 n = principal_director(q.at(l, m));
            const double cx = margin + l * cell, cy = top + size - m * cell;
            const double dx = len * n[0], dy = -len * n[1];
            os << "<line x1=\"" << fmt("%.2f", cx - dx) << "\" y1=\"" << fmt("%.2f", cy - dy) << "\" x2=\""
               << fmt("%.2f", cx + dx) << "\" y2=\"" << fmt("%.2f", cy + dy)
               << "\" stroke=\"#1f3b73\" stroke-width=\"1.4\"/>\n";
        }
    os << "</svg>\n";
}

namespace detail {
// Perceptually ordered ramp from dark blue (0) to yellow (1).
inline std::string ramp(double v) {
    static constexpr std::array<std::array<int, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
    v = std::clamp(v, 0.0, 1.0) * 4.0;
    const int i = std::min(3, static_cast<int>(v));
    const double f = v - i;
    char b[16];
    std::snprintf(b, sizeof b, "#%02x%02x%02x", static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return b;
}
}  // namespace detail

/// Biaxiality per node as coloured squares, with a colour bar on [0, 1].
inline void write_biaxiality_heatmap(std::ostream& os, const QField& q, const std::string& title) {
    using namespace detail;
    const auto& g = q.grid();
    const double size = 520, margin = 40, top = 40, bar = 70;
    header(os, size + 2 * margin + bar, size + margin + top);
    text(os, (size + 2 * margin) / 2, 24, title, "middle", "font-size=\"15\"");
    const double cell = size / (g.N + 1);
    for (int l = 0; l <= g.N; ++l)
        for (int m = 0; m <= g.N; ++m) {
            const double x = margin + l * cell, y = top + size - (m + 1) * cell;
            os << "<rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y) << "\" width=\"" << fmt("%.2f", cell + 0.3)
               << "\" height=\"" << fmt("%.2f", cell + 0.3) << "\" fill=\"" << ramp(biaxiality(q.at(l, m))) << "\"/>\n";
        }
    const double bx = margin + size + 20;
    for (int k = 0; k < 50; ++k) {
        const double y = top + size - (k + 1) * size / 50;
        os << "<rect x=\"" << bx << "\" y=\"" << fmt("%.2f", y) << "\" width=\"16\" height=\"" << fmt("%.2f", size / 50 + 0.3)
           << "\" fill=\"" << ramp((k + 0.5) / 50) << "\"/>\n";
    }
    text(os, bx + 20, top + size, "0", "start");
    text(os, bx + 20, top + 10, "1", "start");
    os << "</svg>\n";
}

}  // namespace qtensor::plot
