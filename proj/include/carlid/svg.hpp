#pragma once

// Minimal static line plots (axes, ticks, polylines, legend). Presentation
// only; every plotted series also exists as CSV.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace carlid::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false;
};

struct Plot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_y = false;
    std::vector<Series> series;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
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

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
}

}  // namespace detail

/// Renders the plot; non-finite points (and non-positive ones on a log axis) break the line.
inline std::string render(const Plot& plot) {
    constexpr double width = 720, height = 480, left = 80, right = 180, top = 40, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;

    auto ty = [&](double y) { return plot.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!plot.log_y || y > 0.0); };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    if (plot.log_y) {
        ymin = std::floor(ymin);
        ymax = std::ceil(ymax);
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return top + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };
    auto pyt = [&](double yt) { return top + ph - (yt - ymin) / (ymax - ymin) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << detail::escape(plot.title) << "</text>\n";
    o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : detail::nice_ticks(xmin, xmax)) {
        o << "<line x1=\"" << detail::num(px(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::num(px(t))
          << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>";
        o << "<text x=\"" << detail::num(px(t)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << detail::tick_label(t) << "</text>\n";
    }
    const auto yt = plot.log_y ? [&] {
        std::vector<double> t;
        for (double e = ymin; e <= ymax + 1e-9; e += std::max(1.0, std::ceil((ymax - ymin) / 8))) t.push_back(e);
        return t;
    }()
                               : detail::nice_ticks(ymin, ymax);
    for (double t : yt) {
        o << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::num(pyt(t)) << "\" x2=\"" << left << "\" y2=\""
          << detail::num(pyt(t)) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << left - 8 << "\" y=\"" << detail::num(pyt(t) + 4) << "\" text-anchor=\"end\">"
          << (plot.log_y ? "1e" + detail::tick_label(t) : detail::tick_label(t)) << "</text>\n";
    }
    o << "<text x=\"" << detail::num(left + pw / 2) << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
      << detail::escape(plot.xlabel) << "</text>\n";
    o << "<text transform=\"translate(18," << detail::num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape(plot.ylabel) << "</text>\n";

    double ly = top + 10;
    for (const auto& s : plot.series) {
        const std::string dash = s.dashed ? " stroke-dasharray=\"6,4\"" : "";
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"" << dash
                  << " points=\"" << pts << "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i]) || ty(s.y[i]) > ymax + 1e-9 || ty(s.y[i]) < ymin - 1e-9) {
                flush();
                continue;
            }
            pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
            if (s.markers)
                o << "<circle cx=\"" << detail::num(px(s.x[i])) << "\" cy=\"" << detail::num(py(s.y[i]))
                  << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        }
        flush();
        o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 35 << "\" y2=\"" << ly
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << dash << "/>";
        o << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << detail::escape(s.label) << "</text>\n";
        ly += 18;
    }
    o << "</svg>\n";
    return o.str();
}

inline void write(const std::filesystem::path& path, const Plot& plot) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << render(plot);
}

}  // namespace carlid::svg
