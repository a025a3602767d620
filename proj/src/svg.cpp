#include "hdiv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hdiv::svg {

namespace {

constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 50.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    if (std::abs(v) < 1e-12) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (const char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;  // data range
    double width, height;

    double px(double x) const {
        return kMarginLeft + (x - x0) / (x1 - x0) * (width - kMarginLeft - kMarginRight);
    }
    double py(double y) const {
        return height - kMarginBottom - (y - y0) / (y1 - y0) * (height - kMarginTop - kMarginBottom);
    }
};

void widen(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
}

std::string header(const PlotSpec& spec) {
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(spec.width) +
           "\" height=\"" + num(spec.height) + "\" viewBox=\"0 0 " + num(spec.width) + " " +
           num(spec.height) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(spec.width) + "\" height=\"" +
           num(spec.height) + "\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(spec.width / 2) +
           "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
           escape(spec.title) + "</text>\n";
    return out;
}

std::string axes(const Frame& f, const PlotSpec& spec, const std::vector<double>& xt,
                 const std::vector<double>& yt, bool log_x) {
    std::string out;
    const double left = kMarginLeft;
    const double right = f.width - kMarginRight;
    const double top = kMarginTop;
    const double bottom = f.height - kMarginBottom;
    out += "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n";
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(bottom) + "\" x2=\"" + num(right) +
           "\" y2=\"" + num(bottom) + "\"/>\n";
    out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
           "\" y2=\"" + num(bottom) + "\"/>\n";
    for (const double t : xt) {
        out += "<line x1=\"" + num(f.px(t)) + "\" y1=\"" + num(bottom) + "\" x2=\"" +
               num(f.px(t)) + "\" y2=\"" + num(bottom + 5) + "\"/>\n";
    }
    for (const double t : yt) {
        out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(f.py(t)) + "\" x2=\"" +
               num(left) + "\" y2=\"" + num(f.py(t)) + "\"/>\n";
    }
    out += "</g>\n";
    out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    for (const double t : xt) {
        const std::string label = log_x ? "1e" + tick_label(t) : tick_label(t);
        out += "<text x=\"" + num(f.px(t)) + "\" y=\"" + num(bottom + 18) +
               "\" text-anchor=\"middle\">" + label + "</text>\n";
    }
    for (const double t : yt) {
        out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(f.py(t) + 4) +
               "\" text-anchor=\"end\">" + tick_label(t) + "</text>\n";
    }
    out += "</g>\n";
    out += "<text x=\"" + num((left + right) / 2) + "\" y=\"" + num(f.height - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
           escape(spec.x_label) + "</text>\n";
    const double cy = (top + bottom) / 2;
    out += "<text x=\"16\" y=\"" + num(cy) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " + num(cy) + ")\">" + escape(spec.y_label) + "</text>\n";
    return out;
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int count) {
    widen(lo, hi);
    const double raw = (hi - lo) / std::max(1, count);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    const double step = (r < 1.5 ? 1.0 : r < 3.0 ? 2.0 : r < 7.0 ? 5.0 : 10.0) * mag;
    std::vector<double> out;
    const long first = static_cast<long>(std::ceil(lo / step - 1e-9));
    const long last = static_cast<long>(std::floor(hi / step + 1e-9));
    for (long k = first; k <= last; ++k) out.push_back(static_cast<double>(k) * step);
    return out;
}

std::string qq_plot(const std::vector<std::pair<double, double>>& points, const PlotSpec& spec) {
    double lo = -3.0;
    double hi = 3.0;
    for (const auto& [x, y] : points) {
        if (std::isfinite(x)) lo = std::min(lo, x), hi = std::max(hi, x);
        if (std::isfinite(y)) lo = std::min(lo, y), hi = std::max(hi, y);
    }
    const auto ticks = nice_ticks(lo, hi);
    lo = std::min(lo, ticks.front());
    hi = std::max(hi, ticks.back());
    const Frame f{lo, hi, lo, hi, spec.width, spec.height};

    std::string out = header(spec);
    out += axes(f, spec, ticks, ticks, false);
    out += "<line x1=\"" + num(f.px(lo)) + "\" y1=\"" + num(f.py(lo)) + "\" x2=\"" +
           num(f.px(hi)) + "\" y2=\"" + num(f.py(hi)) +
           "\" stroke=\"gray\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
    out += "<g fill=\"steelblue\" stroke=\"none\">\n";
    for (const auto& [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        out += "<circle cx=\"" + num(f.px(x)) + "\" cy=\"" + num(f.py(y)) + "\" r=\"2.5\"/>\n";
    }
    out += "</g>\n</svg>\n";
    return out;
}

std::string cv_curve_plot(const std::vector<double>& grid, const std::vector<double>& losses,
                          double chosen, const PlotSpec& spec) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < grid.size() && i < losses.size(); ++i) {
        if (grid[i] > 0.0 && std::isfinite(losses[i])) pts.emplace_back(std::log10(grid[i]), losses[i]);
    }
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (!pts.empty()) {
        x0 = x1 = pts.front().first;
        y0 = y1 = pts.front().second;
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    widen(x0, x1);
    widen(y0, y1);
    const auto xt = nice_ticks(x0, x1);
    const auto yt = nice_ticks(y0, y1);
    x0 = std::min(x0, xt.front()), x1 = std::max(x1, xt.back());
    y0 = std::min(y0, yt.front()), y1 = std::max(y1, yt.back());
    const Frame f{x0, x1, y0, y1, spec.width, spec.height};

    std::string out = header(spec);
    out += axes(f, spec, xt, yt, true);
    if (!pts.empty()) {
        out += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i > 0) out.push_back(' ');
            out += num(f.px(pts[i].first)) + "," + num(f.py(pts[i].second));
        }
        out += "\"/>\n";
    }
    if (chosen > 0.0) {
        const double cx = f.px(std::log10(chosen));
        out += "<line x1=\"" + num(cx) + "\" y1=\"" + num(f.py(y0)) + "\" x2=\"" + num(cx) +
               "\" y2=\"" + num(f.py(y1)) +
               "\" stroke=\"firebrick\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace hdiv::svg
