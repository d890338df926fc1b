#include "buckforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/core.h>

namespace buckforge::svg {

namespace {

constexpr double kWidth = 800.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

struct Panel {
    double top;
    double height;
    double x_min, x_max;  // already in plot coordinates (log10 omega for Bode)
    double y_min, y_max;

    double px(double x) const { return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight); }
    double py(double y) const { return top + height - (y - y_min) / (y_max - y_min) * height; }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += ch;
        }
    }
    return out;
}

void padded_range(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

std::string frame(const Panel& p, const std::string& y_label) {
    std::string s = fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" stroke=\"#444\"/>\n",
        kLeft, p.top, kWidth - kLeft - kRight, p.height);
    for (int i = 0; i <= 4; ++i) {
        const double y = p.y_min + (p.y_max - p.y_min) * i / 4.0;
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"end\">{:.4g}</text>\n",
                         kLeft - 4.0, p.py(y) + 3.0, y);
    }
    s += fmt::format(
        "<text x=\"14\" y=\"{:.2f}\" font-size=\"12\" transform=\"rotate(-90 14 {:.2f})\" text-anchor=\"middle\">{}"
        "</text>\n",
        p.top + p.height / 2, p.top + p.height / 2, escape(y_label));
    return s;
}

std::string polyline(const Panel& p, const std::vector<double>& x, const std::vector<double>& y, const char* color) {
    std::string pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(y[i])) continue;
        pts += fmt::format("{:.2f},{:.2f} ", p.px(x[i]), p.py(std::clamp(y[i], p.y_min, p.y_max)));
    }
    return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
}

std::string hline(const Panel& p, double y, const char* style) {
    if (y < p.y_min || y > p.y_max) return {};
    return fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#888\" {}/>\n", kLeft,
                       p.py(y), kWidth - kRight, p.py(y), style);
}

std::string marker(const Panel& p, double x, double y, const std::string& label) {
    if (x < p.x_min || x > p.x_max) return {};
    const double cy = p.py(std::clamp(y, p.y_min, p.y_max));
    return fmt::format(
        "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#d62728\"/>\n"
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" fill=\"#d62728\">{}</text>\n",
        p.px(x), cy, p.px(x) + 6.0, cy - 6.0, escape(label));
}

}  // namespace

std::string bode_plot(const std::vector<FrequencyPoint>& sweep, const MarginReport& margins, const std::string& title) {
    std::vector<double> lx, mag, ph;
    for (const auto& pt : sweep) {
        lx.push_back(std::log10(pt.omega));
        mag.push_back(pt.magnitude_db);
        ph.push_back(pt.phase_deg);
    }
    const double x_min = lx.empty() ? 0.0 : lx.front();
    const double x_max = lx.empty() ? 1.0 : lx.back();
    auto finite_range = [](const std::vector<double>& v, double& lo, double& hi) {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (double d : v) {
            if (!std::isfinite(d)) continue;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        if (!std::isfinite(lo)) lo = hi = 0.0;
    };
    double m_lo, m_hi, p_lo, p_hi;
    finite_range(mag, m_lo, m_hi);
    finite_range(ph, p_lo, p_hi);
    m_lo = std::min(m_lo, 0.0);
    m_hi = std::max(m_hi, 0.0);
    p_lo = std::min(p_lo, -180.0);
    p_hi = std::max(p_hi, -180.0);
    padded_range(m_lo, m_hi);
    padded_range(p_lo, p_hi);

    const Panel top{40.0, 240.0, x_min, x_max, m_lo, m_hi};
    const Panel bottom{320.0, 240.0, x_min, x_max, p_lo, p_hi};

    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"620\" viewBox=\"0 0 {:.0f} 620\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{:.2f}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        kWidth, kWidth, kWidth / 2, escape(title));
    s += frame(top, "magnitude (dB)");
    s += frame(bottom, "phase (deg)");
    s += hline(top, 0.0, "stroke-dasharray=\"4,3\"");
    s += hline(bottom, -180.0, "stroke-dasharray=\"4,3\"");
    for (int d = static_cast<int>(std::ceil(x_min)); d <= static_cast<int>(std::floor(x_max)); ++d) {
        const double x = bottom.px(d);
        s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>\n", x,
                         top.top, bottom.top + bottom.height);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"10\" text-anchor=\"middle\">1e{}</text>\n", x,
                         bottom.top + bottom.height + 14.0, d);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"612\" font-size=\"12\" text-anchor=\"middle\">omega (rad/s)</text>\n",
                     kWidth / 2);
    s += polyline(top, lx, mag, kColors[0]);
    s += polyline(bottom, lx, ph, kColors[0]);
    if (margins.gain_crossover && margins.phase_margin_deg) {
        const double x = std::log10(*margins.gain_crossover);
        s += marker(top, x, 0.0, fmt::format("wg = {:.4g}", *margins.gain_crossover));
        s += marker(bottom, x, *margins.phase_margin_deg - 180.0, fmt::format("PM = {:.4g} deg", *margins.phase_margin_deg));
    }
    if (margins.phase_crossover) {
        const double x = std::log10(*margins.phase_crossover);
        s += marker(bottom, x, -180.0, fmt::format("wp = {:.4g}", *margins.phase_crossover));
        s += marker(top, x, -margins.gain_margin_db, fmt::format("GM = {:.4g} dB", margins.gain_margin_db));
    }
    s += "</svg>\n";
    return s;
}

std::string line_plot(const std::string& title, const std::string& x_label, const std::vector<double>& x,
                      const std::vector<Series>& series) {
    double x_lo = x.empty() ? 0.0 : x.front();
    double x_hi = x.empty() ? 1.0 : x.back();
    if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -y_lo;
    for (const auto& sr : series) {
        for (double v : sr.values) {
            if (!std::isfinite(v)) continue;
            y_lo = std::min(y_lo, v);
            y_hi = std::max(y_hi, v);
        }
    }
    if (!std::isfinite(y_lo)) y_lo = y_hi = 0.0;
    padded_range(y_lo, y_hi);
    const Panel panel{40.0, 400.0, x_lo, x_hi, y_lo, y_hi};

    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"500\" viewBox=\"0 0 {:.0f} 500\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{:.2f}\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        kWidth, kWidth, kWidth / 2, escape(title));
    s += frame(panel, "");
    for (int i = 0; i <= 4; ++i) {
        const double xv = x_lo + (x_hi - x_lo) * i / 4.0;
        s += fmt::format("<text x=\"{:.2f}\" y=\"456\" font-size=\"10\" text-anchor=\"middle\">{:.4g}</text>\n",
                         panel.px(xv), xv);
    }
    s += fmt::format("<text x=\"{:.2f}\" y=\"480\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n", kWidth / 2,
                     escape(x_label));
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kColors[k % 4];
        s += polyline(panel, x, series[k].values, color);
        s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-size=\"11\" fill=\"{}\">{}</text>\n", kLeft + 10.0,
                         panel.top + 16.0 + 14.0 * static_cast<double>(k), color, escape(series[k].label));
    }
    s += "</svg>\n";
    return s;
}

}  // namespace buckforge::svg
