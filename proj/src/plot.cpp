#include "scanline/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "scanline/svg.hpp"

namespace scanline {
namespace {

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

}  // namespace

std::string plot_timeseries(const std::vector<ParsedFrameRow>& rows) {
    if (rows.empty()) throw std::runtime_error("timeseries: no rows");
    const double kW = 720.0;
    const double kH = 400.0;
    const double kL = 64.0;
    const double kR = 16.0;
    const double kT = 20.0;
    const double kB = 44.0;

    double f_min = rows.front().frame;
    double f_max = rows.front().frame;
    double y_min = rows.front().target;
    double y_max = rows.front().target;
    double abs_err = 0.0;
    for (const ParsedFrameRow& r : rows) {
        f_min = std::min(f_min, static_cast<double>(r.frame));
        f_max = std::max(f_max, static_cast<double>(r.frame));
        y_min = std::min({y_min, r.target, r.estimate - r.std_dev});
        y_max = std::max({y_max, r.target, r.estimate + r.std_dev});
        abs_err += std::abs(r.target - r.estimate);
    }
    const double mae = abs_err / static_cast<double>(rows.size());
    if (f_max == f_min) f_max = f_min + 1.0;
    const double pad = 0.05 * std::max(y_max - y_min, 1e-9);
    y_min -= pad;
    y_max += pad;

    auto sx = [&](double frame) {
        return kL + (frame - f_min) / (f_max - f_min) * (kW - kL - kR);
    };
    auto sy = [&](double v) {
        return kH - kB - (v - y_min) / (y_max - y_min) * (kH - kT - kB);
    };

    SvgWriter svg(kW, kH);
    svg.rect(0, 0, kW, kH, "#ffffff");

    std::vector<std::pair<double, double>> target_pts;
    std::vector<std::pair<double, double>> estimate_pts;
    std::vector<std::pair<double, double>> upper_pts;
    std::vector<std::pair<double, double>> lower_pts;
    for (const ParsedFrameRow& r : rows) {
        const double x = sx(r.frame);
        target_pts.emplace_back(x, sy(r.target));
        estimate_pts.emplace_back(x, sy(r.estimate));
        upper_pts.emplace_back(x, sy(r.estimate + r.std_dev));
        lower_pts.emplace_back(x, sy(r.estimate - r.std_dev));
    }
    svg.band(upper_pts, lower_pts, "rgba(214,39,40,0.18)");
    svg.polyline(target_pts, "#1f77b4", 1.5);
    svg.polyline(estimate_pts, "#d62728", 1.5);

    svg.line(kL, kT, kL, kH - kB, "#444444", 1.0);
    svg.line(kL, kH - kB, kW - kR, kH - kB, "#444444", 1.0);
    svg.text(kL - 6, sy(y_min + pad) + 4, fmt("%.4g", y_min + pad), 11,
             "#444444", "end");
    svg.text(kL - 6, sy(y_max - pad) + 4, fmt("%.4g", y_max - pad), 11,
             "#444444", "end");
    svg.text(sx(f_min), kH - kB + 16, fmt("%.0f", f_min), 11, "#444444", "middle");
    svg.text(sx(f_max), kH - kB + 16, fmt("%.0f", f_max), 11, "#444444", "middle");
    svg.text((kL + kW - kR) / 2, kH - 8, "frame", 12, "#444444", "middle");

    svg.text(kL + 10, kT + 14, "target", 12, "#1f77b4");
    svg.text(kL + 10, kT + 30, "estimate (+-1 std)", 12, "#d62728");
    svg.text(kW - kR - 10, kT + 14, "MAE " + fmt("%.3f", mae) + " px", 12,
             "#333333", "end");
    return svg.str();
}

std::string plot_mae_box(const std::vector<ParsedMaeRow>& rows) {
    struct Group {
        std::string policy;
        int budget;
        std::vector<double> maes;
    };
    std::vector<Group> groups;
    for (const ParsedMaeRow& r : rows) {
        if (!r.ok) continue;
        Group* g = nullptr;
        for (Group& existing : groups) {
            if (existing.policy == r.policy && existing.budget == r.budget) {
                g = &existing;
                break;
            }
        }
        if (!g) {
            groups.push_back({r.policy, r.budget, {}});
            g = &groups.back();
        }
        g->maes.push_back(r.mae);
    }
    if (groups.empty()) throw std::runtime_error("mae_box: no completed runs");

    double y_max = 0.0;
    for (Group& g : groups) {
        std::sort(g.maes.begin(), g.maes.end());
        y_max = std::max(y_max, g.maes.back());
    }
    y_max *= 1.08;
    if (y_max <= 0.0) y_max = 1.0;

    const double kSlot = 64.0;
    const double kL = 56.0;
    const double kT = 16.0;
    const double kB = 56.0;
    const double kW = kL + kSlot * groups.size() + 16.0;
    const double kH = 360.0;
    auto sy = [&](double v) { return kH - kB - v / y_max * (kH - kT - kB); };
    auto q_of = [](const std::vector<double>& sorted, double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
    };

    SvgWriter svg(kW, kH);
    svg.rect(0, 0, kW, kH, "#ffffff");
    svg.line(kL - 8, sy(0), kW - 8, sy(0), "#444444", 1.0);
    svg.line(kL - 8, kT, kL - 8, kH - kB, "#444444", 1.0);
    svg.text(kL - 12, sy(0) + 4, "0", 11, "#444444", "end");
    svg.text(kL - 12, sy(y_max / 1.08) + 4, fmt("%.3g", y_max / 1.08), 11,
             "#444444", "end");

    for (std::size_t i = 0; i < groups.size(); ++i) {
        const Group& g = groups[i];
        const double cx = kL + kSlot * (i + 0.5);
        const double lo = g.maes.front();
        const double hi = g.maes.back();
        const double q1 = q_of(g.maes, 0.25);
        const double med = q_of(g.maes, 0.5);
        const double q3 = q_of(g.maes, 0.75);
        const bool tbig = g.policy == "tbig";
        const std::string color = tbig ? "#d62728" : "#1f77b4";
        svg.line(cx, sy(lo), cx, sy(hi), color, 1.0);
        svg.line(cx - 10, sy(lo), cx + 10, sy(lo), color, 1.0);
        svg.line(cx - 10, sy(hi), cx + 10, sy(hi), color, 1.0);
        svg.rect(cx - 16, sy(q3), 32, std::max(1.0, sy(q1) - sy(q3)), "#ffffff",
                 "stroke=\"" + color + "\" stroke-width=\"1.2\"");
        svg.line(cx - 16, sy(med), cx + 16, sy(med), color, 2.0);
        svg.text(cx, kH - kB + 16, g.policy, 10, "#333333", "middle");
        svg.text(cx, kH - kB + 30, "k=" + std::to_string(g.budget), 10,
                 "#333333", "middle");
    }
    svg.text(12, kT + 4, "MAE (px)", 11, "#444444");
    return svg.str();
}

std::string plot_saliency(const Grid& map, const std::vector<int>& selected_columns) {
    if (map.size() == 0) throw std::runtime_error("saliency: empty map");
    const double kPx = 3.0;
    const double kM = 24.0;
    const double kW = kM * 2 + map.width * kPx;
    const double kH = kM * 2 + map.height * kPx;
    double v_max = 0.0;
    for (double v : map.data) v_max = std::max(v_max, v);

    SvgWriter svg(kW, kH);
    svg.rect(0, 0, kW, kH, "#ffffff");
    svg.rect(kM, kM, map.width * kPx, map.height * kPx, "#000000");
    if (v_max > 0.0) {
        for (int r = 0; r < map.height; ++r) {
            for (int c = 0; c < map.width; ++c) {
                const double rel = map(r, c) / v_max;
                if (rel < 1e-3) continue;
                const int level = static_cast<int>(std::lround(rel * 255.0));
                char color[16];
                std::snprintf(color, sizeof(color), "#%02x%02x%02x", level,
                              level, 0x20);
                svg.rect(kM + c * kPx, kM + r * kPx, kPx, kPx, color);
            }
        }
    }
    for (int c : selected_columns) {
        if (c < 0 || c >= map.width) {
            throw std::runtime_error("saliency: selected column out of range");
        }
        const double x = kM + (c + 0.5) * kPx;
        svg.line(x, kM - 6, x, kM + map.height * kPx + 6, "rgba(255,64,64,0.8)",
                 kPx * 0.8);
    }
    return svg.str();
}

}  // namespace scanline
