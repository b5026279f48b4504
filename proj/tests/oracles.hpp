#pragma once

// Independent reference implementations the tests check the library against.
// Everything here is written the straightforward slow way on purpose.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "scanline/grid.hpp"
#include "scanline/phantom.hpp"

namespace oracle {

// Per-pixel two-pass sample variance with N-1 normalization.
inline std::vector<double> two_pass_variance(
    const std::vector<scanline::ImageGrid>& samples) {
    const std::size_t n = samples.size();
    const std::size_t pixels = samples.front().data.size();
    std::vector<double> out(pixels, 0.0);
    for (std::size_t p = 0; p < pixels; ++p) {
        double mean = 0.0;
        for (const auto& s : samples) mean += s.data[p];
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (const auto& s : samples) {
            const double d = s.data[p] - mean;
            ss += d * d;
        }
        out[p] = ss / static_cast<double>(n - 1);
    }
    return out;
}

// tr(J diag(sigma2) J^T) via the full matrix product.
inline double weighted_trace(const Eigen::MatrixXd& j,
                             const Eigen::VectorXd& sigma2) {
    return (j * sigma2.asDiagonal() * j.transpose()).trace();
}

// Exhaustive best k-subset of columns by total column sum. Among ties the
// lexicographically first subset (in ascending-index enumeration order)
// wins, matching iterative argmax with lowest-index tie-breaking.
inline double best_column_subset(const std::vector<double>& col_sums, int k,
                                 std::vector<int>* best_set = nullptr) {
    const int width = static_cast<int>(col_sums.size());
    std::vector<int> current;
    std::vector<int> best;
    double best_total = -1.0;
    auto recurse = [&](auto&& self, int start, double acc) -> void {
        if (static_cast<int>(current.size()) == k) {
            if (acc > best_total) {
                best_total = acc;
                best = current;
            }
            return;
        }
        const int remaining = k - static_cast<int>(current.size());
        for (int c = start; c <= width - remaining; ++c) {
            current.push_back(c);
            self(self, c + 1, acc + col_sums[c]);
            current.pop_back();
        }
    };
    recurse(recurse, 0, 0.0);
    if (best_set != nullptr) *best_set = best;
    return best_total;
}

inline double mae(const std::vector<double>& a, const std::vector<double>& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
    return total / static_cast<double>(a.size());
}

// Gap between the falling edge of the first above-threshold run and the
// rising edge of the last one, with linear subpixel interpolation. Models
// the inner-wall distance visible in one rendered column.
struct InnerGap {
    bool found = false;
    double gap = 0.0;
};

inline InnerGap inner_wall_gap(const std::vector<double>& column,
                               double threshold) {
    const int n = static_cast<int>(column.size());
    std::vector<std::pair<int, int>> runs;  // [start, end] above threshold
    for (int i = 0; i < n; ++i) {
        if (column[i] <= threshold) continue;
        if (!runs.empty() && runs.back().second == i - 1) {
            runs.back().second = i;
        } else {
            runs.push_back({i, i});
        }
    }
    InnerGap out;
    if (runs.size() < 2) return out;
    const int first_end = runs.front().second;   // falling edge after this
    const int last_start = runs.back().first;    // rising edge before this
    if (first_end + 1 >= n || last_start == 0) return out;
    const double fall =
        first_end + (column[first_end] - threshold) /
                        (column[first_end] - column[first_end + 1]);
    const double rise =
        (last_start - 1) + (threshold - column[last_start - 1]) /
                               (column[last_start] - column[last_start - 1]);
    out.found = true;
    out.gap = rise - fall;
    return out;
}

// Minimal XML well-formedness check: tags balance and nest, attributes are
// quoted, declarations/comments are skipped. Enough to vet generated SVG.
inline bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (text[i] != '<') {
            if (text[i] == '>') return false;
            ++i;
            continue;
        }
        std::size_t close = text.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag.front() == '?' || tag.front() == '!') continue;
        bool closing = false;
        if (tag.front() == '/') {
            closing = true;
            tag.erase(tag.begin());
        }
        bool self_closing = false;
        if (!tag.empty() && tag.back() == '/') {
            self_closing = true;
            tag.pop_back();
        }
        const std::size_t name_end = tag.find_first_of(" \t\r\n");
        const std::string name = tag.substr(0, name_end);
        if (name.empty()) return false;
        if (closing) {
            if (self_closing || stack.empty() || stack.back() != name) {
                return false;
            }
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
        }
    }
    return stack.empty();
}

inline int count_occurrences(const std::string& text, const std::string& what) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(what, pos)) != std::string::npos) {
        ++count;
        pos += what.size();
    }
    return count;
}

}  // namespace oracle

namespace fixture {

// Phantom parameter ranges that fit a 32x48 grid, for cheap render-based
// tests; the library defaults are sized for the full 128x256 grid.
inline scanline::StateRanges small_ranges() {
    scanline::StateRanges r;
    r.center_row = {15.0, 17.0};
    r.center_col = {22.0, 26.0};
    r.semi_axis_r = {5.0, 7.0};
    r.semi_axis_c = {8.0, 11.0};
    r.wall_thickness = {2.0, 3.0};
    r.phase = {0.0, 6.28};
    r.phase_rate = {0.2, 0.3};
    r.drift_row = {-0.1, 0.1};
    r.drift_col = {-0.1, 0.1};
    return r;
}

// A state in the interior of small_ranges().
inline scanline::LatentState mid_small_state() {
    scanline::LatentState s;
    s.cavity_center_row = 16.0;
    s.cavity_center_col = 24.0;
    s.cavity_semi_axis_r = 6.0;
    s.cavity_semi_axis_c = 9.0;
    s.wall_thickness = 2.5;
    s.phase = 1.0;
    s.phase_rate = 0.25;
    s.drift_row = 0.05;
    s.drift_col = -0.05;
    return s;
}

// Ranges collapsed to a single state, for point-mass priors.
inline scanline::StateRanges point_ranges(const scanline::LatentState& s) {
    scanline::StateRanges r;
    r.center_row = {s.cavity_center_row, s.cavity_center_row};
    r.center_col = {s.cavity_center_col, s.cavity_center_col};
    r.semi_axis_r = {s.cavity_semi_axis_r, s.cavity_semi_axis_r};
    r.semi_axis_c = {s.cavity_semi_axis_c, s.cavity_semi_axis_c};
    r.wall_thickness = {s.wall_thickness, s.wall_thickness};
    r.phase = {s.phase, s.phase};
    r.phase_rate = {s.phase_rate, s.phase_rate};
    r.drift_row = {s.drift_row, s.drift_row};
    r.drift_col = {s.drift_col, s.drift_col};
    return r;
}

// A comfortably centered full-grid state.
inline scanline::LatentState mid_state() {
    scanline::LatentState s;
    s.cavity_center_row = 63.5;
    s.cavity_center_col = 127.5;
    s.cavity_semi_axis_r = 20.0;
    s.cavity_semi_axis_c = 40.0;
    s.wall_thickness = 6.0;
    s.phase = 0.7;
    s.phase_rate = 0.25;
    s.drift_row = 0.1;
    s.drift_col = -0.1;
    return s;
}

}  // namespace fixture
