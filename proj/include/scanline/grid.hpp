#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace scanline {

// Dense row-major H x W field of doubles. ImageGrid values live in [0,1];
// the same storage backs variance, saliency and score maps (different units).
struct Grid {
    int height = 0;
    int width = 0;
    std::vector<double> data;  // row-major, size height*width

    Grid() = default;
    Grid(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < height && c >= 0 && c < width);
        return data[static_cast<std::size_t>(r) * width + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < height && c >= 0 && c < width);
        return data[static_cast<std::size_t>(r) * width + c];
    }

    int size() const { return height * width; }
    bool same_shape(const Grid& other) const {
        return height == other.height && width == other.width;
    }

    double sum() const {
        double s = 0.0;
        for (double v : data) s += v;
        return s;
    }
};

using ImageGrid = Grid;

struct VarianceMap {
    Grid values;  // per-pixel unbiased sample variance, intensity^2 units
};

}  // namespace scanline
