#pragma once

#include <Eigen/Dense>
#include <memory>
#include <utility>
#include <vector>

#include "scanline/grid.hpp"

namespace scanline {

// Result of applying a measurement function to one image.
struct TaskOutput {
    Eigen::VectorXd values;                           // m measurements, pixels
    std::vector<Grid> per_anchor_heatmaps;            // optional, each sums to 1
    std::vector<std::pair<double, double>> anchors;   // optional, (row, col)
};

// d(measurement)/d(pixel) at one reference image, flattened row-major.
struct Jacobian {
    int height = 0;
    int width = 0;
    Eigen::MatrixXd entries;       // m x (height*width)
    int reference_input_id = -1;   // posterior sample index, -1 when unset

    int rows() const { return static_cast<int>(entries.rows()); }
    int cols() const { return static_cast<int>(entries.cols()); }
};

// Differentiable measurement function f: image -> R^m.
class Task {
public:
    virtual ~Task() = default;
    virtual int output_dim() const = 0;
    virtual TaskOutput evaluate(const ImageGrid& image) const = 0;
    // Analytic Jacobian at the given image. Throws DegenerateDistance where
    // the derivative is singular; callers substitute a zero row.
    virtual Jacobian jacobian(const ImageGrid& image) const = 0;
};

// f(x) = weights * flatten(x); the Jacobian is the weight matrix itself.
class LinearTask final : public Task {
public:
    explicit LinearTask(Eigen::MatrixXd weights);
    int output_dim() const override;
    TaskOutput evaluate(const ImageGrid& image) const override;
    Jacobian jacobian(const ImageGrid& image) const override;

private:
    Eigen::MatrixXd weights_;
};

// Inclusive center-coordinate window a heatmap is restricted to; {-1, -1}
// means the full valid range for that axis.
struct CenterBand {
    int begin = -1;
    int end = -1;  // exclusive
};

// Scalar distance between two template-matched anchors:
//   score_a = correlation of the image with the zero-mean unit-norm template
//   heatmap_a = softmax(temperature * score_a) over the band
//   anchor_a = heatmap-weighted mean pixel coordinate
//   value = ||anchor_a - anchor_b||_2
// Correlation uses odd-sized templates placed by their center pixel; scores
// outside the band (or where the template would leave the grid) get zero
// heatmap mass. Rank-1 templates take a separable fast path.
class AnchorDistanceTask final : public Task {
public:
    AnchorDistanceTask(const Grid& template_a, const Grid& template_b,
                       double softmax_temperature);

    void set_row_bands(CenterBand band_a, CenterBand band_b);
    void set_col_bands(CenterBand band_a, CenterBand band_b);

    int output_dim() const override { return 1; }
    TaskOutput evaluate(const ImageGrid& image) const override;
    Jacobian jacobian(const ImageGrid& image) const override;

    // Edge-profile templates for a cavity-in-annulus image with standard row
    // bands (anchor A above mid-grid, anchor B below, overlapping) and the
    // central half of the columns.
    static AnchorDistanceTask default_for_grid(int height, int width,
                                               double softmax_temperature = 25.0);

private:
    struct AnchorSpec {
        Grid tmpl;                  // zero-mean, unit Frobenius norm, odd dims
        bool separable = false;
        std::vector<double> col_factor;  // tmpl = col_factor * row_factor^T
        std::vector<double> row_factor;
        CenterBand rows;
        CenterBand cols;
    };

    struct Forward {
        std::vector<Grid> heatmaps;
        std::vector<std::pair<double, double>> anchors;
        double value = 0.0;
    };

    Forward forward(const ImageGrid& image) const;

    AnchorSpec anchors_[2];
    double temperature_;
};

std::unique_ptr<Task> linear_task(Eigen::MatrixXd weights);
std::unique_ptr<Task> anchor_distance_task(const Grid& template_a,
                                           const Grid& template_b,
                                           double softmax_temperature);

// Central finite differences, (f(x+h e_i) - f(x-h e_i)) / 2h per pixel.
Jacobian jacobian_fd(const Task& f, const ImageGrid& x, double step);

// Mass-weighted mean coordinate of a nonnegative map (normalizes internally).
std::pair<double, double> soft_argmax(const Grid& heatmap);

}  // namespace scanline
