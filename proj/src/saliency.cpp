#include "scanline/saliency.hpp"

#include <stdexcept>

#include "scanline/errors.hpp"

namespace scanline {

const char* gram_averaging_name(GramAveraging mode) {
    return mode == GramAveraging::kAveragedJacobian ? "averaged_jacobian"
                                                    : "per_sample_gram";
}

GramAveraging gram_averaging_from_name(const std::string& name) {
    if (name == "per_sample_gram") return GramAveraging::kPerSampleGram;
    if (name == "averaged_jacobian") return GramAveraging::kAveragedJacobian;
    throw ConfigError("unknown gram averaging mode: " + name);
}

std::vector<double> gram_diagonal(const Jacobian& j) {
    if (!j.entries.allFinite()) {
        throw std::invalid_argument("jacobian entries must be finite");
    }
    const int n = j.cols();
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = j.entries.col(i).squaredNorm();
    }
    return out;
}

std::vector<double> expected_gram_diagonal(std::span<const Jacobian> jacobians,
                                           GramAveraging mode) {
    if (jacobians.empty()) {
        throw std::invalid_argument("need at least one jacobian");
    }
    const Eigen::Index rows = jacobians[0].entries.rows();
    const Eigen::Index cols = jacobians[0].entries.cols();
    for (const Jacobian& j : jacobians) {
        if (j.entries.rows() != rows || j.entries.cols() != cols) {
            throw ShapeMismatch("jacobians differ in shape");
        }
    }
    const double inv_n = 1.0 / static_cast<double>(jacobians.size());
    if (mode == GramAveraging::kAveragedJacobian) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rows, cols);
        for (const Jacobian& j : jacobians) mean += j.entries;
        mean *= inv_n;
        Jacobian avg;
        avg.height = jacobians[0].height;
        avg.width = jacobians[0].width;
        avg.entries = std::move(mean);
        return gram_diagonal(avg);
    }
    std::vector<double> out(static_cast<std::size_t>(cols), 0.0);
    for (const Jacobian& j : jacobians) {
        const std::vector<double> g = gram_diagonal(j);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    }
    for (double& v : out) v *= inv_n;
    return out;
}

SaliencyMap saliency_map(const std::vector<double>& expected_gram,
                         const VarianceMap& variance, int n_reference_points) {
    const Grid& var = variance.values;
    if (static_cast<int>(expected_gram.size()) != var.size()) {
        throw ShapeMismatch("gram diagonal and variance map sizes differ");
    }
    SaliencyMap out;
    out.n_reference_points = n_reference_points;
    out.values = Grid(var.height, var.width);
    for (int i = 0; i < var.size(); ++i) {
        out.values.data[i] = expected_gram[i] * var.data[i];
    }
    return out;
}

UncertaintyEstimate uncertainty(const SaliencyMap& saliency,
                                int n_variance_samples) {
    UncertaintyEstimate out;
    out.n_reference_points = saliency.n_reference_points;
    out.n_variance_samples = n_variance_samples;
    double total = 0.0;
    for (double v : saliency.values.data) total += v;
    out.value = total;
    return out;
}

}  // namespace scanline
