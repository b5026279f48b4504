#pragma once

#include <span>
#include <string>
#include <vector>

#include "scanline/grid.hpp"
#include "scanline/task.hpp"

namespace scanline {

// Task-weighted pixel uncertainty: entry (r,c) is E[G_ii] * sigma^2_i for
// the row-major flat pixel i, measurement^2 units.
struct SaliencyMap {
    Grid values;
    int n_reference_points = 0;
};

struct UncertaintyEstimate {
    double value = 0.0;  // measurement^2 units
    int n_reference_points = 0;
    int n_variance_samples = 0;
};

// Which Monte-Carlo estimator of E[G_ii] to use: the mean of per-sample
// Gram diagonals (primary), or the Gram diagonal of the averaged Jacobian
// (differs whenever the Jacobian varies across samples; kept for comparison).
enum class GramAveraging {
    kPerSampleGram,
    kAveragedJacobian,
};

const char* gram_averaging_name(GramAveraging mode);
GramAveraging gram_averaging_from_name(const std::string& name);  // throws ConfigError

// diag(J^T J): squared L2 norm of each Jacobian column, one entry per pixel.
std::vector<double> gram_diagonal(const Jacobian& j);

std::vector<double> expected_gram_diagonal(
    std::span<const Jacobian> jacobians,
    GramAveraging mode = GramAveraging::kPerSampleGram);

// Elementwise product of the expected Gram diagonal with the pixel variance,
// reshaped to the variance map's grid.
SaliencyMap saliency_map(const std::vector<double>& expected_gram,
                         const VarianceMap& variance, int n_reference_points);

// Total predicted measurement variance: the sum of the saliency map.
UncertaintyEstimate uncertainty(const SaliencyMap& saliency,
                                int n_variance_samples = 0);

}  // namespace scanline
