#include "scanline/selftest.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <vector>

#include "scanline/perception.hpp"
#include "scanline/phantom.hpp"
#include "scanline/policy.hpp"
#include "scanline/rng.hpp"
#include "scanline/saliency.hpp"
#include "scanline/task.hpp"

namespace scanline {
namespace {

bool trace_identity_suite() {
    std::mt19937_64 rng = make_rng(0x7472616365ULL);
    std::uniform_int_distribution<int> m_dist(1, 3);
    std::uniform_int_distribution<int> n_dist(2, 12);
    std::uniform_real_distribution<double> entry(-2.0, 2.0);
    std::uniform_real_distribution<double> var(0.0, 3.0);
    for (int iter = 0; iter < 200; ++iter) {
        const int m = m_dist(rng);
        const int n = n_dist(rng);
        Jacobian j;
        j.height = 1;
        j.width = n;
        j.entries.resize(m, n);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < n; ++c) j.entries(r, c) = entry(rng);
        }
        Eigen::VectorXd sigma2(n);
        for (int c = 0; c < n; ++c) sigma2(c) = var(rng);

        const std::vector<double> gram = gram_diagonal(j);
        double lhs = 0.0;
        for (int c = 0; c < n; ++c) lhs += gram[c] * sigma2(c);
        const double rhs =
            (j.entries * sigma2.asDiagonal() * j.entries.transpose()).trace();
        if (std::abs(lhs - rhs) >= 1e-10) return false;
    }
    return true;
}

StateRanges small_grid_ranges() {
    StateRanges r;
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

double max_abs(const Eigen::MatrixXd& m) {
    return m.cwiseAbs().maxCoeff();
}

bool gradient_suite(bool perturb) {
    const int h = 32;
    const int w = 48;
    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(h, w);
    const StateRanges ranges = small_grid_ranges();
    for (int i = 0; i < 3; ++i) {
        const LatentState state = sample_state(ranges, mix_seed(0x67726164ULL, i));
        const ImageGrid img = render(state, h, w);
        Jacobian analytic = task.jacobian(img);
        if (perturb) analytic.entries(0, 0) += 1e-2;
        const Jacobian fd = jacobian_fd(task, img, 1e-4);
        const double scale = std::max(max_abs(fd.entries), 1e-12);
        const double err = max_abs(analytic.entries - fd.entries) / scale;
        if (!(err < 1e-3)) return false;
    }
    {
        std::mt19937_64 rng = make_rng(0x6c696eULL);
        std::uniform_real_distribution<double> entry(-1.0, 1.0);
        Eigen::MatrixXd weights(2, 8 * 6);
        for (int r = 0; r < weights.rows(); ++r) {
            for (int c = 0; c < weights.cols(); ++c) weights(r, c) = entry(rng);
        }
        const LinearTask linear(weights);
        ImageGrid x(8, 6);
        for (double& v : x.data) v = entry(rng);
        if (max_abs(linear.jacobian(x).entries - weights) != 0.0) return false;
        const Jacobian fd = jacobian_fd(linear, x, 1e-4);
        if (!(max_abs(fd.entries - weights) <= 1e-9)) return false;
    }
    return true;
}

bool greedy_suite() {
    std::mt19937_64 rng = make_rng(0x677265656479ULL);
    std::uniform_int_distribution<int> w_dist(4, 10);
    std::uniform_int_distribution<int> h_dist(1, 4);
    std::uniform_real_distribution<double> entry(0.0, 5.0);
    for (int iter = 0; iter < 30; ++iter) {
        const int width = w_dist(rng);
        const int height = h_dist(rng);
        std::uniform_int_distribution<int> k_dist(1, std::min(3, width));
        const int k = k_dist(rng);
        ScoreMap score;
        score.kind = ScoreMap::Kind::kSaliency;
        score.values = Grid(height, width);
        for (double& v : score.values.data) {
            v = std::round(entry(rng) * 10.0) / 10.0;  // coarse grid forces ties
        }
        std::vector<double> col_sum(width, 0.0);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) col_sum[c] += score.values(r, c);
        }
        const LineBudgetAction action = k_greedy_minimization(score, k);

        double greedy_total = 0.0;
        for (int c : action.columns) greedy_total += col_sum[c];
        // exhaustive max over all k-subsets
        std::vector<int> pick(k);
        double best = -1.0;
        auto recurse = [&](auto&& self, int start, int depth, double acc) -> void {
            if (depth == k) {
                best = std::max(best, acc);
                return;
            }
            for (int c = start; c <= width - (k - depth); ++c) {
                self(self, c + 1, depth + 1, acc + col_sum[c]);
            }
        };
        recurse(recurse, 0, 0, 0.0);
        if (std::abs(greedy_total - best) > 1e-9) return false;
        // pick order: nonincreasing column sums, ties by ascending index
        for (int i = 1; i < k; ++i) {
            const int prev = action.columns[i - 1];
            const int cur = action.columns[i];
            if (col_sum[prev] < col_sum[cur]) return false;
            if (col_sum[prev] == col_sum[cur] && prev > cur) return false;
        }
    }
    return true;
}

bool variance_suite() {
    std::mt19937_64 rng = make_rng(0x766172ULL);
    std::uniform_int_distribution<int> n_dist(3, 40);
    std::uniform_real_distribution<double> entry(0.0, 1.0);
    for (int iter = 0; iter < 5; ++iter) {
        const int n = n_dist(rng);
        std::vector<ImageGrid> samples(n, ImageGrid(6, 7));
        for (ImageGrid& s : samples) {
            for (double& v : s.data) v = entry(rng);
        }
        const VarianceMap got = pixel_variance(samples);
        for (int p = 0; p < 6 * 7; ++p) {
            double mean = 0.0;
            for (const ImageGrid& s : samples) mean += s.data[p];
            mean /= n;
            double ss = 0.0;
            for (const ImageGrid& s : samples) {
                ss += (s.data[p] - mean) * (s.data[p] - mean);
            }
            const double expected = ss / (n - 1);
            if (std::abs(got.values.data[p] - expected) > 1e-12) return false;
        }
    }
    return true;
}

}  // namespace

int run_selftest(const SelfTestOptions& options) {
    struct Suite {
        const char* name;
        bool passed;
    };
    const Suite suites[] = {
        {"trace_identity", trace_identity_suite()},
        {"jacobian_gradient", gradient_suite(options.perturb_jacobian)},
        {"greedy_optimality", greedy_suite()},
        {"variance_oracle", variance_suite()},
    };
    int failed = 0;
    for (const Suite& s : suites) {
        if (!s.passed) ++failed;
        if (options.out) {
            *options.out << s.name << ": " << (s.passed ? "PASS" : "FAIL") << "\n";
        }
    }
    return failed;
}

}  // namespace scanline
