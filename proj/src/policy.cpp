#include "scanline/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "scanline/errors.hpp"
#include "scanline/rng.hpp"

namespace scanline {

PolicyKind policy_from_name(const std::string& name) {
    if (name == "tbig") return PolicyKind::kTbig;
    if (name == "gig") return PolicyKind::kGig;
    if (name == "uniform_rotating") return PolicyKind::kUniformRotating;
    if (name == "random") return PolicyKind::kRandom;
    throw ConfigError("unknown policy: " + name);
}

const char* policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::kTbig: return "tbig";
        case PolicyKind::kGig: return "gig";
        case PolicyKind::kUniformRotating: return "uniform_rotating";
        case PolicyKind::kRandom: return "random";
    }
    return "unknown";
}

LineBudgetAction k_greedy_minimization(const ScoreMap& score, int k) {
    const Grid& g = score.values;
    const int width = g.width;
    if (k < 1 || k > width) {
        throw BudgetExceedsWidth("budget k must be in [1, width]");
    }
    std::vector<double> col_sum(width, 0.0);
    for (int r = 0; r < g.height; ++r) {
        const double* row = &g(r, 0);
        for (int c = 0; c < width; ++c) {
            if (row[c] < 0.0) {
                throw std::invalid_argument("score map entries must be nonnegative");
            }
            col_sum[c] += row[c];
        }
    }
    LineBudgetAction action;
    action.columns.reserve(k);
    std::vector<char> selected(width, 0);
    for (int pick = 0; pick < k; ++pick) {
        int best = -1;
        double best_sum = -1.0;
        for (int c = 0; c < width; ++c) {
            if (!selected[c] && col_sum[c] > best_sum) {
                best = c;
                best_sum = col_sum[c];
            }
        }
        selected[best] = 1;
        col_sum[best] = 0.0;  // observing the column removes its variance
        action.columns.push_back(best);
    }
    return action;
}

ActionSelection gig_action(const Belief& belief, int k, int frame_index) {
    ActionSelection out;
    out.score.kind = ScoreMap::Kind::kVariance;
    out.score.values = belief_pixel_variance(belief).values;
    out.uncertainty = out.score.values.sum();
    out.action = k_greedy_minimization(out.score, k);
    out.action.frame_index = frame_index;
    out.action.policy_name = "gig";
    return out;
}

ActionSelection tbig_action(const Belief& belief, const Task& task, int k,
                            int frame_index, int n_reference_points,
                            GramAveraging mode) {
    int n_ref = n_reference_points;
    if (n_ref < 0 || n_ref > belief.n_particles()) n_ref = belief.n_particles();
    if (n_ref < 1) throw std::invalid_argument("need at least 1 reference point");

    const std::vector<ImageGrid> samples = posterior_samples(belief, n_ref);
    std::vector<Jacobian> jacobians;
    jacobians.reserve(samples.size());
    int n_degenerate = 0;
    for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
        Jacobian j;
        try {
            j = task.jacobian(samples[i]);
        } catch (const DegenerateDistance&) {
            // Distance subgradient 0 at coinciding anchors.
            j.height = samples[i].height;
            j.width = samples[i].width;
            j.entries = Eigen::MatrixXd::Zero(task.output_dim(), samples[i].size());
            ++n_degenerate;
        }
        j.reference_input_id = i;
        jacobians.push_back(std::move(j));
    }

    ActionSelection out;
    out.n_degenerate_samples = n_degenerate;
    if (n_degenerate == static_cast<int>(jacobians.size())) {
        out = gig_action(belief, k, frame_index);
        out.n_degenerate_samples = n_degenerate;
        out.gig_fallback = true;
        out.action.policy_name = "tbig";
        return out;
    }

    const std::vector<double> gram = expected_gram_diagonal(jacobians, mode);
    const VarianceMap variance = belief_pixel_variance(belief);
    SaliencyMap saliency =
        saliency_map(gram, variance, static_cast<int>(jacobians.size()));
    out.uncertainty = uncertainty(saliency, belief.n_particles()).value;
    out.score.kind = ScoreMap::Kind::kSaliency;
    out.score.values = std::move(saliency.values);
    out.action = k_greedy_minimization(out.score, k);
    out.action.frame_index = frame_index;
    out.action.policy_name = "tbig";
    return out;
}

LineBudgetAction baseline_action(PolicyKind kind, int width, int k,
                                 int frame_index, std::uint64_t rng_seed) {
    if (k < 1 || k > width) {
        throw BudgetExceedsWidth("budget k must be in [1, width]");
    }
    LineBudgetAction action;
    action.frame_index = frame_index;
    action.policy_name = policy_name(kind);
    action.columns.reserve(k);
    if (kind == PolicyKind::kUniformRotating) {
        for (int j = 0; j < k; ++j) {
            const int col = (frame_index + (j * width) / k) % width;
            action.columns.push_back(col);
        }
    } else if (kind == PolicyKind::kRandom) {
        std::vector<int> pool(width);
        std::iota(pool.begin(), pool.end(), 0);
        std::mt19937_64 rng =
            make_rng(mix_seed(rng_seed, seed_tag::kBaseline, frame_index));
        for (int j = 0; j < k; ++j) {
            std::uniform_int_distribution<int> pick(j, width - 1);
            std::swap(pool[j], pool[pick(rng)]);
            action.columns.push_back(pool[j]);
        }
    } else {
        throw std::invalid_argument("baseline_action expects a non-adaptive policy");
    }
    return action;
}

void write_action_log(std::ostream& os, std::span<const ActionSelection> selections) {
    os << "frame,policy,col_1,...,col_K,uncertainty_estimate\n";
    char buf[64];
    for (const ActionSelection& sel : selections) {
        os << sel.action.frame_index << ',' << sel.action.policy_name;
        for (int c : sel.action.columns) os << ',' << c;
        std::snprintf(buf, sizeof(buf), ",%.17g\n", sel.uncertainty);
        os << buf;
    }
}

}  // namespace scanline
