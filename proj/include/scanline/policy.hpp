#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scanline/grid.hpp"
#include "scanline/perception.hpp"
#include "scanline/saliency.hpp"
#include "scanline/task.hpp"

namespace scanline {

// K distinct columns to acquire at one frame, in pick order.
struct LineBudgetAction {
    std::vector<int> columns;
    int frame_index = 0;
    std::string policy_name;
};

struct ScoreMap {
    enum class Kind { kSaliency, kVariance, kUniform };
    Grid values;
    Kind kind = Kind::kUniform;
};

enum class PolicyKind { kTbig, kGig, kUniformRotating, kRandom };

PolicyKind policy_from_name(const std::string& name);  // throws ConfigError
const char* policy_name(PolicyKind kind);

// One policy decision with its bookkeeping. `uncertainty` is the policy's
// own objective at selection time: the predicted measurement variance for
// tbig, the total pixel variance for gig, 0 for the baselines. `score` is
// the map the greedy selection ran on (empty for baselines).
struct ActionSelection {
    LineBudgetAction action;
    double uncertainty = 0.0;
    ScoreMap score;
    int n_degenerate_samples = 0;
    bool gig_fallback = false;
};

// Greedy column selection: repeatedly pick the unselected column with the
// largest score-column sum (ties to the lowest index), then zero it.
// Under column zeroing the objective is additive, so this equals the exact
// top-k by initial column sum. Throws BudgetExceedsWidth on k out of range,
// std::invalid_argument on negative scores.
LineBudgetAction k_greedy_minimization(const ScoreMap& score, int k);

// Saliency-driven selection: posterior samples -> per-sample Jacobians ->
// expected Gram diagonal -> saliency with the belief pixel variance ->
// k-greedy. n_reference_points = -1 uses every posterior sample. A sample
// with a degenerate task derivative contributes a zero Jacobian; if all
// samples degenerate the selection falls back to gig scoring (flagged).
ActionSelection tbig_action(const Belief& belief, const Task& task, int k,
                            int frame_index, int n_reference_points = -1,
                            GramAveraging mode = GramAveraging::kPerSampleGram);

// Variance-driven selection (k-greedy on the pixel-variance map).
ActionSelection gig_action(const Belief& belief, int k, int frame_index);

// Non-adaptive baselines: uniform_rotating picks k equispaced columns whose
// offset advances by one per frame; random picks k distinct seeded columns.
LineBudgetAction baseline_action(PolicyKind kind, int width, int k,
                                 int frame_index, std::uint64_t rng_seed);

// CSV rows `frame,policy,col_1,...,col_K,uncertainty_estimate`.
void write_action_log(std::ostream& os, std::span<const ActionSelection> selections);

}  // namespace scanline
