#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "scanline/errors.hpp"
#include "scanline/perception.hpp"
#include "scanline/phantom.hpp"
#include "scanline/policy.hpp"
#include "scanline/rng.hpp"
#include "scanline/task.hpp"

using namespace scanline;

namespace {

ScoreMap score_from_columns(const std::vector<double>& col_values, int height) {
    ScoreMap s;
    s.kind = ScoreMap::Kind::kSaliency;
    s.values = Grid(height, static_cast<int>(col_values.size()));
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < s.values.width; ++c) {
            s.values(r, c) = col_values[c] / height;
        }
    }
    return s;
}

Belief small_belief(std::uint64_t seed, int n_particles = 12) {
    PriorSpec prior;
    prior.height = 32;
    prior.width = 48;
    prior.ranges = fixture::small_ranges();
    return Belief::init(prior, n_particles, seed);
}

Belief point_belief(std::uint64_t seed, int n_particles = 6) {
    PriorSpec prior;
    prior.height = 32;
    prior.width = 48;
    prior.ranges = fixture::point_ranges(fixture::mid_small_state());
    return Belief::init(prior, n_particles, seed);
}

double column_uncertainty_after(const Belief& base, const Task& task,
                                const std::vector<int>& columns,
                                const ImageGrid& truth) {
    Belief b = base;
    Observation obs;
    obs.frame_index = b.frame_index();
    obs.mask = columns;
    std::sort(obs.mask.begin(), obs.mask.end());
    for (int c : obs.mask) {
        std::vector<double> col(truth.height);
        for (int r = 0; r < truth.height; ++r) col[r] = truth(r, c);
        obs.columns.push_back(std::move(col));
    }
    b.update(obs, 0.1, 0.0);
    return tbig_action(b, task, 1, b.frame_index()).uncertainty;
}

}  // namespace

TEST_CASE("k-greedy picks columns by descending column sum") {
    const ScoreMap s = score_from_columns({3.0, 1.0, 4.0, 2.0}, 2);
    const LineBudgetAction a = k_greedy_minimization(s, 2);
    REQUIRE(a.columns.size() == 2);
    CHECK(a.columns[0] == 2);
    CHECK(a.columns[1] == 0);
}

TEST_CASE("k-greedy breaks ties toward the lowest index") {
    const ScoreMap s = score_from_columns({0.0, 0.0, 0.0, 0.0, 0.0}, 3);
    const LineBudgetAction a = k_greedy_minimization(s, 3);
    CHECK(a.columns == std::vector<int>{0, 1, 2});
}

TEST_CASE("k-greedy with k equal to width selects every column") {
    const ScoreMap s = score_from_columns({5.0, 2.0, 9.0, 9.0}, 1);
    const LineBudgetAction a = k_greedy_minimization(s, 4);
    std::vector<int> sorted = a.columns;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2, 3});
    CHECK(a.columns[0] == 2);  // tie 9.0 at columns 2,3 resolves to 2 first
    CHECK(a.columns[1] == 3);
}

TEST_CASE("k-greedy validates budget and scores") {
    const ScoreMap s = score_from_columns({1.0, 2.0}, 2);
    CHECK_THROWS_AS(k_greedy_minimization(s, 0), BudgetExceedsWidth);
    CHECK_THROWS_AS(k_greedy_minimization(s, 3), BudgetExceedsWidth);
    ScoreMap neg = s;
    neg.values(1, 0) = -0.25;
    CHECK_THROWS_AS(k_greedy_minimization(neg, 1), std::invalid_argument);
}

TEST_CASE("k-greedy matches exhaustive subset search") {
    std::mt19937_64 rng = make_rng(91);
    std::uniform_int_distribution<int> wdist(4, 10);
    std::uniform_int_distribution<int> hdist(1, 4);
    std::uniform_real_distribution<double> vdist(0.0, 3.0);
    for (int iter = 0; iter < 40; ++iter) {
        const int width = wdist(rng);
        const int height = hdist(rng);
        std::uniform_int_distribution<int> kdist(1, std::min(width, 4));
        const int k = kdist(rng);
        ScoreMap s;
        s.values = Grid(height, width);
        // Coarse values force frequent ties.
        for (double& v : s.values.data) v = std::round(vdist(rng) * 10.0) / 10.0;
        std::vector<double> col_sum(width, 0.0);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) col_sum[c] += s.values(r, c);
        }
        const LineBudgetAction a = k_greedy_minimization(s, k);
        std::vector<int> best_set;
        const double best = oracle::best_column_subset(col_sum, k, &best_set);
        double got = 0.0;
        for (int c : a.columns) got += col_sum[c];
        CAPTURE(iter);
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
        std::vector<int> sorted = a.columns;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == best_set);
        CHECK(std::set<int>(a.columns.begin(), a.columns.end()).size() ==
              a.columns.size());
    }
}

TEST_CASE("positive rescaling leaves the pick order unchanged") {
    const std::vector<double> cols = {0.3, 1.7, 0.3, 2.2, 0.9, 1.7};
    const ScoreMap s = score_from_columns(cols, 2);
    std::vector<double> scaled = cols;
    for (double& v : scaled) v *= 137.5;
    const ScoreMap t = score_from_columns(scaled, 2);
    CHECK(k_greedy_minimization(s, 4).columns ==
          k_greedy_minimization(t, 4).columns);
}

TEST_CASE("uniform rotating baseline spaces columns and advances per frame") {
    const LineBudgetAction f0 =
        baseline_action(PolicyKind::kUniformRotating, 8, 2, 0, 0);
    CHECK(f0.columns == std::vector<int>{0, 4});
    const LineBudgetAction f1 =
        baseline_action(PolicyKind::kUniformRotating, 8, 2, 1, 0);
    CHECK(f1.columns == std::vector<int>{1, 5});
    CHECK(f1.policy_name == "uniform_rotating");
    CHECK(f1.frame_index == 1);

    const LineBudgetAction wide =
        baseline_action(PolicyKind::kUniformRotating, 256, 5, 3, 0);
    for (int j = 0; j < 5; ++j) {
        CHECK(wide.columns[j] == (3 + (j * 256) / 5) % 256);
    }
}

TEST_CASE("random baseline is seeded and draws distinct in-range columns") {
    const LineBudgetAction a = baseline_action(PolicyKind::kRandom, 40, 6, 2, 99);
    const LineBudgetAction b = baseline_action(PolicyKind::kRandom, 40, 6, 2, 99);
    CHECK(a.columns == b.columns);
    std::set<int> unique(a.columns.begin(), a.columns.end());
    CHECK(unique.size() == 6);
    for (int c : a.columns) {
        CHECK(c >= 0);
        CHECK(c < 40);
    }
    const LineBudgetAction other =
        baseline_action(PolicyKind::kRandom, 40, 6, 3, 99);
    CHECK(a.columns != other.columns);
    CHECK_THROWS_AS(baseline_action(PolicyKind::kRandom, 40, 41, 0, 1),
                    BudgetExceedsWidth);
    CHECK_THROWS_AS(baseline_action(PolicyKind::kGig, 40, 2, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("policy names round trip") {
    for (const PolicyKind kind :
         {PolicyKind::kTbig, PolicyKind::kGig, PolicyKind::kUniformRotating,
          PolicyKind::kRandom}) {
        CHECK(policy_from_name(policy_name(kind)) == kind);
    }
    CHECK_THROWS_AS(policy_from_name("oracle"), ConfigError);
}

TEST_CASE("gig runs k-greedy on the belief pixel variance") {
    const Belief b = small_belief(4);
    const ActionSelection sel = gig_action(b, 3, 9);
    const VarianceMap var = belief_pixel_variance(b);
    ScoreMap expected;
    expected.kind = ScoreMap::Kind::kVariance;
    expected.values = var.values;
    CHECK(sel.action.columns == k_greedy_minimization(expected, 3).columns);
    CHECK(sel.action.policy_name == "gig");
    CHECK(sel.action.frame_index == 9);
    CHECK(sel.score.kind == ScoreMap::Kind::kVariance);
    CHECK(sel.uncertainty ==
          doctest::Approx(var.values.sum()).epsilon(1e-12));
    CHECK_FALSE(sel.gig_fallback);
}

TEST_CASE("point-mass beliefs have zero objective and tie-ordered columns") {
    const Belief b = point_belief(11);
    const ActionSelection gig = gig_action(b, 4, 0);
    CHECK(gig.uncertainty == 0.0);
    CHECK(gig.action.columns == std::vector<int>{0, 1, 2, 3});

    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(32, 48);
    const ActionSelection tbig = tbig_action(b, task, 4, 0);
    CHECK(tbig.uncertainty == 0.0);
    CHECK(tbig.action.columns == std::vector<int>{0, 1, 2, 3});
    CHECK(tbig.action.policy_name == "tbig");
    CHECK(tbig.n_degenerate_samples == 0);
    CHECK_FALSE(tbig.gig_fallback);
}

TEST_CASE("tbig never selects columns outside the task support") {
    const Belief b = small_belief(21, 16);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 32 * 48);
    std::mt19937_64 rng = make_rng(5);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 24; ++c) w(0, r * 48 + c) = u(rng);
    }
    const LinearTask task(w);
    const ActionSelection sel = tbig_action(b, task, 5, 0);
    for (int c : sel.action.columns) CHECK(c < 24);
    CHECK(sel.score.kind == ScoreMap::Kind::kSaliency);
    for (int r = 0; r < 32; ++r) {
        for (int c = 24; c < 48; ++c) CHECK(sel.score.values(r, c) == 0.0);
    }
}

TEST_CASE("tbig falls back to gig when every sample degenerates") {
    const Belief b = small_belief(31, 8);
    const Grid tmpl = [] {
        Grid t(5, 5, 0.0);
        for (int c = 0; c < 5; ++c) t(0, c) = 1.0;
        return t;
    }();
    // Identical anchor definitions collapse the distance at every sample.
    AnchorDistanceTask task(tmpl, tmpl, 25.0);
    const ActionSelection sel = tbig_action(b, task, 2, 5);
    CHECK(sel.gig_fallback);
    CHECK(sel.n_degenerate_samples == 8);
    CHECK(sel.action.policy_name == "tbig");
    CHECK(sel.action.frame_index == 5);
    const ActionSelection gig = gig_action(b, 2, 5);
    CHECK(sel.action.columns == gig.action.columns);
}

TEST_CASE("tbig is deterministic for a fixed belief") {
    const Belief b = small_belief(41, 10);
    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(32, 48);
    const ActionSelection a = tbig_action(b, task, 3, 2);
    const ActionSelection c = tbig_action(b, task, 3, 2);
    CHECK(a.action.columns == c.action.columns);
    CHECK(a.uncertainty == c.uncertainty);
}

TEST_CASE("restricting reference points still yields a valid selection") {
    const Belief b = small_belief(51, 12);
    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(32, 48);
    const ActionSelection sel = tbig_action(b, task, 2, 0, 4);
    CHECK(sel.action.columns.size() == 2);
    CHECK(sel.action.columns[0] != sel.action.columns[1]);
    CHECK(sel.uncertainty >= 0.0);
    CHECK_FALSE(sel.gig_fallback);
}

TEST_CASE("observing the selected columns lowers the tbig objective") {
    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(32, 48);
    double before = 0.0;
    double after = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        const Belief b = small_belief(1000 + seed, 12);
        const ImageGrid truth =
            render(sample_state(fixture::small_ranges(), 2000 + seed), 32, 48);
        const ActionSelection sel = tbig_action(b, task, 4, b.frame_index());
        before += sel.uncertainty;
        after += column_uncertainty_after(b, task, sel.action.columns, truth);
    }
    CHECK(after < before);
}

TEST_CASE("action log rows carry frame, policy, columns, and objective") {
    ActionSelection sel;
    sel.action.frame_index = 7;
    sel.action.policy_name = "tbig";
    sel.action.columns = {12, 3, 40};
    sel.uncertainty = 0.5;
    ActionSelection other;
    other.action.frame_index = 8;
    other.action.policy_name = "gig";
    other.action.columns = {1, 2, 5};
    other.uncertainty = 1.25;
    std::ostringstream os;
    const std::vector<ActionSelection> sels = {sel, other};
    write_action_log(os, sels);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "frame,policy,col_1,...,col_K,uncertainty_estimate");
    REQUIRE(std::getline(is, line));
    CHECK(line == "7,tbig,12,3,40,0.5");
    REQUIRE(std::getline(is, line));
    CHECK(line == "8,gig,1,2,5,1.25");
    CHECK_FALSE(std::getline(is, line));
}
