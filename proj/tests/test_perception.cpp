#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "scanline/errors.hpp"
#include "scanline/perception.hpp"
#include "scanline/phantom.hpp"
#include "scanline/rng.hpp"

using namespace scanline;

namespace {

PriorSpec small_prior() {
    PriorSpec p;
    p.height = 32;
    p.width = 48;
    p.ranges = fixture::small_ranges();
    return p;
}

StateRanges point_ranges(const LatentState& s) {
    StateRanges r;
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

LatentState small_mid_state() {
    LatentState s;
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

PriorSpec point_prior(const LatentState& s) {
    PriorSpec p;
    p.height = 32;
    p.width = 48;
    p.ranges = point_ranges(s);
    return p;
}

// Full-frame observation built from one image.
Observation full_obs(const ImageGrid& img, int frame_index) {
    Observation obs;
    obs.frame_index = frame_index;
    for (int c = 0; c < img.width; ++c) {
        obs.mask.push_back(c);
        std::vector<double> col(img.height);
        for (int r = 0; r < img.height; ++r) col[r] = img(r, c);
        obs.columns.push_back(std::move(col));
    }
    return obs;
}

Observation masked_obs(const ImageGrid& img, std::vector<int> mask,
                       int frame_index) {
    Observation obs;
    obs.frame_index = frame_index;
    obs.mask = std::move(mask);
    for (int c : obs.mask) {
        std::vector<double> col(img.height);
        for (int r = 0; r < img.height; ++r) col[r] = img(r, c);
        obs.columns.push_back(std::move(col));
    }
    return obs;
}

double mean_variance(const Belief& belief) {
    const VarianceMap v = belief_pixel_variance(belief);
    return v.values.sum() / v.values.size();
}

}  // namespace

TEST_CASE("init draws uniform weights and respects the seed") {
    const Belief b = Belief::init(small_prior(), 32, 9);
    REQUIRE(b.n_particles() == 32);
    for (const auto& p : b.particles()) CHECK(p.weight == 1.0 / 32);
    CHECK(b.frame_index() == 0);

    const Belief again = Belief::init(small_prior(), 32, 9);
    const Belief other = Belief::init(small_prior(), 32, 10);
    bool identical = true, differs = false;
    for (int i = 0; i < 32; ++i) {
        identical = identical &&
                    b.particles()[i].state.phase ==
                        again.particles()[i].state.phase;
        differs = differs || b.particles()[i].state.phase !=
                                 other.particles()[i].state.phase;
    }
    CHECK(identical);
    CHECK(differs);
}

TEST_CASE("init validates the prior") {
    PriorSpec bad = small_prior();
    bad.ranges.semi_axis_r = {7.0, 5.0};  // lo > hi
    CHECK_THROWS_AS(Belief::init(bad, 8, 1), InvalidPrior);

    PriorSpec zero = small_prior();
    zero.ranges.wall_thickness = {0.0, 0.0};
    CHECK_THROWS_AS(Belief::init(zero, 8, 1), InvalidPrior);

    PriorSpec huge = small_prior();
    huge.ranges.semi_axis_c = {40.0, 60.0};  // cannot fit a 48-wide grid
    CHECK_THROWS_AS(Belief::init(huge, 8, 1), InvalidPrior);

    CHECK_THROWS_AS(Belief::init(small_prior(), 1, 1), InvalidPrior);
}

TEST_CASE("point prior collapses to identical particles and zero variance") {
    const Belief b = Belief::init(point_prior(small_mid_state()), 8, 3);
    const std::vector<ImageGrid> samples = posterior_samples(b);
    REQUIRE(samples.size() == 8);
    for (const auto& s : samples) {
        CHECK(std::memcmp(s.data.data(), samples[0].data.data(),
                          s.data.size() * sizeof(double)) == 0);
    }
    const VarianceMap v = pixel_variance(samples);
    double worst = 0.0;
    for (double x : v.values.data) worst = std::max(worst, std::abs(x));
    CHECK(worst == 0.0);
}

TEST_CASE("predict with static dynamics and zero noise only advances time") {
    LatentState s = small_mid_state();
    s.phase_rate = 0.0;
    s.drift_row = 0.0;
    s.drift_col = 0.0;
    Belief b = Belief::init(point_prior(s), 4, 3);
    const LatentState before = b.particles()[0].state;
    b.predict(0.0, 77);
    CHECK(b.frame_index() == 1);
    const LatentState after = b.particles()[0].state;
    CHECK(after.phase == before.phase);
    CHECK(after.cavity_center_row == before.cavity_center_row);
    CHECK(after.cavity_semi_axis_r == before.cavity_semi_axis_r);
    for (const auto& p : b.particles()) CHECK(p.weight == 0.25);
}

TEST_CASE("predict preserves weights even when they are skewed") {
    Belief b = Belief::init(small_prior(), 8, 5);
    const ImageGrid target = render(small_mid_state(), 32, 48);
    b.update(full_obs(target, 0), 0.25, 0.0);  // never resample
    std::vector<double> before;
    for (const auto& p : b.particles()) before.push_back(p.weight);
    b.predict(1.0, 6);
    for (int i = 0; i < 8; ++i) {
        CHECK(b.particles()[i].weight == before[i]);
    }
}

TEST_CASE("predict noise does not shrink mean pixel variance") {
    double delta_sum = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Belief b = Belief::init(small_prior(), 16, 100 + seed);
        const double before = mean_variance(b);
        b.predict(1.0, 200 + seed);
        delta_sum += mean_variance(b) - before;
    }
    CHECK(delta_sum / 20.0 >= 0.0);
}

TEST_CASE("update weight ratio matches the stated likelihood") {
    Belief b = Belief::init(small_prior(), 2, 21);
    const std::vector<ImageGrid> renders = b.particle_renders();
    const std::vector<int> mask = {10, 20, 30};
    const Observation obs = masked_obs(renders[0], mask, 0);

    double err = 0.0;  // squared column error of the non-matching particle
    for (int c : mask) {
        for (int r = 0; r < 32; ++r) {
            const double d = renders[1](r, c) - renders[0](r, c);
            err += d * d;
        }
    }
    REQUIRE(err > 0.0);

    const double sigma = 0.2;
    b.update(obs, sigma, 0.0);
    const double w0 = b.particles()[0].weight;
    const double w1 = b.particles()[1].weight;
    const double expected_ratio =
        std::exp(err / (2.0 * sigma * sigma * 32.0 * mask.size()));
    CHECK(w0 / w1 == doctest::Approx(expected_ratio).epsilon(1e-9));
    CHECK(w0 + w1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a particle matching the observation takes all the weight") {
    Belief b = Belief::init(small_prior(), 2, 33);
    const std::vector<ImageGrid> renders = b.particle_renders();
    const Observation obs = full_obs(renders[0], 0);
    b.update(obs, 0.001, 0.0);  // tiny noise, no resampling
    CHECK(b.particles()[0].weight == 1.0);
    CHECK(b.particles()[1].weight == 0.0);
    CHECK(!b.last_update_degenerate());
}

TEST_CASE("update rejects malformed observations") {
    Belief b = Belief::init(small_prior(), 4, 1);
    Observation empty;
    empty.frame_index = 0;
    CHECK_THROWS_AS(b.update(empty, 0.1, 0.5), ShapeMismatch);

    const ImageGrid img = render(small_mid_state(), 32, 48);
    Observation bad_col = masked_obs(img, {5, 3}, 0);  // unsorted
    CHECK_THROWS_AS(b.update(bad_col, 0.1, 0.5), ShapeMismatch);

    Observation out_of_range = masked_obs(img, {5}, 0);
    out_of_range.mask[0] = 48;
    CHECK_THROWS_AS(b.update(out_of_range, 0.1, 0.5), ShapeMismatch);

    Observation short_col = masked_obs(img, {5}, 0);
    short_col.columns[0].pop_back();
    CHECK_THROWS_AS(b.update(short_col, 0.1, 0.5), ShapeMismatch);

    Observation stale = masked_obs(img, {5}, 3);  // belief is at frame 0
    CHECK_THROWS_AS(b.update(stale, 0.1, 0.5), std::invalid_argument);
}

TEST_CASE("update resamples when the effective sample size drops") {
    Belief b = Belief::init(small_prior(), 2, 21);
    const std::vector<ImageGrid> renders = b.particle_renders();
    const LatentState s0 = b.particles()[0].state;
    const LatentState s1 = b.particles()[1].state;
    const Observation obs = masked_obs(renders[0], {10, 20, 30}, 0);
    b.update(obs, 0.05, 0.9);  // threshold 1.8 forces a resample here
    CHECK(b.last_update_resampled());
    CHECK(b.weights_uniform());
    for (const auto& p : b.particles()) {
        CHECK(p.weight == 0.5);
        const bool from_original = p.state.phase == s0.phase ||
                                   p.state.phase == s1.phase;
        CHECK(from_original);
    }
}

TEST_CASE("all-underflow likelihood recovers with uniform weights") {
    Belief b = Belief::init(small_prior(), 4, 50);
    ImageGrid far(32, 48, 0.0);  // nothing like any render
    for (int r = 0; r < 32; ++r) {
        for (int c = 0; c < 48; ++c) far(r, c) = (r + c) % 2 ? 1.0 : 0.0;
    }
    const bool degenerate = b.update(full_obs(far, 0), 1e-6, 0.0);
    CHECK(degenerate);
    CHECK(b.last_update_degenerate());
    for (const auto& p : b.particles()) CHECK(p.weight == 0.25);
}

TEST_CASE("posterior mass concentrates on the matching particle") {
    Belief b = Belief::init(small_prior(), 8, 60);
    const std::vector<ImageGrid> renders = b.particle_renders();
    const Observation obs = full_obs(renders[3], 0);
    b.update(obs, 0.01, 0.0);
    CHECK(b.particles()[3].weight > 0.99);
}

TEST_CASE("observing columns shrinks their variance on average") {
    const std::vector<int> mask = {5, 15, 25, 35};
    double before_sum = 0.0, after_sum = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        Belief b = Belief::init(small_prior(), 16, 300 + seed);
        auto masked_variance = [&](const Belief& belief) {
            const VarianceMap v = belief_pixel_variance(belief);
            double total = 0.0;
            for (int c : mask) {
                for (int r = 0; r < 32; ++r) total += v.values(r, c);
            }
            return total;
        };
        before_sum += masked_variance(b);
        const ImageGrid target = render(
            sample_state(fixture::small_ranges(), 900 + seed), 32, 48);
        b.update(masked_obs(target, mask, 0), 0.15, 0.5);
        after_sum += masked_variance(b);
    }
    CHECK(after_sum < before_sum);
}

TEST_CASE("pixel variance matches the two-pass oracle") {
    std::mt19937_64 rng = make_rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ImageGrid> samples(7, ImageGrid(5, 9));
    for (auto& s : samples) {
        for (double& v : s.data) v = u(rng);
    }
    const VarianceMap got = pixel_variance(samples);
    const std::vector<double> expected = oracle::two_pass_variance(samples);
    for (std::size_t p = 0; p < expected.size(); ++p) {
        REQUIRE(std::abs(got.values.data[p] - expected[p]) <= 1e-12);
    }
}

TEST_CASE("pixel variance handles the stated edge cases") {
    std::vector<ImageGrid> same(3, ImageGrid(4, 4, 0.25));
    const VarianceMap zeros = pixel_variance(same);
    for (double v : zeros.values.data) CHECK(v == 0.0);

    std::vector<ImageGrid> pair(2, ImageGrid(4, 4, 0.25));
    pair[1](2, 3) += 0.3;
    const VarianceMap v = pixel_variance(pair);
    CHECK(v.values(2, 3) == doctest::Approx(0.3 * 0.3 / 2.0).epsilon(1e-12));
    CHECK(v.values(0, 0) == 0.0);

    std::vector<ImageGrid> one(1, ImageGrid(4, 4));
    CHECK_THROWS_AS(pixel_variance(one), std::invalid_argument);

    std::vector<ImageGrid> mixed = {ImageGrid(4, 4), ImageGrid(4, 5)};
    CHECK_THROWS_AS(pixel_variance(mixed), ShapeMismatch);
}

TEST_CASE("posterior samples always number N_p") {
    Belief b = Belief::init(small_prior(), 6, 70);
    CHECK(posterior_samples(b).size() == 6);
    const ImageGrid target = render(small_mid_state(), 32, 48);
    b.update(full_obs(target, 0), 0.2, 0.0);  // skewed weights, no resample
    CHECK(posterior_samples(b).size() == 6);
    CHECK(posterior_samples(b, 3).size() == 3);
    CHECK(posterior_samples(b, 17).size() == 17);
}

TEST_CASE("weighted sample mean converges as the sample count grows") {
    Belief b = Belief::init(small_prior(), 16, 80);
    const ImageGrid target = render(small_mid_state(), 32, 48);
    b.update(full_obs(target, 0), 0.3, 0.0);  // non-uniform weights

    ImageGrid weighted_mean(32, 48, 0.0);
    const std::vector<ImageGrid>& renders = b.particle_renders();
    for (int i = 0; i < 16; ++i) {
        const double w = b.particles()[i].weight;
        for (int p = 0; p < weighted_mean.size(); ++p) {
            weighted_mean.data[p] += w * renders[i].data[p];
        }
    }
    auto max_gap = [&](int n_samples) {
        const std::vector<ImageGrid> samples = posterior_samples(b, n_samples);
        ImageGrid mean(32, 48, 0.0);
        for (const auto& s : samples) {
            for (int p = 0; p < mean.size(); ++p) mean.data[p] += s.data[p];
        }
        double worst = 0.0;
        for (int p = 0; p < mean.size(); ++p) {
            worst = std::max(
                worst, std::abs(mean.data[p] / n_samples -
                                weighted_mean.data[p]));
        }
        return worst;
    };
    CHECK(max_gap(512) < max_gap(8));
}

TEST_CASE("belief pixel variance equals the variance of posterior samples") {
    Belief b = Belief::init(small_prior(), 12, 90);
    const ImageGrid target = render(small_mid_state(), 32, 48);
    b.update(full_obs(target, 0), 0.25, 0.0);
    const VarianceMap direct = belief_pixel_variance(b);
    const VarianceMap via_samples = pixel_variance(posterior_samples(b));
    for (int p = 0; p < direct.values.size(); ++p) {
        REQUIRE(std::abs(direct.values.data[p] -
                         via_samples.values.data[p]) <= 1e-12);
    }
}

TEST_CASE("systematic resampling is deterministic and proportional") {
    const std::vector<int> idx =
        systematic_resample_indices({0.5, 0.5}, 4, 11);
    REQUIRE(idx.size() == 4);
    CHECK(idx == std::vector<int>{0, 0, 1, 1});

    const std::vector<int> again =
        systematic_resample_indices({0.5, 0.5}, 4, 11);
    CHECK(idx == again);

    const std::vector<int> heavy =
        systematic_resample_indices({0.9, 0.1}, 10, 12);
    int zeros = 0;
    for (int i : heavy) zeros += i == 0 ? 1 : 0;
    CHECK(zeros == 9);

    CHECK_THROWS_AS(systematic_resample_indices({}, 4, 1),
                    std::invalid_argument);
}

TEST_CASE("filter converges to the truth under full sampling") {
    const StateRanges ranges = fixture::small_ranges();
    LatentState truth = sample_state(ranges, 1234);
    PriorSpec prior = small_prior();
    Belief b = Belief::init(prior, 64, 4321);
    for (int t = 0; t < 10; ++t) {
        if (t > 0) {
            truth = step_latent(truth, 1.0, mix_seed(99, seed_tag::kTruthStep, t),
                                32, 48);
            b.predict(1.25, mix_seed(77, seed_tag::kFilterSeq, t));
        }
        const ImageGrid img = render(truth, 32, 48);
        b.update(full_obs(img, t), 0.05, 0.5);
    }
    const double target = ground_truth_measurement(truth).value;
    double estimate = 0.0;
    for (const auto& p : b.particles()) {
        estimate += p.weight * ground_truth_measurement(p.state).value;
    }
    CHECK(std::abs(estimate - target) <= 2.0);
}

TEST_CASE("update and predict sequences are reproducible") {
    auto run = [&]() {
        Belief b = Belief::init(small_prior(), 8, 5150);
        const ImageGrid target = render(small_mid_state(), 32, 48);
        b.update(masked_obs(target, {3, 9, 40}, 0), 0.1, 0.5);
        b.predict(1.0, 617);
        b.update(masked_obs(target, {12, 22}, 1), 0.1, 0.5);
        std::vector<double> sig;
        for (const auto& p : b.particles()) {
            sig.push_back(p.weight);
            sig.push_back(p.state.phase);
            sig.push_back(p.state.cavity_center_row);
        }
        return sig;
    };
    CHECK(run() == run());
}

TEST_CASE("copies do not share mutable state") {
    Belief a = Belief::init(small_prior(), 4, 8);
    Belief b = a;
    b.predict(1.0, 9);
    CHECK(a.frame_index() == 0);
    CHECK(b.frame_index() == 1);
    CHECK(a.particles()[0].state.phase != b.particles()[0].state.phase);
}

TEST_CASE("belief CSV export carries one row per particle") {
    const Belief b = Belief::init(small_prior(), 5, 2);
    std::ostringstream os;
    export_belief_csv(b, os);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line.rfind("index,weight,", 0) == 0);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 5);
}
