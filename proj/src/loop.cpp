#include "scanline/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "scanline/errors.hpp"
#include "scanline/rng.hpp"

namespace scanline {

void LoopConfig::validate() const {
    if (height < 8 || width < 8) throw ConfigError("grid must be at least 8x8");
    if (n_frames < 1) throw ConfigError("n_frames must be >= 1");
    if (budget_k < 1 || budget_k > width) {
        throw ConfigError("budget_k must be in [1, width=" + std::to_string(width) + "]");
    }
    if (n_particles < 2) throw ConfigError("n_particles must be >= 2");
    if (!(obs_noise_sigma > 0.0)) throw ConfigError("obs_noise_sigma must be > 0");
    if (process_noise_scale < 0.0) throw ConfigError("process_noise_scale must be >= 0");
    if (filter_noise_inflation < 0.0) throw ConfigError("filter_noise_inflation must be >= 0");
    if (init_full_frames < 0) throw ConfigError("init_full_frames must be >= 0");
    if (estimate_samples == 0 || estimate_samples < -1) {
        throw ConfigError("estimate_samples must be positive or -1");
    }
    if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0)) {
        throw ConfigError("ess_threshold must be in [0, 1]");
    }
    policy_from_name(policy);  // throws ConfigError on unknown labels
}

Observation acquire(const ImageGrid& truth, const LineBudgetAction& action) {
    Observation obs;
    obs.frame_index = action.frame_index;
    obs.mask = action.columns;
    std::sort(obs.mask.begin(), obs.mask.end());
    for (std::size_t i = 0; i < obs.mask.size(); ++i) {
        if (obs.mask[i] < 0 || obs.mask[i] >= truth.width) {
            throw ShapeMismatch("action column out of range");
        }
        if (i > 0 && obs.mask[i] == obs.mask[i - 1]) {
            throw ShapeMismatch("action selects a column twice");
        }
    }
    obs.columns.resize(obs.mask.size());
    for (std::size_t i = 0; i < obs.mask.size(); ++i) {
        std::vector<double>& col = obs.columns[i];
        col.resize(truth.height);
        const int c = obs.mask[i];
        for (int r = 0; r < truth.height; ++r) col[r] = truth(r, c);
    }
    return obs;
}

MeasurementEstimate estimate_measurement(const Belief& belief, const Task& task,
                                         int n_samples) {
    int n = n_samples;
    if (n < 0 || n > belief.n_particles()) n = belief.n_particles();
    const std::vector<ImageGrid> samples = posterior_samples(belief, n);

    MeasurementEstimate out;
    out.n_samples = n;
    std::vector<double> values;
    values.reserve(samples.size());
    std::vector<Grid> heat_sum;
    bool have_heatmaps = true;
    for (const ImageGrid& s : samples) {
        TaskOutput t = task.evaluate(s);
        values.push_back(t.values(0));
        if (t.per_anchor_heatmaps.empty()) {
            have_heatmaps = false;
            continue;
        }
        if (heat_sum.empty()) {
            heat_sum = std::move(t.per_anchor_heatmaps);
        } else {
            for (std::size_t a = 0; a < heat_sum.size(); ++a) {
                const Grid& h = t.per_anchor_heatmaps[a];
                for (int i = 0; i < h.size(); ++i) heat_sum[a].data[i] += h.data[i];
            }
        }
    }

    if (have_heatmaps && heat_sum.size() >= 2) {
        const auto a = soft_argmax(heat_sum[0]);
        const auto b = soft_argmax(heat_sum[1]);
        const double dr = a.first - b.first;
        const double dc = a.second - b.second;
        out.value = std::sqrt(dr * dr + dc * dc);
    } else {
        double mean = 0.0;
        for (double v : values) mean += v;
        out.value = mean / values.size();
    }

    if (values.size() >= 2) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= values.size();
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        out.std_dev = std::sqrt(ss / (values.size() - 1.0));
    }
    return out;
}

namespace {

LineBudgetAction full_action(int width, int frame_index, const std::string& policy) {
    LineBudgetAction a;
    a.columns.resize(width);
    for (int c = 0; c < width; ++c) a.columns[c] = c;
    a.frame_index = frame_index;
    a.policy_name = policy;
    return a;
}

}  // namespace

EpisodeResult run_episode(const LoopConfig& config, std::uint64_t phantom_seed) {
    config.validate();
    const int h = config.height;
    const int w = config.width;
    const PolicyKind kind = policy_from_name(config.policy);

    PriorSpec prior;
    prior.height = h;
    prior.width = w;
    prior.ranges = StateRanges::defaults_for_grid(h, w);

    LatentState truth =
        sample_state(prior.ranges, mix_seed(phantom_seed, seed_tag::kTruthInit));
    Belief belief = Belief::init(prior, config.n_particles, config.rng_seed);
    const AnchorDistanceTask task = AnchorDistanceTask::default_for_grid(h, w);

    EpisodeResult result;
    result.records.reserve(config.n_frames);
    result.selections.reserve(config.n_frames);
    result.truth_hash = kFnvOffset;

    LineBudgetAction next_action;  // chosen at t-1, consumed at t
    bool have_next_action = false;

    for (int t = 0; t < config.n_frames; ++t) {
        const auto frame_start = std::chrono::steady_clock::now();
        if (t > 0) {
            truth = step_latent(truth, config.process_noise_scale,
                                mix_seed(phantom_seed, seed_tag::kTruthStep, t), h, w);
        }
        const ImageGrid truth_img = render(truth, h, w);
        result.truth_hash = fnv1a64(truth_img.data.data(),
                                    truth_img.data.size() * sizeof(double),
                                    result.truth_hash);

        FrameRecord rec;
        rec.frame_index = t;
        if (t < config.init_full_frames || !have_next_action) {
            rec.action = full_action(w, t, config.policy);
        } else {
            rec.action = next_action;
            if (rec.action.frame_index != t) {
                throw std::logic_error("actuation latency violated");
            }
        }

        const Observation obs = acquire(truth_img, rec.action);
        rec.degenerate_likelihood =
            belief.update(obs, config.obs_noise_sigma, config.ess_threshold);

        rec.target_measurement = task.evaluate(truth_img).values(0);
        const MeasurementEstimate est =
            estimate_measurement(belief, task, config.estimate_samples);
        rec.estimated_measurement = est.value;
        rec.estimate_std = est.std_dev;

        // Selection for frame t+1 from the post-update belief at t. Run for
        // every frame so the logged uncertainty series covers the episode.
        ActionSelection sel;
        switch (kind) {
            case PolicyKind::kTbig:
                sel = tbig_action(belief, task, config.budget_k, t + 1,
                                  config.estimate_samples, config.gram_mode);
                break;
            case PolicyKind::kGig:
                sel = gig_action(belief, config.budget_k, t + 1);
                break;
            case PolicyKind::kUniformRotating:
            case PolicyKind::kRandom:
                sel.action = baseline_action(kind, w, config.budget_k, t + 1,
                                             config.rng_seed);
                break;
        }
        rec.uncertainty_estimate = sel.uncertainty;
        if (t + 1 >= config.init_full_frames) {
            next_action = sel.action;
            have_next_action = true;
        }
        if (!config.keep_score_maps) sel.score.values = Grid();
        result.selections.push_back(std::move(sel));

        if (t + 1 < config.n_frames) {
            belief.predict(config.process_noise_scale * config.filter_noise_inflation,
                           mix_seed(config.rng_seed, seed_tag::kFilterSeq, t));
        }

        if (config.record_timings) {
            const auto frame_end = std::chrono::steady_clock::now();
            rec.wall_time_ms =
                std::chrono::duration<double, std::milli>(frame_end - frame_start)
                    .count();
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

void write_frames_csv(std::ostream& os, const std::vector<FrameRecord>& records) {
    os << "frame,policy,k,target,estimate,std,uncertainty,col_1..col_K,wall_ms\n";
    char buf[160];
    for (const FrameRecord& r : records) {
        os << r.frame_index << ',' << r.action.policy_name << ','
           << r.action.columns.size();
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%.17g,%.17g",
                      r.target_measurement, r.estimated_measurement,
                      r.estimate_std, r.uncertainty_estimate);
        os << buf;
        for (int c : r.action.columns) os << ',' << c;
        std::snprintf(buf, sizeof(buf), ",%.17g\n", r.wall_time_ms);
        os << buf;
    }
}

}  // namespace scanline
