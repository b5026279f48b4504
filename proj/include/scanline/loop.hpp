#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "scanline/perception.hpp"
#include "scanline/phantom.hpp"
#include "scanline/policy.hpp"
#include "scanline/task.hpp"

namespace scanline {

struct LoopConfig {
    int height = kDefaultHeight;
    int width = kDefaultWidth;
    int n_frames = 100;
    int budget_k = 5;
    int n_particles = 160;
    std::string policy = "tbig";
    double obs_noise_sigma = 0.08;
    double process_noise_scale = 1.0;
    // The filter predicts with inflated process noise so the particle cloud
    // keeps covering the truth between resamples.
    double filter_noise_inflation = 1.25;
    std::uint64_t rng_seed = 1;
    int init_full_frames = 3;
    // Posterior samples used for measurement estimation and (tbig) Jacobian
    // reference points; -1 uses every particle.
    int estimate_samples = 32;
    double ess_threshold = 0.5;
    GramAveraging gram_mode = GramAveraging::kPerSampleGram;
    // wall_time_ms is only measured when set; otherwise written as 0 so that
    // repeated runs produce byte-identical records.
    bool record_timings = false;
    // Retain per-frame score maps in the episode result (for saliency dumps).
    bool keep_score_maps = false;

    void validate() const;  // throws ConfigError
};

struct FrameRecord {
    int frame_index = 0;
    LineBudgetAction action;   // columns acquired at this frame
    double target_measurement = 0.0;
    double estimated_measurement = 0.0;
    double estimate_std = 0.0;
    double uncertainty_estimate = 0.0;
    double wall_time_ms = 0.0;
    bool degenerate_likelihood = false;
};

struct EpisodeResult {
    std::vector<FrameRecord> records;
    // Policy decision made at each frame (for the columns of frame t+1).
    std::vector<ActionSelection> selections;
    std::uint64_t truth_hash = 0;  // FNV over all ground-truth frame bytes
};

struct MeasurementEstimate {
    double value = 0.0;
    double std_dev = 0.0;
    int n_samples = 0;
};

// Copies the selected columns of the true frame, bit-exact, mask sorted.
Observation acquire(const ImageGrid& truth, const LineBudgetAction& action);

// Measurement from the per-anchor average of the posterior-sample heatmaps
// (average, then soft-argmax, then distance); std over the per-sample
// measurement values with N-1 normalization. Tasks without heatmaps fall
// back to the mean of per-sample values. n_samples = -1 uses every particle.
MeasurementEstimate estimate_measurement(const Belief& belief, const Task& task,
                                         int n_samples = -1);

// One perception-action episode: frames 0..init_full_frames-1 are acquired
// fully sampled; afterwards frame t acquires the columns selected at t-1.
// Per frame: update at t, estimate at t, select for t+1, predict to t+1.
// Deterministic given (config.rng_seed, phantom_seed).
EpisodeResult run_episode(const LoopConfig& config, std::uint64_t phantom_seed);

// CSV rows `frame,policy,k,target,estimate,std,uncertainty,col_1..col_K,wall_ms`
// (the header names the column block with the literal `col_1..col_K` token;
// each row carries its own k columns).
void write_frames_csv(std::ostream& os, const std::vector<FrameRecord>& records);

}  // namespace scanline
