#pragma once

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <span>
#include <vector>

#include "scanline/grid.hpp"
#include "scanline/phantom.hpp"

namespace scanline {

// Partial acquisition of one frame: the selected columns of the true image.
struct Observation {
    int frame_index = 0;
    std::vector<int> mask;                      // sorted distinct column indices
    std::vector<std::vector<double>> columns;   // per mask entry, height values

    int column_count() const { return static_cast<int>(mask.size()); }
};

struct PriorSpec {
    int height = kDefaultHeight;
    int width = kDefaultWidth;
    StateRanges ranges = StateRanges::defaults_for_grid(kDefaultHeight, kDefaultWidth);
};

// Default particle count where callers have no reason to pick one.
constexpr int kDefaultParticles = 32;

// Weighted particle set over LatentState approximating p(X_t | y_<=t).
// Single-writer: predict/update mutate and must be serialized per belief;
// posterior_samples/pixel_variance are read-only.
class Belief {
public:
    struct Particle {
        LatentState state;
        double weight = 0.0;
    };

    // Particles drawn uniformly from the prior ranges, uniform weights.
    // Throws InvalidPrior on empty ranges, ranges that violate the state
    // invariants, or n_particles < 2.
    static Belief init(const PriorSpec& prior, int n_particles,
                       std::uint64_t rng_seed);

    // Advances every particle through step_latent with independent seeded
    // noise. Weights are unchanged, the render cache is invalidated and
    // frame_index is incremented.
    void predict(double process_noise_scale, std::uint64_t rng_seed);

    // Reweights particles with the masked Gaussian column likelihood
    //   w_i ∝ w_i * exp(-||masked render(z_i) - obs||^2 / (2 σ² H |mask|))
    // followed by systematic resampling when ESS < ess_threshold_fraction*N.
    // Returns true when all unnormalized weights underflowed to zero and the
    // belief recovered by uniform reweighting (the frame should be flagged).
    bool update(const Observation& obs, double obs_noise_sigma,
                double ess_threshold_fraction);

    const std::vector<Particle>& particles() const { return particles_; }
    int n_particles() const { return static_cast<int>(particles_.size()); }
    int frame_index() const { return frame_index_; }
    int height() const { return height_; }
    int width() const { return width_; }
    bool last_update_degenerate() const { return last_update_degenerate_; }
    bool last_update_resampled() const { return last_update_resampled_; }
    bool weights_uniform() const;

    // Renders of the current particles in particle order (cached).
    const std::vector<ImageGrid>& particle_renders() const;

    Belief(const Belief& other);
    Belief& operator=(const Belief& other);
    Belief(Belief&&) = default;
    Belief& operator=(Belief&&) = default;

private:
    Belief() = default;

    std::vector<Particle> particles_;
    int frame_index_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::uint64_t seed_ = 0;
    bool last_update_degenerate_ = false;
    bool last_update_resampled_ = false;

    mutable std::mutex cache_mutex_;
    mutable std::vector<ImageGrid> render_cache_;
    mutable bool cache_valid_ = false;

    friend std::vector<ImageGrid> posterior_samples(const Belief& belief);
    friend std::vector<ImageGrid> posterior_samples(const Belief& belief,
                                                    int n_samples);
    friend VarianceMap belief_pixel_variance(const Belief& belief);
};

// N_p posterior image samples. When weights are uniform these are the
// particle renders; otherwise N_p particles are drawn by seeded systematic
// resampling first. Deterministic for a given belief state.
std::vector<ImageGrid> posterior_samples(const Belief& belief);

// n_samples posterior image samples via seeded systematic resampling over
// the particle weights (deterministic subsample when weights are uniform).
std::vector<ImageGrid> posterior_samples(const Belief& belief, int n_samples);

// Pixel variance of the posterior image distribution over the same sample
// multiset posterior_samples(belief) would return, without copying renders.
VarianceMap belief_pixel_variance(const Belief& belief);

// Per-pixel unbiased sample variance (divide by N-1). Throws ShapeMismatch
// on inconsistent shapes, std::invalid_argument for fewer than 2 samples.
VarianceMap pixel_variance(std::span<const ImageGrid> samples);

// Systematic resampling indices for the given weights; uniform offset drawn
// from rng_seed. Exposed for reuse by posterior sampling and tests.
std::vector<int> systematic_resample_indices(const std::vector<double>& weights,
                                             int n_out, std::uint64_t rng_seed);

// Debug snapshot: one CSV row per particle with parameters and weight.
void export_belief_csv(const Belief& belief, std::ostream& os);

}  // namespace scanline
