#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "scanline/grid.hpp"

namespace scanline {

// Parametric state of the dynamic phantom: a bright elliptical annulus
// (the "walls") around a dark cavity, breathing with a cardiac-like phase
// and drifting across the grid. The inner vertical diameter is the
// downstream measurement target.
struct LatentState {
    double cavity_center_row = 0.0;  // continuous pixels
    double cavity_center_col = 0.0;
    double cavity_semi_axis_r = 0.0;  // pixels, > 0
    double cavity_semi_axis_c = 0.0;  // pixels, > 0
    double wall_thickness = 0.0;      // pixels, > 0
    double phase = 0.0;               // radians in [0, 2*pi)
    double phase_rate = 0.0;          // radians per frame
    double drift_row = 0.0;           // pixels per frame
    double drift_col = 0.0;
};

struct GroundTruthMeasurement {
    double value = 0.0;  // Euclidean distance between the anchors, pixels
    double anchor_a_row = 0.0, anchor_a_col = 0.0;  // top inner-wall point
    double anchor_b_row = 0.0, anchor_b_col = 0.0;  // bottom inner-wall point
};

// Fractional contraction of both semi-axes: effective_axis = axis*(1 + A*cos(phase)).
constexpr double kContractionAmplitude = 0.18;

constexpr int kDefaultHeight = 128;
constexpr int kDefaultWidth = 256;  // one scan line per image column
constexpr std::uint64_t kDefaultSpeckleSeed = 0x5eedULL;

// Render palette. Wall pixels stay above 0.5 and everything else below it
// for any speckle draw, so edge scans have an unambiguous threshold.
constexpr double kBackgroundLevel = 0.15;
constexpr double kWallLevel = 0.85;
constexpr double kCavityLevel = 0.05;
constexpr double kSpeckleDepth = 0.15;   // multiplicative, 1 +/- depth
constexpr double kEdgeSoftness = 1.0;    // anti-alias ramp width, pixels

// Worst-case half-extent of the rendered structure over all phases.
double max_row_extent(const LatentState& s);
double max_col_extent(const LatentState& s);

// True when the geometry fits inside [0,H)x[0,W) at every phase.
bool state_fits_grid(const LatentState& s, int height, int width);

// Per-field uniform ranges used both for sampling ground-truth states and
// as the particle-filter prior.
struct StateRanges {
    std::pair<double, double> center_row, center_col;
    std::pair<double, double> semi_axis_r, semi_axis_c;
    std::pair<double, double> wall_thickness;
    std::pair<double, double> phase, phase_rate;
    std::pair<double, double> drift_row, drift_col;

    static StateRanges defaults_for_grid(int height, int width);
};

LatentState sample_state(const StateRanges& ranges, std::uint64_t rng_seed);

// Advances phase by phase_rate and center by drift, plus seeded Gaussian
// noise scaled by process_noise_scale; static geometry parameters receive
// small roughening noise at the same scale. The result is re-clamped so the
// invariants hold. Pure given (state, scale, seed).
LatentState step_latent(const LatentState& state, double process_noise_scale,
                        std::uint64_t rng_seed, int height = kDefaultHeight,
                        int width = kDefaultWidth);

// Fixed multiplicative speckle field, mirrored about the vertical midline
// so that centered states render left-right symmetric.
const Grid& speckle_field(int height, int width,
                          std::uint64_t seed = kDefaultSpeckleSeed);

// Renders the annulus with anti-aliased edges over the speckle background.
// Pure function of its arguments; throws GeometryOutOfBounds when the state
// does not fit the grid.
ImageGrid render(const LatentState& state, int height = kDefaultHeight,
                 int width = kDefaultWidth,
                 std::uint64_t speckle_seed = kDefaultSpeckleSeed);

// Inner cavity diameter along the vertical axis through the cavity center,
// consistent with the rendered geometry at the state's phase.
GroundTruthMeasurement ground_truth_measurement(const LatentState& state);

// Sequence export: header "height width n_frames", then each frame as H
// lines of W ASCII floats.
void write_sequence(std::ostream& os, const std::vector<ImageGrid>& frames);
void write_ground_truth_csv(std::ostream& os,
                            const std::vector<GroundTruthMeasurement>& signal);

}  // namespace scanline
