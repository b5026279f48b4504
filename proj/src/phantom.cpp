#include "scanline/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <stdexcept>
#include <tuple>

#include "scanline/errors.hpp"
#include "scanline/rng.hpp"

namespace scanline {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Process-noise ratios per unit process_noise_scale.
constexpr double kCenterNoise = 0.20;     // pixels
constexpr double kPhaseNoise = 0.03;      // radians
constexpr double kSemiAxisNoise = 0.10;   // pixels (roughening for statics)
constexpr double kWallNoise = 0.02;       // pixels
constexpr double kPhaseRateNoise = 0.002; // radians/frame

constexpr double kMinSemiAxis = 2.0;
constexpr double kMinWall = 1.0;

double wrap_phase(double phase) {
    double p = std::fmod(phase, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    return p;
}

double clamp(double v, double lo, double hi) {
    return std::min(std::max(v, lo), hi);
}

// Linear coverage ramp over the anti-alias band: 1 well inside, 0 outside.
double coverage(double signed_distance_px) {
    return clamp(0.5 - signed_distance_px / kEdgeSoftness, 0.0, 1.0);
}

}  // namespace

double max_row_extent(const LatentState& s) {
    return s.cavity_semi_axis_r * (1.0 + kContractionAmplitude) + s.wall_thickness;
}

double max_col_extent(const LatentState& s) {
    return s.cavity_semi_axis_c * (1.0 + kContractionAmplitude) + s.wall_thickness;
}

bool state_fits_grid(const LatentState& s, int height, int width) {
    if (s.cavity_semi_axis_r <= 0.0 || s.cavity_semi_axis_c <= 0.0 ||
        s.wall_thickness <= 0.0) {
        return false;
    }
    const double er = max_row_extent(s);
    const double ec = max_col_extent(s);
    return s.cavity_center_row - er >= 0.0 &&
           s.cavity_center_row + er <= height - 1 &&
           s.cavity_center_col - ec >= 0.0 &&
           s.cavity_center_col + ec <= width - 1;
}

StateRanges StateRanges::defaults_for_grid(int height, int width) {
    const double cr = 0.5 * (height - 1);
    const double cc = 0.5 * (width - 1);
    StateRanges r;
    r.center_row = {cr - 6.0, cr + 6.0};
    r.center_col = {cc - 10.0, cc + 10.0};
    r.semi_axis_r = {17.0, 25.0};
    r.semi_axis_c = {36.0, 48.0};
    r.wall_thickness = {5.0, 8.0};
    r.phase = {0.0, kTwoPi};
    r.phase_rate = {0.18, 0.30};
    r.drift_row = {-0.25, 0.25};
    r.drift_col = {-0.25, 0.25};
    return r;
}

LatentState sample_state(const StateRanges& ranges, std::uint64_t rng_seed) {
    auto rng = make_rng(rng_seed);
    auto draw = [&rng](const std::pair<double, double>& range) {
        std::uniform_real_distribution<double> d(range.first, range.second);
        return d(rng);
    };
    LatentState s;
    s.cavity_center_row = draw(ranges.center_row);
    s.cavity_center_col = draw(ranges.center_col);
    s.cavity_semi_axis_r = draw(ranges.semi_axis_r);
    s.cavity_semi_axis_c = draw(ranges.semi_axis_c);
    s.wall_thickness = draw(ranges.wall_thickness);
    s.phase = wrap_phase(draw(ranges.phase));
    s.phase_rate = draw(ranges.phase_rate);
    s.drift_row = draw(ranges.drift_row);
    s.drift_col = draw(ranges.drift_col);
    return s;
}

LatentState step_latent(const LatentState& state, double process_noise_scale,
                        std::uint64_t rng_seed, int height, int width) {
    LatentState s = state;
    if (process_noise_scale > 0.0) {
        auto rng = make_rng(rng_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        // fixed draw order
        const double n_phase = normal(rng);
        const double n_row = normal(rng);
        const double n_col = normal(rng);
        const double n_semi_r = normal(rng);
        const double n_semi_c = normal(rng);
        const double n_wall = normal(rng);
        const double n_rate = normal(rng);
        s.phase += process_noise_scale * kPhaseNoise * n_phase;
        s.cavity_center_row += process_noise_scale * kCenterNoise * n_row;
        s.cavity_center_col += process_noise_scale * kCenterNoise * n_col;
        s.cavity_semi_axis_r += process_noise_scale * kSemiAxisNoise * n_semi_r;
        s.cavity_semi_axis_c += process_noise_scale * kSemiAxisNoise * n_semi_c;
        s.wall_thickness += process_noise_scale * kWallNoise * n_wall;
        s.phase_rate += process_noise_scale * kPhaseRateNoise * n_rate;
    }
    s.phase = wrap_phase(s.phase + state.phase_rate);
    s.cavity_center_row += state.drift_row;
    s.cavity_center_col += state.drift_col;

    // Re-clamp geometry: sizes first, then the center against the worst-case
    // extent so the state keeps fitting the grid at every phase.
    const double grow = 1.0 + kContractionAmplitude;
    const double max_semi_r =
        ((height - 1) / 2.0 - kMinWall - 1.0) / grow;
    const double max_semi_c =
        ((width - 1) / 2.0 - kMinWall - 1.0) / grow;
    s.cavity_semi_axis_r = clamp(s.cavity_semi_axis_r, kMinSemiAxis, max_semi_r);
    s.cavity_semi_axis_c = clamp(s.cavity_semi_axis_c, kMinSemiAxis, max_semi_c);
    const double max_wall_r =
        (height - 1) / 2.0 - s.cavity_semi_axis_r * grow - 1.0;
    const double max_wall_c =
        (width - 1) / 2.0 - s.cavity_semi_axis_c * grow - 1.0;
    s.wall_thickness =
        clamp(s.wall_thickness, kMinWall, std::min(max_wall_r, max_wall_c));
    const double er = max_row_extent(s);
    const double ec = max_col_extent(s);
    s.cavity_center_row = clamp(s.cavity_center_row, er, (height - 1) - er);
    s.cavity_center_col = clamp(s.cavity_center_col, ec, (width - 1) - ec);
    return s;
}

const Grid& speckle_field(int height, int width, std::uint64_t seed) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, std::uint64_t>, Grid> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(height, width, seed);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    Grid field(height, width, 1.0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c <= (width - 1) / 2; ++c) {
            // hash-based so each pixel is independent of traversal order
            const std::uint64_t h = mix_seed(seed, static_cast<std::uint64_t>(r),
                                             static_cast<std::uint64_t>(c));
            const double u = 2.0 * (static_cast<double>(h >> 11) *
                                    (1.0 / 9007199254740992.0)) - 1.0;
            const double m = 1.0 + kSpeckleDepth * u;
            field(r, c) = m;
            field(r, width - 1 - c) = m;  // mirror fold
        }
    }
    return cache.emplace(key, std::move(field)).first->second;
}

ImageGrid render(const LatentState& state, int height, int width,
                 std::uint64_t speckle_seed) {
    if (!state_fits_grid(state, height, width)) {
        throw GeometryOutOfBounds("phantom state does not fit the grid");
    }
    const Grid& speckle = speckle_field(height, width, speckle_seed);

    const double mod = 1.0 + kContractionAmplitude * std::cos(state.phase);
    const double ar = state.cavity_semi_axis_r * mod;
    const double ac = state.cavity_semi_axis_c * mod;
    const double br = ar + state.wall_thickness;
    const double bc = ac + state.wall_thickness;
    const double cr = state.cavity_center_row;
    const double cc = state.cavity_center_col;

    // Start from speckled background, then draw only the annulus bounding box.
    ImageGrid img(height, width);
    for (int i = 0; i < img.size(); ++i) {
        img.data[i] = clamp(kBackgroundLevel * speckle.data[i], 0.0, 1.0);
    }

    const int r0 = std::max(0, static_cast<int>(std::floor(cr - br - 2.0)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(cr + br + 2.0)));
    const int c0 = std::max(0, static_cast<int>(std::floor(cc - bc - 2.0)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(cc + bc + 2.0)));

    for (int r = r0; r <= r1; ++r) {
        const double pr = r - cr;
        for (int c = c0; c <= c1; ++c) {
            const double pc = c - cc;

            // signed pixel distance to an ellipse ~ (rho - 1)/|grad rho|
            const double ur = pr / ar, uc = pc / ac;
            const double rho_in = std::sqrt(ur * ur + uc * uc);
            double d_in;
            if (rho_in > 1e-12) {
                const double g = std::sqrt(ur * ur / (ar * ar) + uc * uc / (ac * ac)) / rho_in;
                d_in = (rho_in - 1.0) / g;
            } else {
                d_in = -std::min(ar, ac);
            }
            const double vr = pr / br, vc = pc / bc;
            const double rho_out = std::sqrt(vr * vr + vc * vc);
            double d_out;
            if (rho_out > 1e-12) {
                const double g = std::sqrt(vr * vr / (br * br) + vc * vc / (bc * bc)) / rho_out;
                d_out = (rho_out - 1.0) / g;
            } else {
                d_out = -std::min(br, bc);
            }

            const double in_cavity = coverage(d_in);    // 1 inside inner ellipse
            const double in_outer = coverage(d_out);    // 1 inside outer ellipse
            const double wall_frac = std::max(0.0, in_outer - in_cavity);
            const double structure = kCavityLevel * in_cavity +
                                     kWallLevel * wall_frac +
                                     kBackgroundLevel * (1.0 - in_outer);
            img(r, c) = clamp(structure * speckle(r, c), 0.0, 1.0);
        }
    }
    return img;
}

GroundTruthMeasurement ground_truth_measurement(const LatentState& state) {
    const double mod = 1.0 + kContractionAmplitude * std::cos(state.phase);
    const double ar = state.cavity_semi_axis_r * mod;
    GroundTruthMeasurement m;
    m.anchor_a_row = state.cavity_center_row - ar;
    m.anchor_a_col = state.cavity_center_col;
    m.anchor_b_row = state.cavity_center_row + ar;
    m.anchor_b_col = state.cavity_center_col;
    m.value = 2.0 * ar;
    return m;
}

void write_sequence(std::ostream& os, const std::vector<ImageGrid>& frames) {
    if (frames.empty()) throw std::invalid_argument("empty sequence");
    const int h = frames.front().height;
    const int w = frames.front().width;
    os << h << ' ' << w << ' ' << frames.size() << '\n';
    char buf[32];
    for (const auto& frame : frames) {
        if (frame.height != h || frame.width != w) {
            throw ShapeMismatch("sequence frames differ in shape");
        }
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                std::snprintf(buf, sizeof(buf), "%.9g", frame(r, c));
                if (c) os << ' ';
                os << buf;
            }
            os << '\n';
        }
    }
}

void write_ground_truth_csv(std::ostream& os,
                            const std::vector<GroundTruthMeasurement>& signal) {
    os << "frame,value,anchor_a_row,anchor_a_col,anchor_b_row,anchor_b_col\n";
    char buf[160];
    for (std::size_t i = 0; i < signal.size(); ++i) {
        const auto& m = signal[i];
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                      m.value, m.anchor_a_row, m.anchor_a_col, m.anchor_b_row,
                      m.anchor_b_col);
        os << buf;
    }
}

}  // namespace scanline
