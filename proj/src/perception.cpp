#include "scanline/perception.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "scanline/errors.hpp"
#include "scanline/rng.hpp"

namespace scanline {
namespace {

void validate_range(const std::pair<double, double>& r, const char* name) {
    if (!(r.first <= r.second)) {
        throw InvalidPrior(std::string("empty prior range for ") + name);
    }
}

// The prior must only contain states whose annulus fits the grid; the
// worst case is the largest extent at the most eccentric center.
void validate_prior(const PriorSpec& prior) {
    const StateRanges& g = prior.ranges;
    validate_range(g.center_row, "center_row");
    validate_range(g.center_col, "center_col");
    validate_range(g.semi_axis_r, "semi_axis_r");
    validate_range(g.semi_axis_c, "semi_axis_c");
    validate_range(g.wall_thickness, "wall_thickness");
    validate_range(g.phase, "phase");
    validate_range(g.phase_rate, "phase_rate");
    validate_range(g.drift_row, "drift_row");
    validate_range(g.drift_col, "drift_col");
    if (g.semi_axis_r.first <= 0.0 || g.semi_axis_c.first <= 0.0 ||
        g.wall_thickness.first <= 0.0) {
        throw InvalidPrior("semi axes and wall thickness must be positive");
    }
    LatentState widest;
    widest.cavity_semi_axis_r = g.semi_axis_r.second;
    widest.cavity_semi_axis_c = g.semi_axis_c.second;
    widest.wall_thickness = g.wall_thickness.second;
    const double er = max_row_extent(widest);
    const double ec = max_col_extent(widest);
    if (g.center_row.first - er < 0.0 ||
        g.center_row.second + er > prior.height - 1.0 ||
        g.center_col.first - ec < 0.0 ||
        g.center_col.second + ec > prior.width - 1.0) {
        throw InvalidPrior("prior ranges allow annuli outside the grid");
    }
}

}  // namespace

Belief Belief::init(const PriorSpec& prior, int n_particles, std::uint64_t rng_seed) {
    if (n_particles < 2) throw InvalidPrior("need at least 2 particles");
    if (prior.height < 8 || prior.width < 8) throw InvalidPrior("grid too small");
    validate_prior(prior);

    Belief b;
    b.height_ = prior.height;
    b.width_ = prior.width;
    b.seed_ = rng_seed;
    b.particles_.resize(n_particles);
    const double w0 = 1.0 / n_particles;
    for (int i = 0; i < n_particles; ++i) {
        b.particles_[i].state =
            sample_state(prior.ranges, mix_seed(rng_seed, seed_tag::kBeliefInit, i));
        b.particles_[i].weight = w0;
    }
    return b;
}

Belief::Belief(const Belief& other) {
    std::lock_guard<std::mutex> lock(other.cache_mutex_);
    particles_ = other.particles_;
    frame_index_ = other.frame_index_;
    height_ = other.height_;
    width_ = other.width_;
    seed_ = other.seed_;
    last_update_degenerate_ = other.last_update_degenerate_;
    last_update_resampled_ = other.last_update_resampled_;
    render_cache_ = other.render_cache_;
    cache_valid_ = other.cache_valid_;
}

Belief& Belief::operator=(const Belief& other) {
    if (this == &other) return *this;
    Belief copy(other);
    *this = std::move(copy);
    return *this;
}

void Belief::predict(double process_noise_scale, std::uint64_t rng_seed) {
    const int n = n_particles();
    for (int i = 0; i < n; ++i) {
        particles_[i].state =
            step_latent(particles_[i].state, process_noise_scale,
                        mix_seed(rng_seed, seed_tag::kPredict, frame_index_, i),
                        height_, width_);
    }
    ++frame_index_;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    cache_valid_ = false;
    render_cache_.clear();
}

const std::vector<ImageGrid>& Belief::particle_renders() const {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    if (!cache_valid_) {
        render_cache_.clear();
        render_cache_.reserve(particles_.size());
        for (const Particle& p : particles_) {
            render_cache_.push_back(render(p.state, height_, width_));
        }
        cache_valid_ = true;
    }
    return render_cache_;
}

bool Belief::update(const Observation& obs, double obs_noise_sigma,
                    double ess_threshold_fraction) {
    last_update_degenerate_ = false;
    last_update_resampled_ = false;
    const int m = obs.column_count();
    if (m == 0) throw ShapeMismatch("observation mask must be non-empty");
    if (static_cast<int>(obs.columns.size()) != m) {
        throw ShapeMismatch("observation mask/columns size mismatch");
    }
    for (int j = 0; j < m; ++j) {
        if (obs.mask[j] < 0 || obs.mask[j] >= width_) {
            throw ShapeMismatch("observation column index out of range");
        }
        if (static_cast<int>(obs.columns[j].size()) != height_) {
            throw ShapeMismatch("observation column height mismatch");
        }
        if (j > 0 && obs.mask[j] <= obs.mask[j - 1]) {
            throw ShapeMismatch("observation mask must be sorted and distinct");
        }
    }
    if (!(obs_noise_sigma > 0.0)) {
        throw std::invalid_argument("obs_noise_sigma must be positive");
    }
    if (obs.frame_index != frame_index_) {
        throw std::invalid_argument("observation frame does not match belief frame");
    }

    const std::vector<ImageGrid>& renders = particle_renders();
    const int n = n_particles();
    const double inv_two_var = 1.0 / (2.0 * obs_noise_sigma * obs_noise_sigma *
                                      static_cast<double>(height_) * m);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const ImageGrid& img = renders[i];
        double err = 0.0;
        for (int j = 0; j < m; ++j) {
            const int c = obs.mask[j];
            const double* col = obs.columns[j].data();
            for (int r = 0; r < height_; ++r) {
                const double d = img(r, c) - col[r];
                err += d * d;
            }
        }
        particles_[i].weight *= std::exp(-err * inv_two_var);
        total += particles_[i].weight;
    }

    if (!(total > 0.0) || !std::isfinite(total)) {
        // Every weight underflowed: no particle explains the data. Reset to
        // uniform so the filter keeps running and flag the frame.
        const double w0 = 1.0 / n;
        for (Particle& p : particles_) p.weight = w0;
        last_update_degenerate_ = true;
        return true;
    }

    double ess_denom = 0.0;
    for (Particle& p : particles_) {
        p.weight /= total;
        ess_denom += p.weight * p.weight;
    }
    const double ess = 1.0 / ess_denom;
    if (ess < ess_threshold_fraction * n) {
        std::vector<double> weights(n);
        for (int i = 0; i < n; ++i) weights[i] = particles_[i].weight;
        const std::vector<int> idx = systematic_resample_indices(
            weights, n, mix_seed(seed_, seed_tag::kResample, frame_index_));
        std::vector<Particle> resampled(n);
        const double w0 = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            resampled[i].state = particles_[idx[i]].state;
            resampled[i].weight = w0;
        }
        particles_ = std::move(resampled);
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (cache_valid_) {
            // Renders only depend on states, so permute instead of re-render.
            std::vector<ImageGrid> gathered(n);
            for (int i = 0; i < n; ++i) gathered[i] = render_cache_[idx[i]];
            render_cache_ = std::move(gathered);
        }
        last_update_resampled_ = true;
    }
    return false;
}

bool Belief::weights_uniform() const {
    const int n = n_particles();
    const double w0 = 1.0 / n;
    for (const Particle& p : particles_) {
        if (std::abs(p.weight - w0) > 1e-12 * w0) return false;
    }
    return true;
}

std::vector<int> systematic_resample_indices(const std::vector<double>& weights,
                                             int n_out, std::uint64_t rng_seed) {
    const int n = static_cast<int>(weights.size());
    if (n == 0 || n_out <= 0) throw std::invalid_argument("empty resample input");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("weights sum to zero");

    std::mt19937_64 rng = make_rng(rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double offset = uni(rng);

    std::vector<int> out(n_out);
    double cum = weights[0] / total;
    int i = 0;
    for (int j = 0; j < n_out; ++j) {
        const double u = (j + offset) / n_out;
        while (u > cum && i + 1 < n) {
            ++i;
            cum += weights[i] / total;
        }
        out[j] = i;
    }
    return out;
}

std::vector<ImageGrid> posterior_samples(const Belief& belief) {
    const std::vector<ImageGrid>& renders = belief.particle_renders();
    if (belief.weights_uniform()) return renders;

    std::vector<double> weights(belief.n_particles());
    for (int i = 0; i < belief.n_particles(); ++i) {
        weights[i] = belief.particles()[i].weight;
    }
    const std::vector<int> idx = systematic_resample_indices(
        weights, belief.n_particles(),
        mix_seed(belief.seed_, seed_tag::kPosterior, belief.frame_index()));
    std::vector<ImageGrid> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(renders[i]);
    return out;
}

std::vector<ImageGrid> posterior_samples(const Belief& belief, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("need at least 1 sample");
    const std::vector<ImageGrid>& renders = belief.particle_renders();
    std::vector<double> weights(belief.n_particles());
    for (int i = 0; i < belief.n_particles(); ++i) {
        weights[i] = belief.particles()[i].weight;
    }
    const std::vector<int> idx = systematic_resample_indices(
        weights, n_samples,
        mix_seed(belief.seed_, seed_tag::kPosterior, belief.frame_index()));
    std::vector<ImageGrid> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(renders[i]);
    return out;
}

namespace {

VarianceMap variance_over_indices(const std::vector<ImageGrid>& renders,
                                  const std::vector<int>& indices) {
    const int h = renders[0].height;
    const int w = renders[0].width;
    VarianceMap out;
    out.values = Grid(h, w);
    Grid mean(h, w);
    Grid& m2 = out.values;
    const std::size_t n_px = mean.data.size();
    double count = 0.0;
    for (int idx : indices) {
        count += 1.0;
        const double inv_count = 1.0 / count;
        const double* x = renders[idx].data.data();
        double* mu = mean.data.data();
        double* acc = m2.data.data();
        for (std::size_t p = 0; p < n_px; ++p) {
            const double delta = x[p] - mu[p];
            mu[p] += delta * inv_count;
            acc[p] += delta * (x[p] - mu[p]);
        }
    }
    const double inv_nm1 = 1.0 / (count - 1.0);
    for (double& v : m2.data) v *= inv_nm1;
    return out;
}

}  // namespace

VarianceMap belief_pixel_variance(const Belief& belief) {
    const std::vector<ImageGrid>& renders = belief.particle_renders();
    if (belief.weights_uniform()) {
        return pixel_variance(renders);
    }
    std::vector<double> weights(belief.n_particles());
    for (int i = 0; i < belief.n_particles(); ++i) {
        weights[i] = belief.particles()[i].weight;
    }
    const std::vector<int> idx = systematic_resample_indices(
        weights, belief.n_particles(),
        mix_seed(belief.seed_, seed_tag::kPosterior, belief.frame_index()));
    return variance_over_indices(renders, idx);
}

VarianceMap pixel_variance(std::span<const ImageGrid> samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("pixel variance needs at least 2 samples");
    }
    const int h = samples[0].height;
    const int w = samples[0].width;
    VarianceMap out;
    out.values = Grid(h, w);
    Grid mean(h, w);
    Grid& m2 = out.values;
    const std::size_t n_px = mean.data.size();
    double count = 0.0;
    for (const ImageGrid& s : samples) {
        if (s.height != h || s.width != w) {
            throw ShapeMismatch("variance samples differ in shape");
        }
        count += 1.0;
        const double inv_count = 1.0 / count;
        const double* x = s.data.data();
        double* mu = mean.data.data();
        double* acc = m2.data.data();
        for (std::size_t p = 0; p < n_px; ++p) {
            const double delta = x[p] - mu[p];
            mu[p] += delta * inv_count;
            acc[p] += delta * (x[p] - mu[p]);
        }
    }
    const double inv_nm1 = 1.0 / (count - 1.0);
    for (double& v : m2.data) v *= inv_nm1;
    return out;
}

void export_belief_csv(const Belief& belief, std::ostream& os) {
    os << "index,weight,cavity_center_row,cavity_center_col,cavity_semi_axis_r,"
          "cavity_semi_axis_c,wall_thickness,phase,phase_rate,drift_row,drift_col\n";
    char buf[512];
    const std::vector<Belief::Particle>& ps = belief.particles();
    for (int i = 0; i < static_cast<int>(ps.size()); ++i) {
        const LatentState& s = ps[i].state;
        std::snprintf(buf, sizeof(buf),
                      "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      i, ps[i].weight, s.cavity_center_row, s.cavity_center_col,
                      s.cavity_semi_axis_r, s.cavity_semi_axis_c, s.wall_thickness,
                      s.phase, s.phase_rate, s.drift_row, s.drift_col);
        os << buf;
    }
}

}  // namespace scanline
