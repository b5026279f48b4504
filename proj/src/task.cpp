#include "scanline/task.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scanline/errors.hpp"
#include "scanline/fastmath.hpp"

namespace scanline {
namespace {

Eigen::Map<const Eigen::VectorXd> flatten(const ImageGrid& image) {
    return Eigen::Map<const Eigen::VectorXd>(
        image.data.data(), static_cast<Eigen::Index>(image.data.size()));
}

// Inclusive-exclusive center range along one axis after clipping the
// requested band to where the template fits.
std::pair<int, int> clip_band(CenterBand band, int half, int extent) {
    int lo = half;
    int hi = extent - half;  // exclusive
    if (band.begin >= 0) lo = std::max(lo, band.begin);
    if (band.end >= 0) hi = std::min(hi, band.end);
    if (lo >= hi) throw ShapeMismatch("anchor band leaves no valid template centers");
    return {lo, hi};
}

}  // namespace

LinearTask::LinearTask(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    if (weights_.rows() < 1 || weights_.cols() < 1) {
        throw std::invalid_argument("linear task weights must be non-empty");
    }
    if (!weights_.allFinite()) {
        throw std::invalid_argument("linear task weights must be finite");
    }
}

int LinearTask::output_dim() const { return static_cast<int>(weights_.rows()); }

TaskOutput LinearTask::evaluate(const ImageGrid& image) const {
    if (static_cast<Eigen::Index>(image.data.size()) != weights_.cols()) {
        throw ShapeMismatch("image size does not match linear task weights");
    }
    TaskOutput out;
    out.values = weights_ * flatten(image);
    return out;
}

Jacobian LinearTask::jacobian(const ImageGrid& image) const {
    if (static_cast<Eigen::Index>(image.data.size()) != weights_.cols()) {
        throw ShapeMismatch("image size does not match linear task weights");
    }
    Jacobian j;
    j.height = image.height;
    j.width = image.width;
    j.entries = weights_;
    return j;
}

AnchorDistanceTask::AnchorDistanceTask(const Grid& template_a,
                                       const Grid& template_b,
                                       double softmax_temperature)
    : temperature_(softmax_temperature) {
    if (!(softmax_temperature > 0.0)) {
        throw std::invalid_argument("softmax temperature must be positive");
    }
    const Grid* sources[2] = {&template_a, &template_b};
    for (int k = 0; k < 2; ++k) {
        const Grid& src = *sources[k];
        if (src.height < 1 || src.width < 1 ||
            src.height % 2 == 0 || src.width % 2 == 0) {
            throw std::invalid_argument("templates must have odd positive dimensions");
        }
        AnchorSpec& spec = anchors_[k];
        spec.tmpl = src;
        const double mean = src.sum() / src.size();
        double norm_sq = 0.0;
        for (double& v : spec.tmpl.data) {
            v -= mean;
            norm_sq += v * v;
        }
        if (norm_sq < 1e-24) {
            throw std::invalid_argument("template has no contrast");
        }
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (double& v : spec.tmpl.data) v *= inv_norm;

        Eigen::MatrixXd m(spec.tmpl.height, spec.tmpl.width);
        for (int r = 0; r < spec.tmpl.height; ++r) {
            for (int c = 0; c < spec.tmpl.width; ++c) m(r, c) = spec.tmpl(r, c);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        if (sv.size() == 1 || sv(1) <= 1e-12 * sv(0)) {
            spec.separable = true;
            spec.col_factor.resize(spec.tmpl.height);
            spec.row_factor.resize(spec.tmpl.width);
            for (int r = 0; r < spec.tmpl.height; ++r) {
                spec.col_factor[r] = svd.matrixU()(r, 0) * sv(0);
            }
            for (int c = 0; c < spec.tmpl.width; ++c) {
                spec.row_factor[c] = svd.matrixV()(c, 0);
            }
        }
    }
}

void AnchorDistanceTask::set_row_bands(CenterBand band_a, CenterBand band_b) {
    anchors_[0].rows = band_a;
    anchors_[1].rows = band_b;
}

void AnchorDistanceTask::set_col_bands(CenterBand band_a, CenterBand band_b) {
    anchors_[0].cols = band_a;
    anchors_[1].cols = band_b;
}

AnchorDistanceTask::Forward AnchorDistanceTask::forward(const ImageGrid& image) const {
    const int h = image.height;
    const int w = image.width;
    Forward out;
    out.heatmaps.reserve(2);
    for (int k = 0; k < 2; ++k) {
        const AnchorSpec& spec = anchors_[k];
        const int th = spec.tmpl.height;
        const int tw = spec.tmpl.width;
        if (th > h || tw > w) throw ShapeMismatch("template larger than image");
        const int hr = th / 2;
        const int hc = tw / 2;
        const auto [r0, r1] = clip_band(spec.rows, hr, h);
        const auto [c0, c1] = clip_band(spec.cols, hc, w);
        const int bh = r1 - r0;
        const int bw = c1 - c0;

        Grid score(bh, bw);
        if (spec.separable) {
            // score = col_factor applied down the rows of the row-filtered image
            Grid rowpass(bh + th - 1, bw);
            for (int i = 0; i < bh + th - 1; ++i) {
                const double* px = &image(r0 - hr + i, 0);
                for (int j = 0; j < bw; ++j) {
                    double acc = 0.0;
                    const double* win = px + (c0 - hc + j);
                    for (int q = 0; q < tw; ++q) acc += spec.row_factor[q] * win[q];
                    rowpass(i, j) = acc;
                }
            }
            for (int i = 0; i < bh; ++i) {
                for (int j = 0; j < bw; ++j) {
                    double acc = 0.0;
                    for (int p = 0; p < th; ++p) {
                        acc += spec.col_factor[p] * rowpass(i + p, j);
                    }
                    score(i, j) = acc;
                }
            }
        } else {
            for (int i = 0; i < bh; ++i) {
                for (int j = 0; j < bw; ++j) {
                    double acc = 0.0;
                    for (int p = 0; p < th; ++p) {
                        const double* px = &image(r0 + i - hr + p, c0 + j - hc);
                        const double* tp = &spec.tmpl(p, 0);
                        for (int q = 0; q < tw; ++q) acc += tp[q] * px[q];
                    }
                    score(i, j) = acc;
                }
            }
        }

        double max_score = score.data[0];
        for (double v : score.data) max_score = std::max(max_score, v);
        double total = 0.0;
        for (double& v : score.data) {
            v = fast_exp(temperature_ * (v - max_score));
            total += v;
        }
        const double inv_total = 1.0 / total;

        Grid heat(h, w);
        double anchor_r = 0.0;
        double anchor_c = 0.0;
        for (int i = 0; i < bh; ++i) {
            for (int j = 0; j < bw; ++j) {
                const double p = score(i, j) * inv_total;
                heat(r0 + i, c0 + j) = p;
                anchor_r += p * (r0 + i);
                anchor_c += p * (c0 + j);
            }
        }
        out.heatmaps.push_back(std::move(heat));
        out.anchors.emplace_back(anchor_r, anchor_c);
    }
    const double dr = out.anchors[0].first - out.anchors[1].first;
    const double dc = out.anchors[0].second - out.anchors[1].second;
    out.value = std::sqrt(dr * dr + dc * dc);
    return out;
}

TaskOutput AnchorDistanceTask::evaluate(const ImageGrid& image) const {
    Forward f = forward(image);
    TaskOutput out;
    out.values = Eigen::VectorXd::Constant(1, f.value);
    out.per_anchor_heatmaps = std::move(f.heatmaps);
    out.anchors = std::move(f.anchors);
    return out;
}

Jacobian AnchorDistanceTask::jacobian(const ImageGrid& image) const {
    const Forward f = forward(image);
    if (f.value == 0.0) {
        throw DegenerateDistance("anchors coincide; distance gradient undefined");
    }
    const int h = image.height;
    const int w = image.width;
    const double dr = f.anchors[0].first - f.anchors[1].first;
    const double dc = f.anchors[0].second - f.anchors[1].second;
    // d value / d anchor_k, anchor B with opposite sign.
    const double grad_a[2] = {dr / f.value, dc / f.value};

    Grid dx(h, w);
    for (int k = 0; k < 2; ++k) {
        const AnchorSpec& spec = anchors_[k];
        const double sign = (k == 0) ? 1.0 : -1.0;
        const double gr = sign * grad_a[0];
        const double gc = sign * grad_a[1];
        const double phi_r = f.anchors[k].first;
        const double phi_c = f.anchors[k].second;
        const Grid& heat = f.heatmaps[k];
        const int th = spec.tmpl.height;
        const int tw = spec.tmpl.width;
        const int hr = th / 2;
        const int hc = tw / 2;
        const auto [r0, r1] = clip_band(spec.rows, hr, h);
        const auto [c0, c1] = clip_band(spec.cols, hc, w);

        // Soft-argmax backward: d value / d score(r,c) before the template
        // adjoint is temperature * p * ((coord - anchor) . grad).
        if (spec.separable) {
            Grid rowpass(r1 - r0, c1 - c0 + tw - 1);
            for (int r = r0; r < r1; ++r) {
                for (int c = c0; c < c1; ++c) {
                    const double p = heat(r, c);
                    if (p == 0.0) continue;
                    const double wgt =
                        temperature_ * p * ((r - phi_r) * gr + (c - phi_c) * gc);
                    double* out = &rowpass(r - r0, c - c0);
                    for (int q = 0; q < tw; ++q) out[q] += wgt * spec.row_factor[q];
                }
            }
            for (int r = r0; r < r1; ++r) {
                for (int p = 0; p < th; ++p) {
                    const double cf = spec.col_factor[p];
                    double* out = &dx(r - hr + p, c0 - hc);
                    const double* in = &rowpass(r - r0, 0);
                    const int n = c1 - c0 + tw - 1;
                    for (int j = 0; j < n; ++j) out[j] += cf * in[j];
                }
            }
        } else {
            for (int r = r0; r < r1; ++r) {
                for (int c = c0; c < c1; ++c) {
                    const double p = heat(r, c);
                    if (p == 0.0) continue;
                    const double wgt =
                        temperature_ * p * ((r - phi_r) * gr + (c - phi_c) * gc);
                    for (int tp = 0; tp < th; ++tp) {
                        double* out = &dx(r - hr + tp, c - hc);
                        const double* trow = &spec.tmpl(tp, 0);
                        for (int q = 0; q < tw; ++q) out[q] += wgt * trow[q];
                    }
                }
            }
        }
    }

    Jacobian j;
    j.height = h;
    j.width = w;
    j.entries = Eigen::Map<const Eigen::MatrixXd>(dx.data.data(), 1,
                                                  static_cast<Eigen::Index>(dx.data.size()));
    return j;
}

AnchorDistanceTask AnchorDistanceTask::default_for_grid(int height, int width,
                                                        double softmax_temperature) {
    constexpr int kSize = 9;
    if (height < 3 * kSize || width < 3 * kSize) {
        throw std::invalid_argument("grid too small for the default anchor templates");
    }
    // Vertical wall-to-cavity edge profile: bright above, dark below for the
    // upper anchor; mirrored for the lower one. Constant across columns.
    const double profile[kSize] = {1.0, 1.0, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0};
    Grid top(kSize, kSize);
    Grid bottom(kSize, kSize);
    for (int r = 0; r < kSize; ++r) {
        for (int c = 0; c < kSize; ++c) {
            top(r, c) = profile[r];
            bottom(r, c) = profile[kSize - 1 - r];
        }
    }
    AnchorDistanceTask task(top, bottom, softmax_temperature);
    const int half = kSize / 2;
    // Overlapping halves so either anchor may cross mid-grid.
    task.set_row_bands({half, (9 * height) / 16}, {(7 * height) / 16, height - half});
    task.set_col_bands({width / 4, width - width / 4}, {width / 4, width - width / 4});
    return task;
}

std::unique_ptr<Task> linear_task(Eigen::MatrixXd weights) {
    return std::make_unique<LinearTask>(std::move(weights));
}

std::unique_ptr<Task> anchor_distance_task(const Grid& template_a,
                                           const Grid& template_b,
                                           double softmax_temperature) {
    return std::make_unique<AnchorDistanceTask>(template_a, template_b,
                                                softmax_temperature);
}

Jacobian jacobian_fd(const Task& f, const ImageGrid& x, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    const int n = x.size();
    Jacobian j;
    j.height = x.height;
    j.width = x.width;
    j.entries.resize(f.output_dim(), n);
    ImageGrid xp = x;
    ImageGrid xm = x;
    const double inv_2h = 1.0 / (2.0 * step);
    for (int i = 0; i < n; ++i) {
        const double orig = x.data[i];
        xp.data[i] = orig + step;
        xm.data[i] = orig - step;
        j.entries.col(i) = (f.evaluate(xp).values - f.evaluate(xm).values) * inv_2h;
        xp.data[i] = orig;
        xm.data[i] = orig;
    }
    return j;
}

std::pair<double, double> soft_argmax(const Grid& heatmap) {
    double total = 0.0;
    double acc_r = 0.0;
    double acc_c = 0.0;
    for (int r = 0; r < heatmap.height; ++r) {
        for (int c = 0; c < heatmap.width; ++c) {
            const double v = heatmap(r, c);
            total += v;
            acc_r += v * r;
            acc_c += v * c;
        }
    }
    if (!(total > 0.0)) throw std::invalid_argument("heatmap has no mass");
    return {acc_r / total, acc_c / total};
}

}  // namespace scanline
