#include "modekit/stats.hpp"

#include <cmath>
#include <sstream>

#include "modekit/error.hpp"

namespace modekit {

void StatsConfig::validate() const {
    if (!(shot_noise_scale >= 0.0) || !std::isfinite(shot_noise_scale)) {
        throw ValidationError("shot-noise scale must be finite and >= 0");
    }
    if (noise_filter.kind == NoiseFilter::Kind::threshold &&
        (!(noise_filter.level >= 0.0) || !std::isfinite(noise_filter.level))) {
        throw ValidationError("noise threshold level must be finite and >= 0");
    }
    if (noise_filter.kind == NoiseFilter::Kind::dark_cov && !noise_filter.dark) {
        throw ValidationError("dark-covariance filter needs a dark frame stack");
    }
}

bool StackSource::next(Image& frame, std::string& label) {
    if (pos_ >= stack_.size()) return false;
    frame = stack_.frames[pos_];
    label = stack_.label(pos_);
    ++pos_;
    return true;
}

namespace {

// Shape/value checks and optional integral normalization for one incoming frame.
void condition_frame(const PixelGrid& grid, Image& frame, const std::string& label, const StatsConfig& cfg) {
    if (frame.rows() != grid.ny || frame.cols() != grid.nx) {
        throw ShapeError(label + ": frame shape does not match grid");
    }
    if (!frame.allFinite()) throw DataError(label + ": non-finite intensity");
    if ((frame < 0.0).any()) throw DataError(label + ": negative intensity");
    if (cfg.normalize_integral) {
        const double total = frame.sum();
        if (!(total > 0.0)) {
            throw DegenerateError(label + ": total intensity is zero, cannot normalize");
        }
        frame /= total;
    }
}

}  // namespace

Moments accumulate_moments(FrameSource& source, const StatsConfig& cfg, std::size_t block_frames) {
    cfg.validate();
    const PixelGrid& grid = source.grid();
    grid.validate();
    if (block_frames == 0) block_frames = 1;
    const auto n = static_cast<Eigen::Index>(grid.size());

    Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(n, n);  // lower triangle only until the end
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd block(n, static_cast<Eigen::Index>(block_frames));
    double count = 0.0;

    Image frame;
    std::string label;
    bool more = true;
    while (more) {
        Eigen::Index filled = 0;
        while (filled < block.cols() && (more = source.next(frame, label))) {
            condition_frame(grid, frame, label, cfg);
            block.col(filled++) = Eigen::Map<const Eigen::VectorXd>(frame.data(), n);
        }
        if (filled == 0) break;

        auto cols = block.leftCols(filled);
        const Eigen::VectorXd block_mean = cols.rowwise().mean();
        cols.colwise() -= block_mean;
        m2.selfadjointView<Eigen::Lower>().rankUpdate(cols);

        // Merge block statistics into the running ones.
        const double nb = static_cast<double>(filled);
        const Eigen::VectorXd delta = block_mean - mean;
        if (count > 0.0) {
            m2.selfadjointView<Eigen::Lower>().rankUpdate(delta, count * nb / (count + nb));
        }
        mean += delta * (nb / (count + nb));
        count += nb;
    }

    if (count < 2.0) {
        throw InsufficientDataError("covariance needs at least 2 frames, got " +
                                    std::to_string(static_cast<std::size_t>(count)));
    }

    m2 /= (count - 1.0);
    m2.triangularView<Eigen::StrictlyUpper>() = m2.transpose();

    Moments out;
    out.frames = static_cast<std::size_t>(count);
    out.mean.grid = grid;
    out.mean.values = fold_vector(grid, mean);
    out.cov.grid = grid;
    out.cov.kind = CovKind::covariance;
    out.cov.data = std::move(m2);
    return out;
}

MeanIntensity mean_intensity(const FrameStack& stack, const StatsConfig& cfg) {
    cfg.validate();
    stack.grid.validate();
    if (stack.size() == 0) throw InsufficientDataError("mean intensity needs at least 1 frame");
    Image acc = zero_image(stack.grid);
    Image frame;
    for (std::size_t t = 0; t < stack.size(); ++t) {
        frame = stack.frames[t];
        condition_frame(stack.grid, frame, stack.label(t), cfg);
        acc += frame;
    }
    return {stack.grid, acc / static_cast<double>(stack.size())};
}

FlatCovariance covariance(const FrameStack& stack, const StatsConfig& cfg) {
    StackSource source(stack);
    return accumulate_moments(source, cfg).cov;
}

SiegertResult siegert_invert(FlatCovariance cov, const MeanIntensity& mean, const StatsConfig& cfg) {
    cfg.validate();
    if (cov.kind != CovKind::covariance) throw ValidationError("siegert_invert expects an intensity covariance");
    if (!cov.grid.same_as(mean.grid) || cov.size() != cov.grid.size() ||
        mean.values.rows() != mean.grid.ny || mean.values.cols() != mean.grid.nx) {
        throw ShapeError("covariance and mean intensity are on different grids");
    }
    const Eigen::Index n = cov.data.rows();
    if (cfg.subtract_shot_noise) {
        const Eigen::Map<const Eigen::VectorXd> m(mean.values.data(), n);
        cov.data.diagonal() -= cfg.shot_noise_scale * m;
    }

    std::size_t clamped = 0;
    double* d = cov.data.data();
    const std::size_t total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    for (std::size_t k = 0; k < total; ++k) {
        if (d[k] < 0.0) {
            d[k] = 0.0;  // real part of the square root of a negative number
            ++clamped;
        } else {
            d[k] = std::sqrt(d[k]);
        }
    }

    SiegertResult out;
    out.clamped_count = clamped;
    out.clamped_fraction = total ? static_cast<double>(clamped) / static_cast<double>(total) : 0.0;
    cov.kind = CovKind::abs_g1;
    out.g1 = std::move(cov);
    return out;
}

FlatCovariance dark_covariance(const StatsConfig& cfg) {
    cfg.validate();
    if (cfg.noise_filter.kind != NoiseFilter::Kind::dark_cov) {
        throw ValidationError("no dark frames configured");
    }
    return covariance(*cfg.noise_filter.dark, cfg);
}

FlatCovariance subtract_dark(FlatCovariance cov, const FlatCovariance& dark) {
    if (cov.kind != CovKind::covariance || dark.kind != CovKind::covariance) {
        throw ValidationError("dark subtraction applies to intensity covariances, before Siegert inversion");
    }
    if (!cov.grid.same_as(dark.grid) || cov.size() != dark.size()) {
        throw ShapeError("dark frames are on a different grid than the signal frames");
    }
    cov.data -= dark.data;
    cov.dark_corrected = true;
    return cov;
}

FlatCovariance denoise(FlatCovariance g1, const StatsConfig& cfg) {
    cfg.validate();
    if (g1.kind != CovKind::abs_g1) throw ValidationError("denoise expects a |G1| matrix");
    switch (cfg.noise_filter.kind) {
        case NoiseFilter::Kind::none:
            return g1;
        case NoiseFilter::Kind::threshold: {
            if (g1.data.size() == 0) return g1;
            const double cut = cfg.noise_filter.level * g1.data.maxCoeff();
            for (double& v : g1.data.reshaped()) {
                if (v < cut) v = 0.0;
            }
            return g1;
        }
        case NoiseFilter::Kind::dark_cov: {
            if (!g1.dark_corrected) {
                throw ValidationError("dark covariance must be subtracted before the Siegert inversion");
            }
            if (cfg.noise_filter.dark && !cfg.noise_filter.dark->grid.same_as(g1.grid)) {
                throw ShapeError("dark frames are on a different grid than the signal frames");
            }
            return g1;
        }
    }
    return g1;
}

}  // namespace modekit
