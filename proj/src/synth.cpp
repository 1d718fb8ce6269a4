#include "modekit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "modekit/error.hpp"

namespace modekit {

namespace {

std::mt19937_64 frame_rng(std::uint64_t seed, std::size_t t) {
    const auto t64 = static_cast<std::uint64_t>(t);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t64), static_cast<std::uint32_t>(t64 >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace

void SynthConfig::validate() const {
    modes.validate();
    if (modes.size() == 0) throw ValidationError("generator mode set is empty");
    for (std::size_t m = 0; m < modes.size(); ++m) {
        if (!(modes.weights[m] > 0.0)) throw ValidationError("generator weight " + std::to_string(m) + " is not positive");
    }
    if (frames < 2) throw ValidationError("need at least two frames");
    if (shot_noise && !(photon_scale > 0.0 && std::isfinite(photon_scale))) {
        throw ValidationError("photon scale must be positive");
    }
    if (!(dark_sigma >= 0.0) || !std::isfinite(dark_sigma)) throw ValidationError("dark sigma must be >= 0");
}

double expected_total_intensity(const ModeSet& modes) {
    double s = 0.0;
    for (double w : modes.weights) s += w;
    return s / modes.grid.pixel_area();
}

double shot_noise_scale(const SynthConfig& cfg) {
    if (!cfg.shot_noise) return 0.0;
    return expected_total_intensity(cfg.modes) / cfg.photon_scale;
}

FrameSynthesizer::FrameSynthesizer(const SynthConfig& cfg)
    : grid_(cfg.modes.grid), seed_(cfg.seed), shot_noise_(cfg.shot_noise), dark_sigma_(cfg.dark_sigma) {
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(grid_.size());
    const auto m = static_cast<Eigen::Index>(cfg.modes.size());
    amplitudes_.resize(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto i = static_cast<std::size_t>(k);
        amplitudes_.col(k) = unfold_image(grid_, cfg.modes.profiles[i]) * std::sqrt(cfg.modes.weights[i] / 2.0);
    }
    if (shot_noise_) photons_per_unit_ = 1.0 / shot_noise_scale(cfg);
}

Image FrameSynthesizer::frame(std::size_t t) const {
    auto rng = frame_rng(seed_, t);
    std::normal_distribution<double> normal;
    const Eigen::Index m = amplitudes_.cols();
    Eigen::VectorXd g(m);
    Eigen::VectorXd h(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        g(k) = normal(rng);
        h(k) = normal(rng);
    }
    const Eigen::VectorXd re = amplitudes_ * g;
    const Eigen::VectorXd im = amplitudes_ * h;
    Eigen::VectorXd intensity = re.cwiseAbs2() + im.cwiseAbs2();

    if (shot_noise_) {
        for (double& v : intensity) {
            std::poisson_distribution<long long> poisson(v * photons_per_unit_);
            v = static_cast<double>(poisson(rng)) / photons_per_unit_;
        }
    }
    if (dark_sigma_ > 0.0) {
        std::normal_distribution<double> dark(0.0, dark_sigma_);
        for (double& v : intensity) v = std::max(0.0, v + dark(rng));
    }
    return fold_vector(grid_, intensity);
}

std::vector<Image> sample_block(const FrameSynthesizer& synth, std::size_t first, std::size_t count) {
    std::vector<Image> out(count);
    const std::size_t workers =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, count / 16));
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) out[i] = synth.frame(first + i);
        });
    }
    pool.clear();
    return out;
}

FrameStack sample_frames(const SynthConfig& cfg) {
    const FrameSynthesizer synth(cfg);
    FrameStack stack;
    stack.grid = synth.grid();
    stack.frames = sample_block(synth, 0, cfg.frames);
    return stack;
}

bool SynthSource::next(Image& frame, std::string& label) {
    if (pos_ >= total_) return false;
    frame = synth_.frame(pos_);
    label = "frame " + std::to_string(pos_);
    ++pos_;
    return true;
}

Image hermite_gauss(const PixelGrid& grid, int n, int m, double waist) {
    grid.validate();
    if (n < 0 || m < 0) throw RangeError("Hermite-Gauss orders must be non-negative");
    if (!(waist > 0.0)) throw ValidationError("waist must be positive");
    Image img(grid.ny, grid.nx);
    const double s = std::sqrt(2.0) / waist;
    for (int iy = 0; iy < grid.ny; ++iy) {
        const double y = grid.y(iy);
        const double fy = std::hermite(static_cast<unsigned>(m), s * y) * std::exp(-y * y / (waist * waist));
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.x(ix);
            img(iy, ix) = fy * std::hermite(static_cast<unsigned>(n), s * x) * std::exp(-x * x / (waist * waist));
        }
    }
    const double norm = std::sqrt(img.square().sum() * grid.pixel_area());
    if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericalError("Hermite-Gauss profile is not representable on the grid");
    img /= norm;
    return img;
}

std::vector<PixelIndex> hermite_gauss_orders(std::size_t count) {
    std::vector<PixelIndex> out;
    for (int order = 0; out.size() < count; ++order) {
        for (int n = order; n >= 0 && out.size() < count; --n) out.push_back({n, order - n});
    }
    return out;
}

ModeSet hermite_gauss_modeset(const PixelGrid& grid, double waist, const std::vector<double>& weights) {
    ModeSet set;
    set.grid = grid;
    set.weights = weights;
    for (const auto& nm : hermite_gauss_orders(weights.size())) set.profiles.push_back(hermite_gauss(grid, nm.ix, nm.iy, waist));
    set.validate();
    return set;
}

std::vector<double> exponential_weights(std::size_t count, double scale) {
    std::vector<double> w(count);
    for (std::size_t m = 0; m < count; ++m) w[m] = std::exp(-static_cast<double>(m) / scale);
    return w;
}

std::vector<double> power_law_weights(std::size_t count, double exponent) {
    std::vector<double> w(count);
    for (std::size_t m = 0; m < count; ++m) w[m] = std::pow(static_cast<double>(m + 1), -exponent);
    return w;
}

ModeSet with_weights(ModeSet modes, const std::vector<double>& weights) {
    if (weights.size() != modes.size()) throw ShapeError("weight count does not match the mode count");
    modes.weights = weights;
    modes.validate();
    return modes;
}

}  // namespace modekit
