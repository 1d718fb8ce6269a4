#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "modekit/core.hpp"
#include "modekit/modes.hpp"
#include "modekit/stats.hpp"

namespace modekit {

/// Pseudo-thermal frame generator driven by a known mode set.
struct SynthConfig {
    ModeSet modes;
    std::size_t frames = 3000;
    std::uint64_t seed = 1;
    double photon_scale = 1e5;  ///< mean photon count per frame when shot_noise is on
    bool shot_noise = false;
    double dark_sigma = 0.0;    ///< additive Gaussian noise per pixel, in intensity units

    void validate() const;
};

/// E[sum over pixels of I] for unit-L2 profiles: sum(weights) / pixel area.
double expected_total_intensity(const ModeSet& modes);

/// Diagonal shot-noise factor matching the Poisson resampling of `cfg`
/// (the intensity units per photon). Zero when shot noise is off.
double shot_noise_scale(const SynthConfig& cfg);

/// Draws frame t of the sequence; frames depend only on (seed, t).
class FrameSynthesizer {
public:
    explicit FrameSynthesizer(const SynthConfig& cfg);

    const PixelGrid& grid() const { return grid_; }
    Image frame(std::size_t t) const;

private:
    PixelGrid grid_;
    Eigen::MatrixXd amplitudes_;  ///< N x M, column m = sqrt(l_m / 2) u_m
    std::uint64_t seed_;
    double photons_per_unit_ = 0.0;
    bool shot_noise_;
    double dark_sigma_;
};

/// Frames first .. first+count-1, generated in parallel with a fixed output order.
std::vector<Image> sample_block(const FrameSynthesizer& synth, std::size_t first, std::size_t count);

/// All frames of `cfg`.
FrameStack sample_frames(const SynthConfig& cfg);

/// Streams the frames of `cfg` one at a time.
class SynthSource final : public FrameSource {
public:
    explicit SynthSource(const SynthConfig& cfg) : synth_(cfg), total_(cfg.frames) {}
    const PixelGrid& grid() const override { return synth_.grid(); }
    std::size_t size_hint() const override { return total_; }
    bool next(Image& frame, std::string& label) override;

private:
    FrameSynthesizer synth_;
    std::size_t total_;
    std::size_t pos_ = 0;
};

/// Unit-L2 Hermite-Gauss profile H_n(sqrt2 x/w) H_m(sqrt2 y/w) exp(-(x^2+y^2)/w^2).
Image hermite_gauss(const PixelGrid& grid, int n, int m, double waist);

/// (n, m) orders of the first `count` HG modes: by total order n + m, then by descending n.
std::vector<PixelIndex> hermite_gauss_orders(std::size_t count);

/// HG modes in hermite_gauss_orders order with the given (descending) weights.
ModeSet hermite_gauss_modeset(const PixelGrid& grid, double waist, const std::vector<double>& weights);

/// l_m = exp(-m / scale), m = 0 .. count-1.
std::vector<double> exponential_weights(std::size_t count, double scale);

/// l_m = (m + 1)^(-exponent).
std::vector<double> power_law_weights(std::size_t count, double exponent);

/// Copy of `modes` with the weights replaced.
ModeSet with_weights(ModeSet modes, const std::vector<double>& weights);

}  // namespace modekit
