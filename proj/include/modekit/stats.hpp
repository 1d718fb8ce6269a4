#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "modekit/core.hpp"

namespace modekit {

/// Optional cleanup applied to the |G1| matrix.
struct NoiseFilter {
    enum class Kind { none, threshold, dark_cov };

    Kind kind = Kind::threshold;
    double level = 0.02;                     ///< relative to max entry, for Kind::threshold
    std::shared_ptr<const FrameStack> dark;  ///< dark frames, for Kind::dark_cov

    static NoiseFilter none() { return {Kind::none, 0.0, nullptr}; }
    static NoiseFilter threshold(double level) { return {Kind::threshold, level, nullptr}; }
    static NoiseFilter dark_frames(std::shared_ptr<const FrameStack> dark) {
        return {Kind::dark_cov, 0.0, std::move(dark)};
    }
};

struct StatsConfig {
    bool normalize_integral = false;  ///< divide each frame by its total intensity
    bool subtract_shot_noise = false;
    double shot_noise_scale = 0.0;    ///< counts-per-photon factor of the diagonal shot-noise term
    NoiseFilter noise_filter;         ///< defaults to a 2% relative threshold

    void validate() const;
};

struct MeanIntensity {
    PixelGrid grid;
    Image values;
};

/// Forward-only source of frames, so statistics can be accumulated without
/// holding a whole acquisition in memory.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual const PixelGrid& grid() const = 0;
    /// Total number of frames if known up front, otherwise 0.
    virtual std::size_t size_hint() const { return 0; }
    /// Writes the next frame into `frame` (resized as needed); false at end of stream.
    virtual bool next(Image& frame, std::string& label) = 0;
};

/// FrameSource over an in-memory stack.
class StackSource final : public FrameSource {
public:
    explicit StackSource(const FrameStack& stack) : stack_(stack) {}
    const PixelGrid& grid() const override { return stack_.grid; }
    std::size_t size_hint() const override { return stack_.size(); }
    bool next(Image& frame, std::string& label) override;

private:
    const FrameStack& stack_;
    std::size_t pos_ = 0;
};

/// Mean and covariance gathered in a single pass.
struct Moments {
    MeanIntensity mean;
    FlatCovariance cov;
    std::size_t frames = 0;
};

/// Streaming first and second moments. Frames are centred per block of
/// `block_frames` and merged into the running sums (pairwise update), so the
/// result matches the two-pass estimator without keeping frames resident.
/// Requires at least two frames; the covariance uses the 1/(T-1) normalization.
Moments accumulate_moments(FrameSource& source, const StatsConfig& cfg, std::size_t block_frames = 64);

MeanIntensity mean_intensity(const FrameStack& stack, const StatsConfig& cfg);
FlatCovariance covariance(const FrameStack& stack, const StatsConfig& cfg);

/// |G1| estimate plus the share of radicands that were negative and clamped.
struct SiegertResult {
    FlatCovariance g1;
    std::size_t clamped_count = 0;
    double clamped_fraction = 0.0;
};

/// Entrywise |G1| = Re sqrt(Cov - shot), with the optional diagonal shot-noise
/// term shot_noise_scale * <I>. Takes the covariance by value and works in place.
SiegertResult siegert_invert(FlatCovariance cov, const MeanIntensity& mean, const StatsConfig& cfg);

/// Covariance of the dark frames in `cfg.noise_filter`, with identical conditioning.
FlatCovariance dark_covariance(const StatsConfig& cfg);

/// Subtract a dark covariance from a signal covariance (must precede siegert_invert).
FlatCovariance subtract_dark(FlatCovariance cov, const FlatCovariance& dark);

/// Apply the configured noise filter to a |G1| matrix. Threshold mode zeroes
/// entries below level * max; dark mode only checks that the dark covariance
/// was removed before the Siegert inversion.
FlatCovariance denoise(FlatCovariance g1, const StatsConfig& cfg);

}  // namespace modekit
