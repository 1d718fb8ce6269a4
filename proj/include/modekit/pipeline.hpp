#pragma once

#include <cstddef>

#include "modekit/modes.hpp"
#include "modekit/stats.hpp"

namespace modekit {

/// Everything the frames-to-modes pipeline produces besides the modes.
struct ReconstructionReport {
    std::size_t frames = 0;
    double siegert_clamped_fraction = 0.0;
    double schmidt_number = 0.0;
    DecomposeReport decompose;
};

struct Reconstruction {
    MeanIntensity mean;
    ModeSet modes;
    ReconstructionReport report;
};

/// Streaming moments, optional dark subtraction, Siegert inversion, noise
/// filter and coherent-mode decomposition, in that order. Throws
/// DegenerateError when the covariance is identically zero.
Reconstruction reconstruct(FrameSource& frames, const StatsConfig& cfg, const DecomposeOptions& opts = {});

}  // namespace modekit
