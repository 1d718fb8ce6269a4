#include "modekit/pipeline.hpp"

#include "modekit/error.hpp"

namespace modekit {

Reconstruction reconstruct(FrameSource& frames, const StatsConfig& cfg, const DecomposeOptions& opts) {
    Moments moments = accumulate_moments(frames, cfg);
    if (moments.cov.data.cwiseAbs().maxCoeff() == 0.0) {
        throw DegenerateError("covariance is identically zero");
    }

    Reconstruction out;
    out.report.frames = moments.frames;
    out.mean = std::move(moments.mean);

    FlatCovariance cov = std::move(moments.cov);
    if (cfg.noise_filter.kind == NoiseFilter::Kind::dark_cov) {
        cov = subtract_dark(std::move(cov), dark_covariance(cfg));
    }
    SiegertResult siegert = siegert_invert(std::move(cov), out.mean, cfg);
    out.report.siegert_clamped_fraction = siegert.clamped_fraction;
    FlatCovariance g1 = denoise(std::move(siegert.g1), cfg);

    Decomposition dec = decompose(std::move(g1), opts);
    out.modes = std::move(dec.modes);
    out.report.decompose = std::move(dec.report);
    out.report.schmidt_number = schmidt_number(out.modes);
    return out;
}

}  // namespace modekit
