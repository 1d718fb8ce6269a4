#pragma once

#include <string>
#include <vector>

#include "modekit/core.hpp"
#include "modekit/modes.hpp"

namespace modekit {

/// Weakly guiding step-index fiber sampled on a near-field grid.
struct FiberParams {
    double core_radius = 4.1e-6;
    double numerical_aperture = 0.14;
    double wavelength = 532e-9;
    PixelGrid grid = centered_grid(48, 48, 7.0 * 4.1e-6 / 48, 7.0 * 4.1e-6 / 48, Unit::meters);

    double v_number() const;
    void validate() const;
};

/// k-th positive zero (k >= 1) of J_nu for integer nu >= 0.
double bessel_j_zero(int nu, int k);

struct LpCutoff {
    int l = 0;
    int m = 1;
    double cutoff_v = 0.0;
    int multiplicity = 1;  ///< 2 for l > 0 (cos and sin orientations)
};

/// Guided LP modes with cutoff below V, ordered by cutoff.
std::vector<LpCutoff> lp_cutoffs(const FiberParams& params);

/// Guided modes counting each l > 0 entry twice.
int supported_mode_count(const FiberParams& params);

/// Transverse wavenumbers of a guided mode, with u^2 + w^2 = V^2.
struct LpRoot {
    double u = 0.0;
    double w = 0.0;
    double residual = 0.0;  ///< relative mismatch of the two sides of the dispersion relation
};

LpRoot solve_lp_dispersion(double v, int l, int m);

enum class Orientation { cos, sin };

/// L2-normalized LP_lm profile: J_l(u r/a) in the core, K_l(w r/a) outside.
Image lp_profile(const FiberParams& params, int l, int m, Orientation orientation);

struct LpMode {
    int l = 0;
    int m = 1;
    Orientation orientation = Orientation::cos;
    std::string name() const;  ///< e.g. "LP11c"
};

/// Every guided mode in lp_cutoffs order, cos before sin.
std::vector<LpMode> lp_mode_list(const FiberParams& params);

/// Profiles of lp_mode_list with uniform weights, made exactly orthonormal on
/// the grid by symmetric (Loewdin) orthogonalization.
ModeSet lp_modeset(const FiberParams& params);

/// Parse "key = value" text: core_radius, numerical_aperture (or n_core and
/// n_clad), wavelength, grid_nx, grid_ny, half_width.
FiberParams fiber_params_from_text(const std::string& text);

}  // namespace modekit
