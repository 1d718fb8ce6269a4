#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "modekit/core.hpp"

namespace modekit {

/// Tensor-product Gauss-Legendre grid over the pump plane.
struct RhoQuadrature {
    double extent = 4.0;  ///< half-width in units of the pump waist (times the ellipticity along y)
    int nodes_x = 128;
    int nodes_y = 160;
};

/// Degenerate high-gain parametric down-conversion with a Gaussian pump.
///
/// The far-field grid is given in external angles theta = q / k_s (radians);
/// the transverse wavevector of pixel (ix, iy) is k_s * (theta_x, theta_y).
struct PdcParams {
    double gain = 3.8;                ///< parametric gain G
    double fwhm_x = 140e-6;           ///< pump intensity FWHM along x (m)
    double ellipticity = 1.2;         ///< FWHM_y / FWHM_x
    double mismatch = -50.0;          ///< phase mismatch Delta_0 (1/m)
    double crystal_length = 2e-3;     ///< L (m)
    double lambda_p = 354.67e-9;      ///< pump wavelength (m)
    double n_p = 1.7;
    double n_s = 1.66;                ///< signal index at 2 * lambda_p
    PixelGrid angle_grid = centered_grid(64, 64, 70e-3 / 64, 70e-3 / 64, Unit::radians);
    RhoQuadrature rho;

    double lambda_s() const { return 2.0 * lambda_p; }
    double k_p() const;
    double k_s() const;
    double waist() const;  ///< w_p = FWHM_x / (2 sqrt(ln 2))

    void validate() const;
    /// Soft validity checks (narrow-band pump, quadrature resolution).
    std::vector<std::string> warnings() const;
};

/// sigma * A_p(x, y) = (G / L) exp(-(x^2 + y^2/eps^2) / (2 w_p^2)), in 1/m.
/// The coupling constant sigma never appears on its own.
double pump_amplitude(const PdcParams& params, double x, double y);

/// Phase mismatch Delta(q) = Delta_0 - |q|^2 / k_s.
double phase_mismatch(const PdcParams& params, double qx, double qy);

/// sinh(Gamma L) / Gamma for Gamma^2 = gamma_sq, continued analytically to
/// sin(|Gamma| L) / |Gamma| when gamma_sq < 0 and to L at gamma_sq = 0.
double sinhc_kernel(double gamma_sq, double length);

/// S(q, rho) with Gamma^2 = sigma^2 A_p^2(rho) - Delta^2(q) / 4.
double gain_kernel(const PdcParams& params, double qx, double qy, double x, double y);

/// Pixel grid of the far field in external angles (radians).
PixelGrid external_angles(const PdcParams& params);

/// Outcome of the correlation-function simulation.
struct PdcSimulation {
    FlatCovariance g1;                 ///< |G1|, unit trace, kind abs_g1
    double negative_fraction = 0.0;    ///< share of entries below -1e-6 * max before taking |.|
    double min_over_max = 0.0;         ///< most negative entry relative to the maximum
    std::vector<std::string> warnings;
};

struct PdcLimits {
    std::size_t max_matrix_bytes = std::size_t{2} << 30;
    int rho_chunk = 256;  ///< quadrature nodes folded into one rank update
};

/// Signal correlation function G1(q, q') on the far-field grid.
///
/// The pump-plane integral is a sum over quadrature nodes j of
/// w_j A_j^2 S(q, rho_j) S(q', rho_j) cos((q - q').rho_j); splitting the cosine
/// turns it into B B^T with B = [c_j cos(q.rho_j), c_j sin(q.rho_j)] and
/// c_j = sqrt(w_j) A_j S(q, rho_j), so the matrix is symmetric by construction
/// and needs only N * M kernel evaluations.
PdcSimulation g1_pdc(const PdcParams& params, const PdcLimits& limits = {});

/// Parse a flat "key = value" parameter file into PdcParams (unlisted keys keep defaults).
PdcParams pdc_params_from_text(const std::string& text);

}  // namespace modekit
