#include "modekit/pdc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "modekit/error.hpp"
#include "modekit/params.hpp"
#include "modekit/quadrature.hpp"

namespace modekit {

double PdcParams::k_p() const { return 2.0 * std::numbers::pi * n_p / lambda_p; }
double PdcParams::k_s() const { return 2.0 * std::numbers::pi * n_s / lambda_s(); }
double PdcParams::waist() const { return fwhm_x / (2.0 * std::sqrt(std::numbers::ln2)); }

void PdcParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(gain)) throw ValidationError("parametric gain must be positive");
    if (!positive(crystal_length)) throw ValidationError("crystal length must be positive");
    if (!positive(ellipticity)) throw ValidationError("pump ellipticity must be positive");
    if (!positive(fwhm_x)) throw ValidationError("pump FWHM must be positive");
    if (!positive(lambda_p)) throw ValidationError("pump wavelength must be positive");
    if (!(n_p >= 1.0) || !(n_s >= 1.0) || !std::isfinite(n_p) || !std::isfinite(n_s)) {
        throw ValidationError("refractive indices must be >= 1");
    }
    if (!std::isfinite(mismatch)) throw ValidationError("phase mismatch must be finite");
    angle_grid.validate();
    if (angle_grid.unit != Unit::radians) throw ValidationError("far-field grid must be in external angles (radians)");
    if (!positive(rho.extent) || rho.nodes_x < 1 || rho.nodes_y < 1) {
        throw ValidationError("pump-plane quadrature needs a positive extent and node counts");
    }
}

std::vector<std::string> PdcParams::warnings() const {
    std::vector<std::string> out;
    // Narrow-band pump: the pump's angular width sqrt(2)/w_p must stay well
    // below the PDC angular width sqrt(k_p / 2L).
    const double pump_width = std::sqrt(2.0) / waist();
    const double pdc_width = std::sqrt(k_p() / (2.0 * crystal_length));
    if (pump_width > 0.3 * pdc_width) {
        std::ostringstream os;
        os << "narrow-band pump approximation is doubtful: pump angular width is " << pump_width / pdc_width
           << " of the PDC width (pump FWHM should be well above 30 um)";
        out.push_back(os.str());
    }

    const double per_waist_x = rho.nodes_x / (2.0 * rho.extent);
    const double per_waist_y = rho.nodes_y / (2.0 * rho.extent * ellipticity);
    if (std::min(per_waist_x, per_waist_y) < 8.0) {
        out.push_back("pump-plane quadrature has fewer than 8 nodes per pump waist");
    }
    // The phase q.rho must be resolved across the pump plane.
    const double theta_x = std::max(std::abs(angle_grid.x(0)), std::abs(angle_grid.x(angle_grid.nx - 1)));
    const double theta_y = std::max(std::abs(angle_grid.y(0)), std::abs(angle_grid.y(angle_grid.ny - 1)));
    const double need_x = 2.0 * k_s() * theta_x * rho.extent * waist() / std::numbers::pi;
    const double need_y = 2.0 * k_s() * theta_y * rho.extent * ellipticity * waist() / std::numbers::pi;
    if (rho.nodes_x < need_x || rho.nodes_y < need_y) {
        std::ostringstream os;
        os << "pump-plane quadrature under-resolves the far-field phase: need about " << std::ceil(need_x)
           << " x " << std::ceil(need_y) << " nodes, have " << rho.nodes_x << " x " << rho.nodes_y;
        out.push_back(os.str());
    }
    return out;
}

double pump_amplitude(const PdcParams& p, double x, double y) {
    const double w = p.waist();
    const double e = p.ellipticity;
    return (p.gain / p.crystal_length) * std::exp(-(x * x + y * y / (e * e)) / (2.0 * w * w));
}

double phase_mismatch(const PdcParams& p, double qx, double qy) {
    return p.mismatch - (qx * qx + qy * qy) / p.k_s();
}

double sinhc_kernel(double gamma_sq, double length) {
    const double z = gamma_sq * length * length;
    if (std::abs(z) < 1e-3) {
        // Taylor series of sinh(sqrt z)/sqrt z, valid on both sides of zero.
        return length * (1.0 + z / 6.0 * (1.0 + z / 20.0 * (1.0 + z / 42.0 * (1.0 + z / 72.0))));
    }
    if (z > 0.0) {
        const double s = std::sqrt(z);
        return length * std::sinh(s) / s;
    }
    const double s = std::sqrt(-z);
    return length * std::sin(s) / s;
}

double gain_kernel(const PdcParams& p, double qx, double qy, double x, double y) {
    const double sa = pump_amplitude(p, x, y);
    const double delta = phase_mismatch(p, qx, qy);
    return sinhc_kernel(sa * sa - 0.25 * delta * delta, p.crystal_length);
}

PixelGrid external_angles(const PdcParams& params) {
    params.angle_grid.validate();
    if (params.angle_grid.unit != Unit::radians) throw ValidationError("far-field grid must be in radians");
    return params.angle_grid;
}

PdcSimulation g1_pdc(const PdcParams& params, const PdcLimits& limits) {
    params.validate();
    const PixelGrid grid = external_angles(params);
    const std::size_t n = grid.size();
    if (n * n * sizeof(double) > limits.max_matrix_bytes) {
        std::ostringstream os;
        os << "a " << n << " x " << n << " correlation matrix needs " << (n * n * sizeof(double)) / (1u << 20)
           << " MiB, above the " << limits.max_matrix_bytes / (1u << 20) << " MiB limit; bin the far-field grid";
        throw ResourceError(os.str());
    }

    PdcSimulation out;
    out.warnings = params.warnings();

    const auto ni = static_cast<Eigen::Index>(n);
    const double ks = params.k_s();
    Eigen::VectorXd qx(ni);
    Eigen::VectorXd qy(ni);
    Eigen::VectorXd delta_sq(ni);
    for (std::size_t k = 0; k < n; ++k) {
        const PixelIndex px = unflat_index(grid, k);
        const auto i = static_cast<Eigen::Index>(k);
        qx(i) = ks * grid.x(px.ix);
        qy(i) = ks * grid.y(px.iy);
        const double d = phase_mismatch(params, qx(i), qy(i));
        delta_sq(i) = 0.25 * d * d;
    }

    const double w = params.waist();
    const QuadratureRule rx = gauss_legendre(params.rho.nodes_x, -params.rho.extent * w, params.rho.extent * w);
    const double hy = params.rho.extent * params.ellipticity * w;
    const QuadratureRule ry = gauss_legendre(params.rho.nodes_y, -hy, hy);
    const std::size_t m_total = rx.nodes.size() * ry.nodes.size();

    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(ni, ni);
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, limits.rho_chunk));
    Eigen::MatrixXd b;
    for (std::size_t start = 0; start < m_total; start += chunk) {
        const std::size_t count = std::min(chunk, m_total - start);
        const auto c = static_cast<Eigen::Index>(count);
        b.resize(ni, 2 * c);
        for (std::size_t j = 0; j < count; ++j) {
            const std::size_t node = start + j;
            const std::size_t jy = node / rx.nodes.size();
            const std::size_t jx = node % rx.nodes.size();
            const double x = rx.nodes[jx];
            const double y = ry.nodes[jy];
            const double sa = pump_amplitude(params, x, y);
            const double amp = std::sqrt(rx.weights[jx] * ry.weights[jy]) * sa;
            const double sa_sq = sa * sa;
            const auto col = static_cast<Eigen::Index>(j);
            for (Eigen::Index i = 0; i < ni; ++i) {
                const double coeff = amp * sinhc_kernel(sa_sq - delta_sq(i), params.crystal_length);
                const double phase = qx(i) * x + qy(i) * y;
                b(i, col) = coeff * std::cos(phase);
                b(i, c + col) = coeff * std::sin(phase);
            }
        }
        g.selfadjointView<Eigen::Lower>().rankUpdate(b);
    }
    b.resize(0, 0);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();

    const double trace = g.trace();
    if (!(trace > 0.0)) throw NumericalError("simulated correlation function has non-positive trace");
    g /= trace;

    const double peak = g.maxCoeff();
    const double floor = -1e-6 * peak;
    std::size_t negative = 0;
    double most_negative = 0.0;
    for (double& v : g.reshaped()) {
        if (v < floor) ++negative;
        most_negative = std::min(most_negative, v);
        v = std::abs(v);
    }
    out.negative_fraction = static_cast<double>(negative) / static_cast<double>(n * n);
    out.min_over_max = most_negative / peak;
    if (negative > 0) {
        std::ostringstream os;
        os << 100.0 * out.negative_fraction << "% of the correlation entries were negative (down to "
           << out.min_over_max << " of the maximum) before taking the absolute value";
        out.warnings.push_back(os.str());
    }

    out.g1.grid = grid;
    out.g1.kind = CovKind::abs_g1;
    out.g1.data = std::move(g);
    return out;
}

PdcParams pdc_params_from_text(const std::string& text) {
    KeyValues kv = KeyValues::parse(text);
    PdcParams p;
    p.gain = kv.get_double("gain", p.gain);
    p.fwhm_x = kv.get_double("fwhm_x", p.fwhm_x);
    p.ellipticity = kv.get_double("ellipticity", p.ellipticity);
    p.mismatch = kv.get_double("mismatch", p.mismatch);
    p.crystal_length = kv.get_double("crystal_length", p.crystal_length);
    p.lambda_p = kv.get_double("lambda_p", p.lambda_p);
    p.n_p = kv.get_double("n_p", p.n_p);
    p.n_s = kv.get_double("n_s", p.n_s);

    const int nx = kv.get_int("grid_nx", p.angle_grid.nx);
    const int ny = kv.get_int("grid_ny", p.angle_grid.ny);
    const double half = kv.get_double("angle_half_width", 35e-3);
    const double half_x = kv.get_double("angle_half_width_x", half);
    const double half_y = kv.get_double("angle_half_width_y", half);
    if (!(half_x > 0.0) || !(half_y > 0.0) || nx < 1 || ny < 1) {
        throw ValidationError("far-field grid needs positive size and half-width");
    }
    p.angle_grid = centered_grid(nx, ny, 2.0 * half_x / nx, 2.0 * half_y / ny, Unit::radians);

    p.rho.extent = kv.get_double("rho_extent", p.rho.extent);
    const int nodes = kv.get_int("rho_nodes", 0);
    p.rho.nodes_x = kv.get_int("rho_nodes_x", nodes > 0 ? nodes : p.rho.nodes_x);
    p.rho.nodes_y = kv.get_int("rho_nodes_y", nodes > 0 ? nodes : p.rho.nodes_y);
    kv.reject_unused();
    p.validate();
    return p;
}

}  // namespace modekit
