#include <cmath>

#include "doctest.h"

#include "modekit/error.hpp"
#include "modekit/pdc_sim.hpp"

using namespace modekit;

namespace {

PdcParams small_params(int n, double half_angle) {
    PdcParams p;
    p.angle_grid = centered_grid(n, n, 2.0 * half_angle / n, 2.0 * half_angle / n, Unit::radians);
    p.rho.nodes_x = 64;
    p.rho.nodes_y = 64;
    return p;
}

double at(const FlatCovariance& c, const PixelGrid& g, int ix, int iy, int jx, int jy) {
    return c.data(static_cast<Eigen::Index>(flat_index(g, ix, iy)), static_cast<Eigen::Index>(flat_index(g, jx, jy)));
}

}  // namespace

TEST_SUITE("pdc_sim") {

TEST_CASE("sinhc kernel is continuous through zero") {
    const double L = 2e-3;
    CHECK(sinhc_kernel(0.0, L) == L);
    for (double z : {-2e-3, -1.0001e-3, -0.9999e-3, 0.9999e-3, 1.0001e-3, 2e-3}) {
        const double g2 = z / (L * L);
        const double direct = z > 0 ? std::sinh(std::sqrt(z)) / std::sqrt(g2) : std::sin(std::sqrt(-z)) / std::sqrt(-g2);
        CHECK(sinhc_kernel(g2, L) == doctest::Approx(direct).epsilon(1e-14));
    }
    CHECK(sinhc_kernel(4.0 / (L * L), L) == doctest::Approx(std::sinh(2.0) / 2.0 * L));
    CHECK(sinhc_kernel(-M_PI * M_PI / (L * L), L) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("default parameters") {
    const PdcParams p;
    CHECK(p.lambda_s() == doctest::Approx(2.0 * 354.67e-9));
    CHECK(p.waist() == doctest::Approx(140e-6 / (2.0 * std::sqrt(std::log(2.0)))));
    CHECK(p.k_s() == doctest::Approx(2.0 * M_PI * 1.66 / (2.0 * 354.67e-9)));
    CHECK(pump_amplitude(p, 0.0, 0.0) == doctest::Approx(3.8 / 2e-3));
    // Half maximum of the pump intensity at x = FWHM / 2.
    const double a = pump_amplitude(p, 70e-6, 0.0) / pump_amplitude(p, 0.0, 0.0);
    CHECK(a * a == doctest::Approx(0.5));
    CHECK(phase_mismatch(p, 0.0, 0.0) == -50.0);
}

TEST_CASE("low-gain limit matches the Gaussian Fourier-pair oracle") {
    PdcParams p = small_params(8, 6e-3);
    p.gain = 1e-4;
    p.ellipticity = 1.3;
    const PdcSimulation sim = g1_pdc(p);
    const PixelGrid& g = sim.g1.grid;
    const double w = p.waist();
    const double L = p.crystal_length;
    const auto n = static_cast<Eigen::Index>(g.size());
    // S -> L sinc(Delta L / 2) and the pump-plane integral of A^2 cos(dq.rho) is a Gaussian in dq.
    Eigen::MatrixXd oracle(n, n);
    auto s = [&](double qx, double qy) {
        const double h = 0.5 * phase_mismatch(p, qx, qy) * L;
        return L * (h == 0.0 ? 1.0 : std::sin(h) / h);
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const PixelIndex a = unflat_index(g, static_cast<std::size_t>(i));
        const double ax = p.k_s() * g.x(a.ix), ay = p.k_s() * g.y(a.iy);
        for (Eigen::Index j = 0; j < n; ++j) {
            const PixelIndex b = unflat_index(g, static_cast<std::size_t>(j));
            const double bx = p.k_s() * g.x(b.ix), by = p.k_s() * g.y(b.iy);
            const double dx = ax - bx, dy = ay - by;
            oracle(i, j) = s(ax, ay) * s(bx, by) *
                           std::exp(-(dx * dx * w * w + dy * dy * p.ellipticity * p.ellipticity * w * w) / 4.0);
        }
    }
    oracle = (oracle / oracle.trace()).cwiseAbs();
    const double rel = (sim.g1.data - oracle).cwiseAbs().maxCoeff() / oracle.maxCoeff();
    CHECK(rel < 1e-6);
}

TEST_CASE("correlation function is symmetric, unit trace and parity invariant") {
    const PdcParams p = small_params(8, 10e-3);
    const PdcSimulation sim = g1_pdc(p);
    const PixelGrid& g = sim.g1.grid;
    CHECK(sim.g1.kind == CovKind::abs_g1);
    CHECK(sim.g1.data.trace() == doctest::Approx(1.0));
    CHECK(asymmetry(sim.g1.data) == 0.0);
    CHECK((sim.g1.data.array() >= 0.0).all());
    const double scale = sim.g1.data.maxCoeff();
    for (int ix = 0; ix < 8; ++ix) {
        for (int jx = 0; jx < 8; ++jx) {
            const double v = at(sim.g1, g, ix, 2, jx, 5);
            CHECK(std::abs(v - at(sim.g1, g, 7 - ix, 2, 7 - jx, 5)) < 1e-10 * scale);  // x mirror
            CHECK(std::abs(v - at(sim.g1, g, ix, 5, jx, 2)) < 1e-10 * scale);          // y mirror
        }
    }
}

TEST_CASE("round pump gives a rotation-invariant correlation function") {
    PdcParams p = small_params(6, 8e-3);
    p.ellipticity = 1.0;
    const PdcSimulation sim = g1_pdc(p);
    const PixelGrid& g = sim.g1.grid;
    const double scale = sim.g1.data.maxCoeff();
    // Quarter turn on a centred square grid: (ix, iy) -> (n-1-iy, ix).
    double worst = 0.0;
    for (int a = 0; a < 36; ++a) {
        for (int b = 0; b < 36; ++b) {
            const int ix = a % 6, iy = a / 6, jx = b % 6, jy = b / 6;
            worst = std::max(worst, std::abs(at(sim.g1, g, ix, iy, jx, jy) - at(sim.g1, g, 5 - iy, ix, 5 - jy, jx)));
        }
    }
    CHECK(worst < 1e-10 * scale);
}

TEST_CASE("memory limit is enforced before allocation") {
    PdcLimits lim;
    lim.max_matrix_bytes = 1000;
    CHECK_THROWS_AS(g1_pdc(small_params(8, 5e-3), lim), ResourceError);
}

TEST_CASE("validation and warnings") {
    PdcParams p;
    CHECK(p.warnings().empty());
    p.fwhm_x = 20e-6;
    CHECK_FALSE(p.warnings().empty());
    p = PdcParams{};
    p.angle_grid.unit = Unit::meters;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = PdcParams{};
    p.n_s = 0.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("parameter file parsing") {
    const PdcParams p = pdc_params_from_text(
        "# pump\ngain = 2.5\nfwhm_x = 1.5e-4  # metres\ngrid_nx = 16\ngrid_ny = 8\nangle_half_width = 0.02\nrho_nodes = 32\n");
    CHECK(p.gain == 2.5);
    CHECK(p.fwhm_x == 1.5e-4);
    CHECK(p.angle_grid.nx == 16);
    CHECK(p.angle_grid.ny == 8);
    CHECK(p.angle_grid.dx == doctest::Approx(0.04 / 16));
    CHECK(p.rho.nodes_y == 32);
    CHECK(p.mismatch == -50.0);
    CHECK_THROWS_AS(pdc_params_from_text("gian = 3\n"), FormatError);
    CHECK_THROWS_AS(pdc_params_from_text("gain = fast\n"), FormatError);
    CHECK_THROWS_AS(pdc_params_from_text("gain 3\n"), FormatError);
}

}
