#include <cmath>

#include "doctest.h"

#include "modekit/error.hpp"
#include "modekit/fiber_sim.hpp"

using namespace modekit;

namespace {

// Bessel's integral J_n(x) = (1/pi) int_0^pi cos(n t - x sin t) dt; the
// trapezoid rule is spectrally accurate for this periodic integrand.
double j_integral(int n, double x) {
    const int steps = 400;
    double s = 0.0;
    for (int k = 0; k <= steps; ++k) {
        const double t = M_PI * k / steps;
        const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
        s += w * std::cos(n * t - x * std::sin(t));
    }
    return s / steps;
}

double zero_oracle(int n, double lo, double hi) {
    double flo = j_integral(n, lo);
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = j_integral(n, mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

FiberParams with_na(double na) {
    FiberParams p;
    p.numerical_aperture = na;
    return p;
}

}  // namespace

TEST_SUITE("fiber_sim") {

TEST_CASE("Bessel zeros match a bracketed root find on Bessel's integral") {
    CHECK(bessel_j_zero(0, 1) == doctest::Approx(zero_oracle(0, 2.0, 3.0)).epsilon(1e-11));
    CHECK(bessel_j_zero(0, 2) == doctest::Approx(zero_oracle(0, 5.0, 6.0)).epsilon(1e-11));
    CHECK(bessel_j_zero(1, 1) == doctest::Approx(zero_oracle(1, 3.5, 4.0)).epsilon(1e-11));
    CHECK(bessel_j_zero(2, 1) == doctest::Approx(zero_oracle(2, 5.0, 5.5)).epsilon(1e-11));
    CHECK(bessel_j_zero(3, 2) == doctest::Approx(zero_oracle(3, 9.5, 10.0)).epsilon(1e-11));
    CHECK_THROWS_AS(bessel_j_zero(0, 0), RangeError);
}

TEST_CASE("LP11 cutoff is the first zero of J0") {
    const auto c = lp_cutoffs(with_na(0.14));
    REQUIRE(c.size() >= 2);
    CHECK(c[0].l == 0);
    CHECK(c[0].cutoff_v == 0.0);
    CHECK(c[1].l == 1);
    CHECK(c[1].m == 1);
    CHECK(std::abs(c[1].cutoff_v - 2.404825557695773) < 1e-6);
    CHECK(c[1].multiplicity == 2);
}

TEST_CASE("single-mode fiber below V = 2.405") {
    FiberParams p = with_na(0.04);
    REQUIRE(p.v_number() < 2.405);
    const auto c = lp_cutoffs(p);
    REQUIRE(c.size() == 1);
    CHECK(supported_mode_count(p) == 1);
}

TEST_CASE("mode count grows with NA and counts orientations twice") {
    int previous = 0;
    for (double na = 0.05; na <= 0.3; na += 0.01) {
        const FiberParams p = with_na(na);
        int count = 0;
        for (const auto& c : lp_cutoffs(p)) {
            CHECK(c.cutoff_v < p.v_number());
            count += c.l == 0 ? 1 : 2;
        }
        CHECK(count == supported_mode_count(p));
        CHECK(count >= previous);
        previous = count;
    }
}

TEST_CASE("dispersion roots satisfy the eigenvalue equation and field continuity") {
    const FiberParams p = with_na(0.2);
    const double v = p.v_number();
    for (const auto& c : lp_cutoffs(p)) {
        const LpRoot r = solve_lp_dispersion(v, c.l, c.m);
        CHECK(r.residual < 1e-10);
        CHECK(r.u > 0.0);
        CHECK(r.w > 0.0);
        CHECK(r.u * r.u + r.w * r.w == doctest::Approx(v * v).epsilon(1e-14));
        // Logarithmic derivatives of the core and cladding fields at r = a.
        const int l = c.l;
        const double jl = std::cyl_bessel_j(l, r.u);
        const double djl = 0.5 * (std::cyl_bessel_j(std::abs(l - 1), r.u) * (l == 0 ? -1.0 : 1.0) - std::cyl_bessel_j(l + 1, r.u));
        const double kl = std::cyl_bessel_k(l, r.w);
        const double dkl = -0.5 * (std::cyl_bessel_k(std::abs(l - 1), r.w) + std::cyl_bessel_k(l + 1, r.w));
        const double inside = r.u * djl / jl;
        const double outside = r.w * dkl / kl;
        CHECK(std::abs(inside - outside) <= 1e-9 * std::abs(inside));
    }
    CHECK_THROWS_AS(solve_lp_dispersion(v, 9, 1), RangeError);
}

TEST_CASE("LP01 is radially symmetric and peaked at the centre") {
    FiberParams p = with_na(0.14);
    p.grid = centered_grid(49, 49, 7.0 * p.core_radius / 49, 7.0 * p.core_radius / 49);
    const Image u = lp_profile(p, 0, 1, Orientation::cos);
    CHECK(u(24, 24) == doctest::Approx(u.maxCoeff()));
    for (int i = 25; i < 49; ++i) CHECK(u(24, i) < u(24, i - 1));
    CHECK(u(24, 30) == doctest::Approx(u(30, 24)).epsilon(1e-12));
    CHECK(u(24, 30) == doctest::Approx(u(24, 18)).epsilon(1e-12));
    const double edge = std::max({u.row(0).abs().maxCoeff(), u.col(0).abs().maxCoeff()});
    CHECK(edge < 1e-3 * u.maxCoeff());
    CHECK((u.square().sum() * p.grid.pixel_area()) == doctest::Approx(1.0));
}

TEST_CASE("LP11 changes sign across x = 0 and rotates into its sin partner") {
    const FiberParams p = with_na(0.14);
    const Image c = lp_profile(p, 1, 1, Orientation::cos);
    const Image s = lp_profile(p, 1, 1, Orientation::sin);
    const int n = p.grid.nx;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n / 2; ++ix) CHECK(c(iy, ix) == doctest::Approx(-c(iy, n - 1 - ix)));
    }
    CHECK(c(n / 2, 3 * n / 4) > 0.0);
    // A quarter turn of the cos pattern on the centred square grid gives the sin pattern.
    double worst = 0.0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) worst = std::max(worst, std::abs(s(iy, ix) - c(n - 1 - ix, iy)));
    CHECK(worst < 1e-3 * c.abs().maxCoeff());
    CHECK_THROWS_AS(lp_profile(p, 0, 1, Orientation::sin), RangeError);
    CHECK_THROWS_AS(lp_profile(p, 7, 1, Orientation::cos), RangeError);
}

TEST_CASE("LP mode set is orthonormal and complete") {
    const FiberParams p = with_na(0.14);
    const ModeSet set = lp_modeset(p);
    CHECK(set.size() == static_cast<std::size_t>(supported_mode_count(p)));
    CHECK(lp_mode_list(p).size() == set.size());
    for (std::size_t a = 0; a < set.size(); ++a) {
        CHECK(fidelity(set.grid, set.profiles[a], set.profiles[a]) == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t b = a + 1; b < set.size(); ++b) CHECK(fidelity(set.grid, set.profiles[a], set.profiles[b]) < 1e-6);
    }
    CHECK(lp_mode_list(p)[1].name() == "LP11c");
}

TEST_CASE("fiber parameter parsing") {
    const FiberParams p = fiber_params_from_text("core_radius = 5e-6\nn_core = 1.4504\nn_clad = 1.4447\ngrid_nx = 32\ngrid_ny = 32\n");
    CHECK(p.numerical_aperture == doctest::Approx(std::sqrt(1.4504 * 1.4504 - 1.4447 * 1.4447)));
    CHECK(p.grid.nx == 32);
    CHECK_THROWS_AS(fiber_params_from_text("numerical_aperture = 1.2\n"), ValidationError);
    CHECK_THROWS_AS(fiber_params_from_text("numerical_aperture = 0.1\nn_core = 1.5\nn_clad = 1.4\n"), FormatError);
}

}
