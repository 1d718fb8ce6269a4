#include "modekit/fiber_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "modekit/error.hpp"
#include "modekit/params.hpp"

namespace modekit {

namespace {

// J_{-1} = -J_1 and K_{-1} = K_1 cover the l = 0 branch of the dispersion relation.
double bessel_j(int nu, double x) {
    if (nu < 0) return ((-nu) % 2 ? -1.0 : 1.0) * std::cyl_bessel_j(static_cast<double>(-nu), x);
    return std::cyl_bessel_j(static_cast<double>(nu), x);
}

double bessel_k(int nu, double x) { return std::cyl_bessel_k(static_cast<double>(std::abs(nu)), x); }

// Left and right sides of u J_{l-1}(u) / J_l(u) = -w K_{l-1}(w) / K_l(w).
struct Sides {
    double lhs;
    double rhs;
};

Sides dispersion_sides(double v, int l, double u) {
    const double w = std::sqrt(std::max(0.0, v * v - u * u));
    const double lhs = u * bessel_j(l - 1, u) / bessel_j(l, u);
    const double rhs = w > 0.0 ? -w * bessel_k(l - 1, w) / bessel_k(l, w) : 0.0;
    return {lhs, rhs};
}

double lp_cutoff_v(int l, int m) {
    if (l == 0) return m == 1 ? 0.0 : bessel_j_zero(1, m - 1);
    return bessel_j_zero(l - 1, m);
}

}  // namespace

double FiberParams::v_number() const {
    return 2.0 * std::numbers::pi * core_radius * numerical_aperture / wavelength;
}

void FiberParams::validate() const {
    if (!(core_radius > 0.0) || !std::isfinite(core_radius)) throw ValidationError("core radius must be positive");
    if (!(numerical_aperture > 0.0 && numerical_aperture < 1.0)) {
        throw ValidationError("numerical aperture must lie in (0, 1)");
    }
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw ValidationError("wavelength must be positive");
    grid.validate();
    if (grid.unit != Unit::meters) throw ValidationError("fiber profiles need a near-field grid in meters");
}

double bessel_j_zero(int nu, int k) {
    if (nu < 0 || k < 1) throw RangeError("bessel_j_zero needs nu >= 0 and k >= 1");
    const double step = 0.1;
    double a = 1e-6;
    double fa = bessel_j(nu, a);
    int found = 0;
    for (;;) {
        const double b = a + step;
        const double fb = bessel_j(nu, b);
        if (fa == 0.0 && a > 1e-6) {
            if (++found == k) return a;
        } else if ((fa < 0.0) != (fb < 0.0) && fb != 0.0) {
            if (++found == k) {
                double lo = a;
                double hi = b;
                for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    if ((bessel_j(nu, mid) < 0.0) == (fa < 0.0)) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        a = b;
        fa = fb;
    }
}

std::vector<LpCutoff> lp_cutoffs(const FiberParams& params) {
    params.validate();
    const double v = params.v_number();
    std::vector<LpCutoff> out;
    for (int l = 0;; ++l) {
        if (lp_cutoff_v(l, 1) >= v) break;
        for (int m = 1;; ++m) {
            const double c = lp_cutoff_v(l, m);
            if (c >= v) break;
            out.push_back({l, m, c, l == 0 ? 1 : 2});
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LpCutoff& a, const LpCutoff& b) { return a.cutoff_v < b.cutoff_v; });
    return out;
}

int supported_mode_count(const FiberParams& params) {
    int n = 0;
    for (const auto& c : lp_cutoffs(params)) n += c.multiplicity;
    return n;
}

LpRoot solve_lp_dispersion(double v, int l, int m) {
    if (l < 0 || m < 1) throw RangeError("LP mode needs l >= 0 and m >= 1");
    const double lo0 = lp_cutoff_v(l, m);
    if (lo0 >= v) {
        throw RangeError("LP" + std::to_string(l) + std::to_string(m) + " is not guided at V = " + std::to_string(v));
    }
    const double hi0 = std::min(bessel_j_zero(l, m), v);

    auto f = [&](double u) {
        const Sides s = dispersion_sides(v, l, u);
        return s.lhs - s.rhs;
    };
    // The bracket endpoints are poles or zeros of the two sides; probe just inside.
    const double span = hi0 - lo0;
    double lo = lo0 + 1e-12 * span;
    double hi = hi0 - 1e-12 * span;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0)) {
        throw NumericalError("dispersion root of LP" + std::to_string(l) + std::to_string(m) + " is not bracketed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    LpRoot root;
    root.u = 0.5 * (lo + hi);
    root.w = std::sqrt(std::max(0.0, v * v - root.u * root.u));
    const Sides s = dispersion_sides(v, l, root.u);
    root.residual = std::abs(s.lhs - s.rhs) / std::max({std::abs(s.lhs), std::abs(s.rhs), 1e-300});
    return root;
}

Image lp_profile(const FiberParams& params, int l, int m, Orientation orientation) {
    params.validate();
    if (l == 0 && orientation == Orientation::sin) throw RangeError("LP0m modes have no sin orientation");
    const LpRoot root = solve_lp_dispersion(params.v_number(), l, m);
    const PixelGrid& g = params.grid;
    const double a = params.core_radius;
    const double ju = bessel_j(l, root.u);
    const double kw = bessel_k(l, root.w);

    Image img(g.ny, g.nx);
    for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) {
            const double x = g.x(ix);
            const double y = g.y(iy);
            const double r = std::hypot(x, y);
            const double radial = r <= a ? bessel_j(l, root.u * r / a) / ju : bessel_k(l, root.w * r / a) / kw;
            const double phi = std::atan2(y, x);
            const double angular = orientation == Orientation::cos ? std::cos(l * phi) : std::sin(l * phi);
            img(iy, ix) = radial * angular;
        }
    }
    const double norm = std::sqrt(img.square().sum() * g.pixel_area());
    if (!(norm > 0.0)) throw NumericalError("LP profile vanishes on the grid");
    img /= norm;
    return img;
}

std::string LpMode::name() const {
    std::string s = "LP" + std::to_string(l) + std::to_string(m);
    if (l > 0) s += orientation == Orientation::cos ? "c" : "s";
    return s;
}

std::vector<LpMode> lp_mode_list(const FiberParams& params) {
    std::vector<LpMode> out;
    for (const auto& c : lp_cutoffs(params)) {
        out.push_back({c.l, c.m, Orientation::cos});
        if (c.l > 0) out.push_back({c.l, c.m, Orientation::sin});
    }
    return out;
}

ModeSet lp_modeset(const FiberParams& params) {
    const auto list = lp_mode_list(params);
    const PixelGrid& g = params.grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    const auto count = static_cast<Eigen::Index>(list.size());

    Eigen::MatrixXd p(n, count);
    for (Eigen::Index k = 0; k < count; ++k) {
        const auto& mode = list[static_cast<std::size_t>(k)];
        p.col(k) = unfold_image(g, lp_profile(params, mode.l, mode.m, mode.orientation));
    }
    const Eigen::MatrixXd overlap = (p.transpose() * p) * g.pixel_area();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(overlap);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalError("LP profiles are linearly dependent on this grid");
    }
    p = p * es.operatorInverseSqrt();

    ModeSet set;
    set.grid = g;
    set.weights.assign(list.size(), 1.0 / static_cast<double>(list.size()));
    for (Eigen::Index k = 0; k < count; ++k) set.profiles.push_back(fold_vector(g, Eigen::VectorXd(p.col(k))));
    return set;
}

FiberParams fiber_params_from_text(const std::string& text) {
    KeyValues kv = KeyValues::parse(text);
    FiberParams p;
    p.core_radius = kv.get_double("core_radius", p.core_radius);
    p.wavelength = kv.get_double("wavelength", p.wavelength);
    if (kv.has("n_core") || kv.has("n_clad")) {
        if (kv.has("numerical_aperture")) throw FormatError("give either numerical_aperture or n_core/n_clad");
        const double n1 = kv.get_double("n_core", 0.0);
        const double n2 = kv.get_double("n_clad", 0.0);
        if (!(n1 > n2 && n2 >= 1.0)) throw ValidationError("need n_core > n_clad >= 1");
        p.numerical_aperture = std::sqrt(n1 * n1 - n2 * n2);
    } else {
        p.numerical_aperture = kv.get_double("numerical_aperture", p.numerical_aperture);
    }
    const int nx = kv.get_int("grid_nx", p.grid.nx);
    const int ny = kv.get_int("grid_ny", p.grid.ny);
    const double half = kv.get_double("half_width", 3.5 * p.core_radius);
    if (!(half > 0.0) || nx < 1 || ny < 1) throw ValidationError("grid needs positive size and half-width");
    p.grid = centered_grid(nx, ny, 2.0 * half / nx, 2.0 * half / ny, Unit::meters);
    kv.reject_unused();
    p.validate();
    return p;
}

}  // namespace modekit
