#include "modekit/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "modekit/error.hpp"

namespace modekit {

void ModeSet::validate() const {
    grid.validate();
    if (profiles.size() != weights.size()) throw ShapeError("mode set has different numbers of weights and profiles");
    for (std::size_t m = 0; m < weights.size(); ++m) {
        if (!std::isfinite(weights[m]) || weights[m] < 0.0) {
            throw DataError("mode weight " + std::to_string(m) + " is negative or non-finite");
        }
        if (m > 0 && weights[m] > weights[m - 1]) throw ValidationError("mode weights are not in descending order");
        if (profiles[m].rows() != grid.ny || profiles[m].cols() != grid.nx) {
            throw ShapeError("mode profile " + std::to_string(m) + " does not match the grid");
        }
    }
}

Decomposition decompose(FlatCovariance g1, const DecomposeOptions& opts) {
    const PixelGrid grid = g1.grid;
    grid.validate();
    const std::size_t n = grid.size();
    if (g1.data.rows() != g1.data.cols() || g1.size() != n) {
        throw ShapeError("correlation matrix size does not match its grid");
    }
    if (n > opts.max_pixels) {
        std::ostringstream os;
        os << "grid has " << n << " pixels, above the configured maximum of " << opts.max_pixels
           << "; crop or bin the frames";
        throw RangeError(os.str());
    }
    if (!g1.data.allFinite()) throw DataError("correlation matrix has non-finite entries");
    const double asym = asymmetry(g1.data);
    if (asym > opts.symmetry_tolerance) {
        std::ostringstream os;
        os << "correlation matrix is not symmetric (relative asymmetry " << asym << ")";
        throw ValidationError(os.str());
    }

    Decomposition out;
    DecomposeReport& report = out.report;
    const double trace = g1.data.trace();

    bool iterative = false;
    switch (opts.solver) {
        case EigenSolverKind::dense: iterative = false; break;
        case EigenSolverKind::top_k: iterative = true; break;
        case EigenSolverKind::automatic: iterative = n > opts.dense_limit; break;
    }

    SymmetricEigen eig;
    if (iterative) {
        const std::size_t k = std::min(opts.top_k, n);
        eig = top_k_symmetric_eigen(g1.data, k, opts.iterative);
        g1.data.resize(0, 0);
        report.used_top_k = true;
        report.iterations = eig.iterations;
        report.converged = eig.converged;
        report.max_residual = eig.max_residual;
        if (!eig.converged) {
            std::ostringstream os;
            os << "top-k eigensolver stopped after " << eig.iterations << " iterations with relative residual "
               << eig.max_residual;
            report.warnings.push_back(os.str());
        }
    } else {
        eig = dense_symmetric_eigen(std::move(g1.data));
        if (eig.used_fallback) {
            report.warnings.push_back("LAPACK eigenvectors failed the residual check; used Eigen's solver");
        }
    }

    double clamped_mass = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) < 0.0) {
            clamped_mass += -eig.values(i);
            eig.values(i) = 0.0;
            ++report.clamped_count;
        }
    }
    report.clamped_mass_fraction = trace != 0.0 ? clamped_mass / std::abs(trace) : 0.0;
    if (report.clamped_mass_fraction > 1e-3) {
        std::ostringstream os;
        os << "clamped negative eigenvalues carry " << 100.0 * report.clamped_mass_fraction << "% of the trace";
        report.warnings.push_back(os.str());
    }

    const double area = grid.pixel_area();
    const double inv_sqrt_area = 1.0 / std::sqrt(area);
    ModeSet& modes = out.modes;
    modes.grid = grid;
    modes.normalization = ModeNormalization::unit_l2_modes;
    const auto count = static_cast<std::size_t>(eig.values.size());
    modes.weights.resize(count);
    modes.profiles.reserve(count);
    for (std::size_t m = 0; m < count; ++m) {
        const auto col = static_cast<Eigen::Index>(m);
        modes.weights[m] = eig.values(col) * area;
        auto v = eig.vectors.col(col);
        Eigen::Index peak = 0;
        v.cwiseAbs().maxCoeff(&peak);
        const double sign = v(peak) < 0.0 ? -1.0 : 1.0;
        modes.profiles.push_back(fold_vector(grid, Eigen::VectorXd(v * (sign * inv_sqrt_area))));
    }
    return out;
}

double schmidt_number(const std::vector<double>& weights, std::optional<std::size_t> truncate) {
    if (truncate && *truncate == 0) throw RangeError("schmidt_number truncation must be >= 1");
    const std::size_t count = truncate ? std::min(*truncate, weights.size()) : weights.size();
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
        const double w = std::max(weights[m], 0.0);
        sum += w;
        sum_sq += w * w;
    }
    if (!(sum_sq > 0.0)) throw DegenerateError("all mode weights are zero");
    return sum * sum / sum_sq;
}

double schmidt_number(const ModeSet& modes, std::optional<std::size_t> truncate) {
    return schmidt_number(modes.weights, truncate);
}

MeanIntensity reconstruct_intensity(const ModeSet& modes, std::size_t n_modes) {
    if (n_modes < 1 || n_modes > modes.size()) {
        throw RangeError("requested " + std::to_string(n_modes) + " modes from a set of " +
                         std::to_string(modes.size()));
    }
    Image acc = zero_image(modes.grid);
    for (std::size_t m = 0; m < n_modes; ++m) acc += modes.weights[m] * modes.profiles[m].square();
    return {modes.grid, std::move(acc)};
}

double fidelity(const PixelGrid& grid, const Image& a, const Image& b) {
    if (a.rows() != grid.ny || a.cols() != grid.nx || b.rows() != grid.ny || b.cols() != grid.nx) {
        throw ShapeError("mode profiles are not on the same grid");
    }
    return std::abs((a * b).sum() * grid.pixel_area());
}

std::vector<ModeMatch> match_modes(const ModeSet& a, const ModeSet& b, std::size_t count) {
    if (!a.grid.same_as(b.grid, 1e-9)) throw ShapeError("mode sets are on different grids");
    if (count > a.size() || count > b.size()) {
        throw RangeError("match count " + std::to_string(count) + " exceeds a mode set size");
    }
    const auto c = static_cast<Eigen::Index>(count);
    Eigen::MatrixXd f(c, c);
    for (Eigen::Index i = 0; i < c; ++i) {
        for (Eigen::Index j = 0; j < c; ++j) {
            f(i, j) = fidelity(a.grid, a.profiles[static_cast<std::size_t>(i)], b.profiles[static_cast<std::size_t>(j)]);
        }
    }

    std::vector<ModeMatch> out;
    std::vector<bool> used_a(count, false);
    std::vector<bool> used_b(count, false);
    for (std::size_t step = 0; step < count; ++step) {
        double best = -1.0;
        Eigen::Index bi = 0;
        Eigen::Index bj = 0;
        for (Eigen::Index i = 0; i < c; ++i) {
            if (used_a[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < c; ++j) {
                if (used_b[static_cast<std::size_t>(j)]) continue;
                if (f(i, j) > best) {
                    best = f(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        used_a[static_cast<std::size_t>(bi)] = true;
        used_b[static_cast<std::size_t>(bj)] = true;
        out.push_back({static_cast<std::size_t>(bi), static_cast<std::size_t>(bj), best});
    }
    std::sort(out.begin(), out.end(), [](const ModeMatch& x, const ModeMatch& y) { return x.index_a < y.index_a; });
    return out;
}

ExponentialFit fit_exponential_decay(const std::vector<double>& weights, std::size_t count) {
    if (count < 2 || count > weights.size()) throw RangeError("exponential fit needs 2 <= count <= number of weights");
    Eigen::VectorXd x(static_cast<Eigen::Index>(count));
    Eigen::VectorXd y(static_cast<Eigen::Index>(count));
    for (std::size_t m = 0; m < count; ++m) {
        if (!(weights[m] > 0.0)) throw DataError("exponential fit needs positive weights");
        x(static_cast<Eigen::Index>(m)) = static_cast<double>(m);
        y(static_cast<Eigen::Index>(m)) = std::log(weights[m]);
    }
    const double xm = x.mean();
    const double ym = y.mean();
    const double sxx = (x.array() - xm).square().sum();
    const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
    ExponentialFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    const double ss_tot = (y.array() - ym).square().sum();
    const double ss_res = (y.array() - (fit.intercept + fit.slope * x.array())).square().sum();
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

std::vector<double> normalized_weights(const std::vector<double>& weights, std::optional<std::size_t> count) {
    const std::size_t c = count ? std::min(*count, weights.size()) : weights.size();
    const double sum = std::accumulate(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(c), 0.0);
    if (!(sum > 0.0)) throw DegenerateError("weights sum to zero");
    std::vector<double> out(weights.begin(), weights.begin() + static_cast<std::ptrdiff_t>(c));
    for (double& w : out) w /= sum;
    return out;
}

ModeSet truncate_modes(const ModeSet& modes, std::size_t n) {
    if (n > modes.size()) throw RangeError("cannot keep more modes than the set holds");
    ModeSet out;
    out.grid = modes.grid;
    out.normalization = modes.normalization;
    out.weights.assign(modes.weights.begin(), modes.weights.begin() + static_cast<std::ptrdiff_t>(n));
    out.profiles.assign(modes.profiles.begin(), modes.profiles.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
}

Eigen::MatrixXd reassemble(const ModeSet& modes) {
    const auto n = static_cast<Eigen::Index>(modes.grid.size());
    const auto m = static_cast<Eigen::Index>(modes.size());
    Eigen::MatrixXd u(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& p = modes.profiles[static_cast<std::size_t>(k)];
        u.col(k) = Eigen::Map<const Eigen::VectorXd>(p.data(), n) * std::sqrt(std::max(modes.weights[static_cast<std::size_t>(k)], 0.0));
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    out.selfadjointView<Eigen::Lower>().rankUpdate(u);
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
    return out;
}

}  // namespace modekit
