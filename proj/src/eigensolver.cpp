#include "modekit/eigensolver.hpp"

#include <algorithm>
#include <random>

#include <Eigen/Eigenvalues>
#include <lapacke.h>

#include "modekit/error.hpp"

namespace modekit {

namespace {

// Worst relative residual ||A v - l v|| / |l_1| and unit-norm deviation over all pairs,
// evaluated in column blocks to bound the extra memory.
double worst_residual(const Eigen::MatrixXd& a, const SymmetricEigen& e) {
    const double scale = std::max(e.values.cwiseAbs().maxCoeff(), 1e-300);
    const Eigen::Index n = e.vectors.cols();
    constexpr Eigen::Index block = 256;
    double worst = 0.0;
    Eigen::MatrixXd av;
    for (Eigen::Index j = 0; j < n; j += block) {
        const Eigen::Index w = std::min(block, n - j);
        const auto v = e.vectors.middleCols(j, w);
        av.noalias() = a * v;
        av -= v * e.values.segment(j, w).asDiagonal();
        worst = std::max(worst, av.colwise().norm().maxCoeff() / scale);
        worst = std::max(worst, (v.colwise().norm().array() - 1.0).abs().maxCoeff());
    }
    return worst;
}

}  // namespace

SymmetricEigen dense_symmetric_eigen(Eigen::MatrixXd&& a) {
    if (a.rows() != a.cols()) throw ShapeError("eigensolver needs a square matrix");
    const auto n = static_cast<lapack_int>(a.rows());
    SymmetricEigen out;
    if (n == 0) return out;

    const Eigen::MatrixXd original = a;
    Eigen::VectorXd w(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, a.data(), n, w.data());
    if (info != 0) {
        throw NumericalError("dsyevd failed with info = " + std::to_string(info));
    }
    // LAPACK returns ascending order.
    out.values = w.reverse();
    for (Eigen::Index j = 0; j < n / 2; ++j) a.col(j).swap(a.col(n - 1 - j));
    out.vectors = std::move(a);

    if (worst_residual(original, out) <= 1e-8) return out;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(original);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    out.used_fallback = true;
    return out;
}

namespace {

// Removes from w its components along the first `cols` columns of v (two
// classical Gram-Schmidt passes) and returns the accumulated coefficients.
Eigen::VectorXd project_out(const Eigen::MatrixXd& v, Eigen::Index cols, Eigen::VectorXd& w) {
    const auto basis = v.leftCols(cols);
    Eigen::VectorXd h = basis.transpose() * w;
    w.noalias() -= basis * h;
    const Eigen::VectorXd h2 = basis.transpose() * w;
    w.noalias() -= basis * h2;
    return h + h2;
}

}  // namespace

SymmetricEigen top_k_symmetric_eigen(const Eigen::MatrixXd& a, std::size_t k, const TopKOptions& opts) {
    if (a.rows() != a.cols()) throw ShapeError("eigensolver needs a square matrix");
    const Eigen::Index n = a.rows();
    if (k == 0 || static_cast<Eigen::Index>(k) > n) throw RangeError("top-k count must be in [1, N]");

    const auto kk = static_cast<Eigen::Index>(k);
    const std::size_t extra = opts.oversample ? opts.oversample : std::max<std::size_t>(k + 1, 20);
    const Eigen::Index m = std::min<Eigen::Index>(n, kk + static_cast<Eigen::Index>(extra));
    const Eigen::Index keep = std::min<Eigen::Index>(m - 1, kk + (m - kk) / 2);

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, m + 1);
    // Unit vector orthogonal to the first `cols` basis vectors, or zero if they span everything.
    auto fresh_direction = [&](Eigen::Index cols) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) w(i) = normal(rng);
        project_out(v, cols, w);
        const double norm = w.norm();
        return norm > 1e-12 ? Eigen::VectorXd(w / norm) : Eigen::VectorXd(Eigen::VectorXd::Zero(n));
    };
    v.col(0) = fresh_direction(0);

    // Projected matrix S = V^T A V; A V = V S + beta v_m e_m^T after each sweep.
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
    Eigen::Index start = 0;
    double beta = 0.0;
    double scale = 0.0;

    SymmetricEigen out;
    out.converged = false;
    Eigen::VectorXd theta;
    Eigen::MatrixXd y;
    Eigen::VectorXd w(n);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        for (Eigen::Index j = start; j < m; ++j) {
            w.noalias() = a * v.col(j);
            const Eigen::VectorXd h = project_out(v, j + 1, w);
            s.col(j).head(j + 1) = h;
            s.row(j).head(j + 1) = h.transpose();
            beta = w.norm();
            scale = std::max(scale, std::abs(h(j)));
            if (j + 1 == n) {
                beta = 0.0;
                break;
            }
            if (beta <= 1e-12 * std::max(scale, 1e-300)) {
                // Invariant subspace: continue from a new direction with zero coupling.
                beta = 0.0;
                v.col(j + 1) = fresh_direction(j + 1);
            } else {
                v.col(j + 1) = w / beta;
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(s);
        if (ritz.info() != Eigen::Success) throw NumericalError("projected eigenproblem did not converge");
        // Ritz values ascending; flip to descending.
        theta = ritz.eigenvalues().reverse();
        y = ritz.eigenvectors().rowwise().reverse();

        scale = std::max(scale, std::abs(theta(0)));
        const double denom = std::max(std::abs(theta(0)), 1e-300);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < kk; ++i) worst = std::max(worst, std::abs(beta * y(m - 1, i)) / denom);
        out.iterations = it;
        out.max_residual = worst;
        if (worst <= opts.tolerance || m == n) {
            out.converged = worst <= opts.tolerance;
            break;
        }

        // Thick restart: keep the leading Ritz vectors, continue from the residual direction.
        const Eigen::MatrixXd kept = v.leftCols(m) * y.leftCols(keep);
        v.leftCols(keep) = kept;
        v.col(keep) = v.col(m);
        s.setZero();
        s.diagonal().head(keep) = theta.head(keep);
        start = keep;
    }

    out.values = theta.head(kk);
    out.vectors = v.leftCols(m) * y.leftCols(kk);
    return out;
}

}  // namespace modekit
