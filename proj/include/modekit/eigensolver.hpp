#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

namespace modekit {

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  ///< column i pairs with values(i)
    int iterations = 0;       ///< 0 for the direct solver
    bool converged = true;
    double max_residual = 0.0;  ///< max ||A v - l v|| / |l_1| over returned pairs (iterative only)
    bool used_fallback = false; ///< dsyevd output failed its residual check; Eigen's solver was used
};

/// Full decomposition through LAPACK's divide-and-conquer driver (dsyevd).
/// Every pair is checked against the input; on failure the result
/// comes from Eigen's self-adjoint solver instead. Consumes the matrix.
SymmetricEigen dense_symmetric_eigen(Eigen::MatrixXd&& a);

struct TopKOptions {
    std::size_t oversample = 0;  ///< Krylov basis size beyond k; 0 picks max(k + 1, 20)
    int max_iterations = 300;    ///< restart cycles
    double tolerance = 1e-8;     ///< residual bound relative to the largest eigenvalue
    std::uint64_t seed = 0x6d6f64656b6974ULL;
};

/// The k algebraically largest eigenpairs by thick-restart Lanczos with full
/// reorthogonalization. Touches `a` only through products A*v, so the extra
/// memory is O(N * (k + oversample)).
SymmetricEigen top_k_symmetric_eigen(const Eigen::MatrixXd& a, std::size_t k, const TopKOptions& opts = {});

}  // namespace modekit
