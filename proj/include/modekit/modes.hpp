#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "modekit/core.hpp"
#include "modekit/eigensolver.hpp"
#include "modekit/stats.hpp"

namespace modekit {

enum class ModeNormalization { unit_l2_modes, weights_sum_to_one };

/// Coherent modes: descending weights with one real 2D profile each.
struct ModeSet {
    PixelGrid grid;
    std::vector<double> weights;
    std::vector<Image> profiles;
    ModeNormalization normalization = ModeNormalization::unit_l2_modes;

    std::size_t size() const { return weights.size(); }

    /// Shapes, descending order and non-negativity of the weights.
    void validate() const;
};

enum class EigenSolverKind { automatic, dense, top_k };

struct DecomposeOptions {
    EigenSolverKind solver = EigenSolverKind::automatic;
    std::size_t top_k = 200;            ///< modes kept by the iterative path
    std::size_t dense_limit = 4096;     ///< automatic switches to top-k above this N
    std::size_t max_pixels = 16384;
    double symmetry_tolerance = 1e-10;  ///< relative to the largest entry
    TopKOptions iterative;
};

struct DecomposeReport {
    bool used_top_k = false;
    int iterations = 0;
    bool converged = true;
    double max_residual = 0.0;
    std::size_t clamped_count = 0;        ///< negative eigenvalues set to zero
    double clamped_mass_fraction = 0.0;   ///< their total magnitude over the trace
    std::vector<std::string> warnings;
};

struct Decomposition {
    ModeSet modes;
    DecomposeReport report;
};

/// Coherent-mode decomposition of a flattened |G1| matrix.
///
/// The discrete eigenproblem carries the pixel area: a matrix eigenpair
/// (mu, v) becomes weight mu*dx*dy and profile v/sqrt(dx*dy), so every profile
/// satisfies sum |u|^2 dx dy = 1. Negative eigenvalues are clamped to zero and
/// each profile's largest-magnitude entry is made positive.
Decomposition decompose(FlatCovariance g1, const DecomposeOptions& opts = {});

/// K = (sum l)^2 / sum l^2 over the first `truncate` weights (all when absent
/// or larger than the set).
double schmidt_number(const ModeSet& modes, std::optional<std::size_t> truncate = std::nullopt);
double schmidt_number(const std::vector<double>& weights, std::optional<std::size_t> truncate = std::nullopt);

/// Sum over the first n modes of l_m |u_m|^2.
MeanIntensity reconstruct_intensity(const ModeSet& modes, std::size_t n_modes);

/// |sum u_a u_b dx dy| between two normalized profiles on one grid.
double fidelity(const PixelGrid& grid, const Image& a, const Image& b);

struct ModeMatch {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double fidelity = 0.0;
};

/// Greedy maximum-fidelity pairing between the first `count` modes of each set.
/// Each index is used once; the result is sorted by index_a.
std::vector<ModeMatch> match_modes(const ModeSet& a, const ModeSet& b, std::size_t count);

/// Least-squares line through log(weight) against mode index.
struct ExponentialFit {
    double slope = 0.0;      ///< log-weight change per mode (negative for decay)
    double intercept = 0.0;
    double r_squared = 0.0;  ///< of the log-linear fit
};

/// Fit over the first `count` weights; every fitted weight must be positive.
ExponentialFit fit_exponential_decay(const std::vector<double>& weights, std::size_t count);

/// Weights rescaled to sum to one over the first `count` entries (all when absent).
std::vector<double> normalized_weights(const std::vector<double>& weights,
                                       std::optional<std::size_t> count = std::nullopt);

/// The first n modes of a set.
ModeSet truncate_modes(const ModeSet& modes, std::size_t n);

/// sum_m l_m u_m u_m^T, reassembled in flattened form (dense N x N).
Eigen::MatrixXd reassemble(const ModeSet& modes);

}  // namespace modekit
