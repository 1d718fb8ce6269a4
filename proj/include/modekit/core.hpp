#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace modekit {

/// Physical unit attached to the pixel pitch and origin of a grid.
enum class Unit : std::uint8_t {
    meters = 0,   ///< near-field camera plane
    radians = 1,  ///< far-field external angle
};

/// Rectangular pixel grid with physical coordinates.
///
/// Pixel (ix, iy) has its centre at (x0 + ix*dx, y0 + iy*dy). Flat indices
/// run row-major: y is the outer (slow) axis and x the inner (fast) axis.
struct PixelGrid {
    int nx = 1;
    int ny = 1;
    double dx = 1.0;
    double dy = 1.0;
    double x0 = 0.0;
    double y0 = 0.0;
    Unit unit = Unit::meters;

    std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
    double x(int ix) const { return x0 + ix * dx; }
    double y(int iy) const { return y0 + iy * dy; }
    double pixel_area() const { return dx * dy; }

    /// Throws ValidationError unless nx, ny >= 1 and dx, dy > 0 (all finite).
    void validate() const;

    /// Same shape and coordinates, up to a relative tolerance on the floating-point fields.
    bool same_as(const PixelGrid& other, double rel_tol = 1e-12) const;

    bool operator==(const PixelGrid&) const = default;
};

/// Grid of nx*ny pixels with the given pitch, centred on the origin.
PixelGrid centered_grid(int nx, int ny, double dx, double dy, Unit unit = Unit::meters);

/// Row-major 2D array of ny rows by nx columns; data() is the flat pixel vector.
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Image zero_image(const PixelGrid& grid);

struct PixelIndex {
    int ix = 0;
    int iy = 0;
    bool operator==(const PixelIndex&) const = default;
};

std::size_t flat_index(const PixelGrid& grid, int ix, int iy);
PixelIndex unflat_index(const PixelGrid& grid, std::size_t n);

/// Length-N vector to ny x nx image (inverse of unfold_image).
Image fold_vector(const PixelGrid& grid, std::span<const double> v);
Image fold_vector(const PixelGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v);

/// ny x nx image to its length-N row-major vector.
Eigen::VectorXd unfold_image(const PixelGrid& grid, const Image& image);

/// Reshape a 4D two-point tensor T[iy][ix][iy'][ix'] (row-major, length N^2)
/// into the N x N matrix M[n][m] = T(rho_n, rho_m).
Eigen::MatrixXd flatten_pairs(const PixelGrid& grid, std::span<const double> tensor4);

/// Tabulate a two-point function directly in flattened form.
Eigen::MatrixXd tabulate_pairs(const PixelGrid& grid,
                               const std::function<double(PixelIndex, PixelIndex)>& f);

/// Ordered set of same-shaped non-negative intensity frames.
struct FrameStack {
    PixelGrid grid;
    std::vector<Image> frames;
    std::vector<std::string> labels;  ///< empty or one per frame

    std::size_t size() const { return frames.size(); }
    std::string label(std::size_t t) const;

    /// Checks grid, frame shapes, finiteness and non-negativity.
    void validate() const;
};

enum class CovKind : std::uint8_t {
    covariance = 0,
    abs_g1 = 1,
};

/// Dense symmetric N x N matrix over a pixel grid, in flattened indexing.
struct FlatCovariance {
    PixelGrid grid;
    Eigen::MatrixXd data;
    CovKind kind = CovKind::covariance;
    bool dark_corrected = false;  ///< a dark-frame covariance was subtracted upstream

    std::size_t size() const { return static_cast<std::size_t>(data.rows()); }
};

/// Largest |a_nm - a_mn| relative to the largest |a_nm|; 0 for a zero matrix.
double asymmetry(const Eigen::MatrixXd& a);

enum class Axis { x, y };

/// Correlations between all pixel pairs on one grid row or column.
struct Cut1D {
    Axis fixed_axis = Axis::y;
    double requested_value = 0.0;
    double snapped_value = 0.0;  ///< physical coordinate of the selected line
    int line_index = 0;          ///< row (fixed y) or column (fixed x) index
    std::vector<double> coords;  ///< running coordinate along the line
    Eigen::MatrixXd values;      ///< values(i, j) = C(coords[i], coords[j])
};

/// Sub-matrix of `cov` for pixel pairs on the line {fixed_axis = fixed_value},
/// snapping to the nearest pixel row or column.
Cut1D cut_1d(const FlatCovariance& cov, Axis fixed_axis, double fixed_value);

/// Pixel index of the row/column nearest to a physical coordinate; RangeError outside the grid extent.
int nearest_line(const PixelGrid& grid, Axis fixed_axis, double value);

/// Rectangular region of interest in pixel units.
struct Roi {
    int ix0 = 0;
    int iy0 = 0;
    int nx = 0;
    int ny = 0;
};

PixelGrid crop(const PixelGrid& grid, const Roi& roi);
Image crop(const PixelGrid& grid, const Image& image, const Roi& roi);
FrameStack crop(const FrameStack& stack, const Roi& roi);

/// Integer binning by (fx, fy); sums intensities inside each bin and drops
/// trailing pixels that do not fill a whole bin.
PixelGrid bin(const PixelGrid& grid, int fx, int fy);
Image bin(const PixelGrid& grid, const Image& image, int fx, int fy);
FrameStack bin(const FrameStack& stack, int fx, int fy);

}  // namespace modekit
