#include "modekit/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modekit/error.hpp"

namespace modekit {

namespace {

bool close_rel(double a, double b, double rel_tol) {
    return std::abs(a - b) <= rel_tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

void PixelGrid::validate() const {
    if (nx < 1 || ny < 1) {
        std::ostringstream os;
        os << "pixel grid must have nx, ny >= 1 (got " << nx << " x " << ny << ")";
        throw ValidationError(os.str());
    }
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy)) {
        throw ValidationError("pixel pitch must be finite and positive");
    }
    if (!std::isfinite(x0) || !std::isfinite(y0)) {
        throw ValidationError("grid origin must be finite");
    }
}

bool PixelGrid::same_as(const PixelGrid& o, double rel_tol) const {
    if (nx != o.nx || ny != o.ny || unit != o.unit) return false;
    if (!close_rel(dx, o.dx, rel_tol) || !close_rel(dy, o.dy, rel_tol)) return false;
    // Origins can be exactly zero; compare them on the pitch scale.
    return std::abs(x0 - o.x0) <= rel_tol * std::max(std::abs(dx), std::abs(x0)) &&
           std::abs(y0 - o.y0) <= rel_tol * std::max(std::abs(dy), std::abs(y0));
}

PixelGrid centered_grid(int nx, int ny, double dx, double dy, Unit unit) {
    PixelGrid g{nx, ny, dx, dy, -0.5 * (nx - 1) * dx, -0.5 * (ny - 1) * dy, unit};
    g.validate();
    return g;
}

Image zero_image(const PixelGrid& grid) { return Image::Zero(grid.ny, grid.nx); }

std::size_t flat_index(const PixelGrid& grid, int ix, int iy) {
    if (ix < 0 || ix >= grid.nx || iy < 0 || iy >= grid.ny) {
        std::ostringstream os;
        os << "pixel (" << ix << ", " << iy << ") outside " << grid.nx << " x " << grid.ny << " grid";
        throw IndexError(os.str());
    }
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix);
}

PixelIndex unflat_index(const PixelGrid& grid, std::size_t n) {
    if (n >= grid.size()) {
        std::ostringstream os;
        os << "flat index " << n << " outside [0, " << grid.size() << ")";
        throw IndexError(os.str());
    }
    const auto nx = static_cast<std::size_t>(grid.nx);
    return {static_cast<int>(n % nx), static_cast<int>(n / nx)};
}

Image fold_vector(const PixelGrid& grid, std::span<const double> v) {
    if (v.size() != grid.size()) {
        std::ostringstream os;
        os << "vector of length " << v.size() << " cannot fold onto " << grid.nx << " x " << grid.ny
           << " grid";
        throw ShapeError(os.str());
    }
    Image out(grid.ny, grid.nx);
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

Image fold_vector(const PixelGrid& grid, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (static_cast<std::size_t>(v.size()) != grid.size()) {
        std::ostringstream os;
        os << "vector of length " << v.size() << " cannot fold onto " << grid.nx << " x " << grid.ny
           << " grid";
        throw ShapeError(os.str());
    }
    Image out(grid.ny, grid.nx);
    Eigen::Map<Eigen::VectorXd>(out.data(), v.size()) = v;
    return out;
}

Eigen::VectorXd unfold_image(const PixelGrid& grid, const Image& image) {
    if (image.rows() != grid.ny || image.cols() != grid.nx) {
        throw ShapeError("image shape does not match grid");
    }
    return Eigen::Map<const Eigen::VectorXd>(image.data(), static_cast<Eigen::Index>(grid.size()));
}

Eigen::MatrixXd flatten_pairs(const PixelGrid& grid, std::span<const double> tensor4) {
    const std::size_t n = grid.size();
    if (tensor4.size() != n * n) {
        throw ShapeError("4D tensor length must equal N^2 for the grid");
    }
    // T[iy][ix][iy'][ix'] is already row-major in (n, m); the matrix is its reinterpretation.
    const auto ni = static_cast<Eigen::Index>(n);
    using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return Eigen::Map<const RowMajorMatrix>(tensor4.data(), ni, ni);
}

Eigen::MatrixXd tabulate_pairs(const PixelGrid& grid,
                               const std::function<double(PixelIndex, PixelIndex)>& f) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd out(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const PixelIndex pj = unflat_index(grid, static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            out(i, j) = f(unflat_index(grid, static_cast<std::size_t>(i)), pj);
        }
    }
    return out;
}

std::string FrameStack::label(std::size_t t) const {
    if (t < labels.size() && !labels[t].empty()) return labels[t];
    return "frame " + std::to_string(t);
}

void FrameStack::validate() const {
    grid.validate();
    if (!labels.empty() && labels.size() != frames.size()) {
        throw ValidationError("frame label count does not match frame count");
    }
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const Image& f = frames[t];
        if (f.rows() != grid.ny || f.cols() != grid.nx) {
            throw ShapeError(label(t) + ": shape " + std::to_string(f.cols()) + " x " +
                             std::to_string(f.rows()) + " does not match grid");
        }
        if (!f.allFinite()) throw DataError(label(t) + ": non-finite intensity");
        if ((f < 0.0).any()) throw DataError(label(t) + ": negative intensity");
    }
}

double asymmetry(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ShapeError("matrix is not square");
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < a.rows(); ++i) {
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
        }
    }
    return worst / scale;
}

int nearest_line(const PixelGrid& grid, Axis fixed_axis, double value) {
    const bool fix_x = fixed_axis == Axis::x;
    const double origin = fix_x ? grid.x0 : grid.y0;
    const double pitch = fix_x ? grid.dx : grid.dy;
    const int count = fix_x ? grid.nx : grid.ny;
    const double pos = (value - origin) / pitch;
    if (!std::isfinite(pos) || pos < -0.5 || pos > count - 0.5) {
        std::ostringstream os;
        os << (fix_x ? "x" : "y") << " = " << value << " outside grid extent ["
           << origin - 0.5 * pitch << ", " << origin + (count - 0.5) * pitch << "]";
        throw RangeError(os.str());
    }
    return std::clamp(static_cast<int>(std::lround(pos)), 0, count - 1);
}

Cut1D cut_1d(const FlatCovariance& cov, Axis fixed_axis, double fixed_value) {
    const PixelGrid& g = cov.grid;
    if (cov.size() != g.size()) throw ShapeError("covariance size does not match its grid");
    Cut1D cut;
    cut.fixed_axis = fixed_axis;
    cut.requested_value = fixed_value;
    cut.line_index = nearest_line(g, fixed_axis, fixed_value);

    std::vector<std::size_t> idx;
    if (fixed_axis == Axis::x) {
        cut.snapped_value = g.x(cut.line_index);
        for (int iy = 0; iy < g.ny; ++iy) {
            idx.push_back(flat_index(g, cut.line_index, iy));
            cut.coords.push_back(g.y(iy));
        }
    } else {
        cut.snapped_value = g.y(cut.line_index);
        for (int ix = 0; ix < g.nx; ++ix) {
            idx.push_back(flat_index(g, ix, cut.line_index));
            cut.coords.push_back(g.x(ix));
        }
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    cut.values.resize(k, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < k; ++i) {
            cut.values(i, j) = cov.data(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                                        static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
        }
    }
    return cut;
}

PixelGrid crop(const PixelGrid& grid, const Roi& roi) {
    if (roi.nx < 1 || roi.ny < 1 || roi.ix0 < 0 || roi.iy0 < 0 || roi.ix0 + roi.nx > grid.nx ||
        roi.iy0 + roi.ny > grid.ny) {
        throw RangeError("region of interest outside the grid");
    }
    PixelGrid out = grid;
    out.nx = roi.nx;
    out.ny = roi.ny;
    out.x0 = grid.x(roi.ix0);
    out.y0 = grid.y(roi.iy0);
    return out;
}

Image crop(const PixelGrid& grid, const Image& image, const Roi& roi) {
    crop(grid, roi);
    if (image.rows() != grid.ny || image.cols() != grid.nx) throw ShapeError("image shape does not match grid");
    return image.block(roi.iy0, roi.ix0, roi.ny, roi.nx);
}

FrameStack crop(const FrameStack& stack, const Roi& roi) {
    FrameStack out;
    out.grid = crop(stack.grid, roi);
    out.labels = stack.labels;
    out.frames.reserve(stack.size());
    for (const Image& f : stack.frames) out.frames.push_back(crop(stack.grid, f, roi));
    return out;
}

PixelGrid bin(const PixelGrid& grid, int fx, int fy) {
    if (fx < 1 || fy < 1) throw RangeError("binning factors must be >= 1");
    if (grid.nx / fx < 1 || grid.ny / fy < 1) throw RangeError("binning factor exceeds grid size");
    PixelGrid out = grid;
    out.nx = grid.nx / fx;
    out.ny = grid.ny / fy;
    out.dx = grid.dx * fx;
    out.dy = grid.dy * fy;
    // New pixel centre is the mean of the merged pixel centres.
    out.x0 = grid.x0 + 0.5 * (fx - 1) * grid.dx;
    out.y0 = grid.y0 + 0.5 * (fy - 1) * grid.dy;
    return out;
}

Image bin(const PixelGrid& grid, const Image& image, int fx, int fy) {
    const PixelGrid out_grid = bin(grid, fx, fy);
    if (image.rows() != grid.ny || image.cols() != grid.nx) throw ShapeError("image shape does not match grid");
    Image out(out_grid.ny, out_grid.nx);
    for (int iy = 0; iy < out_grid.ny; ++iy) {
        for (int ix = 0; ix < out_grid.nx; ++ix) {
            out(iy, ix) = image.block(iy * fy, ix * fx, fy, fx).sum();
        }
    }
    return out;
}

FrameStack bin(const FrameStack& stack, int fx, int fy) {
    FrameStack out;
    out.grid = bin(stack.grid, fx, fy);
    out.labels = stack.labels;
    out.frames.reserve(stack.size());
    for (const Image& f : stack.frames) out.frames.push_back(bin(stack.grid, f, fx, fy));
    return out;
}

}  // namespace modekit
