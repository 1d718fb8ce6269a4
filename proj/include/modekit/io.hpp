#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "modekit/core.hpp"
#include "modekit/modes.hpp"
#include "modekit/stats.hpp"

namespace modekit {

namespace fs = std::filesystem;

inline constexpr std::uint16_t kFrameStackVersion = 1;
inline constexpr std::uint16_t kModeSetVersion = 1;
inline constexpr std::uint16_t kCovarianceVersion = 1;

/// Writes to a temporary sibling and renames it over `path` on commit().
/// An uncommitted file is removed on destruction.
class AtomicFile {
public:
    explicit AtomicFile(fs::path path);
    AtomicFile(const AtomicFile&) = delete;
    AtomicFile& operator=(const AtomicFile&) = delete;
    ~AtomicFile();

    std::ofstream& stream() { return out_; }
    void commit();

private:
    fs::path path_;
    fs::path temp_;
    std::ofstream out_;
    bool committed_ = false;
};

void write_text_atomic(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// MKFS frame-stack container: little-endian header
//   "MKFS" u16 version, u32 nx, ny, T, f64 dx, dy, x0, y0, u8 unit
// followed by T frames of ny*nx f32 values, row-major.

void write_frame_stack(const fs::path& path, const FrameStack& stack);
FrameStack read_frame_stack(const fs::path& path);

/// Streams frames into a container whose frame count is fixed up front.
class FrameStackWriter {
public:
    FrameStackWriter(const fs::path& path, const PixelGrid& grid, std::size_t frames);
    void append(const Image& frame);
    /// Throws unless exactly the announced number of frames was appended.
    void commit();

private:
    AtomicFile file_;
    PixelGrid grid_;
    std::size_t expected_;
    std::size_t written_ = 0;
    std::vector<float> buffer_;
};

/// Reads a container one frame at a time.
class ContainerSource final : public FrameSource {
public:
    explicit ContainerSource(const fs::path& path);
    const PixelGrid& grid() const override { return grid_; }
    std::size_t size_hint() const override { return frames_; }
    bool next(Image& frame, std::string& label) override;

private:
    fs::path path_;
    std::ifstream in_;
    PixelGrid grid_;
    std::size_t frames_ = 0;
    std::size_t pos_ = 0;
    std::vector<float> buffer_;
};

// MKMS mode-set bundle: "MKMS" u16 version, grid header, u32 M,
// M f64 weights, M profiles of ny*nx f32 values.

void write_modeset(const fs::path& path, const ModeSet& modes);
ModeSet read_modeset(const fs::path& path);

// MKCV covariance file: "MKCV" u16 version, grid header, u8 kind,
// u8 dark_corrected, N*N f64 values row-major.

void write_covariance(const fs::path& path, const FlatCovariance& cov);
FlatCovariance read_covariance(const fs::path& path);

/// First four bytes of a file, for dispatching on the container type.
std::string file_magic(const fs::path& path);

enum class ImportFormat { container, pgm_dir, csv_dir };

ImportFormat parse_import_format(const std::string& name);

/// Physical pitch for formats that do not carry one; the grid is centred on the origin.
struct GridMeta {
    double dx = 1.0;
    double dy = 1.0;
    Unit unit = Unit::meters;
};

/// Frames from a container file or from a directory of .pgm / .csv files in
/// lexicographic order. Shape mismatches name the offending file.
FrameStack import_frames(const fs::path& path, ImportFormat format, const GridMeta& meta = {});

/// Binary PGM (P5), 8- or 16-bit.
Image read_pgm(const fs::path& path);
/// Comma-separated rows of one frame.
Image read_csv_frame(const fs::path& path);

/// Linear map recorded next to a PGM export: value = offset + scale * pixel.
struct PgmScale {
    double offset = 0.0;
    double scale = 0.0;
};

/// 16-bit P5 (maxval 65535) with the scale in "<path>.scale".
PgmScale write_pgm(const fs::path& path, const Image& image);

/// Whitespace-separated matrix, one row per line, full precision.
void write_text_matrix(const fs::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m);

/// JSON-lines record log, written atomically by save().
class JsonLog {
public:
    void add(nlohmann::json record) { records_.push_back(std::move(record)); }
    const std::vector<nlohmann::json>& records() const { return records_; }
    std::string dump() const;
    void save(const fs::path& path) const;

private:
    std::vector<nlohmann::json> records_;
};

std::vector<nlohmann::json> read_jsonl(const fs::path& path);

}  // namespace modekit
