#include "modekit/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <limits>
#include <sstream>

#include "modekit/error.hpp"

namespace modekit {

namespace {

// Little-endian encoding independent of the host byte order.
template <typename U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }
void put_u16(std::string& out, std::uint16_t v) { put_le(out, v); }
void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

void put_f32_block(std::string& out, std::span<const float> values) {
    const std::size_t start = out.size();
    out.resize(start + 4 * values.size());
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + start, values.data(), 4 * values.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto u = std::bit_cast<std::uint32_t>(values[i]);
            for (int b = 0; b < 4; ++b) out[start + 4 * i + b] = static_cast<char>((u >> (8 * b)) & 0xffu);
        }
    }
}

class Reader {
public:
    Reader(std::istream& in, const fs::path& path) : in_(in), path_(path) {}

    void bytes(char* dst, std::size_t n) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
    }

    template <typename U>
    U le() {
        unsigned char buf[sizeof(U)];
        bytes(reinterpret_cast<char*>(buf), sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
        return v;
    }

    std::uint8_t u8() { return le<std::uint8_t>(); }
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

    void f32_block(std::span<float> dst) {
        bytes(reinterpret_cast<char*>(dst.data()), 4 * dst.size());
        if constexpr (std::endian::native != std::endian::little) {
            for (float& f : dst) {
                auto u = std::bit_cast<std::uint32_t>(f);
                u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
                f = std::bit_cast<float>(u);
            }
        }
    }

    [[noreturn]] void fail(const std::string& what) const { throw FormatError(path_.string() + ": " + what); }

private:
    std::istream& in_;
    const fs::path& path_;
};

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ResourceError("cannot open " + path.string());
    return in;
}

void put_grid(std::string& out, const PixelGrid& g) {
    put_u32(out, static_cast<std::uint32_t>(g.nx));
    put_u32(out, static_cast<std::uint32_t>(g.ny));
}

void put_geometry(std::string& out, const PixelGrid& g) {
    put_f64(out, g.dx);
    put_f64(out, g.dy);
    put_f64(out, g.x0);
    put_f64(out, g.y0);
    put_u8(out, static_cast<std::uint8_t>(g.unit));
}

void read_geometry(Reader& r, PixelGrid& g) {
    g.dx = r.f64();
    g.dy = r.f64();
    g.x0 = r.f64();
    g.y0 = r.f64();
    const std::uint8_t unit = r.u8();
    if (unit > 1) r.fail("unknown unit tag " + std::to_string(unit));
    g.unit = static_cast<Unit>(unit);
}

void expect_header(Reader& r, const char* magic, std::uint16_t version) {
    char m[4];
    r.bytes(m, 4);
    if (std::memcmp(m, magic, 4) != 0) r.fail(std::string("not a ") + magic + " file");
    const std::uint16_t v = r.u16();
    if (v != version) r.fail("unsupported version " + std::to_string(v));
}

void expect_size(const fs::path& path, std::uintmax_t expected, Reader& r) {
    const auto actual = fs::file_size(path);
    if (actual != expected) {
        r.fail("payload length mismatch: expected " + std::to_string(expected) + " bytes, found " +
               std::to_string(actual));
    }
}

void validated_grid(Reader& r, const PixelGrid& g) {
    try {
        g.validate();
    } catch (const Error& e) {
        r.fail(std::string("inconsistent header: ") + e.what());
    }
}

void to_floats(const Image& image, std::vector<float>& out) {
    out.resize(static_cast<std::size_t>(image.size()));
    for (Eigen::Index i = 0; i < image.size(); ++i) out[static_cast<std::size_t>(i)] = static_cast<float>(image.data()[i]);
}

Image from_floats(const PixelGrid& g, std::span<const float> data, Reader& r, const std::string& what) {
    Image img(g.ny, g.nx);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) r.fail("non-finite value in " + what);
        img.data()[i] = data[i];
    }
    return img;
}

constexpr std::uintmax_t kGridHeaderBytes = 4 + 4 + 4 * 8 + 1;

}  // namespace

AtomicFile::AtomicFile(fs::path path) : path_(std::move(path)) {
    temp_ = path_;
    temp_ += ".tmp";
    out_.open(temp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw ResourceError("cannot write " + temp_.string());
}

AtomicFile::~AtomicFile() {
    if (!committed_) {
        out_.close();
        std::error_code ec;
        fs::remove(temp_, ec);
    }
}

void AtomicFile::commit() {
    out_.flush();
    if (!out_) throw ResourceError("write failed for " + path_.string());
    out_.close();
    std::error_code ec;
    fs::rename(temp_, path_, ec);
    if (ec) throw ResourceError("cannot rename " + temp_.string() + " to " + path_.string() + ": " + ec.message());
    committed_ = true;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    AtomicFile f(path);
    f.stream() << text;
    f.commit();
}

std::string read_text(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FrameStackWriter::FrameStackWriter(const fs::path& path, const PixelGrid& grid, std::size_t frames)
    : file_(path), grid_(grid), expected_(frames) {
    grid.validate();
    if (frames > std::numeric_limits<std::uint32_t>::max()) throw RangeError("too many frames for the container");
    std::string header = "MKFS";
    put_u16(header, kFrameStackVersion);
    put_grid(header, grid);
    put_u32(header, static_cast<std::uint32_t>(frames));
    put_geometry(header, grid);
    file_.stream().write(header.data(), static_cast<std::streamsize>(header.size()));
}

void FrameStackWriter::append(const Image& frame) {
    if (frame.rows() != grid_.ny || frame.cols() != grid_.nx) throw ShapeError("frame shape does not match the grid");
    if (written_ >= expected_) throw RangeError("more frames than announced in the header");
    to_floats(frame, buffer_);
    std::string bytes;
    put_f32_block(bytes, buffer_);
    file_.stream().write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    ++written_;
}

void FrameStackWriter::commit() {
    if (written_ != expected_) {
        throw DataError("container announced " + std::to_string(expected_) + " frames but got " + std::to_string(written_));
    }
    file_.commit();
}

void write_frame_stack(const fs::path& path, const FrameStack& stack) {
    FrameStackWriter w(path, stack.grid, stack.size());
    for (const auto& f : stack.frames) w.append(f);
    w.commit();
}

ContainerSource::ContainerSource(const fs::path& path) : path_(path), in_(open_input(path)) {
    Reader r(in_, path_);
    expect_header(r, "MKFS", kFrameStackVersion);
    grid_.nx = static_cast<int>(r.u32());
    grid_.ny = static_cast<int>(r.u32());
    frames_ = r.u32();
    read_geometry(r, grid_);
    validated_grid(r, grid_);
    expect_size(path_, 4 + 2 + 4 + kGridHeaderBytes + 4ull * frames_ * grid_.size(), r);
    buffer_.resize(grid_.size());
}

bool ContainerSource::next(Image& frame, std::string& label) {
    if (pos_ >= frames_) return false;
    Reader r(in_, path_);
    r.f32_block(buffer_);
    label = path_.filename().string() + "#" + std::to_string(pos_);
    frame = from_floats(grid_, buffer_, r, "frame " + std::to_string(pos_));
    ++pos_;
    return true;
}

FrameStack read_frame_stack(const fs::path& path) {
    ContainerSource src(path);
    FrameStack stack;
    stack.grid = src.grid();
    stack.frames.reserve(src.size_hint());
    Image frame;
    std::string label;
    while (src.next(frame, label)) stack.frames.push_back(frame);
    return stack;
}

void write_modeset(const fs::path& path, const ModeSet& modes) {
    modes.validate();
    std::string out = "MKMS";
    put_u16(out, kModeSetVersion);
    put_grid(out, modes.grid);
    put_geometry(out, modes.grid);
    put_u32(out, static_cast<std::uint32_t>(modes.size()));
    for (double w : modes.weights) put_f64(out, w);
    std::vector<float> buf;
    for (const auto& p : modes.profiles) {
        to_floats(p, buf);
        put_f32_block(out, buf);
    }
    write_text_atomic(path, out);
}

ModeSet read_modeset(const fs::path& path) {
    std::ifstream in = open_input(path);
    Reader r(in, path);
    expect_header(r, "MKMS", kModeSetVersion);
    ModeSet set;
    set.grid.nx = static_cast<int>(r.u32());
    set.grid.ny = static_cast<int>(r.u32());
    read_geometry(r, set.grid);
    validated_grid(r, set.grid);
    const std::uint32_t m = r.u32();
    expect_size(path, 4 + 2 + kGridHeaderBytes + 4 + 8ull * m + 4ull * m * set.grid.size(), r);
    set.weights.resize(m);
    for (auto& w : set.weights) {
        w = r.f64();
        if (!std::isfinite(w)) r.fail("non-finite weight");
    }
    std::vector<float> buf(set.grid.size());
    for (std::uint32_t k = 0; k < m; ++k) {
        r.f32_block(buf);
        set.profiles.push_back(from_floats(set.grid, buf, r, "profile " + std::to_string(k)));
    }
    try {
        set.validate();
    } catch (const Error& e) {
        r.fail(e.what());
    }
    return set;
}

void write_covariance(const fs::path& path, const FlatCovariance& cov) {
    if (static_cast<std::size_t>(cov.data.rows()) != cov.grid.size() || cov.data.cols() != cov.data.rows()) {
        throw ShapeError("covariance does not match its grid");
    }
    AtomicFile f(path);
    std::string header = "MKCV";
    put_u16(header, kCovarianceVersion);
    put_grid(header, cov.grid);
    put_geometry(header, cov.grid);
    put_u8(header, static_cast<std::uint8_t>(cov.kind));
    put_u8(header, cov.dark_corrected ? 1 : 0);
    f.stream().write(header.data(), static_cast<std::streamsize>(header.size()));
    std::string row;
    for (Eigen::Index i = 0; i < cov.data.rows(); ++i) {
        row.clear();
        for (Eigen::Index j = 0; j < cov.data.cols(); ++j) put_f64(row, cov.data(i, j));
        f.stream().write(row.data(), static_cast<std::streamsize>(row.size()));
    }
    f.commit();
}

FlatCovariance read_covariance(const fs::path& path) {
    std::ifstream in = open_input(path);
    Reader r(in, path);
    expect_header(r, "MKCV", kCovarianceVersion);
    FlatCovariance cov;
    cov.grid.nx = static_cast<int>(r.u32());
    cov.grid.ny = static_cast<int>(r.u32());
    read_geometry(r, cov.grid);
    validated_grid(r, cov.grid);
    const std::uint8_t kind = r.u8();
    if (kind > 1) r.fail("unknown covariance kind");
    cov.kind = static_cast<CovKind>(kind);
    cov.dark_corrected = r.u8() != 0;
    const auto n = static_cast<Eigen::Index>(cov.grid.size());
    expect_size(path, 4 + 2 + kGridHeaderBytes + 2 + 8ull * cov.grid.size() * cov.grid.size(), r);
    cov.data.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = r.f64();
            if (!std::isfinite(v)) r.fail("non-finite matrix entry");
            cov.data(i, j) = v;
        }
    }
    return cov;
}

std::string file_magic(const fs::path& path) {
    std::ifstream in = open_input(path);
    char m[4] = {};
    in.read(m, 4);
    return std::string(m, static_cast<std::size_t>(in.gcount()));
}

ImportFormat parse_import_format(const std::string& name) {
    if (name == "container") return ImportFormat::container;
    if (name == "pgm_dir" || name == "pgm") return ImportFormat::pgm_dir;
    if (name == "csv_dir" || name == "csv") return ImportFormat::csv_dir;
    throw ValidationError("unknown frame format '" + name + "' (container, pgm_dir, csv_dir)");
}

Image read_pgm(const fs::path& path) {
    std::ifstream in = open_input(path);
    auto token = [&]() {
        std::string t;
        char c;
        while (in.get(c)) {
            if (c == '#') {
                std::string skip;
                std::getline(in, skip);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!t.empty()) break;
                continue;
            }
            t.push_back(c);
        }
        return t;
    };
    auto number = [&](const char* what) {
        const std::string t = token();
        try {
            std::size_t pos = 0;
            const long v = std::stol(t, &pos);
            if (pos != t.size() || v <= 0) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw FormatError(path.string() + ": bad PGM " + what + " '" + t + "'");
        }
    };
    if (token() != "P5") throw FormatError(path.string() + ": not a binary PGM (P5)");
    const long width = number("width");
    const long height = number("height");
    const long maxval = number("maxval");
    if (maxval > 65535) throw FormatError(path.string() + ": PGM maxval above 65535");
    const int bytes = maxval > 255 ? 2 : 1;
    Image img(height, width);
    std::vector<unsigned char> raw(static_cast<std::size_t>(width * height * bytes));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw FormatError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < static_cast<std::size_t>(width * height); ++i) {
        // 16-bit samples are big-endian.
        const unsigned v = bytes == 2 ? (unsigned{raw[2 * i]} << 8) | raw[2 * i + 1] : raw[i];
        img.data()[i] = static_cast<double>(v);
    }
    return img;
}

Image read_csv_frame(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                if (cell.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ": bad CSV value '" + cell + "' on row " + std::to_string(rows.size() + 1));
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ShapeError(path.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                             std::to_string(row.size()) + " values, expected " + std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError(path.string() + ": empty CSV frame");
    Image img(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            img(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return img;
}

FrameStack import_frames(const fs::path& path, ImportFormat format, const GridMeta& meta) {
    if (format == ImportFormat::container) {
        FrameStack stack = read_frame_stack(path);
        stack.validate();
        return stack;
    }
    if (!fs::is_directory(path)) throw ResourceError(path.string() + " is not a directory");
    const std::string ext = format == ImportFormat::pgm_dir ? ".pgm" : ".csv";
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no " + ext + " files in " + path.string());

    FrameStack stack;
    for (const auto& f : files) {
        Image img = format == ImportFormat::pgm_dir ? read_pgm(f) : read_csv_frame(f);
        if (stack.frames.empty()) {
            stack.grid = centered_grid(static_cast<int>(img.cols()), static_cast<int>(img.rows()), meta.dx, meta.dy, meta.unit);
        } else if (img.rows() != stack.grid.ny || img.cols() != stack.grid.nx) {
            throw ShapeError(f.filename().string() + ": frame is " + std::to_string(img.cols()) + "x" +
                             std::to_string(img.rows()) + ", expected " + std::to_string(stack.grid.nx) + "x" +
                             std::to_string(stack.grid.ny));
        }
        if (!img.isFinite().all()) throw DataError(f.filename().string() + ": non-finite value");
        stack.frames.push_back(std::move(img));
        stack.labels.push_back(f.filename().string());
    }
    stack.validate();
    return stack;
}

PgmScale write_pgm(const fs::path& path, const Image& image) {
    if (image.size() == 0) throw ShapeError("cannot export an empty image");
    if (!image.isFinite().all()) throw DataError("cannot export non-finite values");
    PgmScale s;
    s.offset = image.minCoeff();
    const double range = image.maxCoeff() - s.offset;
    s.scale = range > 0.0 ? range / 65535.0 : 0.0;

    std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n65535\n";
    for (Eigen::Index i = 0; i < image.size(); ++i) {
        const double p = s.scale > 0.0 ? std::round((image.data()[i] - s.offset) / s.scale) : 0.0;
        const auto v = static_cast<unsigned>(std::clamp(p, 0.0, 65535.0));
        out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xffu));
    }
    write_text_atomic(path, out);

    std::ostringstream side;
    side << std::setprecision(17) << "offset " << s.offset << "\nscale " << s.scale << "\n";
    fs::path sidecar = path;
    sidecar += ".scale";
    write_text_atomic(sidecar, side.str());
    return s;
}

void write_text_matrix(const fs::path& path, const Eigen::Ref<const Eigen::MatrixXd>& m) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
        os << '\n';
    }
    write_text_atomic(path, os.str());
}

std::string JsonLog::dump() const {
    std::string out;
    for (const auto& r : records_) out += r.dump() + "\n";
    return out;
}

void JsonLog::save(const fs::path& path) const { write_text_atomic(path, dump()); }

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
    std::ifstream in = open_input(path);
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace modekit
