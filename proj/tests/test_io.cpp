#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"

#include "modekit/error.hpp"
#include "modekit/io.hpp"

using namespace modekit;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("modekit_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

FrameStack sample_stack() {
    FrameStack s;
    s.grid = PixelGrid{3, 2, 0.5e-6, 0.25e-6, -1e-6, 2e-6, Unit::meters};
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> d(0.0f, 100.0f);
    for (int t = 0; t < 4; ++t) {
        Image f(2, 3);
        for (Eigen::Index i = 0; i < 6; ++i) f.data()[i] = d(rng);  // exactly representable in f32
        s.frames.push_back(f);
    }
    return s;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("frame container round trip is bit-identical") {
    TempDir dir;
    const FrameStack s = sample_stack();
    write_frame_stack(dir.path / "a.mkfs", s);
    CHECK(fs::file_size(dir.path / "a.mkfs") == 51 + 4 * 4 * 6);
    CHECK_FALSE(fs::exists(dir.path / "a.mkfs.tmp"));
    const FrameStack r = read_frame_stack(dir.path / "a.mkfs");
    CHECK(r.grid == s.grid);
    REQUIRE(r.size() == 4);
    for (std::size_t t = 0; t < 4; ++t) CHECK((r.frames[t] == s.frames[t]).all());
    write_frame_stack(dir.path / "b.mkfs", r);
    CHECK(read_text(dir.path / "a.mkfs") == read_text(dir.path / "b.mkfs"));
    CHECK(file_magic(dir.path / "a.mkfs") == "MKFS");
}

TEST_CASE("container header is little-endian") {
    TempDir dir;
    write_frame_stack(dir.path / "a.mkfs", sample_stack());
    const std::string b = read_text(dir.path / "a.mkfs");
    CHECK(b.substr(0, 4) == "MKFS");
    CHECK(static_cast<unsigned char>(b[4]) == 1);
    CHECK(static_cast<unsigned char>(b[5]) == 0);
    CHECK(static_cast<unsigned char>(b[6]) == 3);   // nx
    CHECK(static_cast<unsigned char>(b[10]) == 2);  // ny
    CHECK(static_cast<unsigned char>(b[14]) == 4);  // T
    CHECK(static_cast<unsigned char>(b[50]) == 0);  // unit tag
}

TEST_CASE("corrupt containers are rejected") {
    TempDir dir;
    write_frame_stack(dir.path / "a.mkfs", sample_stack());
    std::string b = read_text(dir.path / "a.mkfs");
    write_bytes(dir.path / "short.mkfs", b.substr(0, b.size() - 3));
    CHECK_THROWS_AS(read_frame_stack(dir.path / "short.mkfs"), FormatError);
    std::string bad = b;
    bad[0] = 'X';
    write_bytes(dir.path / "magic.mkfs", bad);
    CHECK_THROWS_AS(read_frame_stack(dir.path / "magic.mkfs"), FormatError);
    std::string ver = b;
    ver[4] = 9;
    write_bytes(dir.path / "ver.mkfs", ver);
    CHECK_THROWS_AS(read_frame_stack(dir.path / "ver.mkfs"), FormatError);
    std::string nan = b;
    const float q = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan.data() + 51, &q, 4);
    write_bytes(dir.path / "nan.mkfs", nan);
    CHECK_THROWS_AS(read_frame_stack(dir.path / "nan.mkfs"), FormatError);
    CHECK_THROWS_AS(read_frame_stack(dir.path / "missing.mkfs"), ResourceError);
}

TEST_CASE("streaming writer checks the frame count") {
    TempDir dir;
    const FrameStack s = sample_stack();
    {
        FrameStackWriter w(dir.path / "c.mkfs", s.grid, 3);
        w.append(s.frames[0]);
        CHECK_THROWS_AS(w.commit(), DataError);
    }
    CHECK_FALSE(fs::exists(dir.path / "c.mkfs"));
    CHECK_FALSE(fs::exists(dir.path / "c.mkfs.tmp"));
}

TEST_CASE("mode bundle and covariance round trips") {
    TempDir dir;
    ModeSet m;
    m.grid = centered_grid(2, 2, 1e-3, 1e-3, Unit::radians);
    m.weights = {0.5, 0.25};
    m.profiles = {Image::Constant(2, 2, 0.5f), Image::Constant(2, 2, -0.25f)};
    write_modeset(dir.path / "m.mkms", m);
    const ModeSet r = read_modeset(dir.path / "m.mkms");
    CHECK(r.grid == m.grid);
    CHECK(r.weights == m.weights);
    CHECK((r.profiles[1] == m.profiles[1]).all());

    FlatCovariance c;
    c.grid = m.grid;
    c.kind = CovKind::abs_g1;
    c.dark_corrected = true;
    c.data = Eigen::MatrixXd::Random(4, 4);
    write_covariance(dir.path / "c.mkcv", c);
    const FlatCovariance rc = read_covariance(dir.path / "c.mkcv");
    CHECK(rc.kind == CovKind::abs_g1);
    CHECK(rc.dark_corrected);
    CHECK(rc.data == c.data);
}

TEST_CASE("CSV frame is read row-major") {
    TempDir dir;
    write_bytes(dir.path / "f.csv", "1,2,3\n4,5,6\n7,8,9\n");
    const Image img = read_csv_frame(dir.path / "f.csv");
    REQUIRE(img.rows() == 3);
    for (int i = 0; i < 9; ++i) CHECK(img.data()[i] == i + 1);
    write_bytes(dir.path / "g.csv", "1,2\n3\n");
    CHECK_THROWS_AS(read_csv_frame(dir.path / "g.csv"), ShapeError);
    write_bytes(dir.path / "h.csv", "1,x\n");
    CHECK_THROWS_AS(read_csv_frame(dir.path / "h.csv"), FormatError);
}

TEST_CASE("16-bit PGM decoding follows the big-endian P5 layout") {
    TempDir dir;
    // Hand-assembled 2x1 image: samples 0x0102 = 258 and 0xFFFF = 65535.
    write_bytes(dir.path / "a.pgm", std::string("P5\n# comment\n2 1\n65535\n") + std::string("\x01\x02\xff\xff", 4));
    const Image img = read_pgm(dir.path / "a.pgm");
    CHECK(img(0, 0) == 258.0);
    CHECK(img(0, 1) == 65535.0);
    write_bytes(dir.path / "b.pgm", std::string("P5 2 2 255\n") + std::string("\x00\x10\x20\xff", 4));
    const Image b = read_pgm(dir.path / "b.pgm");
    CHECK(b(1, 1) == 255.0);
    CHECK(b(0, 1) == 16.0);
    write_bytes(dir.path / "c.pgm", "P2\n1 1\n255\n7\n");
    CHECK_THROWS_AS(read_pgm(dir.path / "c.pgm"), FormatError);
}

TEST_CASE("PGM export records a linear scale") {
    TempDir dir;
    Image img(2, 3);
    img << -1.0, 0.0, 1.0, 2.0, 3.0, 4.0;
    const PgmScale s = write_pgm(dir.path / "x.pgm", img);
    CHECK(s.offset == -1.0);
    CHECK(s.scale == doctest::Approx(5.0 / 65535.0));
    const Image back = read_pgm(dir.path / "x.pgm");
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(s.offset + s.scale * back.data()[i] - img.data()[i]) <= 0.5 * s.scale);
    CHECK(read_text(dir.path / "x.pgm.scale").find("scale") != std::string::npos);
}

TEST_CASE("directory import keeps lexicographic order and names bad files") {
    TempDir dir;
    write_bytes(dir.path / "b.csv", "2,2\n2,2\n");
    write_bytes(dir.path / "a.csv", "1,1\n1,1\n");
    write_bytes(dir.path / "c.csv", "3,3\n3,3\n");
    GridMeta meta{2e-6, 3e-6, Unit::meters};
    const FrameStack s = import_frames(dir.path, ImportFormat::csv_dir, meta);
    REQUIRE(s.size() == 3);
    CHECK(s.frames[0](0, 0) == 1.0);
    CHECK(s.frames[2](1, 1) == 3.0);
    CHECK(s.grid.dy == 3e-6);
    CHECK(s.labels[1] == "b.csv");
    write_bytes(dir.path / "d.csv", "1,1,1\n1,1,1\n");
    CHECK_THROWS_WITH_AS(import_frames(dir.path, ImportFormat::csv_dir), doctest::Contains("d.csv"), ShapeError);
    CHECK_THROWS_AS(parse_import_format("tiff"), ValidationError);
}

TEST_CASE("JSON-lines log round trip") {
    TempDir dir;
    JsonLog log;
    log.add({{"k", 52.0}, {"name", "pdc"}});
    log.add({{"fidelity", 0.99}});
    log.save(dir.path / "log.jsonl");
    const auto r = read_jsonl(dir.path / "log.jsonl");
    REQUIRE(r.size() == 2);
    CHECK(r[0]["k"].get<double>() == 52.0);
    CHECK(r[1]["fidelity"].get<double>() == 0.99);
}

}
