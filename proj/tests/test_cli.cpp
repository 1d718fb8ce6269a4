#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "doctest.h"

#include "modekit/io.hpp"
#include "modekit/synth.hpp"

using namespace modekit;

namespace {

struct Result {
    int status;
    std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Result run(const std::string& args) {
    const std::string cmd = std::string(MODEKIT_CLI) + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    while (fgets(buf.data(), buf.size(), p)) out += buf.data();
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("modekit_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Non-negative modes on disjoint pixel blocks, so |G1| equals G1.
ModeSet block_modes(const PixelGrid& g, const std::vector<double>& weights) {
    ModeSet set;
    set.grid = g;
    set.weights = weights;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        Image u = Image::Zero(g.ny, g.nx);
        u.block(2, 2 + 5 * static_cast<Eigen::Index>(k), 6, 4) = 1.0;
        u /= std::sqrt(u.square().sum() * g.pixel_area());
        set.profiles.push_back(u);
    }
    return set;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("constant frames produce a single-line error") {
    TempDir dir;
    FrameStack s;
    s.grid = centered_grid(4, 4, 1.0, 1.0);
    s.frames.assign(5, Image::Constant(4, 4, 2.0));
    write_frame_stack(dir / "const.mkfs", s);
    const Result r = run("reconstruct --frames " + dir / "const.mkfs" + " --out " + dir / "m.mkms");
    CHECK(r.status != 0);
    CHECK(r.out == "modekit: error: covariance is identically zero\n");
}

TEST_CASE("unknown flags and missing files fail") {
    TempDir dir;
    const Result a = run("report --in " + dir / "nope.mkms");
    CHECK(a.status != 0);
    CHECK(std::count(a.out.begin(), a.out.end(), '\n') == 1);
    const Result b = run("synth --frobnicate");
    CHECK(b.status != 0);
    CHECK(std::count(b.out.begin(), b.out.end(), '\n') == 1);
}

TEST_CASE("synth, reconstruct and fidelity close the loop") {
    TempDir dir;
    const PixelGrid g = centered_grid(16, 16, 0.25, 0.25);
    write_modeset(dir / "gen.mkms", block_modes(g, {1.0, 0.6, 0.3}));
    REQUIRE(run("synth --modes " + dir / "gen.mkms" + " --frames 3000 --seed 3 --out " + dir / "f.mkfs").status == 0);
    REQUIRE(run("reconstruct --frames " + dir / "f.mkfs" + " --denoise threshold:0.25 --out " + dir / "rec.mkms").status == 0);
    const Result f = run("fidelity --a " + dir / "gen.mkms" + " --b " + dir / "rec.mkms" + " --count 3 --log " + dir / "fid.jsonl");
    REQUIRE(f.status == 0);
    const auto log = read_jsonl(dir / "fid.jsonl");
    CHECK(log.back()["min_fidelity"].get<double>() > 0.99);
    const auto rec_log = read_jsonl(dir / "rec.mkms.log.jsonl");
    CHECK(rec_log[0]["schmidt_number"].get<double>() == doctest::Approx(schmidt_number(std::vector<double>{1.0, 0.6, 0.3})).epsilon(0.1));
}

TEST_CASE("identical inputs give identical output bytes") {
    TempDir dir;
    const PixelGrid g = centered_grid(8, 8, 0.5, 0.5);
    write_modeset(dir / "gen.mkms", hermite_gauss_modeset(g, 1.0, {1.0, 0.5}));
    REQUIRE(run("synth --modes " + dir / "gen.mkms" + " --frames 50 --seed 8 --out " + dir / "a.mkfs").status == 0);
    REQUIRE(run("synth --modes " + dir / "gen.mkms" + " --frames 50 --seed 8 --out " + dir / "b.mkfs").status == 0);
    CHECK(read_text(dir / "a.mkfs") == read_text(dir / "b.mkfs"));
    REQUIRE(run("reconstruct --frames " + dir / "a.mkfs" + " --out " + dir / "ra.mkms").status == 0);
    REQUIRE(run("reconstruct --frames " + dir / "b.mkfs" + " --out " + dir / "rb.mkms").status == 0);
    CHECK(read_text(dir / "ra.mkms") == read_text(dir / "rb.mkms"));
}

TEST_CASE("render and report") {
    TempDir dir;
    const PixelGrid g = centered_grid(8, 8, 0.5, 0.5);
    write_modeset(dir / "gen.mkms", hermite_gauss_modeset(g, 1.0, {1.0, 0.5}));
    REQUIRE(run("render --in " + dir / "gen.mkms" + " --what modes --count 2 --out " + dir / "r").status == 0);
    CHECK(fs::exists(dir / "r/mode_001.pgm"));
    CHECK(fs::exists(dir / "r/mode_001.pgm.scale"));
    CHECK(fs::exists(dir / "r/mode_001.txt"));
    REQUIRE(run("render --in " + dir / "gen.mkms" + " --what g1cut --axis y --at 0.1 --out " + dir / "c").status == 0);
    CHECK(fs::exists(dir / "c/g1cut.pgm"));
    const Result bad = run("render --in " + dir / "gen.mkms" + " --what g1cut --axis y --at 99 --out " + dir / "c");
    CHECK(bad.status != 0);
    REQUIRE(run("synth --modes " + dir / "gen.mkms" + " --frames 400 --seed 2 --out " + dir / "f.mkfs").status == 0);
    const Result rep = run("report --in " + dir / "gen.mkms" + " --mean " + dir / "f.mkfs" + " --log " + dir / "rep.jsonl");
    REQUIRE(rep.status == 0);
    const auto log = read_jsonl(dir / "rep.jsonl");
    CHECK(log[0]["schmidt_number"].get<double>() == doctest::Approx(1.8));
    CHECK(log[0]["mean_residual"].get<double>() < 0.15);
}

}
