// modekit command-line interface.

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "modekit/error.hpp"
#include "modekit/fiber_sim.hpp"
#include "modekit/io.hpp"
#include "modekit/modes.hpp"
#include "modekit/pdc_sim.hpp"
#include "modekit/pipeline.hpp"
#include "modekit/synth.hpp"

using namespace modekit;
using nlohmann::json;

namespace {

ImportFormat detect_format(const fs::path& path) {
    if (!fs::is_directory(path)) return ImportFormat::container;
    for (const auto& e : fs::directory_iterator(path)) {
        if (e.path().extension() == ".pgm") return ImportFormat::pgm_dir;
    }
    return ImportFormat::csv_dir;
}

ImportFormat format_or_detect(const std::string& name, const fs::path& path) {
    return name == "auto" ? detect_format(path) : parse_import_format(name);
}

// "none", "threshold", "threshold:LEVEL" or "dark:PATH".
NoiseFilter parse_denoise(const std::string& spec, const GridMeta& meta) {
    if (spec == "none") return NoiseFilter::none();
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "threshold") {
        if (arg.empty()) return NoiseFilter{};
        std::size_t pos = 0;
        const double level = std::stod(arg, &pos);
        if (pos != arg.size() || !(level >= 0.0 && level < 1.0)) {
            throw ValidationError("threshold level must be a number in [0, 1)");
        }
        return NoiseFilter::threshold(level);
    }
    if (kind == "dark" && !arg.empty()) {
        return NoiseFilter::dark_frames(
            std::make_shared<const FrameStack>(import_frames(arg, detect_format(arg), meta)));
    }
    throw ValidationError("--denoise expects none, threshold[:LEVEL] or dark:PATH, got '" + spec + "'");
}

json head(const std::vector<double>& w, std::size_t limit) {
    return json(std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(std::min(limit, w.size()))));
}

void save_log(const JsonLog& log, const std::string& path) {
    if (!path.empty()) log.save(path);
}

std::string default_log(const std::string& out) { return out.empty() ? std::string{} : out + ".log.jsonl"; }

void print_weights(const std::vector<double>& w, std::size_t limit) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::cout << "  mode      weight    normalized\n";
    for (std::size_t m = 0; m < std::min(limit, w.size()); ++m) {
        std::cout << "  " << std::setw(4) << m << "  " << std::setw(12) << std::setprecision(6) << w[m] << "  "
                  << std::setw(10) << (total > 0.0 ? w[m] / total : 0.0) << '\n';
    }
}

DecomposeOptions decompose_options(const std::string& solver, std::size_t top_k) {
    DecomposeOptions opts;
    opts.top_k = top_k;
    if (solver == "auto") {
        opts.solver = EigenSolverKind::automatic;
    } else if (solver == "dense") {
        opts.solver = EigenSolverKind::dense;
    } else if (solver == "top-k") {
        opts.solver = EigenSolverKind::top_k;
    } else {
        throw ValidationError("--solver expects auto, dense or top-k");
    }
    return opts;
}

// reconstruct -----------------------------------------------------------------

struct ReconstructArgs {
    std::string frames, format = "auto", out, mean_out, denoise = "threshold", solver = "auto", log;
    bool normalize = false;
    double shot_noise = 0.0;
    std::size_t top_k = 200;
    std::size_t keep = 200;
    GridMeta meta;
};

int run_reconstruct(const ReconstructArgs& a) {
    StatsConfig cfg;
    cfg.normalize_integral = a.normalize;
    cfg.subtract_shot_noise = a.shot_noise > 0.0;
    cfg.shot_noise_scale = a.shot_noise;
    cfg.noise_filter = parse_denoise(a.denoise, a.meta);
    cfg.validate();
    const DecomposeOptions opts = decompose_options(a.solver, a.top_k);

    const ImportFormat fmt = format_or_detect(a.format, a.frames);
    Reconstruction rec;
    if (fmt == ImportFormat::container) {
        ContainerSource src(a.frames);
        rec = reconstruct(src, cfg, opts);
    } else {
        const FrameStack stack = import_frames(a.frames, fmt, a.meta);
        StackSource src(stack);
        rec = reconstruct(src, cfg, opts);
    }

    const double k_all = rec.report.schmidt_number;
    write_modeset(a.out, truncate_modes(rec.modes, std::min(a.keep, rec.modes.size())));
    if (!a.mean_out.empty()) {
        FrameStackWriter w(a.mean_out, rec.mean.grid, 1);
        w.append(rec.mean.values);
        w.commit();
    }

    const auto& d = rec.report.decompose;
    std::cout << "frames:                 " << rec.report.frames << '\n'
              << "pixels:                 " << rec.modes.grid.size() << '\n'
              << "eigensolver:            " << (d.used_top_k ? "top-k" : "dense") << '\n'
              << "siegert clamped:        " << rec.report.siegert_clamped_fraction << '\n'
              << "schmidt number K:       " << k_all << '\n'
              << "modes written:          " << std::min(a.keep, rec.modes.size()) << '\n';
    for (const auto& w : d.warnings) std::cout << "warning: " << w << '\n';
    print_weights(rec.modes.weights, 20);

    JsonLog log;
    log.add({{"command", "reconstruct"},
             {"frames", rec.report.frames},
             {"pixels", rec.modes.grid.size()},
             {"schmidt_number", k_all},
             {"siegert_clamped_fraction", rec.report.siegert_clamped_fraction},
             {"eigen_clamped_count", d.clamped_count},
             {"eigen_clamped_mass_fraction", d.clamped_mass_fraction},
             {"used_top_k", d.used_top_k},
             {"iterations", d.iterations},
             {"converged", d.converged},
             {"max_residual", d.max_residual},
             {"warnings", d.warnings},
             {"weights", head(rec.modes.weights, a.keep)}});
    save_log(log, a.log.empty() ? default_log(a.out) : a.log);
    return 0;
}

// simulate-pdc ----------------------------------------------------------------

struct PdcArgs {
    std::string params, out, matrix_out, solver = "auto", log;
    std::size_t keep = 200;
    std::size_t fit_count = 50;
};

int run_simulate_pdc(const PdcArgs& a) {
    const PdcParams p = a.params.empty() ? PdcParams{} : pdc_params_from_text(read_text(a.params));
    PdcSimulation sim = g1_pdc(p);
    if (!a.matrix_out.empty()) write_covariance(a.matrix_out, sim.g1);

    DecomposeOptions opts = decompose_options(a.solver, std::max<std::size_t>(a.keep, 200));
    Decomposition dec = decompose(std::move(sim.g1), opts);
    const ModeSet& modes = dec.modes;
    const double k200 = schmidt_number(modes, 200);
    const double k_all = schmidt_number(modes);
    const std::size_t fit_n = std::min(a.fit_count, modes.size());
    const ExponentialFit fit = fit_exponential_decay(modes.weights, fit_n);
    write_modeset(a.out, truncate_modes(modes, std::min(a.keep, modes.size())));

    std::cout << "pixels:                 " << modes.grid.size() << '\n'
              << "K (first 200 modes):    " << k200 << '\n'
              << "K (all modes):          " << k_all << '\n'
              << "decay fit (" << fit_n << " modes):  slope " << fit.slope << ", R^2 " << fit.r_squared << '\n'
              << "negative G1 fraction:   " << sim.negative_fraction << '\n';
    for (const auto& w : sim.warnings) std::cout << "warning: " << w << '\n';
    for (const auto& w : dec.report.warnings) std::cout << "warning: " << w << '\n';
    print_weights(modes.weights, 20);

    JsonLog log;
    log.add({{"command", "simulate-pdc"},
             {"pixels", modes.grid.size()},
             {"schmidt_number_200", k200},
             {"schmidt_number", k_all},
             {"fit_count", fit_n},
             {"fit_slope", fit.slope},
             {"fit_r_squared", fit.r_squared},
             {"negative_fraction", sim.negative_fraction},
             {"min_over_max", sim.min_over_max},
             {"quadrature_nodes", {p.rho.nodes_x, p.rho.nodes_y}},
             {"warnings", sim.warnings},
             {"weights", head(modes.weights, a.keep)}});
    save_log(log, a.log.empty() ? default_log(a.out) : a.log);
    return 0;
}

// simulate-fiber --------------------------------------------------------------

struct FiberArgs {
    std::string params, out, weights = "uniform", log;
};

int run_simulate_fiber(const FiberArgs& a) {
    const FiberParams p = a.params.empty() ? FiberParams{} : fiber_params_from_text(read_text(a.params));
    const auto cutoffs = lp_cutoffs(p);
    const auto list = lp_mode_list(p);
    ModeSet modes = lp_modeset(p);
    if (a.weights.rfind("power:", 0) == 0) {
        modes = with_weights(std::move(modes), power_law_weights(modes.size(), std::stod(a.weights.substr(6))));
    } else if (a.weights != "uniform") {
        throw ValidationError("--weights expects uniform or power:EXPONENT");
    }
    write_modeset(a.out, modes);

    std::cout << "V number:               " << p.v_number() << '\n'
              << "guided modes:           " << modes.size() << " (" << cutoffs.size() << " LP families)\n";
    json families = json::array();
    for (const auto& c : cutoffs) {
        std::cout << "  LP" << c.l << c.m << "  cutoff V " << std::setprecision(8) << c.cutoff_v << "  x"
                  << c.multiplicity << '\n';
        families.push_back({{"l", c.l}, {"m", c.m}, {"cutoff_v", c.cutoff_v}, {"multiplicity", c.multiplicity}});
    }
    json names = json::array();
    for (const auto& m : list) names.push_back(m.name());

    JsonLog log;
    log.add({{"command", "simulate-fiber"},
             {"v_number", p.v_number()},
             {"mode_count", modes.size()},
             {"families", families},
             {"modes", names},
             {"weights", modes.weights}});
    save_log(log, a.log.empty() ? default_log(a.out) : a.log);
    return 0;
}

// synth -----------------------------------------------------------------------

struct SynthArgs {
    std::string modes, out, log;
    std::size_t frames = 3000;
    std::uint64_t seed = 1;
    double photons = 0.0;
    double dark_sigma = 0.0;
};

int run_synth(const SynthArgs& a) {
    SynthConfig cfg;
    cfg.modes = read_modeset(a.modes);
    cfg.frames = a.frames;
    cfg.seed = a.seed;
    cfg.shot_noise = a.photons > 0.0;
    if (cfg.shot_noise) cfg.photon_scale = a.photons;
    cfg.dark_sigma = a.dark_sigma;
    const FrameSynthesizer synth(cfg);

    FrameStackWriter writer(a.out, synth.grid(), cfg.frames);
    constexpr std::size_t block = 256;
    for (std::size_t first = 0; first < cfg.frames; first += block) {
        for (const auto& f : sample_block(synth, first, std::min(block, cfg.frames - first))) writer.append(f);
    }
    writer.commit();

    const double scale = shot_noise_scale(cfg);
    std::cout << "frames:                 " << cfg.frames << '\n'
              << "generator modes:        " << cfg.modes.size() << '\n'
              << "generator K:            " << schmidt_number(cfg.modes) << '\n'
              << "shot-noise scale:       " << scale << '\n';
    JsonLog log;
    log.add({{"command", "synth"},
             {"frames", cfg.frames},
             {"seed", cfg.seed},
             {"generator_modes", cfg.modes.size()},
             {"generator_schmidt_number", schmidt_number(cfg.modes)},
             {"shot_noise_scale", scale},
             {"dark_sigma", cfg.dark_sigma}});
    save_log(log, a.log.empty() ? default_log(a.out) : a.log);
    return 0;
}

// fidelity --------------------------------------------------------------------

struct FidelityArgs {
    std::string a, b, log;
    std::size_t count = 10;
};

int run_fidelity(const FidelityArgs& args) {
    const ModeSet a = read_modeset(args.a);
    const ModeSet b = read_modeset(args.b);
    if (!a.grid.same_as(b.grid, 1e-6)) throw ValidationError("mode sets are defined on incompatible grids");
    const auto matches = match_modes(a, b, args.count);

    JsonLog log;
    std::cout << "  a     b   fidelity\n";
    double worst = 1.0;
    for (const auto& m : matches) {
        std::cout << "  " << std::setw(3) << m.index_a << "  " << std::setw(3) << m.index_b << "  " << std::fixed
                  << std::setprecision(4) << m.fidelity << std::defaultfloat << '\n';
        worst = std::min(worst, m.fidelity);
        log.add({{"command", "fidelity"}, {"index_a", m.index_a}, {"index_b", m.index_b}, {"fidelity", m.fidelity}});
    }
    std::cout << "min fidelity: " << worst << '\n';
    log.add({{"command", "fidelity"}, {"count", matches.size()}, {"min_fidelity", worst}});
    save_log(log, args.log);
    return 0;
}

// render ----------------------------------------------------------------------

struct RenderArgs {
    std::string in, what = "modes", axis = "y", out, log, denoise = "threshold";
    double at = 0.0;
    std::size_t count = 10;
};

int run_render(const RenderArgs& a) {
    fs::create_directories(a.out);
    const std::string magic = file_magic(a.in);
    const fs::path dir(a.out);
    JsonLog log;

    auto emit = [&](const std::string& stem, const Image& img) {
        const PgmScale s = write_pgm(dir / (stem + ".pgm"), img);
        write_text_matrix(dir / (stem + ".txt"), Eigen::Map<const Eigen::MatrixXd>(img.data(), img.cols(), img.rows()).transpose());
        log.add({{"command", "render"}, {"file", stem}, {"offset", s.offset}, {"scale", s.scale}});
    };

    if (a.what == "modes") {
        if (magic != "MKMS") throw ValidationError("--what modes needs a mode-set bundle");
        const ModeSet modes = read_modeset(a.in);
        for (std::size_t m = 0; m < std::min(a.count, modes.size()); ++m) {
            std::ostringstream stem;
            stem << "mode_" << std::setw(3) << std::setfill('0') << m;
            emit(stem.str(), modes.profiles[m]);
        }
    } else if (a.what == "mean") {
        if (magic == "MKMS") {
            const ModeSet modes = read_modeset(a.in);
            emit("mean", reconstruct_intensity(modes, modes.size()).values);
        } else {
            ContainerSource src(a.in);
            const Moments mom = accumulate_moments(src, StatsConfig{});
            emit("mean", mom.mean.values);
        }
    } else if (a.what == "g1cut") {
        const Axis axis = a.axis == "x" ? Axis::x : a.axis == "y" ? Axis::y : throw ValidationError("--axis expects x or y");
        FlatCovariance g1;
        if (magic == "MKMS") {
            const ModeSet modes = read_modeset(a.in);
            g1.grid = modes.grid;
            g1.data = reassemble(modes);
            g1.kind = CovKind::abs_g1;
        } else if (magic == "MKCV") {
            g1 = read_covariance(a.in);
        } else {
            StatsConfig cfg;
            cfg.noise_filter = parse_denoise(a.denoise, {});
            ContainerSource src(a.in);
            Moments mom = accumulate_moments(src, cfg);
            g1 = denoise(siegert_invert(std::move(mom.cov), mom.mean, cfg).g1, cfg);
        }
        const Cut1D cut = cut_1d(g1, axis, a.at);
        Image img = cut.values;
        const PgmScale s = write_pgm(dir / "g1cut.pgm", img);
        write_text_matrix(dir / "g1cut.txt", cut.values);
        write_text_matrix(dir / "g1cut_coords.txt", Eigen::Map<const Eigen::VectorXd>(cut.coords.data(),
                                                                                     static_cast<Eigen::Index>(cut.coords.size())));
        log.add({{"command", "render"},
                 {"file", "g1cut"},
                 {"line_index", cut.line_index},
                 {"snapped_value", cut.snapped_value},
                 {"offset", s.offset},
                 {"scale", s.scale}});
    } else {
        throw ValidationError("--what expects modes, mean or g1cut");
    }
    std::cout << "wrote " << log.records().size() << " exports to " << a.out << '\n';
    save_log(log, a.log);
    return 0;
}

// report ----------------------------------------------------------------------

struct ReportArgs {
    std::string in, mean, log;
    std::size_t fit_count = 50;
};

int run_report(const ReportArgs& a) {
    const ModeSet modes = read_modeset(a.in);
    const double k = schmidt_number(modes);
    const double k200 = schmidt_number(modes, 200);
    JsonLog log;
    json rec = {{"command", "report"}, {"modes", modes.size()}, {"schmidt_number", k}, {"schmidt_number_200", k200}};

    std::cout << "modes:                  " << modes.size() << '\n'
              << "K (all stored modes):   " << k << '\n'
              << "K (first 200 modes):    " << k200 << '\n';
    std::size_t positive = 0;
    while (positive < modes.size() && modes.weights[positive] > 0.0) ++positive;
    const std::size_t fit_n = std::min(a.fit_count, positive);
    if (fit_n >= 2) {
        const ExponentialFit fit = fit_exponential_decay(modes.weights, fit_n);
        std::cout << "decay fit (" << fit_n << " modes):  slope " << fit.slope << ", R^2 " << fit.r_squared << '\n';
        rec["fit_count"] = fit_n;
        rec["fit_slope"] = fit.slope;
        rec["fit_r_squared"] = fit.r_squared;
    }
    if (!a.mean.empty()) {
        ContainerSource src(a.mean);
        if (!src.grid().same_as(modes.grid, 1e-6)) throw ValidationError("mean and mode set have incompatible grids");
        Image reference;
        Image frame;
        std::string label;
        std::size_t n = 0;
        while (src.next(frame, label)) {
            reference = n == 0 ? frame : Image(reference + frame);
            ++n;
        }
        if (n == 0) throw DataError("mean container has no frames");
        reference /= static_cast<double>(n);
        const Image recon = reconstruct_intensity(modes, modes.size()).values;
        const double residual = std::sqrt((recon - reference).square().sum() / reference.square().sum());
        std::cout << "mean residual (rel L2): " << residual << '\n';
        rec["mean_residual"] = residual;
    }
    print_weights(modes.weights, 20);
    rec["weights"] = head(modes.weights, 200);
    log.add(rec);
    save_log(log, a.log);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent-mode reconstruction from intensity frames"};
    app.require_subcommand(1);

    ReconstructArgs rec;
    auto* r = app.add_subcommand("reconstruct", "frames -> coherent modes");
    r->add_option("--frames", rec.frames, "frame container or directory")->required();
    r->add_option("--format", rec.format, "auto, container, pgm_dir or csv_dir");
    r->add_option("--out", rec.out, "output mode-set bundle")->required();
    r->add_option("--mean-out", rec.mean_out, "write the mean intensity as a one-frame container");
    r->add_flag("--normalize-integral", rec.normalize, "divide each frame by its total intensity");
    r->add_option("--shot-noise", rec.shot_noise, "subtract SCALE * <I> from the covariance diagonal");
    r->add_option("--denoise", rec.denoise, "none, threshold[:LEVEL] or dark:PATH");
    r->add_option("--top-k", rec.top_k, "modes computed by the iterative eigensolver");
    r->add_option("--solver", rec.solver, "auto, dense or top-k");
    r->add_option("--keep", rec.keep, "modes written to the bundle");
    r->add_option("--dx", rec.meta.dx, "pixel pitch along x for image directories");
    r->add_option("--dy", rec.meta.dy, "pixel pitch along y for image directories");
    r->add_option("--log", rec.log, "JSON-lines log (default OUT.log.jsonl)");

    PdcArgs pdc;
    auto* sp = app.add_subcommand("simulate-pdc", "theoretical PDC Schmidt modes");
    sp->add_option("--params", pdc.params, "key = value parameter file")->check(CLI::ExistingFile);
    sp->add_option("--out", pdc.out, "output mode-set bundle")->required();
    sp->add_option("--matrix-out", pdc.matrix_out, "also write |G1| as a covariance file");
    sp->add_option("--keep", pdc.keep, "modes written to the bundle");
    sp->add_option("--fit-count", pdc.fit_count, "modes in the exponential-decay fit");
    sp->add_option("--solver", pdc.solver, "auto, dense or top-k");
    sp->add_option("--log", pdc.log, "JSON-lines log (default OUT.log.jsonl)");

    FiberArgs fib;
    auto* sf = app.add_subcommand("simulate-fiber", "LP modes of a step-index fiber");
    sf->add_option("--params", fib.params, "key = value parameter file")->check(CLI::ExistingFile);
    sf->add_option("--out", fib.out, "output mode-set bundle")->required();
    sf->add_option("--weights", fib.weights, "uniform or power:EXPONENT");
    sf->add_option("--log", fib.log, "JSON-lines log (default OUT.log.jsonl)");

    SynthArgs syn;
    auto* sy = app.add_subcommand("synth", "pseudo-thermal frames from a mode set");
    sy->add_option("--modes", syn.modes, "generator mode-set bundle")->required()->check(CLI::ExistingFile);
    sy->add_option("--frames", syn.frames, "number of frames");
    sy->add_option("--seed", syn.seed, "random seed");
    sy->add_option("--photons", syn.photons, "mean photons per frame (enables shot noise)");
    sy->add_option("--dark-sigma", syn.dark_sigma, "additive Gaussian noise per pixel");
    sy->add_option("--out", syn.out, "output frame container")->required();
    sy->add_option("--log", syn.log, "JSON-lines log (default OUT.log.jsonl)");

    FidelityArgs fid;
    auto* fi = app.add_subcommand("fidelity", "match two mode sets");
    fi->add_option("--a", fid.a, "first bundle")->required()->check(CLI::ExistingFile);
    fi->add_option("--b", fid.b, "second bundle")->required()->check(CLI::ExistingFile);
    fi->add_option("--count", fid.count, "modes to match");
    fi->add_option("--log", fid.log, "JSON-lines log");

    RenderArgs ren;
    auto* rn = app.add_subcommand("render", "PGM and text exports");
    rn->add_option("--in", ren.in, "bundle, frame container or covariance file")->required()->check(CLI::ExistingFile);
    rn->add_option("--what", ren.what, "modes, mean or g1cut");
    rn->add_option("--axis", ren.axis, "fixed axis of the cut: x or y");
    rn->add_option("--at", ren.at, "physical coordinate of the cut line");
    rn->add_option("--count", ren.count, "modes to export");
    rn->add_option("--denoise", ren.denoise, "noise filter when cutting from frames");
    rn->add_option("--out", ren.out, "output directory")->required();
    rn->add_option("--log", ren.log, "JSON-lines log");

    ReportArgs rep;
    auto* rp = app.add_subcommand("report", "summary of a mode set");
    rp->add_option("--in", rep.in, "mode-set bundle")->required()->check(CLI::ExistingFile);
    rp->add_option("--mean", rep.mean, "frame container whose average is compared with the reconstruction")
        ->check(CLI::ExistingFile);
    rp->add_option("--fit-count", rep.fit_count, "modes in the exponential-decay fit");
    rp->add_option("--log", rep.log, "JSON-lines log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "modekit: error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*r) return run_reconstruct(rec);
        if (*sp) return run_simulate_pdc(pdc);
        if (*sf) return run_simulate_fiber(fib);
        if (*sy) return run_synth(syn);
        if (*fi) return run_fidelity(fid);
        if (*rn) return run_render(ren);
        if (*rp) return run_report(rep);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "modekit: error: " << msg << '\n';
        return 1;
    }
    return 1;
}
