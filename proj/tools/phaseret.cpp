// phaseret: simulate diffraction data, reconstruct phases, run multi-seed
// batches. Exit codes: 0 ok, 1 usage, 2 data error, 3 divergence, 4 some
// batch runs failed.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "phaseret/batch.hpp"

namespace {

using namespace phaseret;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The config file seeds the defaults and explicit flags override it, so the
// file has to be located and loaded before CLI11 parses anything.
std::string find_config_path(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) return argv[i + 1];
        if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
    }
    return {};
}

int parse_int_strict(const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

void apply_object_size(const std::string& text, ExperimentConfig& cfg) {
    if (text.empty()) return;
    try {
        const auto x = text.find('x');
        if (x == std::string::npos) {
            cfg.object_rows = cfg.object_cols = parse_int_strict(text);
        } else {
            cfg.object_rows = parse_int_strict(text.substr(0, x));
            cfg.object_cols = parse_int_strict(text.substr(x + 1));
        }
    } catch (const std::exception&) {
        throw UsageError("bad --object-size '" + text + "' (use N or N1xN2)");
    }
    if (cfg.object_rows < 1 || cfg.object_cols < 1)
        throw UsageError("--object-size must be positive");
}

struct FlagBundle {
    std::string config_path;
    std::string object_size;
};

void add_solver_flags(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--algorithm", cfg.algorithm, "er|hio|oss|gps-r|gps-f|gps-rf")
        ->check(CLI::IsMember({"er", "hio", "oss", "gps-r", "gps-f", "gps-rf"}));
    cmd->add_option("--iterations", cfg.iterations, "total iterations");
    cmd->add_option("--stages", cfg.stages, "filter stages");
    cmd->add_option("--step-s", cfg.step_s, "dual step size s");
    cmd->add_option("--step-t", cfg.step_t, "primal step size t");
    cmd->add_option("--sigma-schedule", cfg.sigma_schedule,
                    "piecewise sigma, e.g. 0:0.01,400:0.1");
    cmd->add_option("--gamma-schedule", cfg.gamma_schedule,
                    "per-stage filter values (comma separated)")
        ->delimiter(',');
    cmd->add_option("--alpha-schedule", cfg.alpha_schedule,
                    "gps-rf real-space cutoffs (comma separated)")
        ->delimiter(',');
    cmd->add_option("--beta", cfg.beta, "HIO/OSS feedback");
    cmd->add_option("--init", cfg.init_file, "real-space init field (.raw/.csv)");
}

void add_data_flags(CLI::App* cmd, ExperimentConfig& cfg, FlagBundle& fb) {
    cmd->add_option("--data", cfg.data_file, "magnitudes (.raw/.csv)");
    cmd->add_option("--datamask", cfg.datamask_file, "u8 measured-pixel mask (.raw)");
    cmd->add_option("--support-file", cfg.support_file, "u8 support mask (.raw)");
    cmd->add_option("--support-margin", cfg.support_margin,
                    "rect support dilation (pixels)");
    cmd->add_option("--object-size", fb.object_size, "object extent, N or N1xN2");
    cmd->add_option("--truth", cfg.truth_file, "ground-truth field (.raw/.csv)");
    cmd->add_option("--beamstop", cfg.beamstop, "missing-center radius (pixels)");
}

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg, FlagBundle& fb) {
    cmd->add_option("--seed", cfg.seed, "base RNG seed");
    cmd->add_option("--output", cfg.output, "output directory (file for export)");
    cmd->add_option("--config", fb.config_path, "JSON config merged under flags");
}

}  // namespace

int main(int argc, char** argv) {
    ExperimentConfig cfg;
    try {
        const std::string path = find_config_path(argc, argv);
        if (!path.empty()) cfg = config_from_json_text(slurp(path));
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }

    FlagBundle fb;
    CLI::App app{"phase-retrieval toolkit: GPS, ER, HIO, and OSS on simulated or "
                 "imported diffraction magnitudes"};
    app.require_subcommand(1);

    CLI::App* sim = app.add_subcommand("simulate", "phantom -> noisy magnitudes");
    sim->add_option("--phantom", cfg.phantom, "vesicle|disks|<file>");
    sim->add_option("--oversample", cfg.oversample_ratio, "padding ratio (>= 2 advised)");
    sim->add_option("--flux", cfg.flux, "total photons (0 = calibrate)");
    sim->add_option("--readout", cfg.readout, "Gaussian readout std (intensity)");
    sim->add_option("--target-rnoise", cfg.target_rnoise, "calibration target");
    sim->add_flag("--no-noise", cfg.no_noise, "skip the noise model");
    sim->add_option("--support-margin", cfg.support_margin,
                    "support dilation (pixels)");
    sim->add_option("--object-size", fb.object_size, "object extent, N or N1xN2");
    sim->add_option("--beamstop", cfg.beamstop, "missing-center radius (pixels)");
    add_common_flags(sim, cfg, fb);

    CLI::App* rec = app.add_subcommand("reconstruct", "one seeded reconstruction");
    add_solver_flags(rec, cfg);
    add_data_flags(rec, cfg, fb);
    add_common_flags(rec, cfg, fb);

    CLI::App* bat = app.add_subcommand("batch", "multi-seed reconstruction study");
    add_solver_flags(bat, cfg);
    add_data_flags(bat, cfg, fb);
    bat->add_option("--runs", cfg.runs, "number of seeded runs");
    bat->add_option("--topk", cfg.topk, "best-k statistics size");
    bat->add_option("--workers", cfg.workers, "worker threads (0 = auto)");
    add_common_flags(bat, cfg, fb);

    CLI::App* met = app.add_subcommand("metrics", "score an existing reconstruction");
    met->add_option("--recon", cfg.recon_file, "reconstruction (.raw/.csv)");
    add_data_flags(met, cfg, fb);
    add_common_flags(met, cfg, fb);

    CLI::App* exp = app.add_subcommand("export", "convert .raw/.csv to .pgm or .raw");
    exp->add_option("--input", cfg.input_file, "source array (.raw/.csv)");
    exp->add_option("--scale", cfg.scale, "linear|log")
        ->check(CLI::IsMember({"linear", "log"}));
    add_common_flags(exp, cfg, fb);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        apply_object_size(fb.object_size, cfg);
        if (sim->parsed()) {
            cmd_simulate(cfg);
        } else if (rec->parsed()) {
            cmd_reconstruct(cfg);
        } else if (bat->parsed()) {
            const int failures = cmd_batch(cfg);
            if (failures > 0) {
                std::cerr << failures << " of " << cfg.runs << " runs failed\n";
                return 4;
            }
        } else if (met->parsed()) {
            std::cout << cmd_metrics(cfg);
        } else if (exp->parsed()) {
            cmd_export(cfg);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
