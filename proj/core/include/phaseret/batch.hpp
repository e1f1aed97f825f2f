#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseret/rawio.hpp"
#include "phaseret/solver.hpp"

namespace phaseret {

/// Flat, flag-shaped experiment description shared by every subcommand.
/// String fields left empty mean "not supplied". JSON round trips via
/// config_{from,to}_json_text use the same keys as the CLI flags, so a written
/// manifest can be replayed with --config.
struct ExperimentConfig {
    std::string algorithm = "gps-f";
    int iterations = 1000;  // total across all stages
    int stages = 10;
    double step_s = 0.9;
    double step_t = 1.0;
    double beta = 0.9;
    std::string sigma_schedule = "0:0.01,400:0.1";  // "iter:sigma,iter:sigma"
    std::vector<double> gamma_schedule;             // per-stage filter override
    std::vector<double> alpha_schedule;             // gps-rf real-side cutoffs
    std::uint64_t seed = 0;

    std::string phantom;  // "vesicle", "disks", or a raw/CSV file path
    int object_rows = 64;
    int object_cols = 64;
    double oversample_ratio = 2.0;
    int support_margin = 0;
    std::string support_file;
    std::string data_file;
    std::string datamask_file;
    std::string truth_file;
    std::string init_file;
    std::string recon_file;  // metrics subcommand input
    std::string input_file;  // export subcommand input
    std::string scale = "linear";
    double beamstop = 0.0;

    bool no_noise = false;
    double flux = 0.0;  // 0 = calibrate against target_rnoise
    double readout = 0.0;
    double target_rnoise = 0.05;

    int runs = 1;
    int topk = 1;
    int workers = 0;  // 0 = hardware concurrency
    std::string output = ".";
};

std::vector<SigmaBreakpoint> parse_sigma_schedule(const std::string& text);
std::string format_sigma_schedule(const std::vector<SigmaBreakpoint>& schedule);

/// Validates and lowers the flag-level solver knobs (throws UsageError).
SolverConfig solver_config(const ExperimentConfig& cfg);

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

/// Phantom -> oversampled field -> noisy magnitudes; writes truth.raw,
/// magnitudes.raw, datamask.raw, support.raw, manifest.json into cfg.output.
void cmd_simulate(const ExperimentConfig& cfg);

/// One seeded reconstruction; writes recon.raw, rf_trace.csv, metrics.json,
/// manifest.json. Divergence propagates as DivergenceError.
void cmd_reconstruct(const ExperimentConfig& cfg);

/// cfg.runs reconstructions seeded seed..seed+runs-1 on a fixed worker pool;
/// writes batch.csv, histogram.csv, convergence_best.csv, summary.json,
/// manifest.json. Outputs are independent of worker count. Returns the number
/// of failed runs (they are recorded, not fatal).
int cmd_batch(const ExperimentConfig& cfg);

/// Metrics for an existing reconstruction against data/truth files; returns
/// the JSON text it writes (stdout printing is the caller's business).
std::string cmd_metrics(const ExperimentConfig& cfg);

/// Converts input_file (.raw or .csv) to a 16-bit PGM (output ends in .pgm)
/// or an f64 raw array (anything else).
void cmd_export(const ExperimentConfig& cfg);

}  // namespace phaseret
