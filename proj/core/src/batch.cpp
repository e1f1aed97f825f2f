#include "phaseret/batch.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "phaseret/fft.hpp"
#include "phaseret/metrics.hpp"
#include "phaseret/sim.hpp"

namespace phaseret {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

int parse_int_strict(const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

double parse_double_strict(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
}

}  // namespace

std::vector<SigmaBreakpoint> parse_sigma_schedule(const std::string& text) {
    std::vector<SigmaBreakpoint> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
            throw UsageError("sigma schedule entries are iteration:value, got '" + tok +
                             "'");
        try {
            out.push_back({parse_int_strict(tok.substr(0, colon)),
                           parse_double_strict(tok.substr(colon + 1))});
        } catch (const std::exception&) {
            throw UsageError("bad sigma schedule entry '" + tok + "'");
        }
    }
    if (out.empty()) throw UsageError("empty sigma schedule");
    return out;
}

std::string format_sigma_schedule(const std::vector<SigmaBreakpoint>& schedule) {
    std::string out;
    for (const auto& bp : schedule) {
        if (!out.empty()) out += ',';
        char buf[48];
        std::snprintf(buf, sizeof buf, "%d:%.17g", bp.start_iteration, bp.sigma);
        out += buf;
    }
    return out;
}

SolverConfig solver_config(const ExperimentConfig& cfg) {
    SolverConfig sc;
    try {
        sc.algorithm = algorithm_from_name(cfg.algorithm);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (cfg.iterations < 0) throw UsageError("--iterations must be >= 0");
    if (cfg.stages < 1) throw UsageError("--stages must be >= 1");
    if (cfg.iterations % cfg.stages != 0)
        throw UsageError("--iterations must divide evenly across --stages");
    if (!(cfg.step_s > 0.0)) throw UsageError("--step-s must be positive");
    if (!(cfg.step_t > 0.0)) throw UsageError("--step-t must be positive");
    if (!(cfg.beta > 0.0) || cfg.beta > 1.0) throw UsageError("--beta must be in (0,1]");
    sc.s = cfg.step_s;
    sc.t = cfg.step_t;
    sc.beta = cfg.beta;
    sc.seed = cfg.seed;
    sc.schedule.stages = cfg.stages;
    sc.schedule.iters_per_stage = cfg.iterations / cfg.stages;
    sc.schedule.filter_per_stage = cfg.gamma_schedule;
    sc.schedule.alpha_per_stage = cfg.alpha_schedule;
    sc.schedule.sigma_breakpoints = parse_sigma_schedule(cfg.sigma_schedule);
    return sc;
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("bad config JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("config must be a JSON object");

    ExperimentConfig c;
    const auto get = [&](const char* key, auto& slot) {
        if (!j.contains(key)) return;
        try {
            slot = j.at(key).get<std::decay_t<decltype(slot)>>();
        } catch (const json::exception&) {
            throw DataError(std::string("config key has the wrong type: ") + key);
        }
    };
    get("algorithm", c.algorithm);
    get("iterations", c.iterations);
    get("stages", c.stages);
    get("step_s", c.step_s);
    get("step_t", c.step_t);
    get("beta", c.beta);
    get("sigma_schedule", c.sigma_schedule);
    get("gamma_schedule", c.gamma_schedule);
    get("alpha_schedule", c.alpha_schedule);
    get("seed", c.seed);
    get("phantom", c.phantom);
    if (j.contains("object_size")) {
        const auto& os = j.at("object_size");
        if (os.is_number_integer()) {
            c.object_rows = c.object_cols = os.get<int>();
        } else if (os.is_array() && os.size() == 2) {
            try {
                c.object_rows = os[0].get<int>();
                c.object_cols = os[1].get<int>();
            } catch (const json::exception&) {
                throw DataError("config: object_size entries must be integers");
            }
        } else {
            throw DataError("config: object_size must be an integer or [rows, cols]");
        }
    }
    get("oversample", c.oversample_ratio);
    get("support_margin", c.support_margin);
    get("support_file", c.support_file);
    get("data", c.data_file);
    get("datamask", c.datamask_file);
    get("truth", c.truth_file);
    get("init", c.init_file);
    get("recon", c.recon_file);
    get("input", c.input_file);
    get("scale", c.scale);
    get("beamstop", c.beamstop);
    get("no_noise", c.no_noise);
    get("flux", c.flux);
    get("readout", c.readout);
    get("target_rnoise", c.target_rnoise);
    get("runs", c.runs);
    get("topk", c.topk);
    get("workers", c.workers);
    get("output", c.output);
    return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
    json j;
    j["algorithm"] = c.algorithm;
    j["iterations"] = c.iterations;
    j["stages"] = c.stages;
    j["step_s"] = c.step_s;
    j["step_t"] = c.step_t;
    j["beta"] = c.beta;
    j["sigma_schedule"] = c.sigma_schedule;
    j["gamma_schedule"] = c.gamma_schedule;
    j["alpha_schedule"] = c.alpha_schedule;
    j["seed"] = c.seed;
    j["phantom"] = c.phantom;
    j["object_size"] = {c.object_rows, c.object_cols};
    j["oversample"] = c.oversample_ratio;
    j["support_margin"] = c.support_margin;
    j["support_file"] = c.support_file;
    j["data"] = c.data_file;
    j["datamask"] = c.datamask_file;
    j["truth"] = c.truth_file;
    j["init"] = c.init_file;
    j["recon"] = c.recon_file;
    j["input"] = c.input_file;
    j["scale"] = c.scale;
    j["beamstop"] = c.beamstop;
    j["no_noise"] = c.no_noise;
    j["flux"] = c.flux;
    j["readout"] = c.readout;
    j["target_rnoise"] = c.target_rnoise;
    j["runs"] = c.runs;
    j["topk"] = c.topk;
    j["workers"] = c.workers;
    j["output"] = c.output;
    return j.dump(2);
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::pair<Lattice, std::vector<double>> load_matrix(const std::string& path) {
    if (ends_with(path, ".csv")) return read_csv_matrix(path);
    const RawArray a = read_raw(path);
    return {a.shape, as_f64(a)};
}

Field load_field_file(const std::string& path) {
    if (ends_with(path, ".csv")) {
        auto [lat, vals] = read_csv_matrix(path);
        Field f(lat);
        for (std::size_t i = 0; i < vals.size(); ++i) f.v[i] = cplx(vals[i], 0.0);
        return f;
    }
    return as_field(read_raw(path));
}

void make_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw DataError("short write: " + path.string());
}

void write_manifest(const fs::path& path, const ExperimentConfig& cfg,
                    const char* command, const json& extra) {
    json j = json::parse(config_to_json_text(cfg));
    j["command"] = command;
    if (!extra.is_null()) j["achieved"] = extra;
    write_text(path, j.dump(2) + "\n");
}

Phantom resolve_phantom(const ExperimentConfig& cfg) {
    if (cfg.phantom == "vesicle" || cfg.phantom == "disks") {
        if (cfg.object_rows < 16 || cfg.object_cols < 16)
            throw UsageError("--object-size must be at least 16");
        return make_phantom(phantom_kind_from_name(cfg.phantom),
                            Lattice{cfg.object_rows, cfg.object_cols}, cfg.seed);
    }
    auto [lat, vals] = load_matrix(cfg.phantom);
    return phantom_from_values(lat, std::move(vals), cfg.phantom);
}

struct Inputs {
    MagnitudeData data;
    SupportMask support;
    std::optional<Phantom> truth;
    std::optional<Field> init;
};

MagnitudeData load_magnitude_data(const ExperimentConfig& cfg) {
    auto [lat, b] = load_matrix(cfg.data_file);
    std::vector<std::uint8_t> measured(std::size_t(lat.size()), 1);
    if (!cfg.datamask_file.empty()) {
        const RawArray mask = read_raw(cfg.datamask_file);
        if (mask.shape != lat)
            throw DataError("data mask lattice differs from the magnitudes");
        measured = as_u8(mask);
    }
    if (cfg.beamstop > 0.0) {
        const RadialMap freq = freq_radial_map(lat);
        for (std::size_t i = 0; i < measured.size(); ++i)
            if (freq.r[i] < cfg.beamstop) measured[i] = 0;
    }
    try {
        return MagnitudeData(lat, std::move(b), std::move(measured));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

Inputs load_inputs(const ExperimentConfig& cfg) {
    if (cfg.data_file.empty())
        throw UsageError("this command needs --data <magnitudes file>");
    if (!cfg.phantom.empty())
        throw UsageError("--phantom and --data are mutually exclusive");

    Inputs in;
    in.data = load_magnitude_data(cfg);
    const Lattice lat = in.data.lattice;

    if (!cfg.support_file.empty()) {
        const RawArray mask = read_raw(cfg.support_file);
        if (mask.shape != lat) throw DataError("support lattice differs from the data");
        try {
            in.support = SupportMask(lat, as_u8(mask));
        } catch (const std::invalid_argument& e) {
            throw DataError(e.what());
        }
    } else {
        try {
            in.support = rect_support(lat, cfg.object_rows, cfg.object_cols,
                                      cfg.support_margin);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string(e.what()) +
                             " (set --object-size/--support-margin or --support-file)");
        }
    }

    if (!cfg.truth_file.empty()) {
        auto [tlat, tvals] = load_matrix(cfg.truth_file);
        if (tlat != lat) throw DataError("truth lattice differs from the data");
        in.truth = phantom_from_values(tlat, std::move(tvals), "truth");
    }
    if (!cfg.init_file.empty()) {
        Field init = load_field_file(cfg.init_file);
        if (init.lattice != lat) throw DataError("init lattice differs from the data");
        in.init = std::move(init);
    }
    return in;
}

}  // namespace

void cmd_simulate(const ExperimentConfig& cfg) {
    if (cfg.phantom.empty()) throw UsageError("simulate needs --phantom");
    if (!cfg.data_file.empty())
        throw UsageError("--phantom and --data are mutually exclusive");
    if (!(cfg.oversample_ratio >= 1.0)) throw UsageError("--oversample must be >= 1");

    const Phantom ph = resolve_phantom(cfg);
    Field u0 = oversample(ph, cfg.oversample_ratio).first;
    // The emitted support is the phantom's own footprint (plus margin), not
    // the bounding rectangle: a rectangle is far looser than the object and
    // demonstrably too weak for reliable reconstruction.
    const SupportMask support = tight_support(u0, cfg.support_margin);

    ExperimentConfig resolved = cfg;
    NoiseSpec spec{0.0, 0.0, false, cfg.seed};
    bool calibrated = false, within = true;
    if (!cfg.no_noise) {
        double flux = cfg.flux;
        if (!(flux > 0.0)) {
            const FluxCalibration cal = calibrate_flux(u0, cfg.readout, cfg.target_rnoise,
                                                       cfg.beamstop, cfg.seed);
            flux = cal.flux;
            within = cal.within_band;
            calibrated = true;
        }
        spec = NoiseSpec{flux, cfg.readout, true, cfg.seed};
        resolved.flux = flux;
    }

    const MagnitudeData data = simulate_magnitudes(u0, spec, cfg.beamstop);
    const double achieved = cfg.no_noise ? 0.0 : r_noise(data, u0);
    if (calibrated && !within)
        std::cerr << "warning: calibration missed the r_noise target "
                  << fmt(cfg.target_rnoise) << " (achieved " << fmt(achieved) << ")\n";

    make_output_dir(cfg.output);
    const fs::path out(cfg.output);
    std::vector<double> truth_vals(u0.size());
    for (std::size_t i = 0; i < truth_vals.size(); ++i) truth_vals[i] = u0.v[i].real();
    write_raw_f64((out / "truth.raw").string(), u0.lattice, truth_vals);
    write_raw_f64((out / "magnitudes.raw").string(), data.lattice, data.b);
    write_raw_u8((out / "datamask.raw").string(), data.lattice, data.measured);
    write_raw_u8((out / "support.raw").string(), support.lattice, support.inside);

    json extra = {{"r_noise", achieved},
                  {"flux", spec.flux},
                  {"calibrated", calibrated},
                  {"within_band", within}};
    write_manifest(out / "manifest.json", resolved, "simulate", extra);
}

void cmd_reconstruct(const ExperimentConfig& cfg) {
    const Inputs in = load_inputs(cfg);
    const SolverConfig sc = solver_config(cfg);

    make_output_dir(cfg.output);
    const fs::path out(cfg.output);
    std::ofstream trace(out / "rf_trace.csv", std::ios::trunc);
    if (!trace) throw DataError("cannot open for writing: " + (out / "rf_trace.csv").string());
    trace << "iteration,rf,sigma,gamma,stage\n";
    const IterObserver observer = [&trace](const IterEvent& ev) {
        trace << ev.iteration << ',' << fmt(ev.rf) << ',' << fmt(ev.sigma) << ','
              << fmt(ev.filter) << ',' << ev.stage << '\n';
    };

    const Field* init = in.init ? &*in.init : nullptr;
    const RunRecord rec = run(in.data, in.support, sc, init, observer);
    trace.flush();

    std::vector<double> recon_vals(rec.final_image.size());
    for (std::size_t i = 0; i < recon_vals.size(); ++i)
        recon_vals[i] = rec.final_image.v[i].real();
    write_raw_f64((out / "recon.raw").string(), rec.final_image.lattice, recon_vals);

    json metrics = {{"algorithm", algorithm_name(rec.config_echo.algorithm)},
                    {"seed", rec.config_echo.seed},
                    {"iterations", rec.iterations_run},
                    {"best_rf", rec.best_rf},
                    {"residual", residual(rec.best_iterate, in.data, Domain::fourier)}};
    metrics["r_real"] =
        in.truth ? json(r_real(rec.final_image, *in.truth)) : json(nullptr);
    write_text(out / "metrics.json", metrics.dump(2) + "\n");

    json resolved_info = {{"filter_per_stage", rec.config_echo.schedule.filter_per_stage},
                          {"iters_per_stage", rec.config_echo.schedule.iters_per_stage}};
    json extra = {{"best_rf", rec.best_rf}, {"resolved", resolved_info}};
    write_manifest(out / "manifest.json", cfg, "reconstruct", extra);
}

int cmd_batch(const ExperimentConfig& cfg) {
    if (cfg.runs < 1) throw UsageError("--runs must be >= 1");
    if (cfg.topk < 1) throw UsageError("--topk must be >= 1");
    if (cfg.workers < 0) throw UsageError("--workers must be >= 0");

    const Inputs in = load_inputs(cfg);
    const SolverConfig base = solver_config(cfg);
    const Field* init = in.init ? &*in.init : nullptr;

    struct Outcome {
        std::optional<RunRecord> rec;
        std::string error;
    };
    std::vector<Outcome> outcomes(std::size_t(cfg.runs));
    std::atomic<int> cursor{0};
    const auto work = [&] {
        for (;;) {
            const int i = cursor.fetch_add(1);
            if (i >= cfg.runs) return;
            SolverConfig sc = base;
            sc.seed = cfg.seed + std::uint64_t(i);
            try {
                outcomes[std::size_t(i)].rec = run(in.data, in.support, sc, init);
            } catch (const DivergenceError& e) {
                outcomes[std::size_t(i)].error =
                    "diverged at iteration " + std::to_string(e.iteration);
            } catch (const std::exception& e) {
                outcomes[std::size_t(i)].error = e.what();
            }
        }
    };
    int workers = cfg.workers > 0 ? cfg.workers : int(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cfg.runs));
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();

    std::vector<RunRecord> good;
    for (auto& o : outcomes)
        if (o.rec) good.push_back(std::move(*o.rec));
    const int failures = cfg.runs - int(good.size());

    make_output_dir(cfg.output);
    const fs::path out(cfg.output);

    std::optional<BatchSummary> summary;
    if (!good.empty()) {
        const int k = std::min(cfg.topk, int(good.size()));
        summary = aggregate(good, in.truth ? &*in.truth : nullptr, k, &in.data);
    }

    {
        std::ofstream csv(out / "batch.csv", std::ios::trunc);
        csv << "seed,status,best_rf,r_real,residual\n";
        std::size_t gi = 0;
        for (int i = 0; i < cfg.runs; ++i) {
            const std::uint64_t seed = cfg.seed + std::uint64_t(i);
            const Outcome& o = outcomes[std::size_t(i)];
            if (o.error.empty()) {
                const RunStat& st = summary->per_run[gi++];
                csv << seed << ",ok," << fmt(st.best_rf) << ',' << fmt(st.r_real) << ','
                    << fmt(st.residual) << '\n';
            } else {
                std::string msg = o.error;
                for (char& ch : msg)
                    if (ch == ',' || ch == '\n') ch = ';';
                csv << seed << ',' << msg << ",,,\n";
            }
        }
        if (!csv) throw DataError("short write: " + (out / "batch.csv").string());
    }

    json summary_json = {{"algorithm", cfg.algorithm},
                         {"runs", cfg.runs},
                         {"failures", failures}};
    if (summary) {
        const Histogram& h = summary->rf_histogram;
        {
            std::ofstream csv(out / "histogram.csv", std::ios::trunc);
            csv << "bin_lo,bin_hi,count\n";
            for (std::size_t bin = 0; bin < h.counts.size(); ++bin)
                csv << fmt(h.lo + double(bin) * h.bin_width) << ','
                    << fmt(h.lo + double(bin + 1) * h.bin_width) << ',' << h.counts[bin]
                    << '\n';
        }
        {
            std::ofstream csv(out / "convergence_best.csv", std::ios::trunc);
            csv << "iteration,rf\n";
            for (std::size_t it = 0; it < summary->best_trace.size(); ++it)
                csv << it << ',' << fmt(summary->best_trace[it]) << '\n';
        }
        const RunStat& best = summary->per_run[std::size_t(summary->best_run)];
        summary_json["topk"] = summary->k;
        summary_json["rf_mean_topk"] = summary->rf_mean_topk;
        summary_json["rf_std_topk"] = summary->rf_std_topk;
        summary_json["best_seed"] = best.seed;
        summary_json["best_rf"] = best.best_rf;
        if (in.truth) summary_json["best_r_real"] = best.r_real;
    }
    write_text(out / "summary.json", summary_json.dump(2) + "\n");
    write_manifest(out / "manifest.json", cfg, "batch",
                   json{{"failures", failures}});
    return failures;
}

std::string cmd_metrics(const ExperimentConfig& cfg) {
    if (cfg.recon_file.empty()) throw UsageError("metrics needs --recon <recon file>");
    const Field recon = load_field_file(cfg.recon_file);

    json j = {{"recon", cfg.recon_file}};
    if (!cfg.data_file.empty()) {
        const MagnitudeData data = load_magnitude_data(cfg);
        if (data.lattice != recon.lattice)
            throw DataError("data lattice differs from the reconstruction");
        const Field z = dft2(recon);
        j["rf"] = rf_factor(z, data);
        j["residual"] = residual(z, data, Domain::fourier);
    }
    if (!cfg.truth_file.empty()) {
        auto [tlat, tvals] = load_matrix(cfg.truth_file);
        if (tlat != recon.lattice)
            throw DataError("truth lattice differs from the reconstruction");
        const Phantom truth = phantom_from_values(tlat, std::move(tvals), "truth");
        j["r_real"] = r_real(recon, truth);
    }
    const std::string text = j.dump(2) + "\n";
    if (!cfg.output.empty() && cfg.output != ".") {
        const fs::path out(cfg.output);
        if (out.has_parent_path()) make_output_dir(out.parent_path().string());
        write_text(out, text);
    }
    return text;
}

void cmd_export(const ExperimentConfig& cfg) {
    if (cfg.input_file.empty()) throw UsageError("export needs --input <file>");
    if (cfg.output.empty() || cfg.output == "." || fs::is_directory(cfg.output))
        throw UsageError("export needs --output <file>");
    if (cfg.scale != "linear" && cfg.scale != "log")
        throw UsageError("--scale must be linear or log");

    const Field f = load_field_file(cfg.input_file);
    const fs::path out(cfg.output);
    if (out.has_parent_path()) make_output_dir(out.parent_path().string());

    if (ends_with(cfg.output, ".pgm")) {
        export_image(f, cfg.output,
                     cfg.scale == "log" ? ImageScale::log : ImageScale::linear);
        return;
    }
    bool complex_payload = false;
    for (const cplx& v : f.v) complex_payload = complex_payload || v.imag() != 0.0;
    if (complex_payload) {
        write_raw_c128(cfg.output, f);
    } else {
        std::vector<double> vals(f.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = f.v[i].real();
        write_raw_f64(cfg.output, f.lattice, vals);
    }
}

}  // namespace phaseret
