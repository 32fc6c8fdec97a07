// Copyright 2026 The QKM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Command implementations behind the `qkm` executable. Kept header-only so the
// test suite can drive them in-process.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qkm/qkm.hpp"

namespace qkm::cli {

/// Exit codes: 0 success, 2 usage/config, 3 numerical failure.
enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3 };

struct RunConfig {
    std::string command;

    std::string input;
    std::string output;
    std::string hamiltonian;
    std::string truth;
    std::vector<std::string> predictions;  // evaluate: one entry per trajectory
    std::vector<std::string> truths;
    std::string manifest;

    // Layout; d = 0 means "infer from the data".
    std::uint64_t d = 0;
    std::uint64_t c = 1;
    std::uint64_t h = 1;
    std::string encoder;

    double dt = 0.0;  // 0 selects the system default
    std::uint64_t steps = 60;
    std::string step_range = "1..60";
    std::uint64_t fit_steps = 0;  // 0 = every step
    std::uint64_t start = 0;
    bool global_phase = false;
    bool squared = false;
    bool lenient = false;
    bool plot = false;
    std::uint64_t seed = 0;
    unsigned count = 1;
    double mask_tolerance = 1e-9;

    // Systems.
    std::string system = "torus";
    double alpha_scale = 0.1;
    double wave_speed = 1.0;
    std::string init = "random";
    GrayScottParams gray_scott{};
    std::size_t grid = 128;

    // Evaluate.
    std::size_t bins = 64;
    std::size_t channel = 0;
    std::vector<double> orders{1, 2, 3, 4};
    std::vector<std::size_t> separations{1, 2, 4, 8, 16};
    std::string fit_range = "1..8";
    std::string prefix = "eval";

    // Bench.
    unsigned n_min = 4;
    unsigned n_max = 20;
    unsigned reps = 5;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

inline std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string &text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const auto v = std::stoull(text);
            return {v, v};
        }
        const auto a = std::stoull(text.substr(0, dots));
        const auto b = std::stoull(text.substr(dots + 2));
        if (b < a) throw ConfigError("range '" + text + "' is empty");
        return {a, b};
    } catch (const std::invalid_argument &) {
        throw ConfigError("cannot parse range '" + text + "' (expected a..b)");
    } catch (const std::out_of_range &) {
        throw ConfigError("range '" + text + "' out of bounds");
    }
}

/// Sidecar log: the only place wall-clock timestamps are written.
inline void write_sidecar_log(const std::string &output, const std::string &line) {
    std::ofstream log(output + ".log", std::ios::app);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    log << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << ' ' << line << '\n';
}

inline std::string default_encoder(const TrajectoryDataset &ds) {
    if (ds.kind == PayloadKind::Latent) return "latent";
    if (ds.meta("system") == std::optional<std::string>("torus")) return "identity";
    return "fourier";
}

inline SubsystemLayout infer_layout(const RunConfig &cfg, const std::string &encoder, const TrajectoryDataset &ds) {
    if (cfg.d != 0) return build_layout(cfg.d, cfg.c, cfg.h);
    if (encoder == "latent") return load_latent_trajectory(ds).layout;
    return build_layout(ds.snapshot_size(), 1, 1);
}

/// (rows, cols, offset) of the 2D plane evaluated in a snapshot.
struct Plane {
    std::size_t rows, cols, offset;
};

inline Plane plane_of(const TrajectoryDataset &ds, std::size_t channel) {
    if (ds.dims.size() == 1) return {1, ds.dims[0], 0};
    if (ds.dims.size() == 2) return {ds.dims[0], ds.dims[1], 0};
    if (ds.dims.size() == 3) {
        if (channel >= ds.dims[0]) throw ConfigError("channel " + std::to_string(channel) + " out of range");
        return {ds.dims[1], ds.dims[2], channel * ds.dims[1] * ds.dims[2]};
    }
    throw ShapeError("evaluate supports rank 1-3 fields");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// generate

inline TrajectoryDataset generate_one(const RunConfig &cfg, std::uint64_t index) {
    const std::uint64_t seed = subseed(cfg.seed, index);
    TrajectoryDataset ds;
    if (cfg.system == "torus") {
        const std::uint64_t d = cfg.d ? cfg.d : 8;
        const SubsystemLayout layout = build_layout(d, 1, 1);
        const double dt = cfg.dt > 0 ? cfg.dt : 0.1;
        Rng rng(seed);
        // Rates are the spectrum of a random diagonal Hamiltonian, so the
        // rotation is exactly representable by the model family.
        std::vector<double> alphas(layout.qubit_count(1));
        for (auto &a : alphas) a = rng.uniform(-cfg.alpha_scale, cfg.alpha_scale) / dt;
        const DiagonalHamiltonian hamiltonian(layout, {alphas});
        const auto omega = subsystem_eigenvalues(hamiltonian, 1);
        std::vector<double> phi0(d);
        for (auto &p : phi0) p = rng.uniform(-std::numbers::pi, std::numbers::pi);
        ds = torus_rotation_trajectory(omega, phi0, dt, cfg.steps);
        std::string list;
        for (double a : alphas) list += (list.empty() ? "" : ",") + detail::fmt(a);
        ds.set_meta("alpha", list);
    } else if (cfg.system == "advection") {
        const std::uint64_t d = cfg.d ? cfg.d : 256;
        const double dt = cfg.dt > 0 ? cfg.dt : 0.01;
        std::vector<double> u0;
        if (cfg.init == "cos") {
            for (double x : periodic_grid(d)) u0.push_back(std::cos(x));
        } else if (cfg.init == "random") {
            u0 = random_band_limited_field(d, seed);
        } else {
            throw ConfigError("unknown advection init '" + cfg.init + "' (random or cos)");
        }
        ds = advection_trajectory(cfg.wave_speed, u0, dt, cfg.steps);
        ds.set_meta("init", cfg.init);
    } else if (cfg.system == "grayscott") {
        GrayScottParams p = cfg.gray_scott;
        p.nx = p.ny = cfg.grid;
        const double dt = cfg.dt > 0 ? cfg.dt : 10.0;
        auto [a, b] = gray_scott_initial_condition(p, seed);
        ds = gray_scott_trajectory(p, a, b, dt, cfg.steps);
    } else if (cfg.system == "csv") {
        if (cfg.manifest.empty()) throw ConfigError("--system csv needs --manifest");
        ds = import_csv_manifest(cfg.manifest);
    } else {
        throw ConfigError("unknown system '" + cfg.system + "' (torus, advection, grayscott, csv)");
    }
    ds.set_meta("seed", std::to_string(cfg.seed));
    ds.set_meta("trajectory_index", std::to_string(index));
    return ds;
}

inline std::string indexed_path(const std::string &path, unsigned index, unsigned count) {
    if (count <= 1) return path;
    const std::filesystem::path p(path);
    std::ostringstream name;
    name << p.stem().string() << '_' << std::setw(4) << std::setfill('0') << index << p.extension().string();
    return (p.parent_path() / name.str()).string();
}

inline int cmd_generate(const RunConfig &cfg, std::ostream &out) {
    const std::string output = cfg.output.empty() ? cfg.system + ".qktraj" : cfg.output;
    std::vector<TrajectoryDataset> results(cfg.count);
    parallel_for(cfg.count, [&](std::size_t i) { results[i] = generate_one(cfg, i); });
    for (unsigned i = 0; i < cfg.count; ++i) {
        const auto path = indexed_path(output, i, cfg.count);
        write_trajectory(path, results[i]);
        out << "wrote " << path << " (" << results[i].snapshot_count() << " snapshots)\n";
    }
    detail::write_sidecar_log(output, "generate system=" + cfg.system + " seed=" + std::to_string(cfg.seed));
    return kOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitOutcome {
    SystemFit fit;
    std::string report;
};

inline FitOutcome fit_dataset(const TrajectoryDataset &ds, const RunConfig &cfg) {
    const std::string encoder_name = cfg.encoder.empty() ? detail::default_encoder(ds) : cfg.encoder;
    const SubsystemLayout layout = detail::infer_layout(cfg, encoder_name, ds);
    const auto encoder = make_encoder(encoder_name, layout);
    if (encoder->state_size() != ds.snapshot_size()) {
        throw LayoutError(encoder_name + " encoder on " + layout.describe() + " expects snapshots of " +
                          std::to_string(encoder->state_size()) + " values, data has " +
                          std::to_string(ds.snapshot_size()));
    }
    const std::uint64_t steps = cfg.fit_steps ? std::min(cfg.fit_steps, ds.steps) : ds.steps;

    std::vector<ObservableState> observables(steps + 1);
    parallel_for(steps + 1, [&](std::size_t k) { observables[k] = encoder->encode(ds.snapshot(k)); });

    std::vector<PhaseTrajectory> trajectories;
    std::vector<std::vector<bool>> masks;
    bool any_masked = false;
    for (std::size_t j = 1; j <= layout.subsystem_count(); ++j) {
        const std::size_t width = layout.dim(j);
        std::vector<double> phases((steps + 1) * width);
        for (std::size_t k = 0; k <= steps; ++k) {
            const auto block = observables[k].phase(j);
            std::copy(block.begin(), block.end(), phases.begin() + static_cast<long>(k * width));
        }
        trajectories.emplace_back(ds.dt, steps, width, std::move(phases));

        // Indices whose modulus is negligible carry no phase information.
        const auto r0 = observables[0].modulus(j);
        const double peak = *std::max_element(r0.begin(), r0.end());
        std::vector<bool> mask(width);
        for (std::size_t l = 0; l < width; ++l) mask[l] = r0[l] > cfg.mask_tolerance * peak;
        any_masked = any_masked || std::find(mask.begin(), mask.end(), false) != mask.end();
        masks.push_back(std::move(mask));
    }

    FitOutcome outcome;
    outcome.fit = fit_system(trajectories, layout, ds.dt, cfg.global_phase, any_masked ? &masks : nullptr);
    std::ostringstream report;
    report << std::setprecision(17);
    report << "# encoder " << encoder_name << '\n';
    if (encoder_name == "latent") {
        const double drift = load_latent_trajectory(ds).modulus_drift;
        report << "# modulus_drift " << drift << (drift > 1e-10 ? " (warning: latent modulus is not constant)" : "")
               << '\n';
    }
    report << "# " << layout.describe() << " dt " << ds.dt << " steps " << steps << '\n';
    for (std::size_t j = 0; j < outcome.fit.blocks.size(); ++j) {
        const auto &block = outcome.fit.blocks[j];
        report << block.to_text(j + 1);
        report << "# active_indices " << block.active_count << '/' << layout.dims()[j] << '\n';
        if (block.exact_by_construction) report << "# exact_by_construction (square system)\n";
    }
    report << "# worst_residual " << outcome.fit.worst_residual << " subsystem " << outcome.fit.worst_subsystem
           << '\n';
    outcome.report = report.str();
    return outcome;
}

inline int cmd_fit(const RunConfig &cfg, std::ostream &out) {
    if (cfg.input.empty()) throw ConfigError("fit needs --input");
    const TrajectoryDataset ds = read_trajectory(cfg.input);
    FitOutcome outcome;
    try {
        outcome = fit_dataset(ds, cfg);
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        // Anything that goes wrong once the data is loaded is a fit failure.
        throw FitError(std::string(e.kind()) + ": " + e.what());
    }
    const std::string prefix =
        cfg.output.empty() ? std::filesystem::path(cfg.input).replace_extension().string() : cfg.output;
    write_qkham(prefix + ".qkham", outcome.fit.model);
    std::ofstream(prefix + ".fit.txt") << outcome.report;
    out << outcome.report;
    out << "wrote " << prefix << ".qkham\n";
    detail::write_sidecar_log(prefix, "fit input=" + cfg.input);
    return kOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOutcome {
    TrajectoryDataset predicted;
    std::vector<std::pair<std::uint64_t, double>> errors;  // (step, relative_l2)
};

/// One-shot predictions for every step in [first, last]: each target is
/// reached by a single application of the k-step operator.
inline PredictOutcome predict_dataset(const KoopmanModel &model, const TrajectoryDataset &source,
                                      const TrajectoryDataset *truth, const RunConfig &cfg) {
    const auto [first, last] = detail::parse_range(cfg.step_range);
    const std::string encoder_name = cfg.encoder.empty() ? detail::default_encoder(source) : cfg.encoder;
    const auto encoder = make_encoder(encoder_name, model.hamiltonian.layout(), !cfg.lenient);
    if (cfg.start > source.steps) throw ConfigError("--start beyond the input trajectory");
    if (encoder->state_size() != source.snapshot_size()) {
        throw LayoutError("Hamiltonian " + model.hamiltonian.layout().describe() + " with " + encoder_name +
                          " encoder expects snapshots of " + std::to_string(encoder->state_size()) + " values");
    }
    const ObservableState initial = encoder->encode(source.snapshot(cfg.start));

    PredictOutcome outcome;
    auto &ds = outcome.predicted;
    ds.kind = source.kind;
    ds.dims = source.dims;
    ds.steps = last - first;
    ds.dt = source.dt;
    ds.metadata = source.metadata;
    ds.set_meta("prediction", "one-shot");
    ds.set_meta("encoder", encoder_name);
    ds.set_meta("first_step", std::to_string(first));
    ds.set_meta("start_snapshot", std::to_string(cfg.start));
    ds.values.resize(ds.snapshot_count() * ds.snapshot_size());

    parallel_for(ds.snapshot_count(), [&](std::size_t i) {
        const double elapsed = static_cast<double>(first + i) * source.dt;
        const auto state = encoder->decode(predict(model, initial, elapsed));
        std::copy(state.begin(), state.end(), ds.snapshot(i).begin());
    });

    if (truth) {
        if (truth->snapshot_size() != source.snapshot_size()) throw ShapeError("truth snapshots differ in size");
        for (std::uint64_t k = first; k <= last; ++k) {
            const std::uint64_t idx = cfg.start + k;
            if (idx > truth->steps) break;
            outcome.errors.emplace_back(k, encoder->relative_error(ds.snapshot(k - first), truth->snapshot(idx),
                                                                   cfg.squared));
        }
    }
    return outcome;
}

inline int cmd_predict(const RunConfig &cfg, std::ostream &out) {
    if (cfg.hamiltonian.empty()) throw ConfigError("predict needs --hamiltonian");
    if (!std::filesystem::exists(cfg.hamiltonian)) throw ConfigError("Hamiltonian file " + cfg.hamiltonian + " not found");
    if (cfg.input.empty()) throw ConfigError("predict needs --input (initial snapshot source)");
    const KoopmanModel model = read_qkham(cfg.hamiltonian);
    const TrajectoryDataset source = read_trajectory(cfg.input);
    std::optional<TrajectoryDataset> truth;
    if (!cfg.truth.empty()) truth = read_trajectory(cfg.truth);
    const TrajectoryDataset *reference = truth ? &*truth : &source;

    const auto outcome = predict_dataset(model, source, reference, cfg);
    const std::string output = cfg.output.empty() ? "prediction.qktraj" : cfg.output;
    write_trajectory(output, outcome.predicted);

    std::ostringstream table;
    table << std::setprecision(17) << "step,relative_l2" << (cfg.squared ? "_squared" : "") << '\n';
    for (const auto &[k, e] : outcome.errors) table << k << ',' << e << '\n';
    if (!outcome.errors.empty()) std::ofstream(output + ".errors.csv") << table.str();
    out << table.str();
    out << "wrote " << output << " (" << outcome.predicted.snapshot_count() << " snapshots)\n";
    detail::write_sidecar_log(output, "predict hamiltonian=" + cfg.hamiltonian + " steps=" + cfg.step_range);
    return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOutcome {
    std::vector<std::pair<std::uint64_t, double>> errors;
    SpectrumReport spectrum_pred, spectrum_truth;
    PdfReport pdf_pred, pdf_truth;
    std::optional<StructureReport> structure_pred, structure_truth;
    double spectrum_deviation = 0.0;  // max_shell |E_pred - E_truth| / max E_truth
    std::string summary;
};

inline EvaluateOutcome evaluate_datasets(const TrajectoryDataset &pred, const TrajectoryDataset &truth,
                                         const RunConfig &cfg) {
    if (pred.dims != truth.dims) throw ShapeError("prediction and truth snapshots differ in shape");
    std::uint64_t first = 0;
    if (const auto fs = pred.meta("first_step")) first = std::stoull(*fs);
    if (const auto st = pred.meta("start_snapshot")) first += std::stoull(*st);
    if (first + pred.steps > truth.steps) throw ShapeError("truth trajectory does not cover the predicted steps");

    std::unique_ptr<ObservableEncoder> encoder;
    if (!cfg.encoder.empty() && cfg.encoder != "fourier") {
        encoder = make_encoder(cfg.encoder, detail::infer_layout(cfg, cfg.encoder, truth));
    }

    EvaluateOutcome outcome;
    std::vector<double> per_step;
    for (std::size_t i = 0; i <= pred.steps; ++i) {
        const auto p = pred.snapshot(i);
        const auto t = truth.snapshot(first + i);
        const double e = encoder ? encoder->relative_error(p, t, cfg.squared) : relative_l2(p, t, cfg.squared);
        outcome.errors.emplace_back(first + i, e);
        per_step.push_back(e);
    }

    // Field diagnostics on the last predicted snapshot.
    const auto plane = detail::plane_of(pred, cfg.channel);
    const auto last_pred = pred.snapshot(pred.steps).subspan(plane.offset, plane.rows * plane.cols);
    const auto last_truth = truth.snapshot(first + pred.steps).subspan(plane.offset, plane.rows * plane.cols);
    outcome.spectrum_pred = energy_spectrum(last_pred, plane.rows, plane.cols);
    outcome.spectrum_truth = energy_spectrum(last_truth, plane.rows, plane.cols);
    const double peak = *std::max_element(outcome.spectrum_truth.energy.begin(), outcome.spectrum_truth.energy.end());
    for (std::size_t s = 0; s < outcome.spectrum_pred.energy.size(); ++s) {
        const double dev = std::abs(outcome.spectrum_pred.energy[s] - outcome.spectrum_truth.energy[s]);
        outcome.spectrum_deviation = std::max(outcome.spectrum_deviation, peak > 0 ? dev / peak : dev);
    }

    const auto [tlo, thi] = std::minmax_element(last_truth.begin(), last_truth.end());
    const auto [plo, phi] = std::minmax_element(last_pred.begin(), last_pred.end());
    const auto range = std::make_pair(std::min(*tlo, *plo), std::max(*thi, *phi));
    const bool truth_spread = *thi > *tlo;
    outcome.pdf_pred = pdf_estimate(last_pred, cfg.bins, truth_spread && *phi > *plo, range);
    outcome.pdf_truth = pdf_estimate(last_truth, cfg.bins, truth_spread, range);

    const auto [fit_lo, fit_hi] = detail::parse_range(cfg.fit_range);
    std::vector<std::size_t> seps;
    for (auto r : cfg.separations)
        if (r < std::max(plane.rows, plane.cols)) seps.push_back(r);
    try {
        outcome.structure_pred = structure_functions(last_pred, plane.rows, plane.cols, cfg.orders, seps, fit_lo, fit_hi);
        outcome.structure_truth =
            structure_functions(last_truth, plane.rows, plane.cols, cfg.orders, seps, fit_lo, fit_hi);
    } catch (const FitError &) {
        outcome.structure_pred.reset();
        outcome.structure_truth.reset();
    }

    std::ostringstream s;
    s << std::setprecision(17);
    s << "error_mode " << (cfg.squared ? "squared" : "rooted") << '\n';
    s << "steps " << outcome.errors.front().first << ".." << outcome.errors.back().first << '\n';
    double mean = 0.0;
    for (double e : per_step) mean += e;
    s << "relative_l2_mean " << mean / static_cast<double>(per_step.size()) << '\n';
    s << "relative_l2_max " << *std::max_element(per_step.begin(), per_step.end()) << '\n';
    s << "relative_l2_p10 " << percentile(per_step, 10) << '\n';
    s << "relative_l2_p90 " << percentile(per_step, 90) << '\n';
    s << "spectrum_max_relative_deviation " << outcome.spectrum_deviation << '\n';
    s << "pdf_mean " << outcome.pdf_pred.mean << " truth " << outcome.pdf_truth.mean << '\n';
    s << "pdf_variance " << outcome.pdf_pred.variance << " truth " << outcome.pdf_truth.variance << '\n';
    if (outcome.structure_pred) {
        for (std::size_t i = 0; i < cfg.orders.size(); ++i) {
            s << "scaling_exponent p=" << cfg.orders[i] << ' ' << outcome.structure_pred->exponents[i] << " truth "
              << outcome.structure_truth->exponents[i] << '\n';
        }
    }
    outcome.summary = s.str();
    return outcome;
}

inline void write_gnuplot(const std::filesystem::path &dir, const std::string &prefix) {
    std::ofstream gp(dir / (prefix + ".gp"));
    gp << "# gnuplot script stub; run: gnuplot " << prefix << ".gp\n"
       << "set datafile separator ','\n"
       << "set terminal pngcairo size 900,600\n"
       << "set output '" << prefix << "_spectrum.png'\n"
       << "set logscale y\nset xlabel 'kappa'\nset ylabel 'E(kappa)'\n"
       << "plot '" << prefix << "_spectrum.csv' every ::1 using 1:3 with lines title 'prediction', \\\n"
       << "     '' every ::1 using 1:4 with points title 'truth'\n"
       << "unset logscale y\n"
       << "set output '" << prefix << "_pdf.png'\nset xlabel 'value'\nset ylabel 'PDF'\n"
       << "plot '" << prefix << "_pdf.csv' every ::1 using 1:2 with boxes title 'prediction', \\\n"
       << "     '' every ::1 using 1:5 with lines title 'truth'\n"
       << "set output '" << prefix << "_errors.png'\nset xlabel 'step'\nset ylabel 'relative L2'\n"
       << "plot '" << prefix << "_errors.csv' every ::1 using 1:2:3:4 with yerrorbars title 'mean (p10-p90)'\n";
}

/// Per-step error bands across trajectories: each trajectory contributes one
/// error per step and the percentiles are taken over trajectories.
struct ErrorBands {
    std::vector<std::uint64_t> steps;
    std::vector<double> mean, p10, p90;
    std::vector<double> per_trajectory_mean;
};

inline ErrorBands error_bands(const std::vector<EvaluateOutcome> &outcomes) {
    ErrorBands bands;
    for (const auto &[k, e] : outcomes.front().errors) bands.steps.push_back(k);
    for (const auto &o : outcomes) {
        if (o.errors.size() != bands.steps.size()) throw ShapeError("trajectories cover different step ranges");
        double sum = 0.0;
        for (std::size_t i = 0; i < o.errors.size(); ++i) {
            if (o.errors[i].first != bands.steps[i]) throw ShapeError("trajectories cover different step ranges");
            sum += o.errors[i].second;
        }
        bands.per_trajectory_mean.push_back(sum / static_cast<double>(o.errors.size()));
    }
    for (std::size_t i = 0; i < bands.steps.size(); ++i) {
        std::vector<double> column;
        for (const auto &o : outcomes) column.push_back(o.errors[i].second);
        double sum = 0.0;
        for (double e : column) sum += e;
        bands.mean.push_back(sum / static_cast<double>(column.size()));
        bands.p10.push_back(percentile(column, 10));
        bands.p90.push_back(percentile(column, 90));
    }
    return bands;
}

inline int cmd_evaluate(const RunConfig &cfg, std::ostream &out) {
    if (cfg.predictions.empty() || cfg.truths.empty()) throw ConfigError("evaluate needs --pred and --truth");
    if (cfg.predictions.size() != cfg.truths.size()) {
        throw ConfigError("evaluate needs as many --truth files as --pred files");
    }
    std::vector<EvaluateOutcome> outcomes;
    for (std::size_t i = 0; i < cfg.predictions.size(); ++i) {
        outcomes.push_back(
            evaluate_datasets(read_trajectory(cfg.predictions[i]), read_trajectory(cfg.truths[i]), cfg));
    }
    const auto bands = error_bands(outcomes);
    const auto &first = outcomes.front();

    const std::filesystem::path dir = cfg.output.empty() ? "." : cfg.output;
    std::filesystem::create_directories(dir);
    std::ostringstream errors;
    errors << std::setprecision(17) << "step,relative_l2_mean,p10,p90\n";
    for (std::size_t i = 0; i < bands.steps.size(); ++i)
        errors << bands.steps[i] << ',' << bands.mean[i] << ',' << bands.p10[i] << ',' << bands.p90[i] << '\n';
    std::ofstream(dir / (cfg.prefix + "_errors.csv")) << errors.str();
    std::ofstream(dir / (cfg.prefix + "_spectrum.csv")) << spectrum_csv(first.spectrum_pred, &first.spectrum_truth);
    std::ofstream(dir / (cfg.prefix + "_pdf.csv")) << pdf_csv(first.pdf_pred, &first.pdf_truth);
    if (first.structure_pred) {
        std::ofstream(dir / (cfg.prefix + "_structure.csv"))
            << structure_csv(*first.structure_pred, &*first.structure_truth);
    }

    std::ostringstream summary;
    summary << std::setprecision(17);
    summary << "trajectories " << outcomes.size() << '\n';
    summary << "percentiles_over per-trajectory\n";
    summary << "trajectory_mean_error_p10 " << percentile(bands.per_trajectory_mean, 10) << '\n';
    summary << "trajectory_mean_error_p90 " << percentile(bands.per_trajectory_mean, 90) << '\n';
    summary << "# field diagnostics below refer to the first pair\n" << first.summary;
    std::ofstream(dir / (cfg.prefix + "_summary.txt")) << summary.str();
    if (cfg.plot) write_gnuplot(dir, cfg.prefix);
    out << summary.str();
    return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchRow {
    unsigned n;
    std::size_t gate_count;
    std::optional<double> dense_ns;  // per full diagonal application
    double lazy_ns;                  // per single-amplitude query
};

inline std::vector<BenchRow> run_bench(unsigned n_min, unsigned n_max, unsigned reps, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchRow> rows;
    Rng rng(seed);
    volatile double sink = 0.0;
    for (unsigned n = n_min; n <= n_max; ++n) {
        const SubsystemLayout layout = build_layout(std::uint64_t{1} << n, 1, 1);
        std::vector<double> alphas(n);
        for (auto &a : alphas) a = rng.uniform(-1.0, 1.0);
        const DiagonalHamiltonian hamiltonian(layout, {alphas});
        const auto circuit = multi_step_operator(hamiltonian, 1, 0.1, 60);
        std::vector<double> phases(std::size_t{1} << n);
        for (auto &p : phases) p = rng.uniform(-std::numbers::pi, std::numbers::pi);
        const PhaseEncodedState state(std::move(phases));

        BenchRow row{n, circuit.gates.size(), std::nullopt, 0.0};

        if (n <= kDenseOracleMaxQubits) {
            const auto diag = dense_operator(hamiltonian, 1, 6.0);
            auto amplitudes = state.amplitudes();
            const std::size_t inner = std::max<std::size_t>(1, (std::size_t{1} << 22) >> n);
            double best = 1e300;
            for (unsigned r = 0; r < reps; ++r) {
                const auto t0 = clock::now();
                for (std::size_t i = 0; i < inner; ++i) {
                    for (std::size_t l = 0; l < amplitudes.size(); ++l) amplitudes[l] *= diag[l];
                }
                const auto t1 = clock::now();
                best = std::min(best, std::chrono::duration<double, std::nano>(t1 - t0).count() /
                                          static_cast<double>(inner));
            }
            sink = sink + amplitudes[0].real();
            row.dense_ns = best;
        }

        constexpr std::size_t queries = 1 << 14;
        std::vector<std::uint64_t> targets(queries);
        for (auto &t : targets) t = rng.below(std::uint64_t{1} << n);
        double best = 1e300;
        for (unsigned r = 0; r < reps; ++r) {
            Complex acc{};
            const auto t0 = clock::now();
            for (auto l : targets) acc += state.evolved_amplitude(circuit, l);
            const auto t1 = clock::now();
            sink = sink + acc.real();
            best = std::min(best, std::chrono::duration<double, std::nano>(t1 - t0).count() / queries);
        }
        row.lazy_ns = best;
        rows.push_back(row);
    }
    return rows;
}

inline std::string bench_csv(const std::vector<BenchRow> &rows) {
    std::ostringstream out;
    out << std::setprecision(6) << "n,gate_count,dense_ns,lazy_ns\n";
    for (const auto &r : rows) {
        out << r.n << ',' << r.gate_count << ',';
        if (r.dense_ns) {
            out << *r.dense_ns;
        } else {
            out << "skipped";
        }
        out << ',' << r.lazy_ns << '\n';
    }
    return out.str();
}

inline int cmd_bench(const RunConfig &cfg, std::ostream &out) {
    if (cfg.n_min < 1 || cfg.n_max < cfg.n_min || cfg.n_max > 30) throw ConfigError("bench needs 1 <= n-min <= n-max <= 30");
    if (cfg.reps == 0) throw ConfigError("bench needs --reps >= 1");
    const auto csv = bench_csv(run_bench(cfg.n_min, cfg.n_max, cfg.reps, cfg.seed));
    if (!cfg.output.empty()) std::ofstream(cfg.output) << csv;
    out << csv;
    return kOk;
}

// ---------------------------------------------------------------------------
// Argument handling

/// Reads `key = value` lines ('#' comments) into `--key=value` arguments.
/// Underscores in keys become dashes so file keys mirror flag names.
inline std::vector<std::string> config_arguments(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::vector<std::string> args;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos) throw ConfigError("config line '" + trim(line) + "' is not 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        args.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
    }
    return args;
}

inline int run(std::vector<std::string> args, std::ostream &out, std::ostream &err) {
    RunConfig cfg;
    CLI::App app{"Quantum Koopman simulation engine", "qkm"};
    app.set_help_flag("--help", "print help");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "key = value config file (flags override it)");

    auto *gen = app.add_subcommand("generate", "write reference trajectories");
    gen->add_option("--system", cfg.system, "torus | advection | grayscott | csv");
    gen->add_option("-o,--output", cfg.output);
    gen->add_option("--d", cfg.d, "state dimension (torus angles / advection grid)");
    gen->add_option("--T", cfg.steps, "number of steps (T+1 snapshots)");
    gen->add_option("--dt", cfg.dt);
    gen->add_option("--seed", cfg.seed);
    gen->add_option("--count", cfg.count, "number of trajectories");
    gen->add_option("--alpha-scale", cfg.alpha_scale, "torus: bound on |alpha_k| dt");
    gen->add_option("--c-wave", cfg.wave_speed, "advection wave speed");
    gen->add_option("--init", cfg.init, "advection initial condition: random | cos");
    gen->add_option("--F", cfg.gray_scott.feed);
    gen->add_option("--K", cfg.gray_scott.kill);
    gen->add_option("--DA", cfg.gray_scott.diffusion_a);
    gen->add_option("--DB", cfg.gray_scott.diffusion_b);
    gen->add_option("--grid", cfg.grid, "Gray-Scott grid points per side");
    gen->add_option("--dt-int", cfg.gray_scott.dt_int, "Gray-Scott integrator substep (0 = bound/2)");
    gen->add_option("--manifest", cfg.manifest, "csv: manifest listing snapshot files");

    auto *fit = app.add_subcommand("fit", "fit diagonal Hamiltonian coefficients");
    fit->add_option("-i,--input", cfg.input);
    fit->add_option("-o,--output", cfg.output, "output prefix");
    fit->add_option("--encoder", cfg.encoder, "identity | fourier | latent");
    fit->add_option("--d", cfg.d);
    fit->add_option("--c", cfg.c);
    fit->add_option("--h", cfg.h);
    fit->add_flag("--global-phase", cfg.global_phase, "fit a uniform phase drift");
    fit->add_option("--fit-steps", cfg.fit_steps, "use only the first steps");
    fit->add_option("--mask-tol", cfg.mask_tolerance, "relative modulus below which an index is ignored");

    auto *pred = app.add_subcommand("predict", "one-shot multi-step prediction");
    pred->add_option("-H,--hamiltonian", cfg.hamiltonian);
    pred->add_option("-i,--input", cfg.input);
    pred->add_option("--truth", cfg.truth);
    pred->add_option("-o,--output", cfg.output);
    pred->add_option("--steps", cfg.step_range, "a..b or k");
    pred->add_option("--start", cfg.start, "snapshot used as initial condition");
    pred->add_option("--encoder", cfg.encoder);
    pred->add_flag("--squared", cfg.squared, "report squared relative error");
    pred->add_flag("--lenient", cfg.lenient, "decode broken conjugate symmetry by taking the real part");

    auto *eval = app.add_subcommand("evaluate", "compare predicted and true trajectories");
    eval->add_option("--pred", cfg.predictions, "predicted trajectories (comma-separated)")->delimiter(',');
    eval->add_option("--truth", cfg.truths, "matching ground-truth trajectories")->delimiter(',');
    eval->add_option("-o,--output", cfg.output, "output directory");
    eval->add_option("--prefix", cfg.prefix);
    eval->add_option("--encoder", cfg.encoder);
    eval->add_option("--bins", cfg.bins);
    eval->add_option("--channel", cfg.channel);
    eval->add_option("--orders", cfg.orders)->delimiter(',');
    eval->add_option("--separations", cfg.separations)->delimiter(',');
    eval->add_option("--fit-range", cfg.fit_range);
    eval->add_flag("--squared", cfg.squared);
    eval->add_flag("--plot", cfg.plot, "write gnuplot data and script");

    auto *bench = app.add_subcommand("bench", "operator complexity scaling table");
    bench->add_option("--n-min", cfg.n_min);
    bench->add_option("--n-max", cfg.n_max);
    bench->add_option("--reps", cfg.reps);
    bench->add_option("--seed", cfg.seed);
    bench->add_option("-o,--output", cfg.output);

    try {
        // Config values go right after the subcommand so later flags win.
        for (std::size_t i = 0; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size()) {
                path = args[i + 1];
                args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
            } else if (args[i].rfind("--config=", 0) == 0) {
                path = args[i].substr(9);
                args.erase(args.begin() + static_cast<long>(i));
            } else {
                continue;
            }
            std::vector<std::string> extra;
            for (auto &arg : config_arguments(path)) {
                const std::string flag = arg.substr(0, arg.find('='));
                const bool given = std::any_of(args.begin(), args.end(), [&](const std::string &a) {
                    return a == flag || a.rfind(flag + "=", 0) == 0;
                });
                if (!given) extra.push_back(std::move(arg));
            }
            std::size_t at = 0;
            while (at < args.size() && args[at].rfind('-', 0) == 0) ++at;
            args.insert(args.begin() + static_cast<long>(std::min(at + 1, args.size())), extra.begin(), extra.end());
            break;
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (gen->parsed()) return cmd_generate(cfg, out);
        if (fit->parsed()) return cmd_fit(cfg, out);
        if (pred->parsed()) return cmd_predict(cfg, out);
        if (eval->parsed()) return cmd_evaluate(cfg, out);
        if (bench->parsed()) return cmd_bench(cfg, out);
    } catch (const FitError &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const IntegrationError &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const SymmetryError &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const DegenerateError &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const Error &e) {
        err << e.kind() << ": " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

}  // namespace qkm::cli
