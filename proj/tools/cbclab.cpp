// cbclab: command-line front end for the beam-combination lab.
// Logs go to stderr; stdout carries only machine-readable JSON summaries.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cbc/array.hpp"
#include "cbc/config_io.hpp"
#include "cbc/control.hpp"
#include "cbc/dataset.hpp"
#include "cbc/errors.hpp"
#include "cbc/imaging.hpp"
#include "cbc/metrics.hpp"
#include "cbc/parallel.hpp"
#include "cbc/png_io.hpp"
#include "cbc/propagation.hpp"
#include "cbc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cbc;

namespace {

// Thrown for problems the user can fix; mapped to exit code 1.
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

void log(const std::string& msg) { std::cerr << msg << std::endl; }

FibreArrayConfig resolve_config(const std::string& path) {
    return path.empty() ? default_config() : load_config(path);
}

void prepare_out(const fs::path& out, const CLI::App& app, const FibreArrayConfig& config) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    std::ofstream snap(out / "run_config.txt");
    if (!snap) throw IoError("cannot write " + (out / "run_config.txt").string());
    // Resolved options of this subcommand only; unset options are left out so the
    // file replays with --run-config.
    std::istringstream all(app.get_parent()->config_to_str(true, false));
    const std::string prefix = app.get_name() + ".";
    for (std::string line; std::getline(all, line);) {
        if (line.rfind(prefix, 0) == 0 && line.find("=\"\"") == std::string::npos) snap << line << "\n";
    }
    save_config(config, out / "config.txt");
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(1) << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct EngineOptions {
    std::string engine = "gs";
    std::string reverse = "exact";
    std::string model;
    std::string neural_cmd = "neural";
    std::size_t gs_starts = GsEngineParams{}.starts;
    std::size_t gs_iterations = GsEngineParams{}.iterations;
    double spgd_gain = SpgdParams{}.gain;
    double spgd_perturbation = SpgdParams{}.perturbation;
    std::size_t spgd_iterations = SpgdParams{}.max_iters;
};

void add_engine_options(CLI::App* sub, EngineOptions& o, bool with_reverse) {
    sub->add_option("--engine", o.engine, "Retrieval engine")
        ->check(CLI::IsMember({"oracle", "identity", "gs", "spgd", "neural"}))
        ->capture_default_str();
    if (with_reverse) {
        sub->add_option("--reverse", o.reverse, "Reverse operator")
            ->check(CLI::IsMember({"exact", "neural"}))
            ->capture_default_str();
    }
    sub->add_option("--model", o.model, "Model artifact for the neural engine/reverse");
    sub->add_option("--neural-cmd", o.neural_cmd, "Command implementing 'predict --model M --in A --out B'")
        ->capture_default_str();
    sub->add_option("--gs-starts", o.gs_starts, "Random starts of the GS engine")->capture_default_str();
    sub->add_option("--gs-iterations", o.gs_iterations, "Iterations per GS start")->capture_default_str();
    sub->add_option("--spgd-gain", o.spgd_gain, "SPGD update gain")->capture_default_str();
    sub->add_option("--spgd-perturbation", o.spgd_perturbation, "SPGD dither per fibre (rad)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--spgd-iterations", o.spgd_iterations, "SPGD iteration limit")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

std::unique_ptr<RetrievalEngine> make_engine(const EngineOptions& o, const SimulationContext& ctx,
                                             std::vector<std::pair<IntensityImage, PhaseVector>> known) {
    if (o.engine == "identity") return std::make_unique<IdentityEngine>(ctx.basis().fibre_count());
    if (o.engine == "oracle") {
        if (known.empty()) throw UserError("the oracle engine needs known cases (a test set)");
        return std::make_unique<OracleEngine>(std::move(known));
    }
    if (o.engine == "gs") return std::make_unique<GsEngine>(ctx, GsEngineParams{o.gs_iterations, o.gs_starts, GsEngineParams{}.good_enough});
    if (o.engine == "spgd") {
        SpgdParams p;
        p.gain = o.spgd_gain;
        p.perturbation = o.spgd_perturbation;
        p.max_iters = o.spgd_iterations;
        p.target_pib = -4.0;  // stop once the image residual is within 4%
        return std::make_unique<SpgdEngine>(ctx, p);
    }
    if (o.model.empty()) throw UserError("--engine neural requires --model");
    return std::make_unique<ExternalNeuralEngine>(ExternalModel{o.neural_cmd, o.model}, ctx.config());
}

std::unique_ptr<ReverseOperator> make_reverse(const EngineOptions& o, const SimulationContext& ctx) {
    if (o.reverse == "exact") return std::make_unique<ExactReverse>(ctx);
    if (o.model.empty()) throw UserError("--reverse neural requires --model");
    return std::make_unique<ExternalNeuralReverse>(ExternalModel{o.neural_cmd, o.model}, ctx.config());
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string config;
    std::string phases;
    std::optional<std::uint64_t> seed;
    std::size_t count = 1;
    std::string out;
    bool dump_field = false;
};

int cmd_simulate(const SimulateOptions& o, const CLI::App& app) {
    const FibreArrayConfig config = resolve_config(o.config);
    if (!o.phases.empty() && o.seed) throw UserError("give either --phases or --seed, not both");
    if (!o.phases.empty() && o.count != 1) throw UserError("--count applies to seeded galleries only");
    const fs::path out = o.out;
    prepare_out(out, app, config);

    const std::size_t fibres = config.fibre_count();
    const BucketSpec map_bucket = bucket_from_flat(config);
    const BucketSpec image_bucket = bucket_from_flat_image(config);
    json items = json::array();
    for (std::size_t i = 0; i < o.count; ++i) {
        PhaseVector phases = PhaseVector::zeros(fibres);
        json item;
        if (!o.phases.empty()) {
            phases = load_phases(o.phases);
            if (phases.size() != fibres) {
                throw UserError("phase file has " + std::to_string(phases.size()) + " entries, config has " +
                                std::to_string(fibres) + " fibres");
            }
        } else if (o.seed) {
            const std::uint64_t s = pair_seed(*o.seed, i);
            phases = random_phase_vector(fibres, s);
            item["seed"] = s;
        }
        const ComplexField focal = focal_field(config, phases);
        const IntensityMap map = intensity_of(focal);
        const RenderedIntensity rendered = render_intensity_image(map, config.imaging);
        const std::string x = o.count == 1 ? "intensity.png" : intensity_file_name(i).substr(6);
        const std::string y = o.count == 1 ? "phase.png" : phase_file_name(i).substr(6);
        write_png(gray_to_rgb(rendered.image), out / x);
        write_png(render_phase_image(config, phases), out / y);
        if (o.dump_field) dump_field(focal, out / (o.count == 1 ? std::string("focal") : x.substr(0, 6) + "_focal"));
        item["phases"] = phases.phases;
        item["intensity_file"] = x;
        item["phase_file"] = y;
        item["pib"] = power_in_bucket(map, map_bucket);
        item["pib_image"] = rendered.degenerate ? 0.0 : power_in_bucket(rendered.image, image_bucket);
        item["degenerate"] = rendered.degenerate;
        items.push_back(item);
    }
    const json meta = {
        {"config_hash", config_hash(config)},
        {"bucket", {{"centre_row", map_bucket.centre_row}, {"centre_col", map_bucket.centre_col},
                    {"radius", map_bucket.radius}, {"reference_fraction", map_bucket.reference_fraction}}},
        {"items", items},
    };
    write_json(meta, out / "metadata.json");
    log("simulate: wrote " + std::to_string(o.count) + " pair(s) to " + out.string());
    return 0;
}

// ---------------------------------------------------------------- generate / verify

struct GenerateOptions {
    std::string config;
    std::size_t count = 0;
    std::uint64_t seed = 1;
    std::string out;
    std::size_t workers = 0;
};

int cmd_generate(const GenerateOptions& o, const CLI::App& app) {
    const FibreArrayConfig config = resolve_config(o.config);
    prepare_out(o.out, app, config);
    const PairManifest m = generate_pairs(config, o.count, o.seed, o.out, o.workers);
    log("generate: " + std::to_string(m.entries.size()) + " pairs in " + o.out);
    std::cout << json{{"count", m.entries.size()}, {"complete", m.complete}, {"config_hash", m.config_hash}}.dump()
              << std::endl;
    return 0;
}

struct VerifyOptions {
    std::string dir;
    std::size_t resimulate = 8;
    std::size_t workers = 0;
};

int cmd_verify(const VerifyOptions& o) {
    const VerifyReport r = verify_manifest(o.dir, o.resimulate, o.workers);
    json failures = json::array();
    std::size_t resimulated = 0;
    for (const auto& e : r.entries) {
        resimulated += e.resimulated;
        if (!e.ok) failures.push_back({{"id", e.id}, {"problems", e.problems}});
    }
    std::cout << json{{"ok", r.ok()},
                      {"complete", r.manifest_complete},
                      {"entries", r.entries.size()},
                      {"resimulated", resimulated},
                      {"failures", failures}}
                     .dump()
              << std::endl;
    log(std::string("verify: ") + (r.ok() ? "pass" : "FAIL") + " (" + std::to_string(r.failures()) + " failing entries)");
    return r.ok() ? 0 : 1;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
    std::string config;
    std::string testset;
    std::size_t count = 100;
    std::uint64_t seed = 1;
    std::vector<double> noise_units{0.0, 1.0, 10.0, 100.0};
    double noise_exponent = 1.0;
    std::string target;
    std::string out;
    std::size_t dataset_size = 0;
    std::size_t workers = 0;
    EngineOptions engine;
};

struct Case {
    std::uint64_t seed;
    PhaseVector phases;
    IntensityImage clean;
};

int cmd_evaluate(const EvaluateOptions& o, const CLI::App& app) {
    std::vector<Case> cases;
    FibreArrayConfig config;
    if (!o.testset.empty()) {
        if (!o.config.empty()) throw UserError("--config and --testset are exclusive: the test set carries its config");
        const PairManifest m = load_manifest(o.testset);
        config = m.config;
        const std::size_t n = std::min(o.count, m.entries.size());
        for (std::size_t i = 0; i < n; ++i) {
            const PairEntry& e = m.entries[i];
            cases.push_back({e.seed, e.phases, read_png_gray(fs::path(o.testset) / e.intensity_file)});
        }
    } else {
        config = resolve_config(o.config);
    }
    prepare_out(o.out, app, config);
    log("evaluate: building the focal basis");
    const SimulationContext ctx(config);
    if (o.testset.empty()) {
        for (std::size_t i = 0; i < o.count; ++i) {
            const std::uint64_t s = pair_seed(o.seed, i);
            PhaseVector p = random_phase_vector(config.fibre_count(), s);
            IntensityImage img = ctx.render(p);
            cases.push_back({s, std::move(p), std::move(img)});
        }
    }
    if (cases.empty()) throw UserError("no cases to evaluate");
    PhaseVector target = PhaseVector::zeros(config.fibre_count());
    if (!o.target.empty()) {
        target = load_phases(o.target);
        if (target.size() != config.fibre_count()) throw UserError("target phase file does not match the config");
    }
    std::vector<std::pair<IntensityImage, PhaseVector>> known;
    if (o.engine.engine == "oracle") {
        for (const auto& c : cases) known.emplace_back(c.clean, c.phases);
    }
    const auto engine = make_engine(o.engine, ctx, std::move(known));

    const std::size_t levels = o.noise_units.size();
    std::vector<TrialResult> results(levels * cases.size());
    log("evaluate: " + std::to_string(cases.size()) + " cases x " + std::to_string(levels) + " noise levels, engine " +
        engine->name());
    parallel_for(results.size(), o.workers, [&](std::size_t k) {
        const std::size_t level = k / cases.size();
        const Case& c = cases[k % cases.size()];
        const NoiseSpec noise{o.noise_units[level], derive_seed(c.seed, kNoiseStream), o.noise_exponent};
        results[k] = run_trial(*engine, ctx, c.phases, c.clean, target, noise);
        results[k].seed = c.seed;
    });

    const fs::path out = o.out;
    std::ofstream csv(out / "results.csv");
    std::ofstream shape;
    const bool shaping = std::any_of(target.phases.begin(), target.phases.end(), [](double v) { return v != 0.0; });
    if (shaping) {
        shape.open(out / "shape.csv");
        shape << "case_id,noise_units,shape_before,shape_after\n";
    }
    csv << "case_id,seed,pib_before,pib_after,noise_units,dataset_size\n";
    json level_summaries = json::array();
    json failures = json::array();
    std::vector<PibSummary> after_summaries;
    std::vector<double> before_values;
    for (const auto& r : results) {
        if (before_values.size() < cases.size()) before_values.push_back(r.pib_before);
    }
    for (std::size_t level = 0; level < levels; ++level) {
        std::vector<double> before;
        std::vector<double> after;
        std::size_t failed = 0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const TrialResult& r = results[level * cases.size() + i];
            csv << i << "," << r.seed << "," << fmt(r.pib_before) << "," << (r.ok ? fmt(r.pib_after) : "nan") << ","
                << o.noise_units[level] << "," << o.dataset_size << "\n";
            if (shaping && r.ok) shape << i << "," << o.noise_units[level] << "," << fmt(r.shape_before) << "," << fmt(r.shape_after) << "\n";
            if (!r.ok) {
                ++failed;
                failures.push_back({{"case_id", i}, {"noise_units", o.noise_units[level]}, {"error", r.error}});
                continue;
            }
            before.push_back(r.pib_before);
            after.push_back(r.pib_after);
        }
        json entry = {{"noise_units", o.noise_units[level]}, {"failures", failed}, {"cases", cases.size()}};
        if (!after.empty()) {
            const PibSummary b = pib_statistics(before);
            const PibSummary a = pib_statistics(after);
            entry["mean_before"] = b.mean;
            entry["std_before"] = b.stddev;
            entry["mean_after"] = a.mean;
            entry["std_after"] = a.stddev;
            entry["fraction_after_at_least_90"] = a.fraction_at_least(90.0);
            entry["ks_before_after"] = ks_statistic(before, after);
            after_summaries.push_back(a);
        } else {
            after_summaries.push_back(PibSummary{});
        }
        level_summaries.push_back(entry);
    }

    std::ofstream ccdf(out / "ccdf.csv");
    ccdf << "threshold,before";
    for (double u : o.noise_units) ccdf << ",after_noise_" << u;
    ccdf << "\n";
    const PibSummary before_summary = pib_statistics(before_values);
    for (std::size_t t = 0; t < before_summary.thresholds.size(); ++t) {
        ccdf << before_summary.thresholds[t] << "," << fmt(before_summary.ccdf[t]);
        for (const auto& a : after_summaries) ccdf << "," << (a.ccdf.empty() ? "nan" : fmt(a.ccdf[t]));
        ccdf << "\n";
    }

    const json summary = {{"engine", engine->name()},
                          {"cases", cases.size()},
                          {"dataset_size", o.dataset_size},
                          {"noise_exponent", o.noise_exponent},
                          {"levels", level_summaries},
                          {"failures", failures}};
    write_json(summary, out / "summary.json");
    std::cout << summary.dump() << std::endl;
    return 0;
}

// ---------------------------------------------------------------- feasibility

struct FeasibilityOptions {
    std::string config;
    std::string target;
    std::string testset;
    std::vector<double> rotate{0.0};
    std::optional<double> threshold;
    std::size_t calibrate = 200;
    std::string out;
    std::size_t workers = 0;
    EngineOptions engine;
};

json report_json(const FeasibilityReport& r) {
    json j = {{"ok", r.ok}, {"residual", r.residual}, {"threshold", r.threshold}, {"feasible", r.feasible}};
    if (r.ok) j["phases"] = r.phases.phases;
    if (!r.ok) j["error"] = r.error;
    return j;
}

int cmd_feasibility(const FeasibilityOptions& o, const CLI::App& app) {
    if (o.target.empty() && o.testset.empty()) throw UserError("give --target PNG or --testset DIR");
    std::optional<PairManifest> manifest;
    FibreArrayConfig config;
    if (!o.testset.empty()) {
        if (!o.config.empty()) throw UserError("--config and --testset are exclusive: the test set carries its config");
        manifest = load_manifest(o.testset);
        config = manifest->config;
    } else {
        config = resolve_config(o.config);
    }
    prepare_out(o.out, app, config);
    log("feasibility: building the focal basis");
    const SimulationContext ctx(config);
    const auto engine = make_engine(o.engine, ctx, {});
    const auto reverse = make_reverse(o.engine, ctx);

    json out_json;
    std::optional<FeasibilityCalibration> cal;
    if (!o.threshold) {
        if (!manifest) throw UserError("without --threshold a --testset is needed for calibration");
        const std::size_t n = std::min(o.calibrate, manifest->entries.size());
        if (n < 2) throw UserError("calibration needs at least two test images");
        std::vector<IntensityImage> images;
        for (std::size_t i = 0; i < n; ++i) {
            images.push_back(read_png_gray(fs::path(o.testset) / manifest->entries[i].intensity_file));
        }
        log("feasibility: calibrating on " + std::to_string(n) + " test images, as stored and rotated by 60 deg");
        cal = calibrate_feasibility(images, *engine, *reverse, o.workers);
        out_json["calibration"] = {{"images", n},
                                   {"direct", {{"residuals", cal->direct}, {"threshold", cal->direct_threshold}}},
                                   {"resampled", {{"residuals", cal->resampled}, {"threshold", cal->resampled_threshold}}}};
    }
    const auto threshold_for = [&](double deg) { return o.threshold ? *o.threshold : cal->threshold_for(deg); };

    IntensityImage base;
    if (!o.target.empty()) {
        base = read_png_gray(o.target);
        out_json["target"] = o.target;
    } else {
        std::vector<IntensityImage> images;
        for (const auto& e : manifest->entries) images.push_back(read_png_gray(fs::path(o.testset) / e.intensity_file));
        const BucketSpec b = bucket_from_flat_image(config);
        const std::size_t pick = find_ring_image(images, b.radius);
        base = images[pick];
        out_json["target"] = {{"testset_id", manifest->entries[pick].id}};
        write_png(gray_to_rgb(base), fs::path(o.out) / "target.png");
    }

    json reports = json::array();
    for (double deg : o.rotate) {
        const IntensityImage img = deg == 0.0 ? base : rotate_intensity_image(base, deg);
        const FeasibilityReport r = feasibility_check(img, *engine, *reverse, threshold_for(deg));
        json j = report_json(r);
        j["rotation_degrees"] = deg;
        const std::string tag = "rot" + std::to_string(static_cast<long long>(std::llround(deg * 1000))) + "mdeg";
        write_png(gray_to_rgb(img), fs::path(o.out) / ("input_" + tag + ".png"));
        if (r.ok) {
            write_png(r.diff, fs::path(o.out) / ("diff_" + tag + ".png"));
            write_png(gray_to_rgb(r.reconstructed), fs::path(o.out) / ("reconstructed_" + tag + ".png"));
        }
        reports.push_back(j);
        log("feasibility: rotation " + std::to_string(deg) + " deg residual " + fmt(r.residual) + " -> " +
            (r.ok ? (r.feasible ? "feasible" : "infeasible") : "error: " + r.error));
    }
    out_json["engine"] = engine->name();
    out_json["reverse"] = reverse->name();
    out_json["reports"] = reports;
    write_json(out_json, fs::path(o.out) / "report.json");
    std::cout << out_json.dump() << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coherent beam combination lab: simulation, datasets, retrieval and feasibility"};
    app.require_subcommand(1);
    app.set_config("--run-config", "", "Replay a run_config.txt snapshot");
    app.allow_config_extras(false);

    SimulateOptions sim;
    auto* s = app.add_subcommand("simulate", "Simulate one pair, or a seeded gallery");
    s->add_option("--config", sim.config, "Key-value config file (default: 19-fibre configuration)");
    s->add_option("--phases", sim.phases, "JSON array of phases");
    s->add_option("--seed", sim.seed, "Seed for random phases");
    s->add_option("--count", sim.count, "Number of seeded pairs")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--out", sim.out, "Output directory")->required();
    s->add_flag("--dump-field", sim.dump_field, "Also write the focal field as float32 rasters");

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a dataset of intensity/phase pairs");
    g->add_option("--config", gen.config, "Key-value config file");
    g->add_option("--count", gen.count, "Number of pairs")->required()->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    g->add_option("--out", gen.out, "Dataset directory")->required();
    g->add_option("--workers", gen.workers, "Worker threads (0 = CBC_WORKERS or all cores)")->capture_default_str();

    VerifyOptions ver;
    auto* v = app.add_subcommand("verify", "Verify a dataset against its manifest");
    v->add_option("dir,--out", ver.dir, "Dataset directory")->required();
    v->add_option("--resimulate", ver.resimulate, "Entries to re-simulate")->capture_default_str();
    v->add_option("--workers", ver.workers, "Worker threads")->capture_default_str();

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Closed-loop correction over a test set and noise levels");
    e->add_option("--config", ev.config, "Key-value config file (when no test set is given)");
    e->add_option("--testset", ev.testset, "Dataset directory to evaluate on");
    e->add_option("--count", ev.count, "Cases (drawn from --seed, or the first N of the test set)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    e->add_option("--seed", ev.seed, "Base seed for drawn cases")->capture_default_str();
    e->add_option("--noise-units", ev.noise_units, "Noise levels")->capture_default_str()->delimiter(',');
    e->add_option("--noise-exponent", ev.noise_exponent, "std = units^exponent * sqrt(p)")->capture_default_str();
    e->add_option("--target", ev.target, "Target phase file (default flat)");
    e->add_option("--dataset-size", ev.dataset_size, "Training-set size recorded in the CSV")->capture_default_str();
    e->add_option("--workers", ev.workers, "Worker threads")->capture_default_str();
    e->add_option("--out", ev.out, "Output directory")->required();
    add_engine_options(e, ev.engine, false);

    FeasibilityOptions fe;
    auto* f = app.add_subcommand("feasibility", "Cyclic-consistency test of a target intensity image");
    f->add_option("--config", fe.config, "Key-value config file (when no test set is given)");
    f->add_option("--target", fe.target, "Target intensity PNG (default: ring image found in --testset)");
    f->add_option("--testset", fe.testset, "Dataset for calibration and ring search");
    f->add_option("--rotate", fe.rotate, "Rotations in degrees to test")->capture_default_str()->delimiter(',');
    f->add_option("--threshold", fe.threshold, "Residual threshold for every rotation (default: calibrated on the test set)");
    f->add_option("--calibrate", fe.calibrate, "Test images used for calibration")->capture_default_str();
    f->add_option("--workers", fe.workers, "Worker threads")->capture_default_str();
    f->add_option("--out", fe.out, "Output directory")->required();
    add_engine_options(f, fe.engine, true);
    fe.engine.engine = "gs";

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*s) return cmd_simulate(sim, *s);
        if (*g) return cmd_generate(gen, *g);
        if (*v) return cmd_verify(ver);
        if (*e) return cmd_evaluate(ev, *e);
        if (*f) return cmd_feasibility(fe, *f);
    } catch (const UserError& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    } catch (const IoError& err) {
        std::cerr << "error: " << err.what() << std::endl;
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "internal error: " << err.what() << std::endl;
        return 2;
    }
    return 2;
}
