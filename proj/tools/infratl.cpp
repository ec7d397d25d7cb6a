// infratl: command-line front end for slices, datasets, training, evaluation
// and attenuation maps.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "infratl/atmosphere.hpp"
#include "infratl/dataset.hpp"
#include "infratl/evaluation.hpp"
#include "infratl/map.hpp"
#include "infratl/nn/model.hpp"
#include "infratl/pe_solver.hpp"

namespace fs = std::filesystem;
using namespace infratl;

namespace {

constexpr const char* kVersion = "1.0.0";

json read_json(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open config " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, path + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    out << text;
}

// Provenance record written next to every command's output.
void write_run_log(const fs::path& out_dir, const std::string& command, json details,
                   const std::vector<fs::path>& inputs) {
    json hashes = json::object();
    for (const auto& p : inputs) {
        if (fs::is_regular_file(p)) hashes[p.string()] = file_hash(p);
    }
    details["command"] = command;
    details["version"] = kVersion;
    details["input_hashes"] = hashes;
    fs::create_directories(out_dir);
    write_text(out_dir / ("run_" + command + ".json"), details.dump(2) + "\n");
}

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string out = "out";
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true, bool with_workers = false) {
    cmd->add_option("--config", c.config, "JSON configuration file");
    if (with_seed) cmd->add_option("--seed", c.seed, "master seed");
    if (with_workers) cmd->add_option("--workers", c.workers, "worker threads (0: INFRATL_WORKERS or all cores)");
    cmd->add_option("--out", c.out, "output directory");
}

atmos::ClimatologySpec climatology_from(const json& cfg) {
    return cfg.value("climatology", json::object()).get<atmos::ClimatologySpec>();
}

atmos::GravityWaveSpec gravity_from(const json& cfg) {
    return cfg.value("gravity_waves", json::object()).get<atmos::GravityWaveSpec>();
}

pe::PEConfig pe_from(const json& cfg) { return cfg.value("pe", json::object()).get<pe::PEConfig>(); }

// ---- atmos ----------------------------------------------------------------

int cmd_atmos(const Common& c, double azimuth) {
    const json cfg = read_json(c.config);
    auto clim = climatology_from(cfg);
    auto gw = gravity_from(cfg);
    if (c.seed != 0) {
        clim.rng_seed = substream_seed(c.seed, "climatology");
        gw.rng_seed = substream_seed(c.seed, "gravity_waves");
    }
    const auto slice = atmos::build_slice(clim, gw, azimuth);
    const auto cls = atmos::classify_downwind(slice);
    const fs::path out(c.out);
    fs::create_directories(out);
    atmos::save_slice(out / "slice.itl", slice, true);
    spdlog::info("slice written to {} (downwind score {:.4f}, {})", (out / "slice.itl").string(), cls.score,
                 cls.downwind ? "downwind" : "upwind");
    write_run_log(out, "atmos",
                  {{"seed", c.seed}, {"azimuth", azimuth}, {"climatology", clim}, {"gravity_waves", gw},
                   {"downwind_score", cls.score}},
                  {c.config});
    return 0;
}

// ---- dataset --------------------------------------------------------------

int cmd_dataset(const Common& c, std::size_t n) {
    const json cfg = read_json(c.config);
    data::GenerateOptions o;
    o.n = n;
    o.seed = c.seed;
    o.workers = data::resolve_workers(c.workers);
    o.sampler = cfg.value("sampler", json::object()).get<data::SpecSampler>();
    o.pe_config = pe_from(cfg);
    o.out_dir = c.out;
    spdlog::info("generating {} samples with {} workers into {}", n, o.workers, c.out);
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t last_pct = 0;
    const auto m = data::generate(o, [&](std::size_t done, std::size_t total) {
        const std::size_t pct = 100 * done / total;
        if (pct >= last_pct + 10 || done == total) {
            last_pct = pct;
            spdlog::info("labeled {}/{}", done, total);
        }
    });
    for (const auto& e : m.excluded) spdlog::warn("sample {} excluded: {}", e.index, e.reason);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    spdlog::info("{} samples kept, {} excluded, {:.1f} s", m.size(), m.excluded.size(), secs);
    write_run_log(c.out, "dataset",
                  {{"seed", c.seed}, {"n", n}, {"workers", o.workers}, {"kept", m.size()},
                   {"excluded", m.excluded.size()}},
                  {c.config});
    return 0;
}

// ---- train ----------------------------------------------------------------

struct SplitChoice {
    data::SplitSpec spec;
    std::size_t run = 0;
};

SplitChoice split_from(const json& cfg, std::uint64_t seed, std::size_t run) {
    SplitChoice s;
    const json sj = cfg.value("split", json::object());
    s.spec.seed = sj.value("seed", seed);
    s.spec.n_runs = sj.value("n_runs", s.spec.n_runs);
    s.run = run;
    require(run < s.spec.n_runs, ErrorKind::config, "--run must be below n_runs");
    return s;
}

int cmd_train(const Common& c, const std::string& data_dir, std::size_t run) {
    const json cfg = read_json(c.config);
    const auto model_cfg = cfg.value("model", json::object()).get<nn::ModelConfig>();
    auto train_cfg = cfg.value("train", json::object()).get<nn::TrainConfig>();
    if (!cfg.value("train", json::object()).contains("seed")) train_cfg.seed = c.seed;
    const auto choice = split_from(cfg, c.seed, run);
    const fs::path dir(data_dir);
    const auto manifest = data::load_manifest(dir / "manifest.json");
    const auto splits = data::split(manifest.size(), choice.spec);
    const auto& s = splits[choice.run];

    const auto train_raw = data::load_raw(manifest, dir, s.train);
    const auto val_raw = data::load_raw(manifest, dir, s.val);
    const auto normalizer = data::fit_normalizer(train_raw, "run" + std::to_string(choice.run));
    const auto train_set = data::normalize(train_raw, normalizer);
    const auto val_set = data::normalize(val_raw, normalizer);

    nn::Model<float> model(model_cfg, substream_seed(train_cfg.seed, "model"));
    spdlog::info("training on {} samples, validating on {} ({} parameters)", train_set.size(), val_set.size(),
                 model.parameter_count());
    const auto result = nn::train(model, train_set, val_set, train_cfg, [](const nn::EpochRecord& r) {
        spdlog::info("epoch {:3d}  lr {:.1e}  train {:.5f}  val {:.5f}", r.epoch, r.learning_rate, r.train_loss,
                     r.val_loss);
    });
    spdlog::info("best epoch {} (val {:.5f})", result.best_epoch + 1, result.history[result.best_epoch].val_loss);

    json extra{{"train", train_cfg},
               {"split", {{"seed", choice.spec.seed}, {"n_runs", choice.spec.n_runs}, {"run", choice.run}}},
               {"manifest_hash", file_hash(dir / "manifest.json")}};
    const auto ck = nn::make_checkpoint(model, normalizer, result, extra);
    const fs::path out(c.out);
    fs::create_directories(out);
    nn::save_checkpoint(out / "checkpoint.itl", ck);
    write_run_log(out, "train", {{"seed", c.seed}, {"best_epoch", result.best_epoch}, {"epochs", result.history.size()}},
                  {c.config, dir / "manifest.json"});
    return 0;
}

// ---- predict --------------------------------------------------------------

int cmd_predict(const Common& c, const std::string& checkpoint, const std::string& slice_path, double freq) {
    const auto ck = nn::load_checkpoint(checkpoint);
    auto model = nn::model_from_checkpoint<float>(ck);
    const auto slice = atmos::load_slice(slice_path);
    const auto img = data::slice_image(slice, ck.normalizer);
    const std::vector<float> f{static_cast<float>(ck.normalizer.apply_freq(freq))};
    const auto pred = model.predict(img, f);
    pe::TLCurve tl;
    tl.f = freq;
    for (float v : pred.data) tl.values.push_back(ck.normalizer.invert_label(v));
    const fs::path out(c.out);
    fs::create_directories(out);
    Container cont;
    cont.meta = json{{"kind", "tl"}, {"f", freq}, {"source", "cnn"}, {"checkpoint_hash", file_hash(checkpoint)}};
    std::vector<float> values(tl.values.begin(), tl.values.end());
    cont.add("tl", {values.size()}, values);
    write_container(out / "prediction.itl", cont);
    std::ofstream csv(out / "prediction.csv");
    csv << "range_km,tl_db\n" << std::setprecision(9);
    for (std::size_t i = 0; i < tl.values.size(); ++i) csv << pe::TLCurve::range_km(i) << ',' << values[i] << '\n';
    spdlog::info("prediction at {} Hz written to {}", freq, (out / "prediction.itl").string());
    write_run_log(out, "predict", {{"freq", freq}}, {checkpoint, slice_path});
    return 0;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& data_dir, const std::string& which) {
    const auto ck = nn::load_checkpoint(checkpoint);
    auto model = nn::model_from_checkpoint<float>(ck);
    const json sj = ck.extra.value("split", json::object());
    data::SplitSpec spec;
    spec.seed = sj.value("seed", std::uint64_t{0});
    spec.n_runs = sj.value("n_runs", spec.n_runs);
    const std::size_t run = sj.value("run", std::size_t{0});
    const fs::path dir(data_dir);
    const auto manifest = data::load_manifest(dir / "manifest.json");
    const auto splits = data::split(manifest.size(), spec);
    const auto& s = splits.at(run);
    const std::vector<std::size_t>* rows = nullptr;
    if (which == "train") rows = &s.train;
    else if (which == "val") rows = &s.val;
    else if (which == "test") rows = &s.test;
    else fail(ErrorKind::config, "--split must be train, val or test");
    require(!rows->empty(), ErrorKind::precondition, "the " + which + " split is empty");

    const auto raw = data::load_raw(manifest, dir, *rows);
    const auto set = data::normalize(raw, ck.normalizer);
    const auto pred = model.predict(set.images, set.freqs);
    std::vector<float> preds(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) preds[i] = static_cast<float>(ck.normalizer.invert_label(pred.data[i]));
    std::vector<double> freqs(raw.freqs.begin(), raw.freqs.end());
    const auto rep = eval::report(preds, raw.labels, pe::kTLPoints, freqs, raw.downwind_scores);

    // Constant predictor: the mean training label curve.
    const auto mean_curve = data::mean_label_curve(data::load_raw(manifest, dir, s.train));
    std::vector<float> constant;
    for (std::size_t i = 0; i < raw.size(); ++i) constant.insert(constant.end(), mean_curve.begin(), mean_curve.end());
    const auto base = eval::report(constant, raw.labels, pe::kTLPoints, freqs, raw.downwind_scores);

    const fs::path out(c.out);
    fs::create_directories(out);
    json j = eval::to_json(rep);
    j["split"] = which;
    j["baseline_overall_mean"] = base.overall_mean;
    write_text(out / "report.json", j.dump(2) + "\n");
    write_text(out / "report.txt", eval::to_text(rep));
    eval::export_matrices(out, rep, preds, raw.labels, pe::kTLPoints);
    std::cout << eval::to_text(rep);
    spdlog::info("{} split: mean RMSE {:.3f} dB (constant baseline {:.3f} dB)", which, rep.overall_mean,
                 base.overall_mean);
    write_run_log(out, "eval", {{"split", which}, {"run", run}}, {checkpoint, dir / "manifest.json"});
    return 0;
}

// ---- map ------------------------------------------------------------------

int cmd_map(const Common& c, const std::string& engine, double freq, std::size_t azimuths, double radius_km,
            const std::string& checkpoint, bool compare) {
    const json cfg = read_json(c.config);
    mapping::MapOptions o;
    o.climatology = climatology_from(cfg);
    o.gravity_waves = gravity_from(cfg);
    if (c.seed != 0) {
        o.climatology.rng_seed = substream_seed(c.seed, "climatology");
        o.gravity_waves.rng_seed = substream_seed(c.seed, "gravity_waves");
    }
    o.pe_config = pe_from(cfg);
    o.frequency = freq;
    o.engine = mapping::engine_from_string(engine);
    o.n_azimuths = azimuths;
    o.radius_km = radius_km;
    o.workers = c.workers;
    o.source_lat = cfg.value("source_lat", 0.0);
    o.source_lon = cfg.value("source_lon", 0.0);

    std::optional<nn::Checkpoint> ck;
    if (o.engine == mapping::Engine::cnn || compare) {
        require(!checkpoint.empty(), ErrorKind::config, "the cnn engine needs --checkpoint");
        ck = nn::load_checkpoint(checkpoint);
    }
    json prov{{"seed", c.seed},
              {"climatology", o.climatology},
              {"gravity_waves", o.gravity_waves},
              {"source", {{"lat", o.source_lat}, {"lon", o.source_lon}}}};
    const auto grid = o.engine == mapping::Engine::cnn ? mapping::build_cnn_map(o, *ck) : mapping::build_pe_map(o);
    const fs::path out(c.out);
    mapping::save_map(out, grid, prov);
    spdlog::info("{} map {} x {} written to {}", engine, grid.n_azimuths(), grid.n_ranges(), out.string());
    if (compare) {
        const auto other = o.engine == mapping::Engine::cnn ? mapping::build_pe_map(o) : mapping::build_cnn_map(o, *ck);
        double mad = 0.0;
        for (std::size_t i = 0; i < grid.values.size(); ++i) mad += std::abs(grid.values[i] - other.values[i]);
        mad /= static_cast<double>(grid.values.size());
        mapping::save_map(out / mapping::to_string(other.engine), other, prov);
        spdlog::info("cnn vs pe mean absolute difference: {:.3f} dB", mad);
        prov["cnn_pe_mean_abs_diff_db"] = mad;
    }
    prov["engine"] = engine;
    prov["freq"] = freq;
    write_run_log(out, "map", prov, {c.config, checkpoint});
    return 0;
}

// ---- describe -------------------------------------------------------------

int cmd_describe(const Common& c, const std::string& checkpoint) {
    nn::ModelConfig cfg;
    if (!checkpoint.empty()) {
        cfg = nn::load_checkpoint(checkpoint).config;
    } else if (!c.config.empty()) {
        cfg = read_json(c.config).value("model", json::object()).get<nn::ModelConfig>();
    }
    nn::Model<float> model(cfg, 0);
    std::cout << model.describe();
    return 0;
}

int emit_error(const std::string& kind, int code, const std::string& message) {
    std::cerr << json{{"error", kind}, {"code", code}, {"message", message}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Infrasound ground transmission-loss toolkit"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

    Common common;
    double azimuth = 90.0;
    std::size_t n = 10;
    std::string data_dir, checkpoint, slice_path, split_name = "test", engine = "pe";
    std::size_t run = 0, azimuths = 72;
    double freq = 0.5, radius_km = 2000.0;
    bool compare = false;

    auto* atmos_cmd = app.add_subcommand("atmos", "build one atmospheric slice");
    add_common(atmos_cmd, common);
    atmos_cmd->add_option("--azimuth", azimuth, "propagation azimuth, degrees clockwise from north");

    auto* dataset_cmd = app.add_subcommand("dataset", "generate and label a dataset");
    add_common(dataset_cmd, common, true, true);
    dataset_cmd->add_option("--n", n, "number of samples")->required();

    auto* train_cmd = app.add_subcommand("train", "train the surrogate on one split");
    add_common(train_cmd, common);
    train_cmd->add_option("--data", data_dir, "dataset directory")->required();
    train_cmd->add_option("--run", run, "split run index");

    auto* predict_cmd = app.add_subcommand("predict", "predict a TL curve for one slice");
    add_common(predict_cmd, common, false);
    predict_cmd->add_option("--checkpoint", checkpoint)->required();
    predict_cmd->add_option("--slice", slice_path)->required();
    predict_cmd->add_option("--freq", freq, "frequency, Hz");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
    add_common(eval_cmd, common, false);
    eval_cmd->add_option("--checkpoint", checkpoint)->required();
    eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
    eval_cmd->add_option("--split", split_name, "train, val or test");

    auto* map_cmd = app.add_subcommand("map", "polar attenuation map around a source");
    add_common(map_cmd, common, true, true);
    map_cmd->add_option("--engine", engine, "cnn or pe");
    map_cmd->add_option("--freq", freq, "frequency, Hz");
    map_cmd->add_option("--azimuths", azimuths, "number of azimuths");
    map_cmd->add_option("--radius-km", radius_km, "map radius, km");
    map_cmd->add_option("--checkpoint", checkpoint, "checkpoint for the cnn engine");
    map_cmd->add_flag("--compare", compare, "also run the other engine and log the mean difference");

    auto* describe_cmd = app.add_subcommand("describe", "print the network layers and parameter counts");
    describe_cmd->add_option("--config", common.config, "JSON with a \"model\" section");
    describe_cmd->add_option("--checkpoint", checkpoint);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return emit_error("usage", 2, e.what());
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("infratl"));
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");

    try {
        if (*atmos_cmd) return cmd_atmos(common, azimuth);
        if (*dataset_cmd) return cmd_dataset(common, n);
        if (*train_cmd) return cmd_train(common, data_dir, run);
        if (*predict_cmd) return cmd_predict(common, checkpoint, slice_path, freq);
        if (*eval_cmd) return cmd_eval(common, checkpoint, data_dir, split_name);
        if (*map_cmd) return cmd_map(common, engine, freq, azimuths, radius_km, checkpoint, compare);
        if (*describe_cmd) return cmd_describe(common, checkpoint);
    } catch (const Error& e) {
        return emit_error(to_string(e.kind()), static_cast<int>(e.kind()), e.what());
    } catch (const std::exception& e) {
        return emit_error("internal", 1, e.what());
    }
    return 0;
}
