#include "infratl/dataset.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace infratl::data {

namespace {

using Range = std::pair<double, double>;

double draw(Rng& rng, const Range& r) { return uniform(rng, r.first, r.second); }

json range_json(const Range& r) { return json::array({r.first, r.second}); }

Range range_from(const json& j, const char* key, const Range& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j.at(key);
    require(a.is_array() && a.size() == 2, ErrorKind::config, std::string(key) + " must be [lo, hi]");
    return {a.at(0).get<double>(), a.at(1).get<double>()};
}

std::string item_name(const char* prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%06zu.itl", prefix, index);
    return buf;
}

}  // namespace

const std::vector<double>& frequency_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g;
        for (std::size_t k = 1; k <= kFrequencyCount; ++k) g.push_back(static_cast<double>(k) / 10.0);
        return g;
    }();
    return grid;
}

void SpecSampler::validate() const {
    for (const Range* r : {&ground_T, &tropo_lapse, &strato_jet_amp, &strato_jet_alt, &strato_jet_width,
                           &tropo_jet_amp, &thermo_rise_scale, &meridional_amp, &range_trend, &gw_rms, &azimuth}) {
        require(r->first <= r->second, ErrorKind::config, "sampler range has lo > hi");
    }
    require(!frequencies.empty(), ErrorKind::config, "sampler needs at least one frequency");
    for (double f : frequencies) require(f > 0.0, ErrorKind::config, "frequencies must be positive");
    gw_base.validate();
}

void to_json(json& j, const SpecSampler& s) {
    j = json{{"ground_T", range_json(s.ground_T)},
             {"tropo_lapse", range_json(s.tropo_lapse)},
             {"strato_jet_amp", range_json(s.strato_jet_amp)},
             {"strato_jet_alt", range_json(s.strato_jet_alt)},
             {"strato_jet_width", range_json(s.strato_jet_width)},
             {"tropo_jet_amp", range_json(s.tropo_jet_amp)},
             {"thermo_rise_scale", range_json(s.thermo_rise_scale)},
             {"meridional_amp", range_json(s.meridional_amp)},
             {"range_trend", range_json(s.range_trend)},
             {"gw_rms", range_json(s.gw_rms)},
             {"azimuth", range_json(s.azimuth)},
             {"gravity_waves", s.gw_base},
             {"frequencies", s.frequencies}};
}

void from_json(const json& j, SpecSampler& s) {
    SpecSampler d;
    try {
        s.ground_T = range_from(j, "ground_T", d.ground_T);
        s.tropo_lapse = range_from(j, "tropo_lapse", d.tropo_lapse);
        s.strato_jet_amp = range_from(j, "strato_jet_amp", d.strato_jet_amp);
        s.strato_jet_alt = range_from(j, "strato_jet_alt", d.strato_jet_alt);
        s.strato_jet_width = range_from(j, "strato_jet_width", d.strato_jet_width);
        s.tropo_jet_amp = range_from(j, "tropo_jet_amp", d.tropo_jet_amp);
        s.thermo_rise_scale = range_from(j, "thermo_rise_scale", d.thermo_rise_scale);
        s.meridional_amp = range_from(j, "meridional_amp", d.meridional_amp);
        s.range_trend = range_from(j, "range_trend", d.range_trend);
        s.gw_rms = range_from(j, "gw_rms", d.gw_rms);
        s.azimuth = range_from(j, "azimuth", d.azimuth);
        s.gw_base = j.contains("gravity_waves") ? j.at("gravity_waves").get<atmos::GravityWaveSpec>() : d.gw_base;
        s.frequencies = j.value("frequencies", d.frequencies);
        if (j.contains("max_frequency")) {
            const double fmax = j.at("max_frequency").get<double>();
            std::erase_if(s.frequencies, [fmax](double f) { return f > fmax + 1e-9; });
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("sampler: ") + e.what());
    }
    s.validate();
}

SampledSpec sample_spec(const SpecSampler& sampler, std::uint64_t master_seed, std::size_t index) {
    SampledSpec out;
    out.item_seed = substream_seed(master_seed, "sample", {index});
    Rng rng(out.item_seed);
    auto& c = out.climatology;
    c.ground_T = draw(rng, sampler.ground_T);
    c.tropo_lapse = draw(rng, sampler.tropo_lapse);
    c.strato_jet_amp = draw(rng, sampler.strato_jet_amp);
    c.strato_jet_alt = draw(rng, sampler.strato_jet_alt);
    c.strato_jet_width = draw(rng, sampler.strato_jet_width);
    c.tropo_jet_amp = draw(rng, sampler.tropo_jet_amp);
    c.thermo_rise_scale = draw(rng, sampler.thermo_rise_scale);
    c.meridional_amp = draw(rng, sampler.meridional_amp);
    c.range_trend = draw(rng, sampler.range_trend);
    c.rng_seed = rng();
    out.gravity_waves = sampler.gw_base;
    out.gravity_waves.rms_at_20km = draw(rng, sampler.gw_rms);
    out.gravity_waves.rng_seed = rng();
    out.azimuth_deg = draw(rng, sampler.azimuth);
    out.frequency = sampler.frequencies[uniform_index(rng, sampler.frequencies.size())];
    return out;
}

// ---- Manifest -------------------------------------------------------------

void to_json(json& j, const Manifest& m) {
    json samples = json::array();
    for (const auto& s : m.samples) {
        samples.push_back({{"index", s.index},
                           {"slice_file", s.slice_file},
                           {"slice_index", s.slice_index},
                           {"frequency", s.frequency},
                           {"label_file", s.label_file},
                           {"downwind_score", s.downwind_score},
                           {"downwind", s.downwind},
                           {"item_seed", s.item_seed}});
    }
    json excluded = json::array();
    for (const auto& e : m.excluded) excluded.push_back({{"index", e.index}, {"reason", e.reason}});
    j = json{{"format", "infratl-manifest-1"},
             {"master_seed", m.master_seed},
             {"sampler", m.sampler},
             {"pe_config", m.pe_config},
             {"samples", samples},
             {"excluded", excluded}};
}

void from_json(const json& j, Manifest& m) {
    try {
        m.master_seed = j.at("master_seed").get<std::uint64_t>();
        m.sampler = j.value("sampler", json::object());
        m.pe_config = j.value("pe_config", json::object());
        m.samples.clear();
        for (const auto& s : j.at("samples")) {
            Sample x;
            x.index = s.at("index").get<std::size_t>();
            x.slice_file = s.at("slice_file").get<std::string>();
            x.slice_index = s.value("slice_index", std::size_t{0});
            x.frequency = s.at("frequency").get<double>();
            x.label_file = s.at("label_file").get<std::string>();
            x.downwind_score = s.at("downwind_score").get<double>();
            x.downwind = s.at("downwind").get<bool>();
            x.item_seed = s.at("item_seed").get<std::uint64_t>();
            m.samples.push_back(std::move(x));
        }
        m.excluded.clear();
        for (const auto& e : j.value("excluded", json::array())) {
            m.excluded.push_back({e.at("index").get<std::size_t>(), e.at("reason").get<std::string>()});
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("manifest: ") + e.what());
    }
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    out << json(m).dump(2) << '\n';
    require(static_cast<bool>(out), ErrorKind::io, "write failed for " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(ErrorKind::config, path.string() + ": " + e.what());
    }
    return j.get<Manifest>();
}

// ---- Generation -----------------------------------------------------------

std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("INFRATL_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        require(end != env && *end == '\0' && v > 0, ErrorKind::config,
                std::string("INFRATL_WORKERS must be a positive integer, got '") + env + "'");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::pair<atmos::AtmosphericSlice, pe::TLCurve> label_spec(const SampledSpec& spec, const pe::PEConfig& config) {
    atmos::AtmosphericSlice slice = atmos::build_slice(spec.climatology, spec.gravity_waves, spec.azimuth_deg);
    pe::TLCurve tl = pe::march(slice, spec.frequency, config);
    return {std::move(slice), std::move(tl)};
}

Manifest generate(const GenerateOptions& options, const ProgressCallback& progress) {
    require(options.n >= 1, ErrorKind::precondition, "generate needs n >= 1");
    options.sampler.validate();
    options.pe_config.validate();
    std::filesystem::create_directories(options.out_dir);

    struct Outcome {
        std::optional<Sample> sample;
        std::optional<ExcludedSample> excluded;
        std::exception_ptr error;
    };
    std::vector<Outcome> outcomes(options.n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto work = [&] {
        for (std::size_t i = next++; i < options.n; i = next++) {
            Outcome& o = outcomes[i];
            try {
                const SampledSpec spec = sample_spec(options.sampler, options.seed, i);
                atmos::AtmosphericSlice slice =
                    atmos::build_slice(spec.climatology, spec.gravity_waves, spec.azimuth_deg);
                slice.metadata["sample_index"] = i;
                slice.metadata["item_seed"] = spec.item_seed;
                const auto cls = atmos::classify_downwind(slice);
                try {
                    const pe::TLCurve tl = pe::march(slice, spec.frequency, options.pe_config);
                    Sample s;
                    s.index = i;
                    s.slice_file = item_name("slice", i);
                    s.label_file = item_name("label", i);
                    s.frequency = spec.frequency;
                    s.downwind_score = cls.score;
                    s.downwind = cls.downwind;
                    s.item_seed = spec.item_seed;
                    atmos::save_slice(options.out_dir / s.slice_file, slice);
                    pe::save_tl(options.out_dir / s.label_file, tl, options.pe_config);
                    o.sample = std::move(s);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::numerical) throw;
                    o.excluded = ExcludedSample{i, e.what()};
                }
            } catch (...) {
                o.error = std::current_exception();
            }
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(d, options.n);
            }
        }
    };

    const std::size_t workers = std::min(resolve_workers(options.workers), options.n);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    Manifest m;
    m.master_seed = options.seed;
    m.sampler = options.sampler;
    m.pe_config = options.pe_config;
    for (auto& o : outcomes) {
        if (o.error) std::rethrow_exception(o.error);
        if (o.sample) m.samples.push_back(std::move(*o.sample));
        if (o.excluded) m.excluded.push_back(std::move(*o.excluded));
    }
    save_manifest(options.out_dir / "manifest.json", m);
    return m;
}

// ---- Splits ---------------------------------------------------------------

void SplitSpec::validate() const {
    require(train > 0.0 && val >= 0.0 && test >= 0.0, ErrorKind::config, "split fractions must be >= 0");
    require(std::abs(train + val + test - 1.0) < 1e-9, ErrorKind::config, "split fractions must sum to 1");
    require(n_runs >= 1, ErrorKind::config, "n_runs must be >= 1");
}

std::vector<Split> split(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    require(n >= 10, ErrorKind::precondition, "split needs at least 10 samples");
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n))));
    std::vector<Split> runs;
    for (std::size_t r = 0; r < spec.n_runs; ++r) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng = substream(spec.seed, "split", {r});
        shuffle(order.begin(), order.end(), rng);
        Split s;
        s.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
        s.val.assign(order.begin() + static_cast<long>(n_train), order.begin() + static_cast<long>(n_train + n_val));
        s.test.assign(order.begin() + static_cast<long>(n_train + n_val), order.end());
        runs.push_back(std::move(s));
    }
    return runs;
}

// ---- Arrays and normalization ---------------------------------------------

RawArrays load_raw(const Manifest& m, const std::filesystem::path& dir, std::span<const std::size_t> rows) {
    RawArrays raw;
    const std::size_t per = atmos::kLevels * atmos::kColumns;
    raw.images.reserve(rows.size() * per);
    raw.labels.reserve(rows.size() * pe::kTLPoints);
    for (std::size_t r : rows) {
        require(r < m.samples.size(), ErrorKind::domain, "sample row out of range");
        const Sample& s = m.samples[r];
        const atmos::AtmosphericSlice slice = atmos::load_slice(dir / s.slice_file);
        const pe::TLCurve tl = pe::load_tl(dir / s.label_file);
        require(tl.values.size() == pe::kTLPoints, ErrorKind::shape, s.label_file + ": label length");
        raw.images.insert(raw.images.end(), slice.c_ratio.begin(), slice.c_ratio.end());
        for (double v : tl.values) raw.labels.push_back(static_cast<float>(v));
        raw.freqs.push_back(static_cast<float>(s.frequency));
        raw.downwind_scores.push_back(s.downwind_score);
    }
    return raw;
}

namespace {

std::pair<double, double> mean_std(std::span<const float> v) {
    double mean = 0.0;
    for (float x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (float x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

}  // namespace

Normalizer fit_normalizer(const RawArrays& train, std::string fitted_on) {
    require(train.size() > 0, ErrorKind::precondition, "cannot fit a normalizer on an empty split");
    Normalizer n;
    std::tie(n.input_mean, n.input_std) = mean_std(train.images);
    std::tie(n.label_mean, n.label_std) = mean_std(train.labels);
    std::tie(n.freq_mean, n.freq_std) = mean_std(train.freqs);
    n.fitted_on = std::move(fitted_on);
    for (auto [name, s] : {std::pair{"input", n.input_std}, {"label", n.label_std}, {"frequency", n.freq_std}}) {
        require(s > 0.0, ErrorKind::numerical, std::string(name) + " has zero variance in the training split");
    }
    return n;
}

std::vector<float> mean_label_curve(const RawArrays& raw) {
    require(raw.size() > 0, ErrorKind::precondition, "mean label of an empty set");
    const std::size_t points = raw.labels.size() / raw.size();
    std::vector<double> sum(points, 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        for (std::size_t j = 0; j < points; ++j) sum[j] += raw.labels[i * points + j];
    }
    std::vector<float> mean(points);
    for (std::size_t j = 0; j < points; ++j) mean[j] = static_cast<float>(sum[j] / static_cast<double>(raw.size()));
    return mean;
}

nn::ArraySet<float> normalize(const RawArrays& raw, const Normalizer& n) {
    nn::ArraySet<float> set;
    const std::size_t count = raw.size();
    set.images = nn::Tensor<float>({count, atmos::kLevels, atmos::kColumns, 1});
    for (std::size_t i = 0; i < raw.images.size(); ++i) set.images.data[i] = static_cast<float>(n.apply_input(raw.images[i]));
    set.labels = nn::Tensor<float>({count, pe::kTLPoints});
    for (std::size_t i = 0; i < raw.labels.size(); ++i) set.labels.data[i] = static_cast<float>(n.apply_label(raw.labels[i]));
    set.freqs.resize(count);
    for (std::size_t i = 0; i < count; ++i) set.freqs[i] = static_cast<float>(n.apply_freq(raw.freqs[i]));
    return set;
}

nn::Tensor<float> slice_image(const atmos::AtmosphericSlice& slice, const Normalizer& n) {
    nn::Tensor<float> t({1, atmos::kLevels, atmos::kColumns, 1});
    for (std::size_t i = 0; i < slice.c_ratio.size(); ++i) t.data[i] = static_cast<float>(n.apply_input(slice.c_ratio[i]));
    return t;
}

}  // namespace infratl::data
