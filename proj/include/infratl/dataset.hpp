#pragma once

// (slice, frequency) -> ground TL datasets. A dataset directory holds one
// slice file and one label file per sample plus manifest.json; file names in
// the manifest are relative to that directory.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "infratl/atmosphere.hpp"
#include "infratl/nn/model.hpp"
#include "infratl/normalizer.hpp"
#include "infratl/pe_solver.hpp"

namespace infratl::data {

inline constexpr std::size_t kFrequencyCount = 32;

/// 0.1, 0.2, ..., 3.2 Hz.
const std::vector<double>& frequency_grid();

/// Uniform ranges for the randomized climatology and gravity-wave specs.
struct SpecSampler {
    std::pair<double, double> ground_T{275.0, 305.0};
    std::pair<double, double> tropo_lapse{5.5, 7.5};
    std::pair<double, double> strato_jet_amp{-60.0, 60.0};
    std::pair<double, double> strato_jet_alt{45.0, 70.0};
    std::pair<double, double> strato_jet_width{8.0, 16.0};
    std::pair<double, double> tropo_jet_amp{0.0, 35.0};
    std::pair<double, double> thermo_rise_scale{4.0, 8.0};
    std::pair<double, double> meridional_amp{0.0, 10.0};
    std::pair<double, double> range_trend{-0.15, 0.15};
    std::pair<double, double> gw_rms{0.5, 3.0};
    std::pair<double, double> azimuth{0.0, 360.0};
    atmos::GravityWaveSpec gw_base;
    /// Candidate frequencies, each drawn with equal probability.
    std::vector<double> frequencies = frequency_grid();

    void validate() const;
};

void to_json(json& j, const SpecSampler& s);
void from_json(const json& j, SpecSampler& s);

struct SampledSpec {
    atmos::ClimatologySpec climatology;
    atmos::GravityWaveSpec gravity_waves;
    double azimuth_deg = 0.0;
    double frequency = 0.0;
    std::uint64_t item_seed = 0;
};

/// Pure in (sampler, master seed, index).
SampledSpec sample_spec(const SpecSampler& sampler, std::uint64_t master_seed, std::size_t index);

struct Sample {
    std::size_t index = 0;
    std::string slice_file;
    std::size_t slice_index = 0;  // slice within the file (always 0 here)
    double frequency = 0.0;
    std::string label_file;
    double downwind_score = 0.0;
    bool downwind = false;
    std::uint64_t item_seed = 0;
};

struct ExcludedSample {
    std::size_t index = 0;
    std::string reason;
};

struct Manifest {
    std::uint64_t master_seed = 0;
    json sampler = json::object();
    json pe_config = json::object();
    std::vector<Sample> samples;
    std::vector<ExcludedSample> excluded;

    std::size_t size() const { return samples.size(); }
};

void to_json(json& j, const Manifest& m);
void from_json(const json& j, Manifest& m);
void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

/// Worker count: `requested` if positive, else INFRATL_WORKERS, else the
/// hardware concurrency.
std::size_t resolve_workers(std::size_t requested);

struct GenerateOptions {
    std::size_t n = 0;
    SpecSampler sampler;
    pe::PEConfig pe_config;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Builds, labels and writes n samples, then writes manifest.json. Samples
/// whose march raises ErrorKind::numerical are excluded with the reason.
Manifest generate(const GenerateOptions& options, const ProgressCallback& progress = {});

/// Slice and label for one sampled spec, as generate() computes them.
std::pair<atmos::AtmosphericSlice, pe::TLCurve> label_spec(const SampledSpec& spec,
                                                           const pe::PEConfig& config);

struct SplitSpec {
    std::uint64_t seed = 0;
    double train = 0.70;
    double val = 0.20;
    double test = 0.10;
    std::size_t n_runs = 8;

    void validate() const;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// One shuffled partition of [0, n) per run.
std::vector<Split> split(std::size_t n, const SplitSpec& spec);

/// Raw (un-normalized) arrays read from a dataset directory.
struct RawArrays {
    std::vector<float> images;  // [N][1000][40]
    std::vector<float> freqs;
    std::vector<float> labels;  // [N][400]
    std::vector<double> downwind_scores;

    std::size_t size() const { return freqs.size(); }
};

RawArrays load_raw(const Manifest& m, const std::filesystem::path& dir,
                   std::span<const std::size_t> rows);

/// Scalar z-score statistics of a (training) subset.
Normalizer fit_normalizer(const RawArrays& train, std::string fitted_on);

/// Per-range mean of the labels; the constant-prediction baseline.
std::vector<float> mean_label_curve(const RawArrays& raw);

nn::ArraySet<float> normalize(const RawArrays& raw, const Normalizer& n);

/// Image tensor (1, 1000, 40, 1) for a single slice.
nn::Tensor<float> slice_image(const atmos::AtmosphericSlice& slice, const Normalizer& n);

}  // namespace infratl::data
