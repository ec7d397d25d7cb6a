#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "infratl/dataset.hpp"

namespace fs = std::filesystem;
using namespace infratl;
using namespace infratl::data;

namespace {

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Ten samples at 0.1 or 0.2 Hz, generated once with one worker and once with three.
class GeneratedSet : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = fs::temp_directory_path() / "infratl_dataset_test";
        fs::remove_all(root_);
        for (std::size_t w : {1u, 3u}) {
            GenerateOptions o = options();
            o.workers = w;
            o.out_dir = root_ / ("w" + std::to_string(w));
            generate(o);
        }
    }
    static void TearDownTestSuite() { fs::remove_all(root_); }

    static GenerateOptions options() {
        GenerateOptions o;
        o.n = 10;
        o.seed = 77;
        o.sampler.frequencies = {0.1, 0.2};
        return o;
    }

    static fs::path root_;
};

fs::path GeneratedSet::root_;

}  // namespace

TEST(FrequencyGrid, ThirtyTwoValues) {
    const auto& g = frequency_grid();
    ASSERT_EQ(g.size(), kFrequencyCount);
    EXPECT_DOUBLE_EQ(g.front(), 0.1);
    EXPECT_DOUBLE_EQ(g.back(), 3.2);
}

TEST(Sampler, FrequenciesUniformOverGrid) {
    const SpecSampler s;
    std::vector<int> counts(kFrequencyCount, 0);
    constexpr std::size_t n = 3200;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = sample_spec(s, 5, i).frequency;
        ++counts[static_cast<std::size_t>(std::lround(f * 10.0)) - 1];
    }
    // Pearson chi-square, 31 degrees of freedom; 61.1 is the 0.1% point.
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - 100.0) * (c - 100.0) / 100.0;
    EXPECT_LT(chi2, 61.1);
}

TEST(Sampler, PureAndWithinRanges) {
    const SpecSampler s;
    for (std::size_t i = 0; i < 50; ++i) {
        const auto a = sample_spec(s, 9, i), b = sample_spec(s, 9, i);
        EXPECT_EQ(json(a.climatology), json(b.climatology));
        EXPECT_EQ(a.azimuth_deg, b.azimuth_deg);
        EXPECT_GE(a.climatology.strato_jet_amp, s.strato_jet_amp.first);
        EXPECT_LE(a.climatology.strato_jet_amp, s.strato_jet_amp.second);
        EXPECT_GE(a.azimuth_deg, 0.0);
        EXPECT_LT(a.azimuth_deg, 360.0);
    }
    EXPECT_NE(sample_spec(s, 9, 0).item_seed, sample_spec(s, 9, 1).item_seed);
}

TEST(Sampler, MaxFrequencyInJson) {
    const auto s = json{{"max_frequency", 0.5}}.get<SpecSampler>();
    EXPECT_EQ(s.frequencies.size(), 5u);
    const SpecSampler back = json(s).get<SpecSampler>();
    EXPECT_EQ(back.frequencies, s.frequencies);
}

TEST_F(GeneratedSet, WorkerCountDoesNotChangeBytes) {
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(root_ / "w1")) {
        ++files;
        EXPECT_EQ(bytes(e.path()), bytes(root_ / "w3" / e.path().filename())) << e.path().filename();
    }
    EXPECT_EQ(files, 21u);
}

TEST_F(GeneratedSet, RelabelIsBitEqual) {
    const auto m = load_manifest(root_ / "w1" / "manifest.json");
    ASSERT_EQ(m.size(), 10u);
    const auto& s = m.samples[6];
    const auto spec = sample_spec(options().sampler, 77, s.index);
    const auto [slice, tl] = label_spec(spec, pe::PEConfig{});
    const auto direct = pe::march(slice, spec.frequency, pe::PEConfig{});
    const auto stored = pe::load_tl(root_ / "w1" / s.label_file);
    ASSERT_EQ(stored.values.size(), pe::kTLPoints);
    for (std::size_t i = 0; i < pe::kTLPoints; ++i) {
        EXPECT_EQ(static_cast<float>(direct.values[i]), static_cast<float>(stored.values[i]));
    }
    EXPECT_EQ(atmos::load_slice(root_ / "w1" / s.slice_file).c_ratio, slice.c_ratio);
    EXPECT_EQ(s.downwind, atmos::classify_downwind(slice).downwind);
}

TEST_F(GeneratedSet, NormalizerUsesTrainOnly) {
    const auto m = load_manifest(root_ / "w1" / "manifest.json");
    SplitSpec spec;
    spec.seed = 3;
    const auto sp = split(m.size(), spec)[0];
    const auto train_raw = load_raw(m, root_ / "w1", sp.train);
    auto test_raw = load_raw(m, root_ / "w1", sp.test);
    const auto n = fit_normalizer(train_raw, "run0");

    // Leak test: perturbing test labels cannot change the statistics.
    for (auto& v : test_raw.labels) v += 50.0f;
    const auto again = fit_normalizer(train_raw, "run0");
    EXPECT_EQ(json(n), json(again));

    const auto set = normalize(train_raw, n);
    double mean = 0.0, sq = 0.0;
    for (float v : set.labels.data) mean += v;
    mean /= static_cast<double>(set.labels.size());
    for (float v : set.labels.data) sq += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-5);
    EXPECT_NEAR(std::sqrt(sq / static_cast<double>(set.labels.size())), 1.0, 1e-5);

    const auto test = normalize(test_raw, n);
    double tmean = 0.0;
    for (float v : test.labels.data) tmean += v;
    EXPECT_GT(std::abs(tmean / static_cast<double>(test.labels.size())), 0.1);

    for (double x : {-120.0, -3.5, 0.0}) EXPECT_NEAR(n.invert_label(n.apply_label(x)), x, 1e-9);
}

TEST_F(GeneratedSet, MeanLabelCurve) {
    const auto m = load_manifest(root_ / "w1" / "manifest.json");
    const std::vector<std::size_t> rows{0, 1, 2};
    const auto raw = load_raw(m, root_ / "w1", rows);
    const auto curve = mean_label_curve(raw);
    ASSERT_EQ(curve.size(), pe::kTLPoints);
    EXPECT_NEAR(curve[17], (raw.labels[17] + raw.labels[417] + raw.labels[817]) / 3.0, 1e-4);
}

TEST(Split, PartitionsDisjointAndComplete) {
    SplitSpec spec;
    spec.seed = 1;
    const auto runs = split(103, spec);
    ASSERT_EQ(runs.size(), 8u);
    for (const auto& r : runs) {
        std::set<std::size_t> all(r.train.begin(), r.train.end());
        all.insert(r.val.begin(), r.val.end());
        all.insert(r.test.begin(), r.test.end());
        EXPECT_EQ(all.size(), 103u);
        EXPECT_EQ(r.train.size() + r.val.size() + r.test.size(), 103u);
        EXPECT_EQ(r.train.size(), 72u);
    }
    EXPECT_NE(runs[0].test, runs[1].test);
    SplitSpec other = spec;
    other.seed = 2;
    EXPECT_NE(split(103, other)[0].train, runs[0].train);
    EXPECT_EQ(split(103, spec)[3].val, runs[3].val);
}

TEST(Split, LargeSetTestFraction) {
    SplitSpec spec;
    spec.n_runs = 1;
    EXPECT_EQ(split(36450, spec)[0].test.size(), 3645u);
}

TEST(Split, TooFewSamples) { EXPECT_THROW(split(9, SplitSpec{}), Error); }

TEST(Normalizer, ConstantInputsAreNumericalError) {
    RawArrays raw;
    raw.images.assign(2 * atmos::kLevels * atmos::kColumns, 1.0f);
    raw.freqs = {0.1f, 0.2f};
    raw.labels.assign(2 * pe::kTLPoints, -50.0f);
    raw.labels[0] = -40.0f;
    try {
        fit_normalizer(raw, "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
}

TEST(Workers, ExplicitWins) { EXPECT_EQ(resolve_workers(3), 3u); }
