#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "infratl/dataset.hpp"
#include "infratl/evaluation.hpp"
#include "infratl/rng.hpp"

namespace fs = std::filesystem;
using namespace infratl;
using namespace infratl::eval;

namespace {

struct Synthetic {
    std::vector<float> preds, labels;
    std::vector<double> freqs, scores;
    std::size_t points = 8;
};

Synthetic synthetic(std::size_t n, std::uint64_t seed) {
    Synthetic s;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < s.points; ++k) {
            const double l = uniform(rng, -120, -20);
            s.labels.push_back(static_cast<float>(l));
            s.preds.push_back(static_cast<float>(l + uniform(rng, -15, 15)));
        }
        s.freqs.push_back(data::frequency_grid()[uniform_index(rng, 32)]);
        s.scores.push_back(uniform(rng, 0.85, 1.15));
    }
    return s;
}

}  // namespace

TEST(Bands, TableLayout) {
    const auto& b = frequency_bands();
    ASSERT_EQ(b.size(), 12u);
    EXPECT_EQ(b.front().label, "0.1-0.1");
    EXPECT_EQ(b[5].label, "0.6-0.7");
    EXPECT_EQ(b.back().label, "2.5-3.2");
}

TEST(Bands, Assignment) {
    const auto& b = frequency_bands();
    EXPECT_EQ(b[band_index(0.1)].label, "0.1-0.1");
    EXPECT_EQ(b[band_index(0.65)].label, "0.6-0.7");
    EXPECT_EQ(b[band_index(0.7)].label, "0.6-0.7");
    EXPECT_EQ(b[band_index(3.2)].label, "2.5-3.2");
    EXPECT_EQ(b[band_index(1.5)].label, "1.2-1.5");
    EXPECT_EQ(b[band_index(1.6)].label, "1.6-1.9");
    EXPECT_THROW(band_index(3.3), Error);
    EXPECT_THROW(band_index(0.0), Error);
    // Every grid frequency lands in exactly one band.
    std::vector<int> hits(12, 0);
    for (double f : data::frequency_grid()) ++hits[band_index(f)];
    EXPECT_EQ(std::accumulate(hits.begin(), hits.end(), 0), 32);
    for (int h : hits) EXPECT_GE(h, 1);
}

TEST(SampleRmse, Examples) {
    const std::vector<float> a{-10, -20, -30}, b{-15, -25, -35};
    EXPECT_EQ(sample_rmse_db(a, a), 0.0);
    EXPECT_NEAR(sample_rmse_db(a, b), 5.0, 1e-12);
    Rng rng(2);
    std::vector<float> p(400), l(400);
    for (std::size_t i = 0; i < 400; ++i) {
        p[i] = static_cast<float>(uniform(rng, -100, 0));
        l[i] = static_cast<float>(uniform(rng, -100, 0));
    }
    double brute = 0.0;
    for (std::size_t i = 0; i < 400; ++i) brute += (static_cast<double>(p[i]) - l[i]) * (static_cast<double>(p[i]) - l[i]);
    EXPECT_NEAR(sample_rmse_db(p, l), std::sqrt(brute / 400.0), 1e-10);
}

TEST(Quantile, LinearBetweenOrderStatistics) {
    const std::vector<double> s{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.75), 3.25);
    EXPECT_DOUBLE_EQ(quantile_sorted(std::vector<double>{7}, 0.25), 7.0);
}

TEST(Report, AllZeroErrors) {
    const std::vector<float> v(3 * 5, -40.0f);
    const std::vector<double> f{0.1, 1.0, 3.0}, sc{1.2, 0.8, 1.0};
    const auto r = report(v, v, 5, f, sc);
    for (const auto& b : r.bands) {
        if (b.count) EXPECT_EQ(b.mean, 0.0);
    }
    ASSERT_EQ(r.histogram.size(), 1u);
    EXPECT_EQ(r.histogram[0].lo, 0.0);
    EXPECT_EQ(r.histogram[0].hi, 2.5);
    EXPECT_EQ(r.histogram[0].count, 3u);
    EXPECT_NEAR(r.histogram[0].downwind_pct + r.histogram[0].upwind_pct, 100.0, 1e-9);
    EXPECT_NEAR(r.histogram[0].downwind_pct, 200.0 / 3.0, 1e-9);
}

TEST(Report, EmptyBandsAreNullInJson) {
    const std::vector<float> v(5, -40.0f);
    const auto r = report(v, v, 5, std::vector<double>{0.1}, std::vector<double>{1.0});
    EXPECT_TRUE(std::isnan(r.bands[3].mean));
    const auto j = to_json(r);
    EXPECT_TRUE(j["bands"][3]["mean"].is_null());
    EXPECT_EQ(j["bands"].size(), 12u);
}

TEST(Report, CountsMeansAndBins) {
    const auto s = synthetic(500, 4);
    const auto r = report(s.preds, s.labels, s.points, s.freqs, s.scores);
    std::size_t total = 0;
    double weighted = 0.0;
    for (const auto& b : r.bands) {
        total += b.count;
        if (b.count) weighted += b.mean * static_cast<double>(b.count);
        if (b.count) EXPECT_LE(b.q1, b.q3);
    }
    EXPECT_EQ(total, 500u);
    EXPECT_NEAR(weighted / 500.0, r.overall_mean, 1e-9);
    std::size_t binned = 0;
    for (const auto& h : r.histogram) {
        binned += h.count;
        EXPECT_DOUBLE_EQ(h.hi - h.lo, kHistogramBinDb);
    }
    EXPECT_EQ(binned, 500u);
    for (std::size_t i = 0; i < r.errors.size(); ++i) {
        const auto bin = static_cast<std::size_t>(std::floor(r.errors[i] / kHistogramBinDb));
        EXPECT_LE(r.histogram[bin].lo, r.errors[i]);
        EXPECT_GT(r.histogram[bin].hi, r.errors[i]);
    }
    for (std::size_t i = 1; i < r.sorted_rows.size(); ++i) {
        EXPECT_GE(s.scores[r.sorted_rows[i - 1]], s.scores[r.sorted_rows[i]]);
    }
}

TEST(Report, PermutationInvariant) {
    const auto s = synthetic(200, 6);
    const auto a = report(s.preds, s.labels, s.points, s.freqs, s.scores);
    std::vector<std::size_t> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(1);
    shuffle(perm.begin(), perm.end(), rng);
    Synthetic t;
    t.points = s.points;
    for (std::size_t i : perm) {
        t.preds.insert(t.preds.end(), s.preds.begin() + i * s.points, s.preds.begin() + (i + 1) * s.points);
        t.labels.insert(t.labels.end(), s.labels.begin() + i * s.points, s.labels.begin() + (i + 1) * s.points);
        t.freqs.push_back(s.freqs[i]);
        t.scores.push_back(s.scores[i]);
    }
    const auto b = report(t.preds, t.labels, t.points, t.freqs, t.scores);
    for (std::size_t k = 0; k < 12; ++k) {
        EXPECT_EQ(a.bands[k].count, b.bands[k].count);
        if (a.bands[k].count == 0) continue;
        EXPECT_EQ(a.bands[k].q1, b.bands[k].q1);
        EXPECT_EQ(a.bands[k].q3, b.bands[k].q3);
        EXPECT_NEAR(a.bands[k].mean, b.bands[k].mean, 1e-12);
    }
    ASSERT_EQ(a.histogram.size(), b.histogram.size());
    for (std::size_t k = 0; k < a.histogram.size(); ++k) EXPECT_EQ(a.histogram[k].count, b.histogram[k].count);
    // The sorted matrices hold the same rows in the same order.
    for (std::size_t k = 0; k < 200; ++k) EXPECT_EQ(a.errors[a.sorted_rows[k]], b.errors[b.sorted_rows[k]]);
}

TEST(Report, RejectsEmptyAndMisaligned) {
    EXPECT_THROW(report({}, {}, 4, {}, {}), Error);
    const std::vector<float> v(8, 0.0f);
    EXPECT_THROW(report(v, v, 4, std::vector<double>{0.1}, std::vector<double>{1.0, 1.0}), Error);
}

TEST(Report, TextAndExport) {
    const auto s = synthetic(40, 8);
    const auto r = report(s.preds, s.labels, s.points, s.freqs, s.scores);
    const auto text = to_text(r);
    for (const auto& b : frequency_bands()) EXPECT_NE(text.find(b.label), std::string::npos);
    const auto dir = fs::temp_directory_path() / "infratl_eval_test";
    fs::remove_all(dir);
    export_matrices(dir, r, s.preds, s.labels, s.points);
    const auto c = read_container(dir / "matrices.itl");
    EXPECT_EQ(c.field("pred").shape, (std::vector<std::size_t>{40, s.points}));
    const std::size_t first = r.sorted_rows[0];
    EXPECT_EQ(c.field("label").data[0], s.labels[first * s.points]);
    EXPECT_TRUE(fs::exists(dir / "pred_sorted.csv"));
    EXPECT_TRUE(fs::exists(dir / "label_sorted.csv"));
    fs::remove_all(dir);
}
