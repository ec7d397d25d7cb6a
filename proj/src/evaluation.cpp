#include "infratl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "infratl/error.hpp"

namespace infratl::eval {

const std::vector<FrequencyBand>& frequency_bands() {
    static const std::vector<FrequencyBand> bands = [] {
        const std::pair<int, int> tenths[] = {{1, 1},   {2, 2},   {3, 3},   {4, 4},   {5, 5},   {6, 7},
                                              {8, 9},   {10, 11}, {12, 15}, {16, 19}, {20, 24}, {25, 32}};
        std::vector<FrequencyBand> out;
        for (auto [lo, hi] : tenths) {
            std::ostringstream os;
            os << std::fixed << std::setprecision(1) << lo / 10.0 << '-' << hi / 10.0;
            out.push_back({os.str(), lo / 10.0, hi / 10.0});
        }
        return out;
    }();
    return bands;
}

std::size_t band_index(double f_hz) {
    require(std::isfinite(f_hz), ErrorKind::domain, "frequency is not finite");
    const long tenth = std::lround(f_hz * 10.0);
    require(tenth >= 1 && tenth <= 32, ErrorKind::domain,
            "frequency " + std::to_string(f_hz) + " Hz is off the 0.1-3.2 Hz grid");
    const auto& bands = frequency_bands();
    for (std::size_t b = 0; b < bands.size(); ++b) {
        if (tenth <= std::lround(bands[b].f_high * 10.0)) return b;
    }
    fail(ErrorKind::domain, "unreachable band lookup");
}

double sample_rmse_db(std::span<const float> pred, std::span<const float> label) {
    require(pred.size() == label.size() && !pred.empty(), ErrorKind::shape, "prediction/label length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(label[i]);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(pred.size()));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    require(!sorted.empty(), ErrorKind::precondition, "quantile of an empty sample");
    require(p >= 0.0 && p <= 1.0, ErrorKind::domain, "quantile level outside [0, 1]");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

EvalReport report(std::span<const float> preds, std::span<const float> labels, std::size_t points,
                  std::span<const double> freqs, std::span<const double> downwind_scores) {
    const std::size_t n = freqs.size();
    require(n > 0, ErrorKind::precondition, "report needs at least one sample");
    require(points > 0 && preds.size() == n * points && labels.size() == n * points &&
                downwind_scores.size() == n,
            ErrorKind::shape, "report inputs are not aligned");
    EvalReport r;
    r.errors.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.errors[i] = sample_rmse_db(preds.subspan(i * points, points), labels.subspan(i * points, points));
    }

    const auto& bands = frequency_bands();
    std::vector<std::vector<double>> grouped(bands.size());
    for (std::size_t i = 0; i < n; ++i) grouped[band_index(freqs[i])].push_back(r.errors[i]);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t b = 0; b < bands.size(); ++b) {
        auto& g = grouped[b];
        std::sort(g.begin(), g.end());
        BandStats s{bands[b].label, g.size(), nan, nan, nan};
        if (!g.empty()) {
            s.q1 = quantile_sorted(g, 0.25);
            s.mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
            s.q3 = quantile_sorted(g, 0.75);
        }
        r.bands.push_back(s);
    }
    r.overall_mean = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / static_cast<double>(n);

    const double max_err = *std::max_element(r.errors.begin(), r.errors.end());
    const auto n_bins = static_cast<std::size_t>(std::floor(max_err / kHistogramBinDb)) + 1;
    r.histogram.resize(n_bins);
    std::vector<std::size_t> down(n_bins, 0);
    for (std::size_t k = 0; k < n_bins; ++k) {
        r.histogram[k].lo = kHistogramBinDb * static_cast<double>(k);
        r.histogram[k].hi = kHistogramBinDb * static_cast<double>(k + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = std::min(n_bins - 1, static_cast<std::size_t>(std::floor(r.errors[i] / kHistogramBinDb)));
        ++r.histogram[k].count;
        if (downwind_scores[i] >= 1.0) ++down[k];
    }
    for (std::size_t k = 0; k < n_bins; ++k) {
        auto& bin = r.histogram[k];
        if (bin.count == 0) continue;
        bin.downwind_pct = 100.0 * static_cast<double>(down[k]) / static_cast<double>(bin.count);
        bin.upwind_pct = 100.0 - bin.downwind_pct;
    }

    r.sorted_rows.resize(n);
    std::iota(r.sorted_rows.begin(), r.sorted_rows.end(), std::size_t{0});
    std::stable_sort(r.sorted_rows.begin(), r.sorted_rows.end(),
                     [&](std::size_t a, std::size_t b) { return downwind_scores[a] > downwind_scores[b]; });
    return r;
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const EvalReport& r) {
    json bands = json::array();
    for (const auto& b : r.bands) {
        bands.push_back({{"band", b.label},
                         {"count", b.count},
                         {"q1", number_or_null(b.q1)},
                         {"mean", number_or_null(b.mean)},
                         {"q3", number_or_null(b.q3)}});
    }
    json hist = json::array();
    for (const auto& h : r.histogram) {
        hist.push_back({{"lo", h.lo},
                        {"hi", h.hi},
                        {"count", h.count},
                        {"downwind_pct", h.downwind_pct},
                        {"upwind_pct", h.upwind_pct}});
    }
    return json{{"metric", "mean RMSE over 4000 km (dB)"},
                {"samples", r.errors.size()},
                {"overall_mean", r.overall_mean},
                {"bands", bands},
                {"histogram", hist}};
}

std::string to_text(const EvalReport& r) {
    std::ostringstream os;
    os << std::fixed;
    os << std::setw(8) << "f (Hz)";
    for (const auto& b : r.bands) os << std::setw(9) << b.label;
    os << '\n' << std::setw(8) << "count";
    for (const auto& b : r.bands) os << std::setw(9) << b.count;
    auto row = [&](const char* name, double BandStats::*field) {
        os << '\n' << std::setw(8) << name << std::setprecision(2);
        for (const auto& b : r.bands) {
            const double v = b.*field;
            if (std::isfinite(v)) {
                os << std::setw(9) << v;
            } else {
                os << std::setw(9) << "-";
            }
        }
    };
    row("q1", &BandStats::q1);
    row("mean", &BandStats::mean);
    row("q3", &BandStats::q3);
    os << "\n\noverall mean RMSE: " << std::setprecision(3) << r.overall_mean << " dB over " << r.errors.size()
       << " samples\n\n";
    os << std::setw(14) << "RMSE bin (dB)" << std::setw(8) << "count" << std::setw(12) << "downwind %"
       << std::setw(10) << "upwind %" << '\n';
    for (const auto& h : r.histogram) {
        std::ostringstream bin;
        bin << std::fixed << std::setprecision(1) << h.lo << '-' << h.hi;
        os << std::setw(14) << bin.str() << std::setw(8) << h.count << std::setprecision(1) << std::setw(12)
           << h.downwind_pct << std::setw(10) << h.upwind_pct << '\n';
    }
    return os.str();
}

void export_matrices(const std::filesystem::path& dir, const EvalReport& r, std::span<const float> preds,
                     std::span<const float> labels, std::size_t points) {
    const std::size_t n = r.sorted_rows.size();
    require(preds.size() == n * points && labels.size() == n * points, ErrorKind::shape,
            "matrices do not match the report");
    std::filesystem::create_directories(dir);
    std::vector<float> p(n * points), l(n * points);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t row = r.sorted_rows[k];
        std::copy_n(preds.begin() + static_cast<long>(row * points), points, p.begin() + static_cast<long>(k * points));
        std::copy_n(labels.begin() + static_cast<long>(row * points), points, l.begin() + static_cast<long>(k * points));
    }
    Container c;
    c.meta = json{{"kind", "grid"},
                  {"rows", "samples by descending downwind score"},
                  {"columns", "range 10..4000 km, 10 km step"},
                  {"sorted_rows", r.sorted_rows}};
    c.add("pred", {n, points}, p);
    c.add("label", {n, points}, l);
    write_container(dir / "matrices.itl", c);

    auto csv = [&](const std::filesystem::path& path, const std::vector<float>& m) {
        std::ofstream out(path);
        require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
        out << std::setprecision(9);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j < points; ++j) out << (j ? "," : "") << m[k * points + j];
            out << '\n';
        }
    };
    csv(dir / "pred_sorted.csv", p);
    csv(dir / "label_sorted.csv", l);
}

}  // namespace infratl::eval
