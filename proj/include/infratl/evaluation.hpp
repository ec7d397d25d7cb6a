#pragma once

// Test-set error statistics: per-sample mean RMSE over the 400 ranges,
// grouped into 12 frequency bands, histogrammed in 2.5 dB classes and split
// by downwind/upwind propagation.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "infratl/container.hpp"

namespace infratl::eval {

struct FrequencyBand {
    std::string label;
    double f_low = 0.0;   // Hz, inclusive
    double f_high = 0.0;  // Hz, inclusive
};

/// 0.1 | 0.2 | 0.3 | 0.4 | 0.5 | 0.6-0.7 | 0.8-0.9 | 1.0-1.1 | 1.2-1.5 |
/// 1.6-1.9 | 2.0-2.4 | 2.5-3.2
const std::vector<FrequencyBand>& frequency_bands();

/// Band of f after rounding to the 0.1 Hz grid. Throws ErrorKind::domain
/// outside [0.1, 3.2] Hz.
std::size_t band_index(double f_hz);

/// sqrt(mean of squared dB differences).
double sample_rmse_db(std::span<const float> pred, std::span<const float> label);

/// Linear interpolation between order statistics of sorted data
/// (h = (n - 1) p).
double quantile_sorted(std::span<const double> sorted, double p);

inline constexpr double kHistogramBinDb = 2.5;

struct BandStats {
    std::string label;
    std::size_t count = 0;
    double q1 = 0.0;  // NaN for empty bands
    double mean = 0.0;
    double q3 = 0.0;
};

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double downwind_pct = 0.0;  // share of the bin's samples
    double upwind_pct = 0.0;
};

struct EvalReport {
    std::vector<BandStats> bands;
    double overall_mean = 0.0;
    std::vector<HistogramBin> histogram;
    std::vector<double> errors;            // per-sample mean RMSE, input order
    std::vector<std::size_t> sorted_rows;  // input rows by descending downwind score
};

/// preds, labels: [N][points] flattened. Downwind when score >= 1.
EvalReport report(std::span<const float> preds, std::span<const float> labels, std::size_t points,
                  std::span<const double> freqs, std::span<const double> downwind_scores);

json to_json(const EvalReport& r);

/// Table with one column per band and rows count / q1 / mean / q3, then the
/// histogram.
std::string to_text(const EvalReport& r);

/// Writes matrices.itl ("pred" and "label", rows in sorted order) plus
/// pred_sorted.csv and label_sorted.csv.
void export_matrices(const std::filesystem::path& dir, const EvalReport& r, std::span<const float> preds,
                     std::span<const float> labels, std::size_t points);

}  // namespace infratl::eval
