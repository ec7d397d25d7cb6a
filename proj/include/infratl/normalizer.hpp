#pragma once

#include <string>

#include "infratl/container.hpp"
#include "infratl/error.hpp"

namespace infratl::data {

/// Scalar z-score statistics for the three network inputs/outputs.
struct Normalizer {
    double input_mean = 0.0;
    double input_std = 1.0;
    double label_mean = 0.0;
    double label_std = 1.0;
    double freq_mean = 0.0;
    double freq_std = 1.0;
    std::string fitted_on;  // split identifier

    double apply_input(double v) const { return (v - input_mean) / input_std; }
    double apply_label(double v) const { return (v - label_mean) / label_std; }
    double apply_freq(double v) const { return (v - freq_mean) / freq_std; }
    double invert_label(double v) const { return v * label_std + label_mean; }
    double invert_input(double v) const { return v * input_std + input_mean; }
    double invert_freq(double v) const { return v * freq_std + freq_mean; }

    void validate() const;
};

void to_json(json& j, const Normalizer& n);
void from_json(const json& j, Normalizer& n);

}  // namespace infratl::data
