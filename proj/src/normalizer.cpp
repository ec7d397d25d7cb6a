#include "infratl/normalizer.hpp"

#include <cmath>

namespace infratl::data {

void Normalizer::validate() const {
    for (double s : {input_std, label_std, freq_std}) {
        require(std::isfinite(s) && s > 0.0, ErrorKind::numerical, "normalizer std must be positive");
    }
}

void to_json(json& j, const Normalizer& n) {
    j = json{{"input_mean", n.input_mean}, {"input_std", n.input_std}, {"label_mean", n.label_mean},
             {"label_std", n.label_std},   {"freq_mean", n.freq_mean}, {"freq_std", n.freq_std},
             {"fitted_on", n.fitted_on}};
}

void from_json(const json& j, Normalizer& n) {
    try {
        n.input_mean = j.at("input_mean").get<double>();
        n.input_std = j.at("input_std").get<double>();
        n.label_mean = j.at("label_mean").get<double>();
        n.label_std = j.at("label_std").get<double>();
        n.freq_mean = j.at("freq_mean").get<double>();
        n.freq_std = j.at("freq_std").get<double>();
        n.fitted_on = j.value("fitted_on", std::string());
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("normalizer: ") + e.what());
    }
    n.validate();
}

}  // namespace infratl::data
