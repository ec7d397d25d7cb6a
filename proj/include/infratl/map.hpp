#pragma once

// Polar ground-TL maps around a source: one slice per azimuth, simulated with
// the PE or predicted with a trained checkpoint.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "infratl/atmosphere.hpp"
#include "infratl/nn/model.hpp"
#include "infratl/pe_solver.hpp"

namespace infratl::mapping {

enum class Engine { cnn, pe };

const char* to_string(Engine e);
Engine engine_from_string(const std::string& s);

struct MapOptions {
    atmos::ClimatologySpec climatology;
    atmos::GravityWaveSpec gravity_waves;
    double frequency = 0.5;
    Engine engine = Engine::pe;
    std::size_t n_azimuths = 72;
    double radius_km = 2000.0;
    std::size_t workers = 0;
    pe::PEConfig pe_config;
    double source_lat = 0.0;  // abstract origin, recorded only
    double source_lon = 0.0;
};

struct MapGrid {
    double frequency = 0.0;
    Engine engine = Engine::pe;
    double radius_km = 0.0;
    std::vector<double> azimuths_deg;
    std::vector<float> values;  // [azimuth][range], 10 km step starting at 10 km

    std::size_t n_azimuths() const { return azimuths_deg.size(); }
    std::size_t n_ranges() const { return n_azimuths() ? values.size() / n_azimuths() : 0; }
    float at(std::size_t az, std::size_t r) const { return values[az * n_ranges() + r]; }
};

/// Azimuth k of n: 360 k / n degrees.
std::vector<double> map_azimuths(std::size_t n);

/// PE engine: marches each azimuth to radius_km.
MapGrid build_pe_map(const MapOptions& options);

/// CNN engine: predicts the full 4000 km curve per azimuth and crops it.
MapGrid build_cnn_map(const MapOptions& options, const nn::Checkpoint& checkpoint);

Container map_to_container(const MapGrid& g, const json& provenance);
void save_map(const std::filesystem::path& dir, const MapGrid& g, const json& provenance);

}  // namespace infratl::mapping
