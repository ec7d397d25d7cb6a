#include "infratl/map.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <thread>

#include "infratl/dataset.hpp"

namespace infratl::mapping {

const char* to_string(Engine e) { return e == Engine::cnn ? "cnn" : "pe"; }

Engine engine_from_string(const std::string& s) {
    if (s == "cnn") return Engine::cnn;
    if (s == "pe") return Engine::pe;
    fail(ErrorKind::config, "engine must be 'cnn' or 'pe', got '" + s + "'");
}

std::vector<double> map_azimuths(std::size_t n) {
    require(n >= 1, ErrorKind::domain, "need at least one azimuth");
    std::vector<double> az(n);
    for (std::size_t k = 0; k < n; ++k) az[k] = 360.0 * static_cast<double>(k) / static_cast<double>(n);
    return az;
}

namespace {

std::size_t range_points(double radius_km) {
    require(radius_km >= 10.0 && radius_km <= atmos::kSliceLengthKm, ErrorKind::domain,
            "radius must lie in [10, 4000] km");
    const double n = radius_km / 10.0;
    require(std::abs(n - std::round(n)) < 1e-9, ErrorKind::domain, "radius must be a multiple of 10 km");
    return static_cast<std::size_t>(std::lround(n));
}

}  // namespace

MapGrid build_pe_map(const MapOptions& o) {
    MapGrid g;
    g.frequency = o.frequency;
    g.engine = Engine::pe;
    g.radius_km = o.radius_km;
    g.azimuths_deg = map_azimuths(o.n_azimuths);
    const std::size_t nr = range_points(o.radius_km);
    g.values.assign(o.n_azimuths * nr, 0.0f);
    std::vector<std::exception_ptr> errors(o.n_azimuths);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < o.n_azimuths; k = next++) {
            try {
                const auto slice = atmos::build_slice(o.climatology, o.gravity_waves, g.azimuths_deg[k]);
                const auto tl = pe::march_ground_tl(slice, o.frequency, o.pe_config, o.radius_km * 1000.0);
                for (std::size_t r = 0; r < nr; ++r) g.values[k * nr + r] = static_cast<float>(tl[r]);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min(data::resolve_workers(o.workers), o.n_azimuths);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return g;
}

MapGrid build_cnn_map(const MapOptions& o, const nn::Checkpoint& checkpoint) {
    MapGrid g;
    g.frequency = o.frequency;
    g.engine = Engine::cnn;
    g.radius_km = o.radius_km;
    g.azimuths_deg = map_azimuths(o.n_azimuths);
    const std::size_t nr = range_points(o.radius_km);
    auto model = nn::model_from_checkpoint<float>(checkpoint);
    const auto& norm = checkpoint.normalizer;
    const std::size_t per = atmos::kLevels * atmos::kColumns;
    nn::Tensor<float> images({o.n_azimuths, atmos::kLevels, atmos::kColumns, 1});
    std::vector<float> freqs(o.n_azimuths, static_cast<float>(norm.apply_freq(o.frequency)));
    for (std::size_t k = 0; k < o.n_azimuths; ++k) {
        const auto slice = atmos::build_slice(o.climatology, o.gravity_waves, g.azimuths_deg[k]);
        const auto img = data::slice_image(slice, norm);
        std::copy_n(img.ptr(), per, images.ptr() + k * per);
    }
    const auto pred = model.predict(images, freqs);
    const std::size_t out = pred.dim(1);
    require(nr <= out, ErrorKind::shape, "radius exceeds the model output range");
    g.values.resize(o.n_azimuths * nr);
    for (std::size_t k = 0; k < o.n_azimuths; ++k) {
        for (std::size_t r = 0; r < nr; ++r) {
            g.values[k * nr + r] = static_cast<float>(norm.invert_label(pred.data[k * out + r]));
        }
    }
    return g;
}

Container map_to_container(const MapGrid& g, const json& provenance) {
    Container c;
    c.meta = json{{"kind", "map"},
                  {"frequency", g.frequency},
                  {"engine", to_string(g.engine)},
                  {"radius_km", g.radius_km},
                  {"range_step_km", 10.0},
                  {"azimuths_deg", g.azimuths_deg},
                  {"provenance", provenance}};
    c.add("tl", {g.n_azimuths(), g.n_ranges()}, g.values);
    return c;
}

void save_map(const std::filesystem::path& dir, const MapGrid& g, const json& provenance) {
    std::filesystem::create_directories(dir);
    write_container(dir / "map.itl", map_to_container(g, provenance));
    std::ofstream out(dir / "map.csv");
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + (dir / "map.csv").string());
    out << "azimuth_deg";
    for (std::size_t r = 0; r < g.n_ranges(); ++r) out << ",r" << 10 * (r + 1) << "km";
    out << '\n' << std::setprecision(9);
    for (std::size_t k = 0; k < g.n_azimuths(); ++k) {
        out << g.azimuths_deg[k];
        for (std::size_t r = 0; r < g.n_ranges(); ++r) out << ',' << g.at(k, r);
        out << '\n';
    }
}

}  // namespace infratl::mapping
