#include "infratl/pe_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "infratl/error.hpp"

namespace infratl::pe {

namespace {

constexpr double kPi = std::numbers::pi;

// Column values of the slice (1000 levels) resampled onto the PE grid.
// Linear in z, held above the top level.
std::vector<double> resample_column(const atmos::AtmosphericSlice& slice, std::size_t column,
                                    const PEGrid& grid) {
    std::vector<double> out(grid.nz);
    const double step_m = atmos::kLevelStepKm * 1000.0;
    for (std::size_t i = 0; i < grid.nz; ++i) {
        const double x = grid.z(i) / step_m;
        const auto lo = static_cast<std::size_t>(x);
        if (lo + 1 >= atmos::kLevels) {
            out[i] = slice.ratio(atmos::kLevels - 1, column);
            continue;
        }
        const double t = x - static_cast<double>(lo);
        out[i] = (1.0 - t) * slice.ratio(lo, column) + t * slice.ratio(lo + 1, column);
    }
    return out;
}

bool all_finite(const ComplexFieldColumn& u) {
    for (const auto& v : u) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

}  // namespace

double AbsorptionModel::density(double z_m) const {
    return stratified ? rho_ground * std::exp(-z_m / scale_height_m) : rho_ground;
}

double AbsorptionModel::half_inverse_scale_height() const {
    return stratified ? 0.5 / scale_height_m : 0.0;
}

double AbsorptionModel::lumped_constant_default() {
    constexpr double mu = 1.846e-5;      // shear viscosity, Pa s
    constexpr double kappa = 0.02624;    // thermal conductivity, W/(m K)
    constexpr double cp = 1005.0;        // J/(kg K)
    constexpr double gamma = 1.4;
    constexpr double mu_rot = 0.6 * mu;  // rotational bulk viscosity
    return 2.0 * kPi * kPi * (4.0 / 3.0 * mu + (gamma - 1.0) * kappa / cp + mu_rot);
}

double absorption_coefficient(double z_m, double f_hz, const AbsorptionModel& model) {
    return absorption_coefficient(z_m, f_hz, model.reference_sound_speed, model);
}

double absorption_coefficient(double z_m, double f_hz, double sound_speed,
                              const AbsorptionModel& model) {
    require(z_m >= 0.0, ErrorKind::domain, "absorption altitude must be >= 0");
    require(f_hz > 0.0, ErrorKind::domain, "absorption frequency must be positive");
    require(sound_speed > 0.0, ErrorKind::domain, "sound speed must be positive");
    if (!model.enabled) return 0.0;
    const double c3 = sound_speed * sound_speed * sound_speed;
    return model.lumped_constant * f_hz * f_hz / (model.density(z_m) * c3);
}

void PEConfig::validate() const {
    require(dz_m >= 0.0 && dr_m >= 0.0, ErrorKind::config, "dz and dr must be >= 0 (0 = default)");
    require(z_max_m > 0.0, ErrorKind::config, "z_max must be positive");
    require(sponge_depth_m >= 0.0 && sponge_depth_m < z_max_m, ErrorKind::config,
            "sponge depth must be in [0, z_max)");
    require(sponge_peak >= 0.0, ErrorKind::config, "sponge peak must be >= 0");
    require(pade_order >= 1, ErrorKind::config, "Padé order must be >= 1");
    require(pade_rotation >= 0.0 && pade_rotation < 1.5, ErrorKind::config,
            "Padé rotation must be in [0, 1.5) rad");
    require(source_alt_m >= 0.0, ErrorKind::config, "source altitude must be >= 0");
    require(starter_width > 0.0, ErrorKind::config, "starter width must be positive");
    require(starter_amplitude != 0.0 && std::isfinite(starter_amplitude), ErrorKind::config,
            "starter amplitude must be finite and nonzero");
    require(range_update_m > 0.0, ErrorKind::config, "range update interval must be positive");
    require(absorption.rho_ground > 0.0 && absorption.scale_height_m > 0.0, ErrorKind::config,
            "density profile parameters must be positive");
    require(absorption.lumped_constant >= 0.0, ErrorKind::config,
            "absorption constant must be >= 0");
    require(absorption.reference_sound_speed > 0.0, ErrorKind::config,
            "reference sound speed must be positive");
}

void to_json(json& j, const PEConfig& c) {
    j = json{{"dz", c.dz_m},
             {"dr", c.dr_m},
             {"z_max", c.z_max_m},
             {"sponge", {{"enabled", c.sponge_enabled}, {"depth", c.sponge_depth_m}, {"peak", c.sponge_peak}}},
             {"pade_order", c.pade_order},
             {"pade_rotation", c.pade_rotation},
             {"source_alt", c.source_alt_m},
             {"starter_width", c.starter_width},
             {"starter_amplitude", c.starter_amplitude},
             {"range_update", c.range_update_m},
             {"absorption",
              {{"enabled", c.absorption.enabled},
               {"constant", c.absorption.lumped_constant},
               {"rho_ground", c.absorption.rho_ground},
               {"scale_height", c.absorption.scale_height_m},
               {"stratified", c.absorption.stratified},
               {"reference_sound_speed", c.absorption.reference_sound_speed}}}};
}

void from_json(const json& j, PEConfig& c) {
    const PEConfig d;
    try {
        c.dz_m = j.value("dz", d.dz_m);
        c.dr_m = j.value("dr", d.dr_m);
        c.z_max_m = j.value("z_max", d.z_max_m);
        const json sponge = j.value("sponge", json::object());
        c.sponge_enabled = sponge.value("enabled", d.sponge_enabled);
        c.sponge_depth_m = sponge.value("depth", d.sponge_depth_m);
        c.sponge_peak = sponge.value("peak", d.sponge_peak);
        c.pade_order = j.value("pade_order", d.pade_order);
        c.pade_rotation = j.value("pade_rotation", d.pade_rotation);
        c.source_alt_m = j.value("source_alt", d.source_alt_m);
        c.starter_width = j.value("starter_width", d.starter_width);
        c.starter_amplitude = j.value("starter_amplitude", d.starter_amplitude);
        c.range_update_m = j.value("range_update", d.range_update_m);
        const json abs = j.value("absorption", json::object());
        c.absorption.enabled = abs.value("enabled", d.absorption.enabled);
        c.absorption.lumped_constant = abs.value("constant", d.absorption.lumped_constant);
        c.absorption.rho_ground = abs.value("rho_ground", d.absorption.rho_ground);
        c.absorption.scale_height_m = abs.value("scale_height", d.absorption.scale_height_m);
        c.absorption.stratified = abs.value("stratified", d.absorption.stratified);
        c.absorption.reference_sound_speed =
            abs.value("reference_sound_speed", d.absorption.reference_sound_speed);
    } catch (const json::exception& e) {
        fail(ErrorKind::config, std::string("solver config: ") + e.what());
    }
    c.validate();
}

PEGrid make_grid(const PEConfig& config, double f_hz, double c_ground, double r_max_m) {
    config.validate();
    require(f_hz > 0.0 && std::isfinite(f_hz), ErrorKind::domain, "frequency must be positive");
    require(c_ground > 0.0, ErrorKind::domain, "ground sound speed must be positive");
    require(r_max_m >= kTLSpacingM, ErrorKind::domain, "r_max must be at least 10 km");

    PEGrid g;
    g.f = f_hz;
    g.c_ground = c_ground;
    g.k0 = 2.0 * kPi * f_hz / c_ground;
    const double lambda = g.wavelength();
    g.dz = config.dz_m > 0.0 ? config.dz_m : lambda / kDefaultPointsPerWavelength;
    if (g.dz > lambda / 10.0 * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "dz = " << g.dz << " m does not resolve the wavelength " << lambda
           << " m (need dz <= lambda / 10)";
        fail(ErrorKind::precondition, os.str());
    }
    const double dr_request = config.dr_m > 0.0 ? config.dr_m : 10.0 * g.dz;
    require(dr_request <= 20.0 * g.dz * (1.0 + 1e-9), ErrorKind::precondition,
            "dr must be <= 20 dz");
    g.steps_per_mark = static_cast<std::size_t>(std::ceil(kTLSpacingM / dr_request - 1e-9));
    g.dr = kTLSpacingM / static_cast<double>(g.steps_per_mark);

    const double needed_top = 120'000.0 + (config.sponge_enabled ? config.sponge_depth_m : 0.0);
    require(config.z_max_m >= needed_top - 1e-6, ErrorKind::precondition,
            "z_max must cover 120 km plus the sponge");
    g.z_max = config.z_max_m;
    g.nz = static_cast<std::size_t>(std::floor(g.z_max / g.dz)) + 1;
    g.r_max = r_max_m;
    return g;
}

ComplexFieldColumn starter_field(const PEGrid& grid, double source_alt_m, double width_over_k0,
                                 double amplitude) {
    require(source_alt_m >= 0.0 && source_alt_m <= grid.z_max, ErrorKind::domain,
            "source altitude outside the grid");
    const double w = width_over_k0 / grid.k0;
    // Far-field equivalent of a unit point source: the z-integral of the
    // starter (with image) is 2 sqrt(2 pi / k0).
    const double gain = amplitude * std::sqrt(2.0) / (w * std::sqrt(grid.k0));
    ComplexFieldColumn u(grid.nz);
    for (std::size_t i = 0; i < grid.nz; ++i) {
        const double z = grid.z(i);
        const double a = (z - source_alt_m) / w;
        const double b = (z + source_alt_m) / w;
        u[i] = gain * (std::exp(-a * a) + std::exp(-b * b));
    }
    return u;
}

double starter_norm_squared(const PEGrid& grid, double source_alt_m, double width_over_k0,
                            double amplitude) {
    const double w = width_over_k0 / grid.k0;
    const double gain = amplitude * std::sqrt(2.0) / (w * std::sqrt(grid.k0));
    const double zs = source_alt_m;
    return gain * gain * w * std::sqrt(kPi / 2.0) * (1.0 + std::exp(-2.0 * zs * zs / (w * w)));
}

double lloyds_mirror_tl(double r_m, double z_src_m, double z_rcv_m, double f_hz, double c) {
    require(r_m > 0.0, ErrorKind::domain, "range must be positive");
    require(f_hz > 0.0 && c > 0.0, ErrorKind::domain, "frequency and sound speed must be positive");
    require(z_src_m >= 0.0 && z_rcv_m >= 0.0, ErrorKind::domain, "heights must be >= 0");
    const double k = 2.0 * kPi * f_hz / c;
    const double r1 = std::hypot(r_m, z_rcv_m - z_src_m);
    const double r2 = std::hypot(r_m, z_rcv_m + z_src_m);
    const cplx p = std::polar(1.0 / r1, k * r1) + std::polar(1.0 / r2, k * r2);
    return 20.0 * std::log10(std::abs(p) / 2e-3);
}

Marcher::Marcher(const atmos::AtmosphericSlice& slice, double f_hz, const PEConfig& config,
                 double r_max_m)
    : grid_(make_grid(config, f_hz, slice.c_ground, r_max_m)), config_(config) {
    require(slice.c_ratio.size() == atmos::kLevels * atmos::kColumns, ErrorKind::shape,
            "slice must hold 1000 x 40 ratios");
    for (float v : slice.c_ratio) {
        require(std::isfinite(v) && v > 0.0f, ErrorKind::domain, "slice ratios must be finite and positive");
    }
    require(config.source_alt_m <= grid_.z_max - config.sponge_depth_m, ErrorKind::domain,
            "source altitude must be below the sponge");

    pade_ = rotated_pade_coefficients(config.pade_order, grid_.k0 * grid_.dr, config.pade_rotation);

    const std::size_t nz = grid_.nz;
    ratio_columns_.reserve(atmos::kColumns);
    alpha_columns_.reserve(atmos::kColumns);
    for (std::size_t j = 0; j < atmos::kColumns; ++j) {
        auto ratio = resample_column(slice, j, grid_);
        std::vector<double> alpha(nz);
        for (std::size_t i = 0; i < nz; ++i) {
            alpha[i] = absorption_coefficient(grid_.z(i), f_hz, ratio[i] * grid_.c_ground,
                                              config.absorption);
        }
        ratio_columns_.push_back(std::move(ratio));
        alpha_columns_.push_back(std::move(alpha));
    }
    range_independent_ = true;
    for (std::size_t j = 1; j < atmos::kColumns && range_independent_; ++j) {
        range_independent_ = ratio_columns_[j] == ratio_columns_[0];
    }

    sponge_.assign(nz, 0.0);
    if (config.sponge_enabled && config.sponge_depth_m > 0.0) {
        const double start = grid_.z_max - config.sponge_depth_m;
        for (std::size_t i = 0; i < nz; ++i) {
            const double z = grid_.z(i);
            if (z > start) {
                const double s = (z - start) / config.sponge_depth_m;
                sponge_[i] = config.sponge_peak * s * s;
            }
        }
    }

    // Compact fourth-order mass matrix; row 0 carries the rigid-ground ghost
    // point and is halved to keep the system symmetric.
    const double gamma = config.absorption.half_inverse_scale_height();
    const double dz = grid_.dz;
    mass_.diag.assign(nz, 10.0 / 12.0);
    mass_.lower.assign(nz - 1, 1.0 / 12.0);
    mass_.upper.assign(nz - 1, 1.0 / 12.0);
    mass_.diag[0] = (5.0 - gamma * dz) / 12.0;

    numerators_.resize(static_cast<std::size_t>(config.pade_order));
    denominators_.resize(static_cast<std::size_t>(config.pade_order));
    steps_per_update_ = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.range_update_m / grid_.dr)));

    field_ = starter_field(grid_, config.source_alt_m, config.starter_width,
                           config.starter_amplitude);
    scratch_.resize(nz);

    // Far-field ground amplitude of the starter relative to a unit source.
    double integral = 0.5 * field_[0].real();
    for (std::size_t i = 1; i < nz; ++i) integral += field_[i].real();
    integral *= 2.0 * dz;
    const double unit = 2.0 * std::sqrt(2.0 * kPi / grid_.k0);
    reference_ = 2e-3 * std::abs(integral) / unit;
}

void Marcher::refresh_operator(double range_m) {
    const std::size_t nz = grid_.nz;
    const double k0 = grid_.k0;
    const double dz = grid_.dz;
    const double gamma = config_.absorption.half_inverse_scale_height();

    const double x = std::max(0.0, range_m) / (atmos::kColumnSpacingKm * 1000.0);
    std::size_t lo = static_cast<std::size_t>(x);
    double t = x - static_cast<double>(lo);
    if (lo + 1 >= atmos::kColumns) {
        lo = atmos::kColumns - 1;
        t = 0.0;
    }
    const std::size_t hi = std::min(lo + 1, atmos::kColumns - 1);

    std::vector<cplx> potential(nz);
    const double density_term = gamma * gamma / (k0 * k0);
    for (std::size_t i = 0; i < nz; ++i) {
        const double ratio = (1.0 - t) * ratio_columns_[lo][i] + t * ratio_columns_[hi][i];
        const double alpha = (1.0 - t) * alpha_columns_[lo][i] + t * alpha_columns_[hi][i];
        const cplx n(1.0 / ratio, alpha / k0 + sponge_[i]);
        potential[i] = n * n - 1.0 - density_term;
    }

    const double scale = 1.0 / (k0 * k0 * dz * dz);
    Tridiagonal<cplx> K;
    K.resize(nz);
    for (std::size_t i = 0; i < nz; ++i) {
        const double d = i == 0 ? -1.0 - gamma * dz : -2.0;
        K.diag[i] = d * scale + mass_.diag[i] * potential[i];
    }
    for (std::size_t i = 0; i + 1 < nz; ++i) {
        K.upper[i] = scale + mass_.upper[i] * 0.5 * (potential[i] + potential[i + 1]);
        K.lower[i] = K.upper[i];
    }

    Tridiagonal<cplx> den;
    den.resize(nz);
    for (std::size_t j = 0; j < numerators_.size(); ++j) {
        auto& num = numerators_[j];
        num.resize(nz);
        const cplx a = pade_.a[j];
        const cplx b = pade_.b[j];
        for (std::size_t i = 0; i < nz; ++i) {
            num.diag[i] = mass_.diag[i] + a * K.diag[i];
            den.diag[i] = mass_.diag[i] + b * K.diag[i];
        }
        for (std::size_t i = 0; i + 1 < nz; ++i) {
            num.upper[i] = mass_.upper[i] + a * K.upper[i];
            num.lower[i] = mass_.lower[i] + a * K.lower[i];
            den.upper[i] = mass_.upper[i] + b * K.upper[i];
            den.lower[i] = mass_.lower[i] + b * K.lower[i];
        }
        denominators_[j].factor(den);
    }
}

void Marcher::step() {
    if (steps_ % steps_per_update_ == 0 && (steps_ == 0 || !range_independent_)) {
        // Medium sampled at the middle of the coming update interval.
        const double mid = (static_cast<double>(steps_) + 0.5 * static_cast<double>(steps_per_update_)) * grid_.dr;
        refresh_operator(mid);
    }
    for (std::size_t j = 0; j < numerators_.size(); ++j) {
        numerators_[j].multiply(field_, scratch_);
        denominators_[j].solve(scratch_);
        field_.swap(scratch_);
    }
    if (pade_.scale != 1.0) {
        for (auto& v : field_) v *= pade_.scale;
    }
    ++steps_;
    range_ = static_cast<double>(steps_) * grid_.dr;
}

double Marcher::energy() const {
    std::vector<double> re(field_.size());
    std::vector<double> im(field_.size());
    std::vector<double> mre(field_.size());
    std::vector<double> mim(field_.size());
    for (std::size_t i = 0; i < field_.size(); ++i) {
        re[i] = field_[i].real();
        im[i] = field_[i].imag();
    }
    mass_.multiply(re, mre);
    mass_.multiply(im, mim);
    double e = 0.0;
    for (std::size_t i = 0; i < field_.size(); ++i) e += re[i] * mre[i] + im[i] * mim[i];
    return e * grid_.dz;
}

double Marcher::ground_tl() const {
    require(range_ > 0.0, ErrorKind::precondition, "TL is undefined at range 0");
    return 20.0 * std::log10(std::abs(field_[0]) / std::sqrt(range_) / reference_);
}

std::vector<double> march_ground_tl(const atmos::AtmosphericSlice& slice, double f_hz,
                                    const PEConfig& config, double r_max_m) {
    const double marks_d = r_max_m / kTLSpacingM;
    const auto marks = static_cast<std::size_t>(std::llround(marks_d));
    require(marks >= 1 && std::abs(marks_d - static_cast<double>(marks)) < 1e-9, ErrorKind::domain,
            "r_max must be a positive multiple of 10 km");
    Marcher m(slice, f_hz, config, r_max_m);
    std::vector<double> tl;
    tl.reserve(marks);
    for (std::size_t k = 0; k < marks; ++k) {
        for (std::size_t s = 0; s < m.grid().steps_per_mark; ++s) m.step();
        if (!all_finite(m.field())) {
            std::ostringstream os;
            os << "PE field blew up before " << m.range() / 1000.0 << " km (last finite mark "
               << static_cast<double>(k) * 10.0 << " km)";
            fail(ErrorKind::numerical, os.str());
        }
        const double value = m.ground_tl();
        if (!std::isfinite(value)) {
            std::ostringstream os;
            os << "non-finite TL at " << m.range() / 1000.0 << " km";
            fail(ErrorKind::numerical, os.str());
        }
        tl.push_back(value);
    }
    return tl;
}

TLCurve march(const atmos::AtmosphericSlice& slice, double f_hz, const PEConfig& config) {
    TLCurve out;
    out.f = f_hz;
    out.values = march_ground_tl(slice, f_hz, config, kTLSpacingM * static_cast<double>(kTLPoints));
    return out;
}

Container tl_to_container(const TLCurve& tl, const PEConfig& config) {
    require(tl.values.size() == kTLPoints, ErrorKind::shape, "TL curve must have 400 values");
    Container c;
    c.meta["kind"] = "tl";
    c.meta["f"] = tl.f;
    c.meta["reference"] = tl.reference;
    c.meta["convention"] = "dB re free-field amplitude at 1 km; ranges 10..4000 km step 10 km";
    c.meta["solver"] = config;
    c.add("tl", {kTLPoints}, std::vector<float>(tl.values.begin(), tl.values.end()));
    return c;
}

TLCurve tl_from_container(const Container& c) {
    const auto& f = c.field("tl");
    require(f.shape == std::vector<std::size_t>{kTLPoints}, ErrorKind::shape,
            "TL field must have shape [400]");
    TLCurve tl;
    tl.values.assign(f.data.begin(), f.data.end());
    tl.f = c.meta.value("f", 0.0);
    tl.reference = c.meta.value("reference", tl.reference);
    return tl;
}

void save_tl(const std::filesystem::path& path, const TLCurve& tl, const PEConfig& config) {
    write_container(path, tl_to_container(tl, config));
}

TLCurve load_tl(const std::filesystem::path& path) {
    return tl_from_container(read_container(path));
}

}  // namespace infratl::pe
