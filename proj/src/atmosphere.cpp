#include "infratl/atmosphere.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "infratl/error.hpp"
#include "infratl/rng.hpp"

namespace infratl::atmos {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kWalkStepKm = 100.0;

// Monotone piecewise-cubic Hermite interpolation (Fritsch-Carlson slopes).
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)), d_(x_.size()) {
        const std::size_t n = x_.size();
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        d_[0] = delta[0];
        d_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                const double h0 = x_[i] - x_[i - 1];
                const double h1 = x_[i + 1] - x_[i];
                const double w1 = 2.0 * h1 + h0;
                const double w2 = h1 + 2.0 * h0;
                d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
    }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front() + d_.front() * (x - x_.front());
        if (x >= x_.back()) return y_.back() + d_.back() * (x - x_.back());
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * y_[i] + (t3 - 2 * t2 + t) * h * d_[i] +
               (-2 * t3 + 3 * t2) * y_[i + 1] + (t3 - t2) * h * d_[i + 1];
    }

private:
    std::vector<double> x_, y_, d_;
};

double gaussian(double z, double center, double width) {
    const double u = (z - center) / width;
    return std::exp(-u * u);
}

void require_same_grid(const VerticalProfile& a, const VerticalProfile& b) {
    require(a.size() == b.size(), ErrorKind::shape, "profile grids differ in length");
    for (std::size_t i = 0; i < a.size(); ++i) {
        require(a.z_km[i] == b.z_km[i], ErrorKind::shape, "profile altitude grids differ");
    }
}

}  // namespace

VerticalProfile VerticalProfile::standard_grid() {
    VerticalProfile p;
    p.z_km.resize(kLevels);
    for (std::size_t i = 0; i < kLevels; ++i) p.z_km[i] = level_altitude_km(i);
    p.T.assign(kLevels, 0.0);
    p.U.assign(kLevels, 0.0);
    p.V.assign(kLevels, 0.0);
    return p;
}

void VerticalProfile::validate() const {
    const std::size_t n = z_km.size();
    require(n >= 2, ErrorKind::shape, "profile needs at least two levels");
    require(T.size() == n && U.size() == n && V.size() == n, ErrorKind::shape,
            "profile fields differ in length from the altitude grid");
    const double step = z_km[1] - z_km[0];
    require(step > 0.0, ErrorKind::domain, "profile altitudes must increase");
    for (std::size_t i = 1; i < n; ++i) {
        const double d = z_km[i] - z_km[i - 1];
        require(d > 0.0 && std::abs(d - step) <= 1e-9 * std::max(1.0, z_km[i]), ErrorKind::domain,
                "profile altitude grid must be uniform and strictly increasing");
    }
    for (std::size_t i = 0; i < n; ++i) {
        require(T[i] > 0.0 && std::isfinite(T[i]), ErrorKind::domain,
                "temperature must be positive at z=" + std::to_string(z_km[i]) + " km");
        require(std::abs(U[i]) < kWindSanityBound && std::abs(V[i]) < kWindSanityBound,
                ErrorKind::domain, "wind exceeds sanity bound at z=" + std::to_string(z_km[i]));
    }
}

void ClimatologySpec::validate() const {
    require(ground_T > 0.0, ErrorKind::domain, "ground_T must be positive");
    require(strato_jet_alt >= 40.0 && strato_jet_alt <= 75.0, ErrorKind::domain,
            "strato_jet_alt must lie in [40, 75] km");
    require(strato_jet_width > 0.0, ErrorKind::domain, "strato_jet_width must be positive");
    require(ground_T - 11.0 * tropo_lapse > 100.0, ErrorKind::domain,
            "tropospheric lapse rate drives the tropopause below 100 K");
    require(ground_T - 100.0 > 50.0, ErrorKind::domain, "ground_T too low for mesopause");
}

void GravityWaveSpec::validate() const {
    require(n_modes >= 1, ErrorKind::domain, "n_modes must be >= 1");
    require(m_min > 0.0 && m_min < m_max, ErrorKind::domain, "need 0 < m_min < m_max");
    require(rms_at_20km >= 0.0, ErrorKind::domain, "rms_at_20km must be >= 0");
    require(growth_scale_H > 0.0, ErrorKind::domain, "growth_scale_H must be positive");
    require(saturation_cap >= 0.0, ErrorKind::domain, "saturation_cap must be >= 0");
    require(horizontal_corr_km > 0.0, ErrorKind::domain, "horizontal_corr_km must be positive");
}

void to_json(json& j, const ClimatologySpec& s) {
    j = json{{"ground_T", s.ground_T},
             {"tropo_lapse", s.tropo_lapse},
             {"strato_jet_amp", s.strato_jet_amp},
             {"strato_jet_alt", s.strato_jet_alt},
             {"strato_jet_width", s.strato_jet_width},
             {"tropo_jet_amp", s.tropo_jet_amp},
             {"thermo_rise_scale", s.thermo_rise_scale},
             {"meridional_amp", s.meridional_amp},
             {"range_trend", s.range_trend},
             {"rng_seed", s.rng_seed}};
}

void from_json(const json& j, ClimatologySpec& s) {
    const ClimatologySpec d;
    s.ground_T = j.value("ground_T", d.ground_T);
    s.tropo_lapse = j.value("tropo_lapse", d.tropo_lapse);
    s.strato_jet_amp = j.value("strato_jet_amp", d.strato_jet_amp);
    s.strato_jet_alt = j.value("strato_jet_alt", d.strato_jet_alt);
    s.strato_jet_width = j.value("strato_jet_width", d.strato_jet_width);
    s.tropo_jet_amp = j.value("tropo_jet_amp", d.tropo_jet_amp);
    s.thermo_rise_scale = j.value("thermo_rise_scale", d.thermo_rise_scale);
    s.meridional_amp = j.value("meridional_amp", d.meridional_amp);
    s.range_trend = j.value("range_trend", d.range_trend);
    s.rng_seed = j.value("rng_seed", d.rng_seed);
}

void to_json(json& j, const GravityWaveSpec& s) {
    j = json{{"n_modes", s.n_modes},
             {"m_min", s.m_min},
             {"m_max", s.m_max},
             {"spectral_slope", s.spectral_slope},
             {"rms_at_20km", s.rms_at_20km},
             {"growth_scale_H", s.growth_scale_H},
             {"saturation_cap", s.saturation_cap},
             {"horizontal_corr_km", s.horizontal_corr_km},
             {"rng_seed", s.rng_seed}};
}

void from_json(const json& j, GravityWaveSpec& s) {
    const GravityWaveSpec d;
    s.n_modes = j.value("n_modes", d.n_modes);
    s.m_min = j.value("m_min", d.m_min);
    s.m_max = j.value("m_max", d.m_max);
    s.spectral_slope = j.value("spectral_slope", d.spectral_slope);
    s.rms_at_20km = j.value("rms_at_20km", d.rms_at_20km);
    s.growth_scale_H = j.value("growth_scale_H", d.growth_scale_H);
    s.saturation_cap = j.value("saturation_cap", d.saturation_cap);
    s.horizontal_corr_km = j.value("horizontal_corr_km", d.horizontal_corr_km);
    s.rng_seed = j.value("rng_seed", d.rng_seed);
}

double adiabatic_sound_speed(double temperature_K) {
    require(temperature_K > 0.0, ErrorKind::domain, "temperature must be positive");
    return kReferenceSoundSpeed * std::sqrt(temperature_K / kReferenceTemperature);
}

double project_wind(double U, double V, double azimuth_deg) {
    const double az = azimuth_deg * kDegToRad;
    return U * std::sin(az) + V * std::cos(az);
}

double ground_effective_sound_speed(const VerticalProfile& p, double azimuth_deg) {
    require(p.size() > 0, ErrorKind::shape, "empty profile");
    return adiabatic_sound_speed(p.T[0]) + project_wind(p.U[0], p.V[0], azimuth_deg);
}

std::vector<double> effective_ratio_column(const VerticalProfile& p, double azimuth_deg,
                                           double c_ground) {
    require(c_ground > 0.0, ErrorKind::domain, "ground effective sound speed must be positive");
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double c_eff = adiabatic_sound_speed(p.T[i]) + project_wind(p.U[i], p.V[i], azimuth_deg);
        out[i] = c_eff / c_ground;
    }
    return out;
}

std::vector<double> effective_ratio_column(const VerticalProfile& p, double azimuth_deg) {
    return effective_ratio_column(p, azimuth_deg, ground_effective_sound_speed(p, azimuth_deg));
}

VerticalProfile blend_upper_atmosphere(const VerticalProfile& lower, const VerticalProfile& upper) {
    require_same_grid(lower, upper);
    VerticalProfile out = lower;
    const double width = kBlendHighKm - kBlendLowKm;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double z = out.z_km[i];
        if (z < kBlendLowKm) continue;
        if (z > kBlendHighKm) {
            out.T[i] = upper.T[i];
            out.U[i] = upper.U[i];
            out.V[i] = upper.V[i];
            continue;
        }
        // h(t) = 3t^2 - 2t^3 has zero slope at both ends, so the blend inherits
        // the derivative of `lower` at 75 km and of `upper` at 85 km.
        const double t = (z - kBlendLowKm) / width;
        const double w = t * t * (3.0 - 2.0 * t);
        out.T[i] = lower.T[i] + w * (upper.T[i] - lower.T[i]);
        out.U[i] = lower.U[i] + w * (upper.U[i] - lower.U[i]);
        out.V[i] = lower.V[i] + w * (upper.V[i] - lower.V[i]);
    }
    return out;
}

VerticalProfile synth_profile(const ClimatologySpec& spec, double range_km) {
    spec.validate();
    Rng rng = substream(spec.rng_seed, "climatology");
    const double phase_alt = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double phase_temp = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double phase_tide = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double tide_amp = uniform(rng, 10.0, 25.0);

    // Slow range wobbles that vanish at range 0.
    const double r = range_km;
    const double alt_shift =
        2.0 * (std::sin(2.0 * std::numbers::pi * r / 2500.0 + phase_alt) - std::sin(phase_alt));
    const double temp_shift =
        3.0 * (std::sin(2.0 * std::numbers::pi * r / 1800.0 + phase_temp) - std::sin(phase_temp));

    const double tg = spec.ground_T + temp_shift;
    const double t_tropopause = tg - 11.0 * spec.tropo_lapse;
    const double t_stratopause = tg - 18.0;
    const double t_lower_mesosphere = tg - 88.0;
    const double t_mesopause = tg - 100.0;

    // Lower part (valid to 80 km).
    const MonotoneCubic lower_T({0.0, 11.0, 20.0, 50.0, 80.0, 100.0},
                                {tg, t_tropopause, t_tropopause, t_stratopause,
                                 t_lower_mesosphere, t_lower_mesosphere - 25.0});
    // Upper part (valid from 75 km): mesopause near 88 km, then a
    // thermospheric rise.
    const MonotoneCubic upper_T(
        {60.0, 75.0, 88.0, 100.0, 130.0},
        {t_stratopause - 30.0, tg - 78.0, t_mesopause, t_mesopause + 6.0 * spec.thermo_rise_scale,
         t_mesopause + 36.0 * spec.thermo_rise_scale});

    const double jet_amp = spec.strato_jet_amp * (1.0 + spec.range_trend * range_km / 1000.0);
    const double jet_alt = spec.strato_jet_alt + alt_shift;

    VerticalProfile lower = VerticalProfile::standard_grid();
    VerticalProfile upper = VerticalProfile::standard_grid();
    for (std::size_t i = 0; i < kLevels; ++i) {
        const double z = lower.z_km[i];
        lower.T[i] = lower_T(z);
        lower.U[i] = jet_amp * gaussian(z, jet_alt, spec.strato_jet_width) +
                     spec.tropo_jet_amp * gaussian(z, 12.0, 4.0);
        lower.V[i] = spec.meridional_amp * gaussian(z, jet_alt + 5.0, spec.strato_jet_width);

        upper.T[i] = upper_T(z);
        // Tidal winds growing with altitude.
        const double grow = std::clamp((z - 75.0) / 45.0, 0.0, 1.0);
        upper.U[i] = tide_amp * grow * std::sin(2.0 * std::numbers::pi * (z - 75.0) / 25.0 + phase_tide);
        upper.V[i] = tide_amp * grow * std::cos(2.0 * std::numbers::pi * (z - 75.0) / 25.0 + phase_tide);
    }
    VerticalProfile out = blend_upper_atmosphere(lower, upper);
    out.validate();
    return out;
}

GravityWaveField::GravityWaveField(const GravityWaveSpec& spec) : spec_(spec) {
    spec_.validate();
    const auto n = static_cast<std::size_t>(spec_.n_modes);
    const double log_lo = std::log(spec_.m_min);
    const double log_hi = std::log(spec_.m_max);
    const double sigma = std::sqrt(2.0 * kWalkStepKm / spec_.horizontal_corr_km);

    auto draw = [&](std::string_view tag) {
        Rng rng = substream(spec_.rng_seed, tag);
        Modes modes;
        modes.m.resize(n);
        modes.a.resize(n);
        modes.phase0.resize(n);
        modes.step_sigma.assign(n, sigma);
        double power = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // Log-uniform wavenumbers: mode density ~ 1/m, so amplitude^2 ~
            // m^(slope+1) yields an ensemble spectrum ~ m^slope.
            modes.m[i] = std::exp(uniform(rng, log_lo, log_hi));
            modes.a[i] = std::sqrt(std::pow(modes.m[i], spec_.spectral_slope + 1.0));
            modes.phase0[i] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            power += 0.5 * modes.a[i] * modes.a[i];
        }
        const double norm = 1.0 / std::sqrt(power);
        for (double& a : modes.a) a *= norm;
        return modes;
    };
    u_modes_ = draw("gw-u");
    v_modes_ = draw("gw-v");
}

double GravityWaveField::envelope(double z_km) const {
    const double grown = spec_.rms_at_20km * std::exp((z_km - 20.0) / (2.0 * spec_.growth_scale_H));
    return std::min(grown, spec_.saturation_cap);
}

std::vector<double> GravityWaveField::phases_at(const Modes& modes, std::uint64_t stream,
                                                double range_km) const {
    std::vector<double> phase = modes.phase0;
    if (range_km <= 0.0) return phase;
    const double steps = range_km / kWalkStepKm;
    const auto whole = static_cast<std::uint64_t>(std::floor(steps));
    const double frac = steps - static_cast<double>(whole);
    for (std::uint64_t s = 0; s <= whole; ++s) {
        const double weight = (s < whole) ? 1.0 : frac;
        if (weight == 0.0) break;
        Rng rng = substream(spec_.rng_seed, "gw-walk", {stream, s});
        for (std::size_t i = 0; i < phase.size(); ++i) {
            phase[i] += weight * modes.step_sigma[i] * standard_normal(rng);
        }
    }
    return phase;
}

double GravityWaveField::pattern(const Modes& modes, const std::vector<double>& phase, double z_km,
                                 bool quadrature) {
    double sum = 0.0;
    for (std::size_t i = 0; i < modes.m.size(); ++i) {
        const double arg = modes.m[i] * z_km + phase[i];
        sum += modes.a[i] * (quadrature ? std::sin(arg) : std::cos(arg));
    }
    return sum;
}

void GravityWaveField::wind_perturbation(double range_km, std::span<const double> z_km,
                                         std::span<double> dU, std::span<double> dV) const {
    require(dU.size() == z_km.size() && dV.size() == z_km.size(), ErrorKind::shape,
            "perturbation buffers must match the altitude grid");
    const auto pu = phases_at(u_modes_, 0, range_km);
    const auto pv = phases_at(v_modes_, 1, range_km);
    for (std::size_t i = 0; i < z_km.size(); ++i) {
        const double env = envelope(z_km[i]);
        dU[i] = env * pattern(u_modes_, pu, z_km[i], false);
        dV[i] = env * pattern(v_modes_, pv, z_km[i], false);
    }
}

VerticalProfile GravityWaveField::apply(const VerticalProfile& p, double range_km) const {
    if (spec_.rms_at_20km == 0.0 || spec_.saturation_cap == 0.0) return p;
    VerticalProfile out = p;
    const auto pu = phases_at(u_modes_, 0, range_km);
    const auto pv = phases_at(v_modes_, 1, range_km);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double z = p.z_km[i];
        const double env = envelope(z);
        out.U[i] += env * pattern(u_modes_, pu, z, false);
        out.V[i] += env * pattern(v_modes_, pv, z, false);
        // Temperature perturbation in quadrature with U, scaled by 0.5 T/c.
        const double scale = 0.5 * p.T[i] / adiabatic_sound_speed(p.T[i]);
        out.T[i] += scale * env * pattern(u_modes_, pu, z, true);
    }
    return out;
}

VerticalProfile gw_perturb(const VerticalProfile& p, const GravityWaveSpec& spec, double range_km) {
    return GravityWaveField(spec).apply(p, range_km);
}

void AtmosphericSlice::validate() const {
    require(c_ratio.size() == kLevels * kColumns, ErrorKind::shape, "slice must be 1000x40");
    require(profiles.empty() || profiles.size() == kColumns, ErrorKind::shape,
            "slice must hold 0 or 40 profiles");
    require(c_ground > 0.0, ErrorKind::domain, "c_ground must be positive");
    for (float v : c_ratio) {
        require(v > 0.0f && std::isfinite(v), ErrorKind::domain, "c_ratio must be positive");
    }
}

AtmosphericSlice slice_from_profiles(std::vector<VerticalProfile> profiles, double azimuth_deg) {
    require(profiles.size() == kColumns, ErrorKind::shape, "a slice needs exactly 40 profiles");
    for (const auto& p : profiles) {
        require(p.size() == kLevels, ErrorKind::shape, "profiles must have 1000 levels");
        p.validate();
    }
    AtmosphericSlice slice;
    slice.azimuth_deg = azimuth_deg;
    slice.c_ground = ground_effective_sound_speed(profiles.front(), azimuth_deg);
    slice.c_ratio.resize(kLevels * kColumns);
    for (std::size_t j = 0; j < kColumns; ++j) {
        const auto column = effective_ratio_column(profiles[j], azimuth_deg, slice.c_ground);
        for (std::size_t i = 0; i < kLevels; ++i) slice.ratio(i, j) = static_cast<float>(column[i]);
    }
    slice.profiles = std::move(profiles);
    slice.metadata["azimuth_deg"] = azimuth_deg;
    slice.validate();
    return slice;
}

AtmosphericSlice build_slice(const ClimatologySpec& climatology, const GravityWaveSpec& gw,
                             double azimuth_deg) {
    require(azimuth_deg >= 0.0 && azimuth_deg < 360.0, ErrorKind::domain,
            "azimuth must lie in [0, 360)");
    const GravityWaveField field(gw);
    std::vector<VerticalProfile> profiles;
    profiles.reserve(kColumns);
    for (std::size_t j = 0; j < kColumns; ++j) {
        const double range_km = kColumnSpacingKm * static_cast<double>(j);
        profiles.push_back(field.apply(synth_profile(climatology, range_km), range_km));
    }
    AtmosphericSlice slice = slice_from_profiles(std::move(profiles), azimuth_deg);
    slice.metadata["climatology"] = climatology;
    slice.metadata["gravity_waves"] = gw;
    slice.metadata["seeds"] = {{"climatology", climatology.rng_seed}, {"gravity_waves", gw.rng_seed}};
    return slice;
}

AtmosphericSlice uniform_slice(float value) {
    AtmosphericSlice slice;
    slice.c_ratio.assign(kLevels * kColumns, value);
    slice.c_ground = kReferenceSoundSpeed;
    slice.validate();
    return slice;
}

DownwindClass classify_downwind(const AtmosphericSlice& slice) {
    require(slice.c_ratio.size() == kLevels * kColumns, ErrorKind::shape, "slice must be 1000x40");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < kLevels; ++i) {
        const double z = level_altitude_km(i);
        if (z < 30.0 - 1e-9 || z > 60.0 + 1e-9) continue;
        double sum = 0.0;
        for (std::size_t j = 0; j < kColumns; ++j) sum += slice.ratio(i, j);
        best = std::max(best, sum / static_cast<double>(kColumns));
    }
    return {best, best >= 1.0};
}

Container slice_to_container(const AtmosphericSlice& slice, bool with_profiles) {
    Container c;
    c.meta = slice.metadata;
    c.meta["kind"] = "slice";
    c.meta["azimuth_deg"] = slice.azimuth_deg;
    c.meta["c_ground"] = slice.c_ground;
    c.add("c_ratio", {kLevels, kColumns}, slice.c_ratio);
    if (with_profiles && !slice.profiles.empty()) {
        for (const char* name : {"T", "U", "V"}) {
            std::vector<float> grid(kLevels * kColumns);
            for (std::size_t j = 0; j < kColumns; ++j) {
                const auto& p = slice.profiles[j];
                const auto& f = name[0] == 'T' ? p.T : (name[0] == 'U' ? p.U : p.V);
                for (std::size_t i = 0; i < kLevels; ++i) grid[i * kColumns + j] = static_cast<float>(f[i]);
            }
            c.add(name, {kLevels, kColumns}, std::move(grid));
        }
    }
    return c;
}

AtmosphericSlice slice_from_container(const Container& c) {
    const auto& ratio = c.field("c_ratio");
    require(ratio.shape == std::vector<std::size_t>{kLevels, kColumns}, ErrorKind::shape,
            "c_ratio must be [1000, 40]");
    AtmosphericSlice slice;
    slice.c_ratio = ratio.data;
    slice.metadata = c.meta;
    slice.metadata.erase("kind");
    slice.azimuth_deg = c.meta.value("azimuth_deg", 0.0);
    slice.c_ground = c.meta.value("c_ground", kReferenceSoundSpeed);
    if (c.has("T") && c.has("U") && c.has("V")) {
        slice.profiles.resize(kColumns);
        for (std::size_t j = 0; j < kColumns; ++j) {
            auto p = VerticalProfile::standard_grid();
            for (std::size_t i = 0; i < kLevels; ++i) {
                p.T[i] = c.field("T").data[i * kColumns + j];
                p.U[i] = c.field("U").data[i * kColumns + j];
                p.V[i] = c.field("V").data[i * kColumns + j];
            }
            slice.profiles[j] = std::move(p);
        }
    }
    slice.validate();
    return slice;
}

void save_slice(const std::filesystem::path& path, const AtmosphericSlice& slice, bool with_profiles) {
    write_container(path, slice_to_container(slice, with_profiles));
}

AtmosphericSlice load_slice(const std::filesystem::path& path) {
    return slice_from_container(read_container(path));
}

void save_profiles(const std::filesystem::path& path, const std::vector<VerticalProfile>& profiles) {
    require(!profiles.empty(), ErrorKind::shape, "no profiles to save");
    const std::size_t n = profiles.size();
    Container c;
    c.meta["kind"] = "profiles";
    c.meta["z_step_km"] = kLevelStepKm;
    for (const char* name : {"T", "U", "V"}) {
        std::vector<float> grid(kLevels * n);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& p = profiles[j];
            require(p.size() == kLevels, ErrorKind::shape, "profiles must have 1000 levels");
            const auto& f = name[0] == 'T' ? p.T : (name[0] == 'U' ? p.U : p.V);
            for (std::size_t i = 0; i < kLevels; ++i) grid[i * n + j] = static_cast<float>(f[i]);
        }
        if (n == 1) {
            c.add(name, {kLevels}, std::move(grid));
        } else {
            c.add(name, {kLevels, n}, std::move(grid));
        }
    }
    write_container(path, c);
}

std::vector<VerticalProfile> load_profiles(const std::filesystem::path& path) {
    const Container c = read_container(path);
    const auto& t = c.field("T");
    require(!t.shape.empty() && t.shape[0] == kLevels && t.shape.size() <= 2, ErrorKind::shape,
            "profile fields must be [1000] or [1000, n]");
    const std::size_t n = t.shape.size() == 2 ? t.shape[1] : 1;
    for (const char* name : {"U", "V"}) {
        require(c.field(name).shape == t.shape, ErrorKind::shape, "T, U, V shapes differ");
    }
    std::vector<VerticalProfile> out(n, VerticalProfile::standard_grid());
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < kLevels; ++i) {
            out[j].T[i] = c.field("T").data[i * n + j];
            out[j].U[i] = c.field("U").data[i * n + j];
            out[j].V[i] = c.field("V").data[i * n + j];
        }
        out[j].validate();
    }
    return out;
}

}  // namespace infratl::atmos
