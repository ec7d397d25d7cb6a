#pragma once

// Range-dependent atmospheric slices and the effective sound speed ratio field.
//
// A slice is 1000 altitude levels (0 to 119.88 km, step 0.12 km) by 40 range
// columns (0, 100, ..., 3900 km). Column j is computed from the vertical
// profile at range 100*j km:
//
//   c(z)        = 344 * sqrt(T(z) / 293.13)
//   v(z)        = U(z) sin(az) + V(z) cos(az)       (az clockwise from north)
//   c_ratio(z)  = (c(z) + v(z)) / c_ground
//
// where c_ground is c + v at z = 0 of the range-0 column, shared by the whole
// slice.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "infratl/container.hpp"

namespace infratl::atmos {

inline constexpr std::size_t kLevels = 1000;
inline constexpr double kLevelStepKm = 0.12;
inline constexpr std::size_t kColumns = 40;
inline constexpr double kColumnSpacingKm = 100.0;
inline constexpr double kSliceLengthKm = 4000.0;

inline constexpr double kReferenceSoundSpeed = 344.0;    // m/s at T0
inline constexpr double kReferenceTemperature = 293.13;  // K
inline constexpr double kWindSanityBound = 300.0;        // m/s

constexpr double level_altitude_km(std::size_t level) {
    return kLevelStepKm * static_cast<double>(level);
}

struct VerticalProfile {
    std::vector<double> z_km;
    std::vector<double> T;  // K
    std::vector<double> U;  // zonal wind, m/s, positive eastward
    std::vector<double> V;  // meridional wind, m/s, positive northward

    /// Standard 1000-level grid with all fields zero.
    static VerticalProfile standard_grid();

    std::size_t size() const { return z_km.size(); }

    /// Throws ErrorKind::domain / shape when an invariant is violated.
    void validate() const;
};

struct ClimatologySpec {
    double ground_T = 288.15;          // K
    double tropo_lapse = 6.5;          // K/km
    double strato_jet_amp = 30.0;      // m/s, signed (negative = westward)
    double strato_jet_alt = 60.0;      // km, in [40, 75]
    double strato_jet_width = 12.0;    // km
    double tropo_jet_amp = 20.0;       // m/s
    double thermo_rise_scale = 6.0;    // K/km above the mesopause
    double meridional_amp = 5.0;       // m/s
    double range_trend = 0.0;          // fractional jet drift per 1000 km
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct GravityWaveSpec {
    int n_modes = 64;
    double m_min = 0.3141592653589793;   // rad/km (20 km wavelength)
    double m_max = 6.283185307179586;    // rad/km (1 km wavelength)
    double spectral_slope = -3.0;
    double rms_at_20km = 2.0;            // m/s
    double growth_scale_H = 7.0;         // km
    double saturation_cap = 40.0;        // m/s
    double horizontal_corr_km = 500.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

void to_json(json& j, const ClimatologySpec& s);
void from_json(const json& j, ClimatologySpec& s);
void to_json(json& j, const GravityWaveSpec& s);
void from_json(const json& j, GravityWaveSpec& s);

double adiabatic_sound_speed(double temperature_K);

/// Along-path wind for propagation toward azimuth_deg (clockwise from north).
double project_wind(double U, double V, double azimuth_deg);

/// c + v at the lowest level of the profile: the ratio denominator.
double ground_effective_sound_speed(const VerticalProfile& p, double azimuth_deg);

/// Ratio column against an explicit ground reference.
std::vector<double> effective_ratio_column(const VerticalProfile& p, double azimuth_deg,
                                           double c_ground);

/// Ratio column against the profile's own ground value (use for the range-0 column).
std::vector<double> effective_ratio_column(const VerticalProfile& p, double azimuth_deg);

/// Joins a lower-atmosphere profile (valid to 80 km) with an upper one (valid
/// from 75 km) using a cubic Hermite weight on [75, 85] km.
VerticalProfile blend_upper_atmosphere(const VerticalProfile& lower, const VerticalProfile& upper);

inline constexpr double kBlendLowKm = 75.0;
inline constexpr double kBlendHighKm = 85.0;

/// Synthetic climatology column at the given range. Pure in (spec, range_km).
VerticalProfile synth_profile(const ClimatologySpec& spec, double range_km);

/// One realization of the spectral gravity-wave model. Mode wavenumbers,
/// amplitudes and initial phases come from spec.rng_seed; phases random-walk
/// in range so that the correlation between ranges separated by d decays as
/// exp(-d / horizontal_corr_km).
class GravityWaveField {
public:
    explicit GravityWaveField(const GravityWaveSpec& spec);

    /// Perturbation envelope (rms of the wind perturbation) at altitude z.
    double envelope(double z_km) const;

    /// Wind perturbation patterns at `range_km` on the given altitudes.
    void wind_perturbation(double range_km, std::span<const double> z_km,
                           std::span<double> dU, std::span<double> dV) const;

    VerticalProfile apply(const VerticalProfile& p, double range_km) const;

    const GravityWaveSpec& spec() const { return spec_; }

private:
    struct Modes {
        std::vector<double> m;       // rad/km
        std::vector<double> a;       // normalized: sum a^2 / 2 == 1
        std::vector<double> phase0;
        std::vector<double> step_sigma;  // per-mode phase-walk scale (same for all)
    };

    std::vector<double> phases_at(const Modes& modes, std::uint64_t stream,
                                  double range_km) const;
    static double pattern(const Modes& modes, const std::vector<double>& phase, double z_km,
                          bool quadrature);

    GravityWaveSpec spec_;
    Modes u_modes_;
    Modes v_modes_;
};

VerticalProfile gw_perturb(const VerticalProfile& p, const GravityWaveSpec& spec,
                           double range_km);

struct AtmosphericSlice {
    std::vector<float> c_ratio;  // [kLevels][kColumns], altitude-major
    std::vector<VerticalProfile> profiles;  // kColumns entries, or empty if not retained
    double azimuth_deg = 0.0;
    double c_ground = kReferenceSoundSpeed;
    json metadata = json::object();

    float ratio(std::size_t level, std::size_t column) const {
        return c_ratio[level * kColumns + column];
    }
    float& ratio(std::size_t level, std::size_t column) {
        return c_ratio[level * kColumns + column];
    }

    void validate() const;
};

/// Slice from externally supplied profiles (exactly kColumns of them).
AtmosphericSlice slice_from_profiles(std::vector<VerticalProfile> profiles, double azimuth_deg);

AtmosphericSlice build_slice(const ClimatologySpec& climatology, const GravityWaveSpec& gw,
                             double azimuth_deg);

/// Uniform slice with every ratio equal to `value` (ground reference 344 m/s).
AtmosphericSlice uniform_slice(float value = 1.0f);

struct DownwindClass {
    double score = 0.0;
    bool downwind = false;
};

/// Max over 30-60 km of the range-mean ratio; downwind when score >= 1.
DownwindClass classify_downwind(const AtmosphericSlice& slice);

// ITL1 I/O. Slices store "c_ratio" [1000, 40] and, when retained, "T", "U",
// "V" [1000, 40]. Profile files store "T", "U", "V" as [1000] or [1000, n].
Container slice_to_container(const AtmosphericSlice& slice, bool with_profiles);
AtmosphericSlice slice_from_container(const Container& c);
void save_slice(const std::filesystem::path& path, const AtmosphericSlice& slice,
                bool with_profiles = false);
AtmosphericSlice load_slice(const std::filesystem::path& path);

void save_profiles(const std::filesystem::path& path, const std::vector<VerticalProfile>& p);
std::vector<VerticalProfile> load_profiles(const std::filesystem::path& path);

}  // namespace infratl::atmos
