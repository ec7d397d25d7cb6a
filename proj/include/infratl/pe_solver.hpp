#pragma once

// Wide-angle split-step Padé parabolic equation for ground-level infrasound
// transmission loss over a range-dependent effective sound speed slice.
//
// Conventions (read these before comparing against other codes):
//
//  * The field is marched in the density-reduced form u = p / sqrt(rho0(z)),
//    which removes the first-derivative density term and adds the constant
//    potential -1/(4 H^2) for an exponential density with scale height H.
//  * The ground is rigid (dp/dz = 0), i.e. du/dz = u / (2H) for u.
//  * The vertical operator uses the fourth-order compact (Numerov) second
//    difference, so every Padé factor is a tridiagonal solve.
//  * Transmission loss is
//
//        TL(r) = 20 log10( |u(r, 0)| / sqrt(r)  /  (2 * 1/1000 m) ),
//
//    i.e. relative to the free-field amplitude at 1 km of a unit point source
//    on a rigid ground (direct wave plus its image). A ground source and
//    receiver in a homogeneous, lossless atmosphere gives
//    TL(r) = -20 log10(r / 1 km); values become more negative with range.
//    The source strength is read off the starter itself (its vertical
//    integral sets the far-field amplitude), so rescaling the starter leaves
//    TL unchanged.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "infratl/atmosphere.hpp"
#include "infratl/container.hpp"
#include "infratl/pade.hpp"
#include "infratl/tridiagonal.hpp"

namespace infratl::pe {

inline constexpr std::size_t kTLPoints = 400;
inline constexpr double kTLSpacingM = 10'000.0;

/// Default vertical resolution. Coarser than 30 points per wavelength, TL in
/// interference nulls and shadow zones has not converged to 1 dB at 0.5 Hz.
/// dz must never exceed wavelength / 10.
inline constexpr double kDefaultPointsPerWavelength = 30.0;

/// Simplified classical + rotational absorption,
///     alpha(z, f) = C f^2 / (rho0(z) c^3),   rho0(z) = rho_ground exp(-z / H).
struct AbsorptionModel {
    double rho_ground = 1.225;          // kg/m^3
    double scale_height_m = 7000.0;     // m
    double lumped_constant = 9.10599e-4;  // C, kg m^-1 s^-1 (see lumped_constant_default())
    double reference_sound_speed = 344.0;  // m/s, used by the altitude-only form
    bool enabled = true;
    bool stratified = true;  // false: uniform density rho_ground (homogeneous medium)

    double density(double z_m) const;

    /// 1 / (2 H) for the stratified profile, 0 otherwise.
    double half_inverse_scale_height() const;

    /// 2 pi^2 (4/3 mu + (gamma - 1) kappa / c_p + mu_rot) for air at 20 C.
    static double lumped_constant_default();
};

/// Attenuation in Np/m at altitude z for the model's reference sound speed.
double absorption_coefficient(double z_m, double f_hz, const AbsorptionModel& model);

/// Attenuation in Np/m with a local sound speed.
double absorption_coefficient(double z_m, double f_hz, double sound_speed, const AbsorptionModel& model);

struct PEConfig {
    double dz_m = 0.0;              // 0: wavelength / kDefaultPointsPerWavelength
    double dr_m = 0.0;              // 0: 10 * dz (then shrunk to divide 10 km)
    double z_max_m = 150'000.0;     // includes the sponge
    double sponge_depth_m = 30'000.0;
    double sponge_peak = 0.5;       // peak imaginary wavenumber / k0
    bool sponge_enabled = true;
    int pade_order = 7;
    double pade_rotation = 0.39269908169872414;  // branch rotation, rad (pi / 8)
    double source_alt_m = 0.0;
    double starter_width = 1.4142135623730951;  // Gaussian e-folding width in units of 1/k0
    double starter_amplitude = 1.0;
    double range_update_m = 1000.0;  // operator refresh interval along range
    AbsorptionModel absorption;

    void validate() const;
};

void to_json(json& j, const PEConfig& c);
void from_json(const json& j, PEConfig& c);

struct PEGrid {
    double f = 0.0;        // Hz
    double c_ground = 0.0; // m/s
    double k0 = 0.0;       // rad/m = 2 pi f / c_ground
    double dz = 0.0;       // m
    double dr = 0.0;       // m
    double z_max = 0.0;    // m
    double r_max = 0.0;    // m
    std::size_t nz = 0;
    std::size_t steps_per_mark = 0;  // range steps per 10 km

    double wavelength() const { return c_ground / f; }
    double z(std::size_t i) const { return dz * static_cast<double>(i); }
};

/// Resolves defaults and checks the resolution preconditions.
PEGrid make_grid(const PEConfig& config, double f_hz, double c_ground, double r_max_m);

struct TLCurve {
    std::vector<double> values;  // dB at 10, 20, ..., 4000 km
    double f = 0.0;
    std::string reference = "1 km free field (rigid-ground source pair)";

    static double range_km(std::size_t index) { return 10.0 * static_cast<double>(index + 1); }
};

using ComplexFieldColumn = std::vector<cplx>;

/// Gaussian starter with its rigid-ground image; purely real. The default
/// amplitude makes it equivalent to a unit point source in the far field.
ComplexFieldColumn starter_field(const PEGrid& grid, double source_alt_m, double width_over_k0,
                                 double amplitude = 1.0);

/// Closed-form integral of |starter|^2 over z >= 0.
double starter_norm_squared(const PEGrid& grid, double source_alt_m, double width_over_k0,
                            double amplitude = 1.0);

/// Two-ray (direct + rigid image) TL in a homogeneous medium, same reference
/// as the PE output. Throws ErrorKind::domain for r <= 0.
double lloyds_mirror_tl(double r_m, double z_src_m, double z_rcv_m, double f_hz, double c);

/// Step-by-step range marcher. Exposed for diagnostics and tests; march()
/// is the normal entry point.
class Marcher {
public:
    Marcher(const atmos::AtmosphericSlice& slice, double f_hz, const PEConfig& config,
            double r_max_m);

    const PEGrid& grid() const { return grid_; }
    double range() const { return range_; }
    std::size_t step_count() const { return steps_; }
    const ComplexFieldColumn& field() const { return field_; }
    ComplexFieldColumn& field() { return field_; }

    /// Advances one range step of grid().dr.
    void step();

    /// Discrete energy <u, M u> dz with the compact-scheme mass matrix.
    double energy() const;

    /// TL in dB at the ground for the current range.
    double ground_tl() const;

private:
    void refresh_operator(double range_m);

    PEGrid grid_;
    PEConfig config_;
    PadeCoefficients pade_;
    // Slice resampled onto the PE altitude grid, one vector per column.
    std::vector<std::vector<double>> ratio_columns_;
    std::vector<std::vector<double>> alpha_columns_;
    std::vector<double> sponge_;  // imaginary wavenumber / k0
    Tridiagonal<double> mass_;
    std::vector<Tridiagonal<cplx>> numerators_;
    std::vector<TridiagonalFactor<cplx>> denominators_;
    ComplexFieldColumn field_;
    ComplexFieldColumn scratch_;
    double reference_ = 0.0;  // |p| at 1 km for this starter
    double range_ = 0.0;
    bool range_independent_ = false;
    std::size_t steps_ = 0;
    std::size_t steps_per_update_ = 1;
};

/// Ground TL every 10 km up to r_max (a multiple of 10 km). Throws
/// ErrorKind::numerical with the range reached if the field blows up and
/// ErrorKind::precondition if the grid under-resolves the wavelength.
std::vector<double> march_ground_tl(const atmos::AtmosphericSlice& slice, double f_hz,
                                    const PEConfig& config, double r_max_m);

/// Full 4000 km, 400-point curve.
TLCurve march(const atmos::AtmosphericSlice& slice, double f_hz, const PEConfig& config = {});

Container tl_to_container(const TLCurve& tl, const PEConfig& config);
TLCurve tl_from_container(const Container& c);
void save_tl(const std::filesystem::path& path, const TLCurve& tl, const PEConfig& config);
TLCurve load_tl(const std::filesystem::path& path);

}  // namespace infratl::pe
