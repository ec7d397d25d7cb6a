#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

#include "infratl/error.hpp"
#include "infratl/pade.hpp"
#include "infratl/pe_solver.hpp"
#include "infratl/rng.hpp"
#include "infratl/tridiagonal.hpp"

using namespace infratl;
using namespace infratl::pe;

namespace {

// erf by its Maclaurin series; adequate for |z| <= 2.
cplx erf_series(cplx z) {
    cplx term = z, sum = z;
    for (int n = 1; n < 80; ++n) {
        term *= -z * z / static_cast<double>(n);
        sum += term / static_cast<double>(2 * n + 1);
    }
    return 2.0 / std::sqrt(std::numbers::pi) * sum;
}

// Ground-wave attenuation factor for a locally reacting boundary,
//   F(w) = 1 + i sqrt(pi w) exp(-w) erfc(-i sqrt(w)).
cplx ground_wave_factor(cplx w) {
    const cplx s = std::sqrt(w);
    const cplx i(0.0, 1.0);
    return 1.0 + i * std::sqrt(std::numbers::pi * w) * std::exp(-w) * (1.0 - erf_series(-i * s));
}

PEConfig lossless() {
    PEConfig c;
    c.absorption.enabled = false;
    return c;
}

}  // namespace

// ---- Padé ------------------------------------------------------------------

TEST(Pade, UnityAtZero) {
    for (int m : {1, 3, 7}) {
        const auto p = pade_coefficients(m, 25.0);
        EXPECT_EQ(p.evaluate(0.0), cplx(1.0, 0.0));
    }
}

TEST(Pade, FirstOrderMatchesSecondOrderTaylor) {
    const double delta = 3.0;
    const auto p = pade_coefficients(1, delta);
    const auto t = propagator_taylor(3, delta);
    // Error of an [M/M] approximant is O(q^(2M+1)).
    for (double q : {1e-2, 5e-3, 2.5e-3}) {
        const cplx taylor2 = t[0] + t[1] * q + t[2] * q * q;
        EXPECT_LT(std::abs(p.evaluate(q) - taylor2), 20.0 * std::pow(q, 3) * std::abs(t[2]) + 1e-14);
    }
    const double e1 = std::abs(p.evaluate(1e-2) - exact_propagator(1e-2, delta));
    const double e2 = std::abs(p.evaluate(5e-3) - exact_propagator(5e-3, delta));
    EXPECT_NEAR(std::log2(e1 / e2), 3.0, 0.1);
}

TEST(Pade, TaylorCoefficientsAgainstClosedForm) {
    // exp(i d (sqrt(1+q)-1)) = 1 + (i d / 2) q + (-(d^2)/8 - i d/8) q^2 + ...
    const double d = 2.0;
    const auto t = propagator_taylor(3, d);
    EXPECT_NEAR(std::abs(t[1] - cplx(0.0, d / 2.0)), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(t[2] - cplx(-d * d / 8.0, -d / 8.0)), 0.0, 1e-14);
}

TEST(Pade, SeventhOrderErrorAtLargeStep) {
    // Frozen from a 60-digit rational approximation of the same [7/7] form:
    // the error at |q| = 0.2 for k0 dr = 50 is 1.1174e-5, far above 1e-8.
    const auto p = pade_coefficients(7, 50.0);
    EXPECT_NEAR(std::abs(p.evaluate(-0.2) - exact_propagator(-0.2, 50.0)), 1.1174e-5, 1e-8);
    double small = 0.0;
    for (double q = -0.05; q <= 0.05; q += 1e-3) small = std::max(small, std::abs(p.evaluate(q) - exact_propagator(q, 50.0)));
    EXPECT_LT(small, 1e-8);
}

TEST(Pade, PlainIsUnimodularRotatedDamps) {
    const auto plain = pade_coefficients(7, 20.0);
    const auto rot = rotated_pade_coefficients(7, 20.0, std::numbers::pi / 8);
    for (double q : {-0.5, 0.0, 0.3}) EXPECT_NEAR(std::abs(plain.evaluate(q)), 1.0, 1e-9);
    for (double q : {-1.5, -3.0, -10.0}) {
        EXPECT_NEAR(std::abs(plain.evaluate(q)), 1.0, 1e-9);
        EXPECT_LT(std::abs(rot.evaluate(q)), 1.0);
    }
    const auto zero = rotated_pade_coefficients(7, 20.0, 0.0);
    EXPECT_NEAR(std::abs(zero.evaluate(0.1) - plain.evaluate(0.1)), 0.0, 1e-10);
}

TEST(Pade, RejectsBadOrder) { EXPECT_THROW(pade_coefficients(0, 1.0), Error); }

TEST(Pade, PolynomialRoots) {
    // (x - 1)(x + 2)(x - 3i) expanded.
    const cplx i(0, 1);
    const std::vector<cplx> c{6.0 * i, -2.0 - 3.0 * i, 1.0 - 3.0 * i, 1.0};
    auto roots = polynomial_roots(c);
    ASSERT_EQ(roots.size(), 3u);
    for (cplx expected : {cplx(1, 0), cplx(-2, 0), 3.0 * i}) {
        double best = 1e9;
        for (cplx r : roots) best = std::min(best, std::abs(r - expected));
        EXPECT_LT(best, 1e-12);
    }
}

// ---- tridiagonal -------------------------------------------------------------

TEST(Tridiagonal, MatchesDenseSolve) {
    Rng rng(3);
    const std::size_t n = 40;
    Tridiagonal<cplx> a;
    a.resize(n);
    Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        a.diag[i] = cplx(4.0 + uniform(rng, 0, 1), uniform(rng, -1, 1));
        dense(i, i) = a.diag[i];
        if (i + 1 < n) {
            a.upper[i] = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
            a.lower[i] = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
            dense(i, i + 1) = a.upper[i];
            dense(i + 1, i) = a.lower[i];
        }
    }
    Eigen::VectorXcd b(n);
    for (std::size_t i = 0; i < n; ++i) b(i) = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
    const Eigen::VectorXcd ref = dense.partialPivLu().solve(b);
    std::vector<cplx> x(b.data(), b.data() + n);
    TridiagonalFactor<cplx>(a).solve(x);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(x[i] - ref(i)), 1e-12);

    std::vector<cplx> y(n);
    a.multiply(x, y);
    for (std::size_t i = 0; i < n; ++i) EXPECT_LT(std::abs(y[i] - b(i)), 1e-12);
}

TEST(Tridiagonal, ZeroPivotIsNumericalError) {
    Tridiagonal<double> a;
    a.resize(3);
    a.diag = {0.0, 1.0, 1.0};
    try {
        TridiagonalFactor<double> f(a);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
    }
}

// ---- absorption ----------------------------------------------------------------

TEST(Absorption, FrequencySquaredAndAltitude) {
    const AbsorptionModel m;
    for (double z : {0.0, 20e3, 80e3}) EXPECT_NEAR(absorption_coefficient(z, 2.0, m), 4.0 * absorption_coefficient(z, 1.0, m), 1e-20);
    double prev = 0.0;
    for (double z = 0.0; z <= 120e3; z += 5e3) {
        const double a = absorption_coefficient(z, 1.0, m);
        EXPECT_GE(a, prev);
        prev = a;
    }
}

TEST(Absorption, GoldenValueAt50km) {
    EXPECT_NEAR(absorption_coefficient(50e3, 1.0, AbsorptionModel{}), 2.310038376158655e-08, 1e-20);
}

TEST(Absorption, LumpedConstantFromTransportCoefficients) {
    // The stored default is rounded; it agrees with the transport coefficients to 1e-4.
    const double c = AbsorptionModel::lumped_constant_default();
    EXPECT_NEAR(AbsorptionModel{}.lumped_constant / c, 1.0, 1e-4);
}

// ---- starter ---------------------------------------------------------------------

TEST(Starter, RealPeakedAtSourceAndNormMatchesClosedForm) {
    PEConfig cfg;
    for (double zs : {0.0, 3000.0}) {
        const auto g = make_grid(cfg, 0.3, 340.0, 100e3);
        const auto u = starter_field(g, zs, cfg.starter_width);
        std::size_t peak = 0;
        double sum = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            EXPECT_EQ(u[i].imag(), 0.0);
            if (std::abs(u[i]) > std::abs(u[peak])) peak = i;
            // Trapezoid weights: half at the ground.
            sum += (i == 0 ? 0.5 : 1.0) * std::norm(u[i]) * g.dz;
        }
        EXPECT_NEAR(g.z(peak), zs, g.dz);
        const double exact = starter_norm_squared(g, zs, cfg.starter_width);
        EXPECT_NEAR(sum / exact, 1.0, 1e-3);
    }
}

// ---- two-ray ---------------------------------------------------------------------

TEST(LloydsMirror, GroundPairAndSpreading) {
    for (double r : {5e3, 40e3, 300e3}) EXPECT_NEAR(lloyds_mirror_tl(r, 0, 0, 0.5, 340), -20.0 * std::log10(r / 1e3), 1e-9);
    EXPECT_NEAR(lloyds_mirror_tl(400e3, 0, 0, 0.5, 340) - lloyds_mirror_tl(200e3, 0, 0, 0.5, 340), -6.0206, 1e-4);
    EXPECT_THROW(lloyds_mirror_tl(0.0, 0, 0, 0.5, 340), Error);
}

TEST(LloydsMirror, QuarterWavelengthGeometry) {
    const double f = 0.2, c = 344.0, k = 2.0 * std::numbers::pi * f / c;
    const double h = c / f / 4.0, r = 1000.0;
    const double r1 = r, r2 = std::hypot(r, 2.0 * h);
    const cplx p = std::polar(1.0 / r1, k * r1) + std::polar(1.0 / r2, k * r2);
    const double expected = 20.0 * std::log10(std::abs(p) / (2.0 / 1000.0));
    EXPECT_NEAR(lloyds_mirror_tl(r, h, h, f, c), expected, 1e-9);
}

// ---- march -----------------------------------------------------------------------

TEST(March, HomogeneousMatchesSphericalSpreading) {
    auto cfg = lossless();
    cfg.absorption.stratified = false;
    const auto tl = march_ground_tl(atmos::uniform_slice(), 0.2, cfg, 500e3);
    for (std::size_t i = 4; i < tl.size(); ++i) EXPECT_NEAR(tl[i], -20.0 * std::log10(TLCurve::range_km(i)), 1.0);
}

TEST(March, StratifiedDensityMatchesGroundWave) {
    const auto cfg = lossless();
    const double f = 0.2;
    const auto tl = march_ground_tl(atmos::uniform_slice(), f, cfg, 500e3);
    const double k = 2.0 * std::numbers::pi * f / atmos::kReferenceSoundSpeed;
    const double gamma = cfg.absorption.half_inverse_scale_height();
    for (std::size_t i = 4; i < tl.size(); ++i) {
        const double r = TLCurve::range_km(i) * 1e3;
        const cplx w(0.0, r * gamma * gamma / (2.0 * k));
        const double expected = -20.0 * std::log10(r / 1e3) + 20.0 * std::log10(std::abs(ground_wave_factor(w)));
        EXPECT_NEAR(tl[i], expected, 0.25) << r;
    }
}

TEST(March, OutputLengthIndependentOfGrid) {
    auto coarse = lossless();
    auto fine = coarse;
    const auto g = make_grid(coarse, 0.1, 344.0, 4000e3);
    fine.dz_m = g.dz / 2;
    fine.dr_m = g.dr / 3;
    EXPECT_EQ(march(atmos::uniform_slice(), 0.1, coarse).values.size(), kTLPoints);
    EXPECT_EQ(march(atmos::uniform_slice(), 0.1, fine).values.size(), kTLPoints);
}

TEST(March, StarterAmplitudeCancels) {
    PEConfig a;
    PEConfig b;
    b.starter_amplitude = 7.25;
    const auto slice = atmos::build_slice(atmos::ClimatologySpec{}, atmos::GravityWaveSpec{}, 90.0);
    const auto ta = march_ground_tl(slice, 0.2, a, 300e3);
    const auto tb = march_ground_tl(slice, 0.2, b, 300e3);
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_NEAR(ta[i], tb[i], 1e-9);
}

TEST(March, EnergyConservedWithoutLosses) {
    auto cfg = lossless();
    cfg.sponge_enabled = false;
    cfg.pade_rotation = 0.0;
    const auto slice = atmos::build_slice(atmos::ClimatologySpec{}, atmos::GravityWaveSpec{}, 90.0);
    Marcher m(slice, 0.2, cfg, 200e3);
    const double e0 = m.energy();
    for (int s = 0; s < 200; ++s) {
        m.step();
        ASSERT_NEAR(m.energy() / e0, 1.0, 1e-3) << "step " << s;
    }
}

TEST(March, RotatedBranchNeverGainsEnergy) {
    auto cfg = lossless();
    cfg.sponge_enabled = false;
    Marcher m(atmos::uniform_slice(1.05f), 0.2, cfg, 100e3);
    double prev = m.energy();
    for (int s = 0; s < 100; ++s) {
        m.step();
        EXPECT_LE(m.energy(), prev * (1.0 + 1e-9));
        prev = m.energy();
    }
}

TEST(March, ReversedAzimuthWithFlippedWinds) {
    const auto base = atmos::build_slice(atmos::ClimatologySpec{}, atmos::GravityWaveSpec{}, 60.0);
    auto flipped = base.profiles;
    for (auto& p : flipped) {
        for (auto& u : p.U) u = -u;
        for (auto& v : p.V) v = -v;
    }
    const auto rev = atmos::slice_from_profiles(flipped, 240.0);
    const auto a = march_ground_tl(base, 0.2, {}, 1000e3);
    const auto b = march_ground_tl(rev, 0.2, {}, 1000e3);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 0.05);
}

TEST(March, DownwindLessAttenuatedThanUpwind) {
    atmos::ClimatologySpec down, up;
    down.strato_jet_amp = 50.0;
    up.strato_jet_amp = -50.0;
    const auto td = march_ground_tl(atmos::build_slice(down, {}, 90.0), 0.2, {}, 600e3);
    const auto tu = march_ground_tl(atmos::build_slice(up, {}, 90.0), 0.2, {}, 600e3);
    EXPECT_GT(td.back(), tu.back());
}

TEST(March, UnderResolvedGridIsPreconditionError) {
    PEConfig cfg;
    cfg.dz_m = 344.0 / 0.5 / 9.0;
    try {
        march_ground_tl(atmos::uniform_slice(), 0.5, cfg, 100e3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}

TEST(March, DefaultGrid) {
    const auto g = make_grid(PEConfig{}, 0.5, 344.0, 1000e3);
    EXPECT_NEAR(g.dz, 344.0 / 0.5 / kDefaultPointsPerWavelength, 1e-9);
    EXPECT_LE(g.dr, 10.0 * g.dz + 1e-9);
    EXPECT_NEAR(kTLSpacingM / g.dr, static_cast<double>(g.steps_per_mark), 1e-6);
}

TEST(TLFile, RoundTrip) {
    TLCurve tl;
    tl.f = 0.3;
    for (std::size_t i = 0; i < kTLPoints; ++i) tl.values.push_back(-static_cast<double>(i) * 0.25);
    const auto back = tl_from_container(tl_to_container(tl, PEConfig{}));
    EXPECT_EQ(back.values.size(), kTLPoints);
    EXPECT_DOUBLE_EQ(back.f, 0.3);
    for (std::size_t i = 0; i < kTLPoints; ++i) EXPECT_FLOAT_EQ(static_cast<float>(back.values[i]), static_cast<float>(tl.values[i]));
}
