#pragma once

// Rational approximation of the one-way range propagator
//
//     P(q) = exp(i * delta * (sqrt(1 + q) - 1)),   delta = k0 * dr,
//
// in product form R(q) = s * prod_j (1 + a_j q) / (1 + b_j q). The [M/M] Padé
// approximant shares the first 2M + 1 Taylor coefficients of P at q = 0 and
// has s = 1.
//
// The plain approximant is unimodular on the whole real axis, so evanescent
// components (q < -1) are never damped. The rotated variant expands
// sqrt(1 + q) = e^{i theta / 2} sqrt(1 + Q), Q = e^{-i theta} (1 + q) - 1,
// about Q = 0 instead, which moves the branch cut off the real axis and makes
// |R(q)| < 1 for q < -1 when theta > 0.

#include <complex>
#include <vector>

namespace infratl::pe {

using cplx = std::complex<double>;

struct PadeCoefficients {
    int order = 0;
    std::vector<cplx> a;  // numerator factors:   1 + a_j q
    std::vector<cplx> b;  // denominator factors: 1 + b_j q
    cplx scale = 1.0;

    cplx evaluate(cplx q) const;
};

/// First n Taylor coefficients of exp(i delta (sqrt(1+q) - 1)) about q = 0.
/// Valid for complex delta.
std::vector<cplx> propagator_taylor(int n, cplx delta);

/// Exact propagator value.
cplx exact_propagator(cplx q, double delta);

/// [M/M] Padé factors. Throws ErrorKind::domain for order < 1 and
/// ErrorKind::numerical when the linear solve or polynomial root polish fails.
PadeCoefficients pade_coefficients(int order, double delta);

/// Branch-rotated [M/M] approximant; theta = 0 gives pade_coefficients().
PadeCoefficients rotated_pade_coefficients(int order, double delta, double theta);

/// Roots of sum_k coeffs[k] x^k (coeffs.back() != 0), polished by Newton steps.
std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs);

}  // namespace infratl::pe
