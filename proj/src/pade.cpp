#include "infratl/pade.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "infratl/error.hpp"

namespace infratl::pe {

namespace {

cplx horner(const std::vector<cplx>& c, cplx x) {
    cplx acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc;
}

cplx horner_derivative(const std::vector<cplx>& c, cplx x) {
    cplx acc = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        acc = acc * x + static_cast<double>(k) * c[k];
    }
    return acc;
}

// Converts a polynomial with c[0] == 1 into factors (1 + f_j q).
std::vector<cplx> factor_coefficients(const std::vector<cplx>& c) {
    const auto roots = polynomial_roots(c);
    std::vector<cplx> factors;
    factors.reserve(roots.size());
    for (const auto& r : roots) factors.push_back(-1.0 / r);
    return factors;
}

}  // namespace

cplx PadeCoefficients::evaluate(cplx q) const {
    cplx value = scale;
    for (int j = 0; j < order; ++j) value *= (1.0 + a[j] * q) / (1.0 + b[j] * q);
    return value;
}

std::vector<cplx> propagator_taylor(int n, cplx delta) {
    std::vector<cplx> c(static_cast<std::size_t>(std::max(n, 2)), 0.0);
    c[0] = 1.0;
    c[1] = cplx(0.0, 0.5) * delta;
    // Three-term recurrence from differentiating f' = (i delta / (2 sqrt(1+q))) f.
    for (int k = 2; k < n; ++k) {
        const double m = static_cast<double>(k - 1);
        c[k] = -((2.0 * m - 1.0) / (2.0 * m + 2.0)) * c[k - 1] -
               (delta * delta / (4.0 * m * (m + 1.0))) * c[k - 2];
    }
    c.resize(static_cast<std::size_t>(n));
    return c;
}

cplx exact_propagator(cplx q, double delta) {
    return std::exp(cplx(0.0, delta) * (std::sqrt(1.0 + q) - 1.0));
}

std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
    std::vector<cplx> c = coeffs;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const auto degree = static_cast<Eigen::Index>(c.size()) - 1;
    require(degree >= 1, ErrorKind::numerical, "polynomial has no roots");

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
    for (Eigen::Index i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < degree; ++i) companion(i, degree - 1) = -c[static_cast<std::size_t>(i)] / c.back();

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    require(solver.info() == Eigen::Success, ErrorKind::numerical,
            "companion eigenvalue iteration did not converge");

    std::vector<cplx> roots(static_cast<std::size_t>(degree));
    double scale = 0.0;
    for (const auto& x : c) scale = std::max(scale, std::abs(x));
    for (Eigen::Index i = 0; i < degree; ++i) {
        cplx r = solver.eigenvalues()(i);
        for (int it = 0; it < 20; ++it) {
            const cplx d = horner_derivative(c, r);
            if (d == 0.0) break;
            const cplx step = horner(c, r) / d;
            r -= step;
            if (std::abs(step) <= 1e-15 * std::abs(r)) break;
        }
        // Backward-error check relative to the polynomial's scale at |r|.
        double magnitude = 0.0;
        double power = 1.0;
        for (const auto& x : c) {
            magnitude += std::abs(x) * power;
            power *= std::abs(r);
        }
        const double residual = std::abs(horner(c, r));
        if (!(residual <= 1e-10 * magnitude) || !std::isfinite(std::abs(r))) {
            std::ostringstream os;
            os << "root polish failed: root " << r << " residual " << residual << " (scale "
               << magnitude << ", degree " << degree << ")";
            fail(ErrorKind::numerical, os.str());
        }
        roots[static_cast<std::size_t>(i)] = r;
    }
    return roots;
}

namespace {

PadeCoefficients pade_from_taylor(const std::vector<cplx>& c, int M) {
    // Denominator q(x) = 1 + sum_k d_k x^k with sum_{k=0}^{M} d_k c_{n-k} = 0
    // for n = M+1 .. 2M.
    Eigen::MatrixXcd A(M, M);
    Eigen::VectorXcd rhs(M);
    for (int r = 0; r < M; ++r) {
        const int n = M + 1 + r;
        for (int k = 1; k <= M; ++k) A(r, k - 1) = c[static_cast<std::size_t>(n - k)];
        rhs(r) = -c[static_cast<std::size_t>(n)];
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(A);
    require(lu.isInvertible(), ErrorKind::numerical, "Padé linear system is singular");
    const Eigen::VectorXcd d = lu.solve(rhs);
    require(d.allFinite(), ErrorKind::numerical, "Padé linear solve produced non-finite values");

    std::vector<cplx> den(static_cast<std::size_t>(M + 1));
    den[0] = 1.0;
    for (int k = 1; k <= M; ++k) den[static_cast<std::size_t>(k)] = d(k - 1);
    std::vector<cplx> num(static_cast<std::size_t>(M + 1), 0.0);
    for (int n = 0; n <= M; ++n) {
        for (int k = 0; k <= n; ++k) {
            num[static_cast<std::size_t>(n)] += den[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(n - k)];
        }
    }

    PadeCoefficients out;
    out.order = M;
    out.a = factor_coefficients(num);
    out.b = factor_coefficients(den);
    require(static_cast<int>(out.a.size()) == M && static_cast<int>(out.b.size()) == M,
            ErrorKind::numerical, "Padé polynomial lost degree (leading coefficient vanished)");
    return out;
}

}  // namespace

PadeCoefficients pade_coefficients(int order, double delta) {
    require(order >= 1, ErrorKind::domain, "Padé order must be >= 1");
    return pade_from_taylor(propagator_taylor(2 * order + 1, delta), order);
}

PadeCoefficients rotated_pade_coefficients(int order, double delta, double theta) {
    require(order >= 1, ErrorKind::domain, "Padé order must be >= 1");
    require(theta >= 0.0 && theta < std::numbers::pi / 2, ErrorKind::domain,
            "rotation angle must be in [0, pi/2)");
    if (theta == 0.0) return pade_coefficients(order, delta);

    const cplx half = std::polar(1.0, 0.5 * theta);
    const cplx rot = std::polar(1.0, -theta);
    auto in_q = pade_from_taylor(propagator_taylor(2 * order + 1, delta * half), order);

    // 1 + x Q = (1 - x + x rot) (1 + x rot / (1 - x + x rot) q)
    PadeCoefficients out;
    out.order = order;
    out.scale = std::exp(cplx(0.0, delta) * (half - 1.0));
    for (int j = 0; j < order; ++j) {
        const cplx ca = 1.0 - in_q.a[j] + in_q.a[j] * rot;
        const cplx cb = 1.0 - in_q.b[j] + in_q.b[j] * rot;
        require(std::abs(ca) > 0.0 && std::abs(cb) > 0.0, ErrorKind::numerical,
                "rotated Padé factor degenerates");
        out.a.push_back(in_q.a[j] * rot / ca);
        out.b.push_back(in_q.b[j] * rot / cb);
        out.scale *= ca / cb;
    }
    return out;
}

}  // namespace infratl::pe
