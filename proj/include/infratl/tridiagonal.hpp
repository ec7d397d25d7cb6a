#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "infratl/error.hpp"

namespace infratl::pe {

/// Tridiagonal matrix: lower[i] = A(i+1, i), diag[i] = A(i, i), upper[i] = A(i, i+1).
template <typename T>
struct Tridiagonal {
    std::vector<T> lower;  // size n - 1
    std::vector<T> diag;
    std::vector<T> upper;  // size n - 1

    std::size_t size() const { return diag.size(); }

    void resize(std::size_t n) {
        lower.resize(n - 1);
        diag.resize(n);
        upper.resize(n - 1);
    }

    void multiply(std::span<const T> x, std::span<T> y) const {
        const std::size_t n = diag.size();
        if (n == 1) {
            y[0] = diag[0] * x[0];
            return;
        }
        y[0] = diag[0] * x[0] + upper[0] * x[1];
        for (std::size_t i = 1; i + 1 < n; ++i) {
            y[i] = lower[i - 1] * x[i - 1] + diag[i] * x[i] + upper[i] * x[i + 1];
        }
        y[n - 1] = lower[n - 2] * x[n - 2] + diag[n - 1] * x[n - 1];
    }
};

/// Thomas-algorithm factorization, reusable across right-hand sides. No
/// pivoting: the PE step matrices are diagonally dominant. A zero pivot
/// raises ErrorKind::numerical.
template <typename T>
class TridiagonalFactor {
public:
    TridiagonalFactor() = default;
    explicit TridiagonalFactor(const Tridiagonal<T>& a) { factor(a); }

    void factor(const Tridiagonal<T>& a) {
        const std::size_t n = a.size();
        lower_ = a.lower;
        ratio_.resize(n);
        inv_pivot_.resize(n);
        T pivot = a.diag[0];
        check(pivot, 0);
        inv_pivot_[0] = T(1) / pivot;
        for (std::size_t i = 1; i < n; ++i) {
            ratio_[i - 1] = a.upper[i - 1] * inv_pivot_[i - 1];
            pivot = a.diag[i] - lower_[i - 1] * ratio_[i - 1];
            check(pivot, i);
            inv_pivot_[i] = T(1) / pivot;
        }
    }

    /// Solves A x = b in place.
    void solve(std::span<T> x) const {
        const std::size_t n = inv_pivot_.size();
        x[0] *= inv_pivot_[0];
        for (std::size_t i = 1; i < n; ++i) x[i] = (x[i] - lower_[i - 1] * x[i - 1]) * inv_pivot_[i];
        for (std::size_t i = n - 1; i-- > 0;) x[i] -= ratio_[i] * x[i + 1];
    }

private:
    static void check(const T& pivot, std::size_t row) {
        using std::abs;
        if (!(abs(pivot) > 0.0) || !std::isfinite(abs(pivot))) {
            fail(ErrorKind::numerical, "tridiagonal solve hit a zero pivot at row " + std::to_string(row));
        }
    }

    std::vector<T> lower_;
    std::vector<T> ratio_;      // upper_i / pivot_i
    std::vector<T> inv_pivot_;
};

}  // namespace infratl::pe
