#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "dpp/errors.hpp"

namespace dpp {

using cplx = std::complex<double>;

// Dense row-major complex matrix, sized for small pattern kernels.
struct ComplexMatrix {
    std::size_t n = 0;
    std::vector<cplx> a;

    ComplexMatrix() = default;
    explicit ComplexMatrix(std::size_t n_) : n(n_), a(n_ * n_, cplx{0.0, 0.0}) {}
    cplx& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// Determinant by partial-pivoting elimination, accumulated in extended
// precision; patterns are small (|m| <= 12) so conditioning is mild.
inline cplx det_lu(const ComplexMatrix& m) {
    const std::size_t n = m.n;
    if (n == 0) return 1.0;
    std::vector<std::complex<long double>> a(n * n);
    for (std::size_t i = 0; i < n * n; ++i)
        a[i] = std::complex<long double>(m.a[i].real(), m.a[i].imag());
    std::complex<long double> det = 1.0L;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        long double best = std::norm(a[c * n + c]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double v = std::norm(a[r * n + c]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0L) return 0.0;
        if (piv != c) {
            for (std::size_t j = c; j < n; ++j) std::swap(a[piv * n + j], a[c * n + j]);
            det = -det;
        }
        det *= a[c * n + c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const auto f = a[r * n + c] / a[c * n + c];
            for (std::size_t j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
        }
    }
    return {static_cast<double>(det.real()), static_cast<double>(det.imag())};
}

}  // namespace dpp
