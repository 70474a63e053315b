#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "dpp/errors.hpp"

namespace dpp {

using cplx = std::complex<double>;

struct QuadSettings {
    double tol = 1e-10;
    int max_nodes = 1 << 16;
    double eps = 0.05;  // contour separation from |z| = 1
};

struct CircleContour {
    cplx center{0.0, 0.0};
    double radius = 1.0;
    int nodes = 64;  // starting resolution, rounded up to a power of two, >= 8

    CircleContour() = default;
    CircleContour(cplx c, double r, int n = 64) : center(c), radius(r), nodes(n) {
        if (!(radius > 0.0)) throw domain_error("contour radius must be positive");
        int p = 8;
        while (p < nodes) p <<= 1;
        nodes = p;
    }
};

struct QuadratureResult {
    cplx value{0.0, 0.0};
    double error_estimate = 0.0;
    int nodes_used = 0;
};

// Deterministic pairwise summation; the reduction tree depends only on the
// element count, so results are independent of evaluation order upstream.
inline cplx pairwise_sum(std::span<const cplx> v) {
    if (v.size() <= 8) {
        cplx s = 0.0;
        for (const cplx& x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

namespace detail {

// Midpoint-offset trapezoid nodes z_j = c + R e^{i theta_j}; offsetting by
// half a step keeps the real axis (and its cuts/poles) off the node set.
inline std::vector<cplx> circle_nodes(const CircleContour& c, int n) {
    std::vector<cplx> z(static_cast<std::size_t>(n));
    const double step = 2.0 * std::numbers::pi / n;
    for (int j = 0; j < n; ++j) z[static_cast<std::size_t>(j)] = c.center + std::polar(c.radius, (j + 0.5) * step);
    return z;
}

}  // namespace detail

// (1/2 pi i) \oint f(z) dz over the circle, N-point trapezoid rule with N
// doubling until the successive difference drops below tol.
template <class F>
QuadratureResult integrate_circle(F&& f, const CircleContour& c, double tol,
                                  int max_nodes = 1 << 16) {
    if (!(tol > 0.0)) throw domain_error("integrate_circle: tol must be positive");
    cplx prev = 0.0;
    bool have_prev = false;
    for (int n = c.nodes; n <= max_nodes; n <<= 1) {
        const auto z = detail::circle_nodes(c, n);
        std::vector<cplx> terms(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) terms[j] = f(z[j]) * (z[j] - c.center);
        const cplx val = pairwise_sum(terms) / static_cast<double>(n);
        if (have_prev) {
            const double err = std::abs(val - prev);
            if (err < tol) return {val, err, n};
        }
        prev = val;
        have_prev = true;
    }
    throw nonconvergence_error("integrate_circle: node cap reached before tolerance");
}

// (1/2 pi i)^2 \oint\oint f(z,w) dz dw over two circles, tensor-product
// trapezoid with independent node doubling in each variable.
template <class F>
QuadratureResult double_contour(F&& f, const CircleContour& outer, const CircleContour& inner,
                                double tol, int max_nodes = 1 << 16) {
    if (!(tol > 0.0)) throw domain_error("double_contour: tol must be positive");
    if (std::fabs(outer.radius - inner.radius) < 1e-6)
        throw overlap_error("double_contour: contours too close for the 1/(z-w) factor");

    auto eval = [&](int nz, int nw) {
        const auto z = detail::circle_nodes(outer, nz);
        const auto w = detail::circle_nodes(inner, nw);
        std::vector<cplx> rows(z.size());
        std::vector<cplx> terms(w.size());
        for (std::size_t j = 0; j < z.size(); ++j) {
            for (std::size_t k = 0; k < w.size(); ++k)
                terms[k] = f(z[j], w[k]) * (w[k] - inner.center);
            rows[j] = pairwise_sum(terms) * (z[j] - outer.center);
        }
        return pairwise_sum(rows) / (static_cast<double>(nz) * static_cast<double>(nw));
    };

    int nz = outer.nodes, nw = inner.nodes;
    cplx val = eval(nz, nw);
    while (true) {
        const cplx vz = eval(nz * 2, nw);
        const cplx vw = eval(nz, nw * 2);
        const double errz = std::abs(vz - val), errw = std::abs(vw - val);
        if (errz + errw < tol) return {val, errz + errw, std::max(nz, nw)};
        bool advanced = false;
        if (errz >= tol / 2 && nz * 2 <= max_nodes) {
            nz *= 2;
            val = vz;
            advanced = true;
        }
        if (errw >= tol / 2 && nw * 2 <= max_nodes) {
            nw *= 2;
            val = (advanced ? eval(nz, nw) : vw);
            advanced = true;
        }
        if (!advanced)
            throw nonconvergence_error("double_contour: node cap reached before tolerance");
    }
}

// Same integral for separable integrands f(z,w) = a(z) b(w) / (z - w): the
// transcendental work is O(N) per variable and only the coupling is O(N^2).
// This is the engine behind the correlation-kernel quadratures.
template <class A, class B>
QuadratureResult separable_double_contour(A&& a, B&& b, const CircleContour& zc,
                                          const CircleContour& wc, double tol,
                                          int max_nodes = 1 << 16) {
    if (!(tol > 0.0)) throw domain_error("separable_double_contour: tol must be positive");
    if (std::fabs(zc.radius - wc.radius) < 1e-6)
        throw overlap_error("separable_double_contour: contours too close");

    auto eval = [&](int n) {
        const auto z = detail::circle_nodes(zc, n);
        const auto w = detail::circle_nodes(wc, n);
        std::vector<cplx> az(z.size()), bw(w.size()), terms(w.size()), rows(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) az[j] = a(z[j]) * (z[j] - zc.center);
        for (std::size_t k = 0; k < w.size(); ++k) bw[k] = b(w[k]) * (w[k] - wc.center);
        for (std::size_t j = 0; j < z.size(); ++j) {
            for (std::size_t k = 0; k < w.size(); ++k) terms[k] = bw[k] / (z[j] - w[k]);
            rows[j] = az[j] * pairwise_sum(terms);
        }
        return pairwise_sum(rows) / (static_cast<double>(n) * static_cast<double>(n));
    };

    const int n0 = std::max(zc.nodes, wc.nodes);
    cplx prev = eval(n0);
    for (int n = n0 * 2; n <= max_nodes; n <<= 1) {
        const cplx val = eval(n);
        const double err = std::abs(val - prev);
        if (err < tol) return {val, err, n};
        prev = val;
    }
    throw nonconvergence_error("separable_double_contour: node cap reached before tolerance");
}

namespace detail {

// 16-point Gauss-Legendre rule on [-1,1].
inline constexpr double kGaussX[8] = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274, 0.6178762444026438,
    0.7554044083550030, 0.8656312023878318, 0.9445750230732326, 0.9894009349916499};
inline constexpr double kGaussW[8] = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Integral of f over [a,b] (a > b allowed, giving the signed integral),
// composite 16-point Gauss with panel doubling.
template <class F>
std::pair<cplx, double> gauss_segment(F&& f, double a, double b, double tol, int max_panels = 4096) {
    auto eval = [&](int panels) {
        std::vector<cplx> vals;
        vals.reserve(static_cast<std::size_t>(panels) * 16);
        const double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            const double lo = a + p * h;
            const double mid = lo + 0.5 * h, half = 0.5 * h;
            for (int i = 0; i < 8; ++i) {
                vals.push_back(kGaussW[i] * half * f(mid + half * kGaussX[i]));
                vals.push_back(kGaussW[i] * half * f(mid - half * kGaussX[i]));
            }
        }
        return pairwise_sum(vals);
    };
    cplx prev = eval(1);
    for (int panels = 2; panels <= max_panels; panels *= 2) {
        const cplx val = eval(panels);
        const double err = std::abs(val - prev);
        if (err < tol) return {val, err};
        prev = val;
    }
    throw nonconvergence_error("gauss_segment: panel cap reached before tolerance");
}

}  // namespace detail

}  // namespace dpp
