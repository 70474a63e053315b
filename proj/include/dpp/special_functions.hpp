#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "dpp/errors.hpp"

namespace dpp {

using cplx = std::complex<double>;

// Specialization data for a symmetric Schur measure: c_k = rho(p_k)/k for
// k = 1..K, defining G(z) = sum c_k z^k - sum conj(c_k) z^{-k}, which is
// purely imaginary on the unit circle. radius_margin is the half-width of
// the annulus 1/(1+m) <= |z| <= 1+m where the truncation is trusted.
struct GCoefficients {
    std::vector<cplx> c;
    double radius_margin = 0.5;

    static GCoefficients plancherel(double theta) { return {{cplx(theta, 0.0)}, 0.5}; }

    bool in_annulus(cplx z) const {
        const double r = std::abs(z);
        return r > 0.0 && r <= 1.0 + radius_margin + 1e-15 &&
               r >= 1.0 / (1.0 + radius_margin) - 1e-15;
    }
};

inline cplx g_eval(const GCoefficients& g, cplx z) {
    if (!g.in_annulus(z)) throw domain_error("g_eval: z outside trusted annulus");
    cplx s = 0.0;
    cplx zp = 1.0, zm = 1.0;
    const cplx zi = 1.0 / z;
    for (const cplx& ck : g.c) {
        zp *= z;
        zm *= zi;
        s += ck * zp - std::conj(ck) * zm;
    }
    return s;
}

// z G'(z) = sum k c_k z^k + sum k conj(c_k) z^{-k}; real on |z| = 1.
inline double zg_prime(const GCoefficients& g, cplx z) {
    if (std::fabs(std::abs(z) - 1.0) > 1e-9)
        throw domain_error("zg_prime: |z| must be 1 within 1e-9");
    cplx s = 0.0;
    cplx zp = 1.0;
    for (std::size_t k = 0; k < g.c.size(); ++k) {
        zp *= z;
        s += static_cast<double>(k + 1) * g.c[k] * zp;
    }
    return 2.0 * s.real();  // the z^{-k} series is the conjugate on T
}

inline double zg_prime_angle(const GCoefficients& g, double phi) {
    return zg_prime(g, std::polar(1.0, phi));
}

struct QParam {
    double q = 0.0;
    double r = 0.0;  // q = exp(-r)

    explicit QParam(double q_) : q(q_) {
        if (!(q_ > 0.0 && q_ < 1.0)) throw domain_error("q must lie in (0,1)");
        r = -std::log(q_);
    }
    static QParam from_rate(double r_) {
        if (!(r_ > 0.0)) throw domain_error("rate r must be positive");
        return QParam(std::exp(-r_));
    }
};

// (x;q)_infty = prod_{k>=0} (1 - x q^k), truncated once q^k|x| < 1e-18 with a
// first-order tail correction exp(-x q^K / (1-q)).
inline cplx q_pochhammer(cplx x, double q) {
    if (!(q >= 0.0 && q < 1.0)) throw domain_error("q_pochhammer: q must lie in [0,1)");
    if (x == 0.0) return 1.0;
    if (q == 0.0) return 1.0 - x;
    cplx prod = 1.0;
    double scale = std::abs(x);
    double qk = 1.0;
    while (scale * qk >= 1e-18) {
        prod *= (1.0 - x * qk);
        qk *= q;
    }
    return prod * std::exp(-x * qk / (1.0 - q));
}

// Phi(t,z) from the plane-partition kernel; pole_error when a denominator
// factor vanishes within 1e-9.
inline cplx phi(int64_t t, cplx z, const QParam& qp) {
    const double q = qp.q;
    const double sq = std::sqrt(q);
    auto safe_inv_poch = [&](cplx x) {
        // 1 / (x;q)_infty with a proximity check on every factor
        cplx prod = 1.0;
        double scale = std::abs(x);
        double qk = 1.0;
        while (scale * qk >= 1e-18) {
            const cplx f = 1.0 - x * qk;
            if (std::abs(f) < 1e-9) throw pole_error("phi: pole within 1e-9 of z");
            prod *= f;
            qk *= q;
        }
        return 1.0 / (prod * std::exp(-x * qk / (1.0 - q)));
    };
    if (t >= 0)
        return q_pochhammer(sq / z, q) * safe_inv_poch(sq * std::pow(q, static_cast<double>(t)) * z);
    return q_pochhammer(sq * std::pow(q, static_cast<double>(-t)) / z, q) * safe_inv_poch(sq * z);
}

namespace detail {

// B_n / (n+1)! for the expansion Li2(z) = sum_n B_n u^{n+1}/(n+1)!,
// u = -log(1-z); converges fast for |u| < 2 pi.
inline const std::vector<double>& dilog_series_coeffs() {
    static const std::vector<double> coeffs = [] {
        constexpr int N = 40;
        std::vector<long double> b(N + 1, 0.0L);  // Bernoulli numbers, B1 = -1/2
        b[0] = 1.0L;
        for (int m = 1; m <= N; ++m) {
            long double s = 0.0L, binom = 1.0L;  // C(m+1, k)
            for (int k = 0; k < m; ++k) {
                s += binom * b[k];
                binom = binom * static_cast<long double>(m + 1 - k) / static_cast<long double>(k + 1);
            }
            b[m] = -s / static_cast<long double>(m + 1);
        }
        std::vector<double> out(N + 1);
        long double fact = 1.0L;  // (n+1)!
        for (int n = 0; n <= N; ++n) {
            fact *= static_cast<long double>(n + 1);
            out[n] = static_cast<double>(b[n] / fact);
        }
        return out;
    }();
    return coeffs;
}

inline cplx dilog_core(cplx z) {
    // requires |z| <= 1 and Re z <= 1/2
    const cplx u = -std::log(1.0 - z);
    const auto& a = dilog_series_coeffs();
    cplx sum = 0.0, up = 1.0;
    int small_streak = 0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        up *= u;
        if (a[n] == 0.0) continue;  // odd Bernoulli numbers vanish
        const cplx term = a[n] * up;
        sum += term;
        small_streak = (std::abs(term) < 1e-17 * (1.0 + std::abs(sum))) ? small_streak + 1 : 0;
        if (small_streak >= 2 && n > 4) break;
    }
    return sum;
}

}  // namespace detail

// dilog(1-z) = sum_{n>=1} z^n / n^2, analytically continued with the cut on
// z in (1, infinity). Inversion and reflection bring the argument into the
// fast-series region.
inline cplx dilog1m(cplx z) {
    constexpr double pi = std::numbers::pi;
    if (z == 0.0) return 0.0;
    if (std::fabs(z.imag()) < 1e-12 && z.real() > 1.0 + 1e-12)
        throw domain_error("dilog1m: argument on the branch cut (1,inf)");
    if (std::abs(z - 1.0) < 1e-15) return pi * pi / 6.0;
    if (std::abs(z) > 1.0) {
        const cplx inv = dilog1m(1.0 / z);
        const cplx l = std::log(-z);
        return -inv - pi * pi / 6.0 - 0.5 * l * l;
    }
    if (z.real() > 0.5) {
        const cplx refl = detail::dilog_core(1.0 - z);
        return pi * pi / 6.0 - std::log(z) * std::log(1.0 - z) - refl;
    }
    return detail::dilog_core(z);
}

// Steepest-descent action for the Schur kernel: S_u(z) = G(z) - u log z,
// principal branch; Re S_u = 0 on the unit circle.
inline cplx action_schur(const GCoefficients& g, double u, cplx z) {
    if (z.imag() == 0.0 && z.real() <= 0.0)
        throw domain_error("action_schur: z on the cut (-inf,0]");
    return g_eval(g, z) - u * std::log(z);
}

// Plane-partition action S(z; tau, chi) = -(tau/2+chi) log z
//   - dilog(1 - 1/z) + dilog(1 - e^{-tau} z);
// Re S = -(tau/2)(tau/2+chi) on the circle |z| = e^{tau/2}.
inline cplx action_pp(cplx z, double tau, double chi) {
    if (tau < 0.0) throw domain_error("action_pp: tau must be >= 0");
    if (z.imag() == 0.0 && z.real() <= 0.0)
        throw domain_error("action_pp: z on the cut (-inf,0]");
    return -(0.5 * tau + chi) * std::log(z) - dilog1m(1.0 / z) + dilog1m(std::exp(-tau) * z);
}

}  // namespace dpp
