#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <tuple>
#include <variant>
#include <vector>

#include "dpp/contour.hpp"
#include "dpp/errors.hpp"
#include "dpp/linalg.hpp"
#include "dpp/partitions.hpp"
#include "dpp/special_functions.hpp"

namespace dpp {

// ---------------------------------------------------------------------------
// Limit geometry on the unit circle: {z in T : zG'(z) >= u}
// ---------------------------------------------------------------------------

// Arcs stored as (start, end) sweeping counterclockwise, end > start, end may
// exceed pi for arcs wrapping through the angle cut. The diagonal density is
// (total measure) / (2 pi), which lies in [0,1] by construction.
struct ArcSet {
    std::vector<std::pair<double, double>> arcs;
    bool tangency_warning = false;

    double total_measure() const {
        double s = 0.0;
        for (auto& [a, b] : arcs) s += b - a;
        return s;
    }
};

// Minimum and maximum of zG'(z) on the unit circle: 4096-point scan refined
// by golden-section search to 1e-10.
inline std::pair<double, double> u_range(const GCoefficients& g) {
    constexpr int kGrid = 4096;
    constexpr double pi = std::numbers::pi;
    auto f = [&](double phi) { return zg_prime_angle(g, phi); };

    auto refine = [&](double lo, double hi, int sign) {
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = lo, b = hi;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = sign * f(c), fd = sign * f(d);
        while (b - a > 1e-10) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = sign * f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = sign * f(d);
            }
        }
        return f(0.5 * (a + b));
    };

    double vmin = f(-pi), vmax = vmin;
    int imin = 0, imax = 0;
    for (int i = 1; i < kGrid; ++i) {
        const double v = f(-pi + 2.0 * pi * i / kGrid);
        if (v < vmin) {
            vmin = v;
            imin = i;
        }
        if (v > vmax) {
            vmax = v;
            imax = i;
        }
    }
    const double h = 2.0 * pi / kGrid;
    const double pmin = -pi + imin * h, pmax = -pi + imax * h;
    return {refine(pmin - h, pmin + h, +1), refine(pmax - h, pmax + h, -1)};
}

// Arcs of {zG' >= u} by sign-change bracketing on a fine grid plus bisection
// to 1e-12. At u <= u_min the full circle is returned; at u >= u_max a
// degenerate zero-measure arc at the maximizer.
inline ArcSet sine_arcs(const GCoefficients& g, double u) {
    constexpr int kGrid = 4096;
    constexpr double pi = std::numbers::pi;
    auto f = [&](double phi) { return zg_prime_angle(g, phi) - u; };

    std::vector<double> roots;
    bool tangency = false;
    double prev_phi = -pi, prev_v = f(prev_phi);
    for (int i = 1; i <= kGrid; ++i) {
        const double phi = -pi + 2.0 * pi * i / kGrid;
        const double v = f(phi);
        if ((prev_v < 0.0) != (v < 0.0)) {
            double a = prev_phi, b = phi, fa = prev_v;
            while (b - a > 1e-12) {
                const double mid = 0.5 * (a + b);
                const double fm = f(mid);
                if ((fa < 0.0) == (fm < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            const double root = 0.5 * (a + b);
            const double deriv = (f(root + 5e-7) - f(root - 5e-7)) / 1e-6;
            if (std::fabs(deriv) < 1e-8) tangency = true;
            roots.push_back(root);
        }
        prev_phi = phi;
        prev_v = v;
    }

    ArcSet out;
    out.tangency_warning = tangency;
    if (roots.empty()) {
        if (f(0.0) >= 0.0) {
            out.arcs.push_back({-pi, pi});  // full circle
        } else {
            // density vanished: degenerate arc at the maximizer of zG'
            double best_phi = 0.0, best = -1e300;
            for (int i = 0; i < kGrid; ++i) {
                const double phi = -pi + 2.0 * pi * i / kGrid;
                const double v = zg_prime_angle(g, phi);
                if (v > best) {
                    best = v;
                    best_phi = phi;
                }
            }
            out.arcs.push_back({best_phi, best_phi});
        }
        return out;
    }
    // assemble arcs between consecutive roots where f > 0
    const std::size_t n = roots.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double a = roots[i];
        const double b = (i + 1 < n) ? roots[i + 1] : roots[0] + 2.0 * pi;
        const double mid = 0.5 * (a + b);
        if (f(mid >= pi ? mid - 2.0 * pi : mid) > 0.0) out.arcs.push_back({a, b});
    }
    return out;
}

// Discrete sine kernel built from the arcs: translation invariant, Hermitian,
// diagonal equal to the arc density.
inline cplx sine_kernel(const ArcSet& arcs, int64_t x, int64_t y) {
    constexpr double pi = std::numbers::pi;
    if (x == y) return {arcs.total_measure() / (2.0 * pi), 0.0};
    const double d = static_cast<double>(y - x);
    cplx s = 0.0;
    for (auto& [a, b] : arcs.arcs) {
        const cplx ea = std::polar(1.0, a * d), eb = std::polar(1.0, b * d);
        s += (ea - eb) / (cplx(0.0, 2.0 * pi) * static_cast<double>(x - y));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Plane-partition limit geometry
// ---------------------------------------------------------------------------

// Liquid region A = {(tau,chi): |2 cosh(tau/2) - e^{-chi}| < 2}.
inline bool region_a_contains(double tau, double chi) {
    return std::fabs(2.0 * std::cosh(0.5 * tau) - std::exp(-chi)) < 2.0;
}

// Intersection of the circles C(0, e^{-tau/2}) and C(1, e^{-tau/4-chi/2})
// with positive imaginary part; e^{tau} z solves the critical-point quadratic
// (1 - 1/w)(1 - e^{-tau} w) = e^{-tau/2-chi}.
struct CriticalPointPP {
    cplx z;
    double tau = 0.0, chi = 0.0;
    bool near_boundary = false;  // conditioning warning: discriminant ~ 0
};

inline CriticalPointPP critical_point_pp(double tau, double chi) {
    if (!region_a_contains(tau, chi)) throw region_error("critical_point_pp: (tau,chi) not in A");
    // w^2 - e^{tau}(1 + e^{-tau} - c) w + e^{tau} = 0, w = e^{tau} z
    const double c = std::exp(-0.5 * tau - chi);
    const double et = std::exp(tau);
    const double B = et * (1.0 + 1.0 / et - c);
    const double disc = B * B - 4.0 * et;
    CriticalPointPP out;
    out.tau = tau;
    out.chi = chi;
    out.near_boundary = (std::fabs(disc) < 1e-10);
    if (disc >= 0.0) throw region_error("critical_point_pp: real roots (boundary reached)");
    const cplx w(0.5 * B, 0.5 * std::sqrt(-disc));
    out.z = w / et;
    return out;
}

// Extended sine kernel (1/2 pi i) \int_{conj z}^{z} (1-w)^{dt} w^{-dh-dt/2} dw/w
// along the circle |w| = |z(tau,chi)|, crossing (0,1) for dt >= 0 and
// (-infinity,0) for dt < 0. dh is passed doubled (dh2 = 2 dh); the parity
// dh - dt/2 in Z, equivalently dh2 = dt mod 2, makes the integrand
// single-valued. The value is real.
inline double extended_sine_kernel(double tau, double chi, int64_t dt, int64_t dh2,
                                   double tol = 1e-12) {
    if (((dh2 - dt) & 1) != 0)
        throw parity_error("extended_sine_kernel: dh - dt/2 must be an integer");
    const auto cp = critical_point_pp(tau, chi);
    const double R = std::abs(cp.z);
    const double phi_ang = std::arg(cp.z);  // in (0, pi)
    const int64_t npow = -(dh2 + dt) / 2 - 1;  // exponent of w after dw/w
    auto f = [&](double theta) {
        const cplx w = std::polar(R, theta);
        const cplx val = std::pow(1.0 - w, static_cast<double>(dt)) *
                         std::pow(w, static_cast<double>(npow));
        return val * cplx(0.0, 1.0) * w;  // dw = i w dtheta
    };
    constexpr double pi = std::numbers::pi;
    double a, b;
    if (dt >= 0) {
        a = -phi_ang;
        b = phi_ang;  // crosses the positive real axis
    } else {
        a = -phi_ang;
        b = phi_ang - 2.0 * pi;  // crosses the negative real axis
    }
    auto [val, err] = detail::gauss_segment(f, a, b, tol);
    (void)err;
    const cplx out = val / cplx(0.0, 2.0 * pi);
    return out.real();
}

// ---------------------------------------------------------------------------
// Finite-parameter correlation kernels (double contour integrals)
// ---------------------------------------------------------------------------

// K_alpha(x,y) = (1/2 pi i)^2 \oint_{|z|=R} \oint_{|w|=1/R}
//     exp(alpha (G(z)-G(w))) z^{-x-1} w^{y} / (z-w) dz dw,  R = 1 + eps.
// Normalization fixed against the vacuum measure (G = 0 gives 1{x=y<=-1})
// and the enumeration oracle; Hermitian, diagonal in [0,1].
class SchurKernel {
  public:
    SchurKernel(GCoefficients g, double alpha, QuadSettings qs = {})
        : g_(std::move(g)), alpha_(alpha), qs_(qs) {
        if (!(alpha > 0.0)) throw domain_error("SchurKernel: alpha must be positive");
        auto [lo, hi] = u_range(g_);
        umin_ = lo;
        umax_ = hi;
        const double d = std::max({std::fabs(lo), std::fabs(hi), 1e-9});
        // keep |Re alpha G| bounded on the contours so the trapezoid sums do
        // not cancel catastrophically at large alpha
        eps_ = std::min(qs_.eps * std::min(1.0, g_.radius_margin), 2.5 / (alpha_ * d));
        eps_ = std::max(eps_, 1e-7);
        R_ = 1.0 + eps_;
    }

    double alpha() const { return alpha_; }
    const GCoefficients& coefficients() const { return g_; }
    std::pair<double, double> density_band() const { return {umin_, umax_}; }

    QuadratureResult eval(int64_t x, int64_t y) const {
        cplx prev = 0.0;
        bool have = false;
        for (int n = 64; n <= qs_.max_nodes; n <<= 1) {
            const Level& L = level(n);
            double amp = 0.0;
            const cplx val = entry(L, x, y, &amp);
            if (have) {
                const double err = std::abs(val - prev);
                if (err < qs_.tol || err < 4e-15 * amp) return {val, err, n};
            }
            prev = val;
            have = true;
        }
        throw nonconvergence_error("SchurKernel: node cap reached before tolerance");
    }

    cplx operator()(int64_t x, int64_t y) const { return eval(x, y).value; }

    // Kernel matrix on a site list, evaluated with shared node tables; the
    // doubling stops when the largest entry movement is below tol.
    ComplexMatrix matrix(std::span<const int64_t> sites) const {
        const std::size_t m = sites.size();
        ComplexMatrix prev(m);
        bool have = false;
        for (int n = 64; n <= qs_.max_nodes; n <<= 1) {
            const Level& L = level(n);
            ComplexMatrix cur(m);
            const std::size_t N = L.z.size();
            std::vector<cplx> P(N * m), Q(N * m);
            std::vector<double> sa(m, 0.0), sb(m, 0.0);
            for (std::size_t s = 0; s < m; ++s)
                for (std::size_t j = 0; j < N; ++j) {
                    P[j * m + s] = L.az[j] * std::pow(L.z[j], static_cast<double>(-sites[s] - 1));
                    Q[j * m + s] = L.bw[j] * std::pow(L.w[j], static_cast<double>(sites[s]));
                    sa[s] += std::abs(P[j * m + s]);
                    sb[s] += std::abs(Q[j * m + s]);
                }
            // T[j][s] = sum_k Q[k][s] / (z_j - w_k)
            std::vector<cplx> T(N * m), invrow(N);
            for (std::size_t j = 0; j < N; ++j) {
                for (std::size_t k = 0; k < N; ++k) invrow[k] = 1.0 / (L.z[j] - L.w[k]);
                for (std::size_t s = 0; s < m; ++s) {
                    cplx acc = 0.0;
                    for (std::size_t k = 0; k < N; ++k) acc += invrow[k] * Q[k * m + s];
                    T[j * m + s] = acc;
                }
            }
            for (std::size_t s1 = 0; s1 < m; ++s1)
                for (std::size_t s2 = 0; s2 < m; ++s2) {
                    cplx acc = 0.0;
                    for (std::size_t j = 0; j < N; ++j) acc += P[j * m + s1] * T[j * m + s2];
                    cur(s1, s2) = acc / (static_cast<double>(N) * static_cast<double>(N));
                }
            if (have) {
                double err = 0.0;
                for (std::size_t i = 0; i < m * m; ++i) err = std::max(err, std::abs(cur.a[i] - prev.a[i]));
                double amp = 0.0;
                const double nn = static_cast<double>(N);
                for (std::size_t s1 = 0; s1 < m; ++s1)
                    for (std::size_t s2 = 0; s2 < m; ++s2)
                        amp = std::max(amp, (sa[s1] / nn) * (sb[s2] / nn));
                amp /= std::fabs(R_ - 1.0 / R_);
                if (err < qs_.tol || err < 4e-15 * amp) return cur;
            }
            prev = std::move(cur);
            have = true;
        }
        throw nonconvergence_error("SchurKernel::matrix: node cap reached before tolerance");
    }

  private:
    struct Level {
        std::vector<cplx> z, w;    // outer |z| = R, inner |w| = 1/R
        std::vector<cplx> az, bw;  // exp(+alpha G(z)), exp(-alpha G(w)) with node weights
    };

    const Level& level(int n) const {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(n);
        if (it != cache_.end()) return it->second;
        Level L;
        L.z = detail::circle_nodes({cplx(0, 0), R_, n}, n);
        L.w = detail::circle_nodes({cplx(0, 0), 1.0 / R_, n}, n);
        L.az.resize(L.z.size());
        L.bw.resize(L.w.size());
        for (std::size_t j = 0; j < L.z.size(); ++j)
            L.az[j] = std::exp(alpha_ * g_eval(g_, L.z[j])) * L.z[j];
        for (std::size_t k = 0; k < L.w.size(); ++k)
            L.bw[k] = std::exp(-alpha_ * g_eval(g_, L.w[k])) * L.w[k];
        return cache_.emplace(n, std::move(L)).first->second;
    }

    cplx entry(const Level& L, int64_t x, int64_t y, double* amp = nullptr) const {
        const std::size_t N = L.z.size();
        std::vector<cplx> rows(N), terms(N);
        double sa = 0.0, sb = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            terms[k] = L.bw[k] * std::pow(L.w[k], static_cast<double>(y));
            sb += std::abs(terms[k]);
        }
        std::vector<cplx> inner(N);
        for (std::size_t j = 0; j < N; ++j) {
            for (std::size_t k = 0; k < N; ++k) inner[k] = terms[k] / (L.z[j] - L.w[k]);
            const cplx aj = L.az[j] * std::pow(L.z[j], static_cast<double>(-x - 1));
            sa += std::abs(aj);
            rows[j] = aj * pairwise_sum(inner);
        }
        if (amp) {
            const double nn = static_cast<double>(N);
            *amp = (sa / nn) * (sb / nn) / std::fabs(R_ - 1.0 / R_);
        }
        return pairwise_sum(rows) / (static_cast<double>(N) * static_cast<double>(N));
    }

    GCoefficients g_;
    double alpha_;
    QuadSettings qs_;
    double umin_ = 0.0, umax_ = 0.0, eps_ = 0.0, R_ = 1.0;
    mutable std::map<int, Level> cache_;
    mutable std::mutex mu_;
};

// K_q(t1,h1;t2,h2) = (1/2 pi i)^2 \oint\oint Phi(t1,z)/Phi(t2,w)
//     z^{-p1} w^{p2-1} / (z-w) dz dw,  p = h + (|t|+1)/2 (an integer),
// with |z| = 1+eps, |w| = 1/(1+eps) for t1 >= t2 and radii swapped otherwise.
// Normalization fixed against the q -> 0 vacuum and the enumeration oracle.
// Real-valued but not symmetric.
class PlanePartitionKernel {
  public:
    explicit PlanePartitionKernel(QParam q, QuadSettings qs = {}) : q_(q), qs_(qs) {
        set_eps(std::min(qs_.eps, 0.5 * (std::exp(0.5 * q_.r) - 1.0)));
    }

    const QParam& q() const { return q_; }

    QuadratureResult eval(SitePP s1, SitePP s2) const {
        if (!s1.parity_ok() || !s2.parity_ok())
            throw parity_error("PlanePartitionKernel: site violates h + (|t|+1)/2 in Z");
        try {
            return eval_at_eps(s1, s2, eps_);
        } catch (const pole_error&) {
            return eval_at_eps(s1, s2, 0.5 * eps_);  // shrink once, then fail
        }
    }

    double operator()(SitePP s1, SitePP s2) const { return eval(s1, s2).value.real(); }

    ComplexMatrix matrix(std::span<const SitePP> sites) const {
        const std::size_t m = sites.size();
        ComplexMatrix out(m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) out(i, j) = eval(sites[i], sites[j]).value;
        return out;
    }

  private:
    static int64_t site_power(SitePP s) { return (s.h2 + iabs(s.t) + 1) / 2; }

    void set_eps(double e) {
        eps_ = std::max(e, 1e-7);
        R_ = 1.0 + eps_;
    }

    QuadratureResult eval_at_eps(SitePP s1, SitePP s2, double eps) const {
        const double R = 1.0 + eps;
        // Scale both contours to the local saddle radius: a pole-free
        // deformation (the Pochhammer poles and zeros stay on their sides for
        // eps <= r/4), so the value is unchanged, while the integrand stays
        // of order one for sites far from the origin where the unit circles
        // would cancel catastrophically.
        const double c = std::exp(0.25 * q_.r * static_cast<double>(s1.t + s2.t));
        const double Rz = c * ((s1.t >= s2.t) ? R : 1.0 / R);
        const double Rw = c * ((s1.t >= s2.t) ? 1.0 / R : R);
        const int64_t p1 = site_power(s1), p2 = site_power(s2);
        cplx prev = 0.0;
        bool have = false;
        for (int n = 64; n <= qs_.max_nodes; n <<= 1) {
            const auto& fz = phi_nodes(s1.t, Rz, n);
            const auto& fw = phi_nodes(s2.t, Rw, n);
            const auto z = detail::circle_nodes({cplx(0, 0), Rz, n}, n);
            const auto w = detail::circle_nodes({cplx(0, 0), Rw, n}, n);
            std::vector<cplx> rows(z.size()), inner(w.size()), bw(w.size());
            double sa = 0.0, sb = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) {
                bw[k] = std::pow(w[k], static_cast<double>(p2 - 1)) / fw[k] * w[k];
                sb += std::abs(bw[k]);
            }
            for (std::size_t j = 0; j < z.size(); ++j) {
                for (std::size_t k = 0; k < w.size(); ++k) inner[k] = bw[k] / (z[j] - w[k]);
                const cplx aj = fz[j] * std::pow(z[j], static_cast<double>(-p1)) * z[j];
                sa += std::abs(aj);
                rows[j] = aj * pairwise_sum(inner);
            }
            const cplx val = pairwise_sum(rows) / (static_cast<double>(n) * static_cast<double>(n));
            if (have) {
                const double err = std::abs(val - prev);
                // intrinsic rounding scale of the cancelling double sum
                const double floor_ =
                    4e-15 * (sa / n) * (sb / n) / std::fabs(Rz - Rw);
                if (err < qs_.tol || err < floor_) return {val, err, n};
            }
            prev = val;
            have = true;
        }
        throw nonconvergence_error("PlanePartitionKernel: node cap reached before tolerance");
    }

    const std::vector<cplx>& phi_nodes(int64_t t, double radius, int n) const {
        const auto key = std::make_tuple(t, radius, n);
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const auto z = detail::circle_nodes({cplx(0, 0), radius, n}, n);
        std::vector<cplx> vals(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) vals[j] = phi(t, z[j], q_);
        return cache_.emplace(key, std::move(vals)).first->second;
    }

    QParam q_;
    QuadSettings qs_;
    double eps_ = 0.0, R_ = 1.0;
    mutable std::map<std::tuple<int64_t, double, int>, std::vector<cplx>> cache_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Hardy-space projection kernel (independent cross-check of SchurKernel)
// ---------------------------------------------------------------------------

// K_F(x,y) = sum_{n=0}^{cutoff} Fhat(x-n) conj(Fhat(y-n)) for
// F(z) = exp(alpha G(1/z)): the projection onto span{F z^n, n >= 0}.
// With the vacuum-normalized SchurKernel the reflection identity reads
// K_F(x,y) = K_alpha(-x-1, -y-1).
struct FourierProjectionResult {
    cplx value;
    double tail_term = 0.0;
    bool truncation_warning = false;
};

class FourierProjectionKernel {
  public:
    FourierProjectionKernel(GCoefficients g, double alpha, int cutoff = 64,
                            QuadSettings qs = {})
        : g_(std::move(g)), alpha_(alpha), cutoff_(cutoff), qs_(qs) {
        if (!(alpha > 0.0)) throw domain_error("FourierProjectionKernel: alpha must be positive");
        if (cutoff < 1) throw domain_error("FourierProjectionKernel: cutoff must be >= 1");
    }

    FourierProjectionResult eval(int64_t x, int64_t y) const {
        std::vector<cplx> terms;
        terms.reserve(static_cast<std::size_t>(cutoff_) + 1);
        for (int n = 0; n <= cutoff_; ++n)
            terms.push_back(fhat(x - n) * std::conj(fhat(y - n)));
        FourierProjectionResult out;
        out.value = pairwise_sum(terms);
        out.tail_term = std::abs(terms.back());
        out.truncation_warning = out.tail_term > 1e-12;
        return out;
    }

    cplx operator()(int64_t x, int64_t y) const { return eval(x, y).value; }

  private:
    cplx fhat(int64_t k) const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(k);
            if (it != cache_.end()) return it->second;
        }
        auto f = [&](cplx z) { return std::exp(alpha_ * g_eval(g_, 1.0 / z)) * std::pow(z, static_cast<double>(-k - 1)); };
        const cplx val = integrate_circle(f, {cplx(0, 0), 1.0, 64}, qs_.tol, qs_.max_nodes).value;
        std::lock_guard<std::mutex> lock(mu_);
        return cache_.emplace(k, val).first->second;
    }

    GCoefficients g_;
    double alpha_;
    int cutoff_;
    QuadSettings qs_;
    mutable std::map<int64_t, cplx> cache_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Kernel specifications (dispatch layer used by the determinant machinery)
// ---------------------------------------------------------------------------

struct SchurSpec {
    GCoefficients g;
    double alpha = 1.0;
    QuadSettings quad{};
};

struct SineSpec {
    GCoefficients g;
    double u = 0.0;
};

struct PPSpec {
    QParam q;
    QuadSettings quad{};
};

struct ExtendedSineSpec {
    double tau = 0.0, chi = 0.0;
    double tol = 1e-12;
};

using KernelSpecZ = std::variant<SchurSpec, SineSpec>;
using KernelSpecPP = std::variant<PPSpec, ExtendedSineSpec>;

inline ComplexMatrix kernel_matrix(const KernelSpecZ& spec, std::span<const int64_t> sites) {
    ComplexMatrix out(sites.size());
    if (const auto* s = std::get_if<SchurSpec>(&spec)) {
        SchurKernel k(s->g, s->alpha, s->quad);
        return k.matrix(sites);
    }
    const auto& s = std::get<SineSpec>(spec);
    const ArcSet arcs = sine_arcs(s.g, s.u);
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            out(i, j) = sine_kernel(arcs, sites[i], sites[j]);
    return out;
}

inline ComplexMatrix kernel_matrix(const KernelSpecPP& spec, std::span<const SitePP> sites) {
    ComplexMatrix out(sites.size());
    if (const auto* s = std::get_if<PPSpec>(&spec)) {
        PlanePartitionKernel k(s->q, s->quad);
        return k.matrix(sites);
    }
    const auto& s = std::get<ExtendedSineSpec>(spec);
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            out(i, j) = extended_sine_kernel(s.tau, s.chi, sites[i].t - sites[j].t,
                                             sites[i].h2 - sites[j].h2, s.tol);
    return out;
}

}  // namespace dpp
