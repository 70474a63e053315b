#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "dpp/errors.hpp"
#include "dpp/kernels.hpp"
#include "dpp/process.hpp"

namespace dpp {

// ---------------------------------------------------------------------------
// Test functions: continuous, compactly supported, evaluable anywhere
// ---------------------------------------------------------------------------

class TestFunction1D {
  public:
    static TestFunction1D bump(double center, double width) {
        TestFunction1D f;
        f.lo_ = center - width;
        f.hi_ = center + width;
        f.eval_ = [center, width](double x) {
            const double s = (x - center) / width;
            const double d = 1.0 - s * s;
            return d > 0.0 ? std::exp(1.0 - 1.0 / d) : 0.0;
        };
        return f;
    }
    static TestFunction1D polynomial(std::vector<double> coeffs, double lo, double hi) {
        if (!(lo < hi)) throw domain_error("TestFunction1D: empty support");
        TestFunction1D f;
        f.lo_ = lo;
        f.hi_ = hi;
        f.eval_ = [c = std::move(coeffs), lo, hi](double x) {
            if (x < lo || x > hi) return 0.0;
            double v = 0.0;
            for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
            return v;
        };
        return f;
    }
    static TestFunction1D tabulated(std::vector<double> grid, std::vector<double> values) {
        if (grid.size() != values.size() || grid.size() < 2)
            throw domain_error("TestFunction1D: tabulated needs matching grid/values");
        if (!std::is_sorted(grid.begin(), grid.end()))
            throw domain_error("TestFunction1D: tabulated grid must be sorted");
        TestFunction1D f;
        f.lo_ = grid.front();
        f.hi_ = grid.back();
        f.eval_ = [g = std::move(grid), v = std::move(values)](double x) {
            if (x <= g.front() || x >= g.back()) {
                return (x == g.front()) ? v.front() : (x == g.back() ? v.back() : 0.0);
            }
            const auto it = std::upper_bound(g.begin(), g.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - g.begin());
            const double t = (x - g[i - 1]) / (g[i] - g[i - 1]);
            return v[i - 1] + t * (v[i] - v[i - 1]);
        };
        return f;
    }

    double operator()(double x) const { return (x < lo_ || x > hi_) ? 0.0 : eval_(x); }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }

  private:
    double lo_ = 0.0, hi_ = 0.0;
    std::function<double(double)> eval_;
};

class TestFunction2D {
  public:
    static TestFunction2D bump(double cx, double cy, double wx, double wy) {
        TestFunction2D f;
        f.box_ = {cx - wx, cx + wx, cy - wy, cy + wy};
        f.eval_ = [=](double x, double y) {
            const double sx = (x - cx) / wx, sy = (y - cy) / wy;
            const double dx = 1.0 - sx * sx, dy = 1.0 - sy * sy;
            if (dx <= 0.0 || dy <= 0.0) return 0.0;
            return std::exp(2.0 - 1.0 / dx - 1.0 / dy);
        };
        return f;
    }
    static TestFunction2D polynomial(std::vector<double> coeffs_xy, std::size_t deg_x,
                                     std::array<double, 4> box) {
        // coeffs_xy[i + j*(deg_x+1)] multiplies x^i y^j on the box
        TestFunction2D f;
        f.box_ = box;
        f.eval_ = [c = std::move(coeffs_xy), deg_x, box](double x, double y) {
            if (x < box[0] || x > box[1] || y < box[2] || y > box[3]) return 0.0;
            double v = 0.0, ypow = 1.0;
            const std::size_t nx = deg_x + 1;
            for (std::size_t j = 0; j * nx < c.size(); ++j) {
                double row = 0.0;
                for (std::size_t i = nx; i-- > 0;) row = row * x + c[j * nx + i];
                v += row * ypow;
                ypow *= y;
            }
            return v;
        };
        return f;
    }

    double operator()(double x, double y) const {
        if (x < box_[0] || x > box_[1] || y < box_[2] || y > box_[3]) return 0.0;
        return eval_(x, y);
    }
    // support bounding box: {x_lo, x_hi, y_lo, y_hi}
    const std::array<double, 4>& support_box() const { return box_; }

  private:
    std::array<double, 4> box_{0, 0, 0, 0};
    std::function<double(double, double)> eval_;
};

// ---------------------------------------------------------------------------
// Window configurations (finite 0/1 views of a sampled configuration)
// ---------------------------------------------------------------------------

struct WindowConfigZ {
    WindowZ window;
    std::vector<uint8_t> occupied;  // indexed by x - window.lo

    bool occupied_at(int64_t x) const {
        if (x < window.lo || x > window.hi) throw coverage_error("site outside window");
        return occupied[static_cast<std::size_t>(x - window.lo)] != 0;
    }
    static WindowConfigZ from_partition(const Partition& lam, WindowZ w) {
        WindowConfigZ cfg;
        cfg.window = w;
        cfg.occupied.assign(static_cast<std::size_t>(w.hi - w.lo + 1), 0);
        for (int64_t x : partition_points(lam, w))
            cfg.occupied[static_cast<std::size_t>(x - w.lo)] = 1;
        return cfg;
    }
};

struct WindowConfigPP {
    WindowPP window;
    std::vector<uint8_t> occupied;  // row-major over (t, h2)

    std::size_t index(int64_t t, int64_t h2) const {
        return static_cast<std::size_t>((t - window.t_lo) *
                                        (window.h2_hi - window.h2_lo + 1) +
                                        (h2 - window.h2_lo));
    }
    bool occupied_at(int64_t t, int64_t h2) const {
        if (t < window.t_lo || t > window.t_hi || h2 < window.h2_lo || h2 > window.h2_hi)
            throw coverage_error("site outside window");
        return occupied[index(t, h2)] != 0;
    }
    static WindowConfigPP from_plane_partition(const PlanePartition& pi, WindowPP w) {
        WindowConfigPP cfg;
        cfg.window = w;
        cfg.occupied.assign(static_cast<std::size_t>((w.t_hi - w.t_lo + 1) *
                                                     (w.h2_hi - w.h2_lo + 1)),
                            0);
        for (const auto& s : pp_points(pi, w)) cfg.occupied[cfg.index(s.t, s.h2)] = 1;
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// Empirical pattern statistics
// ---------------------------------------------------------------------------

// Sigma(f, m, alpha) = (1/alpha) sum_{x in [alpha u_min, alpha u_max] cap Z}
//   f(x/alpha) 1{m + x subset config}.
inline double empirical_statistic_schur(const WindowConfigZ& config, const TestFunction1D& f,
                                        const PatternZ& m, double alpha,
                                        const GCoefficients& g) {
    const auto [umin, umax] = u_range(g);
    const int64_t mbar = sup_norm(m);
    const auto xlo = static_cast<int64_t>(std::ceil(alpha * umin - 1e-12));
    const auto xhi = static_cast<int64_t>(std::floor(alpha * umax + 1e-12));
    if (config.window.lo > xlo - mbar || config.window.hi < xhi + mbar)
        throw coverage_error("empirical_statistic_schur: window must cover "
                             "[alpha u_min - |m|, alpha u_max + |m|]");
    double s = 0.0;
    for (int64_t x = xlo; x <= xhi; ++x) {
        const double fx = f(static_cast<double>(x) / alpha);
        if (fx == 0.0) continue;
        bool all = true;
        for (int64_t mi : m)
            if (!config.occupied_at(mi + x)) {
                all = false;
                break;
            }
        if (all) s += fx;
    }
    return s / alpha;
}

// Sigma(f, m, r) = r^2 sum f(rt, rh) 1{(t,h)+m subset config} over translate
// sites (t,h) in r^{-1}A with h + t/2 integer (the lattice of translations
// preserving the parity of valid patterns; unit density, so the Riemann sum
// converges to the plain integral over A).
inline double empirical_statistic_pp(const WindowConfigPP& config, const TestFunction2D& f,
                                     const PatternPP& m, double r) {
    const auto& box = f.support_box();
    const auto tlo = static_cast<int64_t>(std::ceil(box[0] / r - 1e-12));
    const auto thi = static_cast<int64_t>(std::floor(box[1] / r + 1e-12));
    double s = 0.0;
    for (int64_t t = tlo; t <= thi; ++t) {
        int64_t h2lo = static_cast<int64_t>(std::ceil(2.0 * box[2] / r - 1e-12));
        if (((h2lo - t) & 1) != 0) ++h2lo;  // h + t/2 in Z  <=>  h2 = t (mod 2)
        const auto h2hi = static_cast<int64_t>(std::floor(2.0 * box[3] / r + 1e-12));
        for (int64_t h2 = h2lo; h2 <= h2hi; h2 += 2) {
            if (!region_a_contains(r * static_cast<double>(t), 0.5 * r * static_cast<double>(h2)))
                continue;
            const double fx = f(r * static_cast<double>(t), 0.5 * r * static_cast<double>(h2));
            if (fx == 0.0) continue;
            bool all = true;
            for (const auto& mi : m)
                if (!config.occupied_at(t + mi.t, h2 + mi.h2)) {
                    all = false;
                    break;
                }
            if (all) s += fx;
        }
    }
    return r * r * s;
}

// ---------------------------------------------------------------------------
// Limit integrals
// ---------------------------------------------------------------------------

struct IntegralResult {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

template <class F>
void adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth, IntegralResult& out) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = (left + right - whole) / 15.0;
    if (depth <= 0 || std::fabs(err) < tol) {
        out.value += left + right + err;
        out.error += std::fabs(err);
        return;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, out);
    adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, out);
}

template <class F>
IntegralResult integrate_adaptive(const F& f, double a, double b, double tol) {
    IntegralResult out;
    if (!(a < b)) return out;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 28, out);
    return out;
}

}  // namespace detail

// I(f, m) = int f(u) E_{S(u)}[c_m] du over [u_min, u_max], with the interval
// split where the arc count L(u) changes.
inline IntegralResult limit_integral_schur(const TestFunction1D& f, const PatternZ& m,
                                           const GCoefficients& g, double tol) {
    if (!(tol > 0.0)) throw domain_error("limit_integral_schur: tol must be positive");
    auto [umin, umax] = u_range(g);
    const double lo = std::max(umin, f.support_lo());
    const double hi = std::min(umax, f.support_hi());
    IntegralResult out;
    if (!(lo < hi)) return out;

    auto integrand = [&](double u) {
        if (m.empty()) return f(u);
        return f(u) * pattern_probability(KernelSpecZ{SineSpec{g, u}}, m);
    };
    // locate arc-count changes on a probe grid
    constexpr int kProbe = 128;
    std::vector<double> cuts{lo};
    std::size_t prevL = sine_arcs(g, lo + 1e-12).arcs.size();
    for (int i = 1; i <= kProbe; ++i) {
        const double u = lo + (hi - lo) * i / kProbe;
        const std::size_t L = sine_arcs(g, std::min(u, hi - 1e-12)).arcs.size();
        if (L != prevL) {
            cuts.push_back(u);
            prevL = L;
        }
    }
    cuts.push_back(hi);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double seg_tol = tol * (cuts[i + 1] - cuts[i]) / (hi - lo);
        const auto seg = detail::integrate_adaptive(integrand, cuts[i], cuts[i + 1], seg_tol);
        out.value += seg.value;
        out.error += seg.error;
    }
    return out;
}

// I(f, m) = int_A f(tau,chi) E_{(tau,chi)}[c_m] dtau dchi by adaptive cell
// quartering; straddling boundary cells are refined until their worst-case
// contribution is below the budget and then counted into the error.
inline IntegralResult limit_integral_pp(const TestFunction2D& f, const PatternPP& m, double tol,
                                        long max_cells = 2000000) {
    if (!(tol > 0.0)) throw domain_error("limit_integral_pp: tol must be positive");
    const auto& box = f.support_box();
    IntegralResult out;
    if (!(box[0] < box[1] && box[2] < box[3])) return out;

    auto density = [&](double tau, double chi) {
        const double fx = f(tau, chi);
        if (fx == 0.0) return 0.0;
        if (m.empty()) return fx;
        return fx * pattern_probability(KernelSpecPP{ExtendedSineSpec{tau, chi, 1e-10}}, m);
    };

    struct Cell {
        double t0, t1, c0, c1;
        int depth;
    };
    std::vector<Cell> stack{{box[0], box[1], box[2], box[3], 0}};
    const double total_area = (box[1] - box[0]) * (box[3] - box[2]);
    const double total_side = std::max(box[1] - box[0], box[3] - box[2]);
    long cells = 0;
    while (!stack.empty()) {
        if (++cells > max_cells)
            throw nonconvergence_error("limit_integral_pp: tolerance not reached within cell cap");
        const Cell c = stack.back();
        stack.pop_back();
        const double area = (c.t1 - c.t0) * (c.c1 - c.c0);
        const double side = std::max(c.t1 - c.t0, c.c1 - c.c0);
        double gmin = 1e300, gmax = -1e300, fmax = 0.0;
        for (int i = 0; i <= 2; ++i)
            for (int j = 0; j <= 2; ++j) {
                const double tau = c.t0 + 0.5 * i * (c.t1 - c.t0);
                const double chi = c.c0 + 0.5 * j * (c.c1 - c.c0);
                const double g = std::fabs(2.0 * std::cosh(0.5 * tau) - std::exp(-chi));
                gmin = std::min(gmin, g);
                gmax = std::max(gmax, g);
                fmax = std::max(fmax, std::fabs(f(tau, chi)));
            }
        // Lipschitz bound of |2 cosh(tau/2) - e^{-chi}| over the cell turns the
        // probe values into certificates: any point is within dmax of a probe
        const double lip = std::sinh(0.5 * std::max(std::fabs(c.t0), std::fabs(c.t1))) +
                           std::exp(-c.c0);
        const double dmax =
            0.25 * std::hypot(c.t1 - c.t0, c.c1 - c.c0) * lip;
        // interior budget proportional to area; straddling budget proportional
        // to linear size, so the total boundary error stays below ~tol while
        // the refinement still terminates
        const double budget = tol * std::max(area / total_area, 1e-9);
        const double straddle_budget = 0.25 * tol * side / total_side;
        if (gmin >= 2.0 + dmax) continue;  // certainly outside A: contributes nothing
        if (gmax <= 2.0 - dmax) {
            // interior cell: tensor Simpson with one refinement comparison
            auto simpson9 = [&](double t0, double t1, double c0, double c1) {
                double acc = 0.0;
                static const double wq[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
                for (int i = 0; i <= 2; ++i)
                    for (int j = 0; j <= 2; ++j)
                        acc += wq[i] * wq[j] *
                               density(t0 + 0.5 * i * (t1 - t0), c0 + 0.5 * j * (c1 - c0));
                return acc * (t1 - t0) * (c1 - c0);
            };
            const double coarse = simpson9(c.t0, c.t1, c.c0, c.c1);
            const double tm = 0.5 * (c.t0 + c.t1), cm = 0.5 * (c.c0 + c.c1);
            const double fine = simpson9(c.t0, tm, c.c0, cm) + simpson9(tm, c.t1, c.c0, cm) +
                                simpson9(c.t0, tm, cm, c.c1) + simpson9(tm, c.t1, cm, c.c1);
            const double err = std::fabs(fine - coarse) / 15.0;
            if (err < budget || c.depth >= 26) {
                out.value += fine;
                out.error += err;
                continue;
            }
            goto subdivide;
        }
        // straddling cell
        if (area * fmax < straddle_budget || c.depth >= 26) {
            out.error += area * fmax;
            continue;
        }
    subdivide: {
        const double tm = 0.5 * (c.t0 + c.t1), cm = 0.5 * (c.c0 + c.c1);
        stack.push_back({c.t0, tm, c.c0, cm, c.depth + 1});
        stack.push_back({tm, c.t1, c.c0, cm, c.depth + 1});
        stack.push_back({c.t0, tm, cm, c.c1, c.depth + 1});
        stack.push_back({tm, c.t1, cm, c.c1, c.depth + 1});
    }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo experiments
// ---------------------------------------------------------------------------

struct ExperimentResult {
    std::vector<double> sigma_samples;
    double i_value = 0.0;
    double i_quadrature_error = 0.0;
    double mean = 0.0;
    double variance = 0.0;   // unbiased sample variance
    double stderr_ = 0.0;    // sqrt(variance / replicas)
    double z_score = 0.0;    // (mean - I) / stderr
};

namespace detail {

inline void finalize_experiment(ExperimentResult& r) {
    const auto n = static_cast<double>(r.sigma_samples.size());
    double s = 0.0;
    for (double v : r.sigma_samples) s += v;
    r.mean = s / n;
    double ss = 0.0;
    for (double v : r.sigma_samples) ss += (v - r.mean) * (v - r.mean);
    r.variance = (n > 1) ? ss / (n - 1.0) : 0.0;
    r.stderr_ = std::sqrt(r.variance / n);
    r.z_score = (r.stderr_ > 0.0) ? (r.mean - r.i_value) / r.stderr_ : 0.0;
}

inline int worker_count() {
    if (const char* env = std::getenv("DPP_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return 1;
}

// index-parallel loop: results land in caller-indexed slots, so the outcome
// is independent of the worker count
inline void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int workers = std::min<int>(worker_count(), static_cast<int>(n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
        });
    for (auto& t : pool) t.join();
}

}  // namespace detail

// Schur-model experiment. For a Plancherel specialization (single positive
// real coefficient) configurations are drawn exactly via Poisson + RSK with
// the alpha-scaled parameter; general G falls back to window sampling from
// the kernel restricted to the covering interval.
struct SchurExperimentSpec {
    GCoefficients g;
    double alpha = 1.0;
    QuadSettings quad{};
};

inline std::optional<double> plancherel_theta(const GCoefficients& g) {
    if (g.c.size() == 1 && g.c[0].imag() == 0.0 && g.c[0].real() > 0.0) return g.c[0].real();
    return std::nullopt;
}

inline ExperimentResult run_lln_experiment(const SchurExperimentSpec& spec,
                                           const TestFunction1D& f, const PatternZ& m,
                                           int replicas, RngSeed seed) {
    if (replicas < 2) throw usage_error("run_lln_experiment: replicas must be >= 2");
    const auto [umin, umax] = u_range(spec.g);
    const int64_t mbar = sup_norm(m);
    WindowZ w{static_cast<int64_t>(std::floor(spec.alpha * umin)) - mbar - 1,
              static_cast<int64_t>(std::ceil(spec.alpha * umax)) + mbar + 1};

    ExperimentResult out;
    out.sigma_samples.assign(static_cast<std::size_t>(replicas), 0.0);
    const auto theta = plancherel_theta(spec.g);
    std::optional<ComplexMatrix> K;
    std::vector<int64_t> sites;
    if (!theta) {
        sites.resize(static_cast<std::size_t>(w.hi - w.lo + 1));
        for (std::size_t i = 0; i < sites.size(); ++i) sites[i] = w.lo + static_cast<int64_t>(i);
        SchurKernel kern(spec.g, spec.alpha, spec.quad);
        K = kern.matrix(sites);
    }
    detail::parallel_for_index(static_cast<std::size_t>(replicas), [&](std::size_t rep) {
        SplitRng rng({seed.seed, seed.stream + rep});
        WindowConfigZ cfg;
        if (theta) {
            const Partition lam = sample_plancherel(spec.alpha * *theta, rng);
            cfg = WindowConfigZ::from_partition(lam, w);
        } else {
            cfg.window = w;
            cfg.occupied = sample_window(*K, rng);
        }
        out.sigma_samples[rep] = empirical_statistic_schur(cfg, f, m, spec.alpha, spec.g);
    });
    const auto iv = limit_integral_schur(f, m, spec.g, 1e-8);
    out.i_value = iv.value;
    out.i_quadrature_error = iv.error;
    detail::finalize_experiment(out);
    return out;
}

struct PPExperimentSpec {
    double r = 0.1;  // q = exp(-r)
    GlauberOptions glauber{};
    double i_tol = 1e-4;  // reference-integral tolerance
};

inline ExperimentResult run_lln_experiment(const PPExperimentSpec& spec, const TestFunction2D& f,
                                           const PatternPP& m, int replicas, RngSeed seed) {
    if (replicas < 2) throw usage_error("run_lln_experiment: replicas must be >= 2");
    const QParam q = QParam::from_rate(spec.r);
    const auto& box = f.support_box();
    const int64_t mbar2 = sup_norm2(m);
    WindowPP w;
    w.t_lo = static_cast<int64_t>(std::floor(box[0] / spec.r)) - mbar2 / 2 - 1;
    w.t_hi = static_cast<int64_t>(std::ceil(box[1] / spec.r)) + mbar2 / 2 + 1;
    w.h2_lo = static_cast<int64_t>(std::floor(2.0 * box[2] / spec.r)) - mbar2 - 2;
    w.h2_hi = static_cast<int64_t>(std::ceil(2.0 * box[3] / spec.r)) + mbar2 + 2;

    ExperimentResult out;
    out.sigma_samples.assign(static_cast<std::size_t>(replicas), 0.0);
    detail::parallel_for_index(static_cast<std::size_t>(replicas), [&](std::size_t rep) {
        SplitRng rng({seed.seed, seed.stream + rep});
        const PlanePartition pi = sample_plane_partition(q, -1, rng, spec.glauber);
        const auto cfg = WindowConfigPP::from_plane_partition(pi, w);
        out.sigma_samples[rep] = empirical_statistic_pp(cfg, f, m, spec.r);
    });
    const auto iv = limit_integral_pp(f, m, spec.i_tol);
    out.i_value = iv.value;
    out.i_quadrature_error = iv.error;
    detail::finalize_experiment(out);
    return out;
}

// ---------------------------------------------------------------------------
// Convergence-rate and decorrelation studies (kernel-only, no sampling)
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    double scale = 0.0;  // alpha or r
    double error = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::vector<double> ratios;   // error[i+1] / error[i] (Schur doubling studies)
    double loglog_slope = 0.0;    // least-squares slope of log err vs log scale
};

namespace detail {

inline double fit_loglog_slope(const std::vector<ConvergenceRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const auto& r : rows) {
        if (!(r.error > 0.0)) continue;
        const double x = std::log(r.scale), y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline PatternZ translate(const PatternZ& m, int64_t x) {
    PatternZ out = m;
    for (auto& v : out) v += x;
    return out;
}

inline PatternPP translate(const PatternPP& m, int64_t t, int64_t h2) {
    PatternPP out = m;
    for (auto& s : out) {
        s.t += t;
        s.h2 += h2;
    }
    return out;
}

// floor(alpha u) with half-integers rounded toward -infinity
inline int64_t lattice_floor(double x) { return static_cast<int64_t>(std::floor(x + 1e-12)); }

// Parity-admissible rounding of (tau/r, chi/r): t down to an integer, h down
// to the nearest height with h + t/2 integer (spec: nearest admissible below).
inline std::pair<int64_t, int64_t> lattice_floor_pp(double tau_over_r, double chi_over_r) {
    const int64_t t = lattice_floor(tau_over_r);
    int64_t h2 = lattice_floor(2.0 * chi_over_r);
    if (((h2 - t) & 1) != 0) --h2;
    return {t, h2};
}

inline ConvergenceTable convergence_study_schur(const GCoefficients& g, const PatternZ& m,
                                                double u, std::span<const double> alphas,
                                                QuadSettings quad = {}) {
    for (std::size_t i = 1; i < alphas.size(); ++i)
        if (!(alphas[i] > alphas[i - 1])) throw usage_error("alphas must increase");
    ConvergenceTable out;
    const double limit = pattern_probability(KernelSpecZ{SineSpec{g, u}}, m);
    for (double a : alphas) {
        const auto shifted = translate(m, lattice_floor(a * u));
        const double val = pattern_probability(KernelSpecZ{SchurSpec{g, a, quad}}, shifted);
        out.rows.push_back({a, std::fabs(val - limit)});
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i)
        out.ratios.push_back(out.rows[i].error / std::max(out.rows[i - 1].error, 1e-300));
    out.loglog_slope = detail::fit_loglog_slope(out.rows);
    return out;
}

inline ConvergenceTable convergence_study_pp(const PatternPP& m, double tau, double chi,
                                             std::span<const double> rs, QuadSettings quad = {}) {
    for (std::size_t i = 1; i < rs.size(); ++i)
        if (!(rs[i] < rs[i - 1])) throw usage_error("r scales must decrease");
    if (!region_a_contains(tau, chi)) throw region_error("convergence_study_pp: (tau,chi) not in A");
    ConvergenceTable out;
    const double limit = pattern_probability(KernelSpecPP{ExtendedSineSpec{tau, chi, 1e-12}}, m);
    for (double r : rs) {
        const auto [t0, h20] = lattice_floor_pp(tau / r, chi / r);
        const auto shifted = translate(m, t0, h20);
        const double val =
            pattern_probability(KernelSpecPP{PPSpec{QParam::from_rate(r), quad}}, shifted);
        out.rows.push_back({r, std::fabs(val - limit)});
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i)
        out.ratios.push_back(out.rows[i].error / std::max(out.rows[i - 1].error, 1e-300));
    out.loglog_slope = detail::fit_loglog_slope(out.rows);
    return out;
}

struct DecorrelationRow {
    double separation = 0.0;
    double cov = 0.0;
};

struct DecorrelationTable {
    std::vector<DecorrelationRow> rows;
    double loglog_slope = 0.0;  // slope of log|cov| vs log separation
};

inline DecorrelationTable decorrelation_study_schur(const GCoefficients& g, double alpha,
                                                    const PatternZ& m,
                                                    std::span<const std::pair<double, double>> u_pairs,
                                                    QuadSettings quad = {}) {
    DecorrelationTable out;
    const int64_t mbar = sup_norm(m);
    for (const auto& [u1, u2] : u_pairs) {
        if (u1 == u2) throw overlap_error("decorrelation_study_schur: positions must differ");
        if (std::fabs(u1 - u2) * alpha <= static_cast<double>(mbar))
            throw overlap_error("decorrelation_study_schur: separation below |m|/alpha");
        const auto m1 = translate(m, lattice_floor(alpha * u1));
        const auto m2 = translate(m, lattice_floor(alpha * u2));
        const double cov =
            pattern_covariance(KernelSpecZ{SchurSpec{g, alpha, quad}}, m1, m2);
        out.rows.push_back({std::fabs(u1 - u2), std::fabs(cov)});
    }
    std::vector<ConvergenceRow> tmp;
    for (auto& r : out.rows) tmp.push_back({r.separation, r.cov});
    out.loglog_slope = detail::fit_loglog_slope(tmp);
    return out;
}

inline DecorrelationTable decorrelation_study_pp(double r, const PatternPP& m, double tau,
                                                 std::span<const std::pair<double, double>> chi_pairs,
                                                 QuadSettings quad = {}) {
    DecorrelationTable out;
    const double mbar = 0.5 * static_cast<double>(sup_norm2(m));
    for (const auto& [c1, c2] : chi_pairs) {
        if (c1 == c2) throw overlap_error("decorrelation_study_pp: positions must differ");
        if (std::fabs(c1 - c2) <= mbar * r)
            throw overlap_error("decorrelation_study_pp: separation below |m| r");
        const auto [t0, h20a] = lattice_floor_pp(tau / r, c1 / r);
        const auto [t0b, h20b] = lattice_floor_pp(tau / r, c2 / r);
        (void)t0b;
        const auto m1 = translate(m, t0, h20a);
        const auto m2 = translate(m, t0, h20b);
        const double cov =
            pattern_covariance(KernelSpecPP{PPSpec{QParam::from_rate(r), quad}}, m1, m2);
        out.rows.push_back({std::fabs(c1 - c2), std::fabs(cov)});
    }
    std::vector<ConvergenceRow> tmp;
    for (auto& r2 : out.rows) tmp.push_back({r2.separation, r2.cov});
    out.loglog_slope = detail::fit_loglog_slope(tmp);
    return out;
}

}  // namespace dpp
