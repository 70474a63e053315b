#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "dpp/errors.hpp"
#include "dpp/kernels.hpp"
#include "dpp/linalg.hpp"
#include "dpp/partitions.hpp"

namespace dpp {

// ---------------------------------------------------------------------------
// Counter-based RNG: (seed, stream) fully determines the sequence, distinct
// streams give independent deterministic streams for parallel Monte Carlo.
// ---------------------------------------------------------------------------

struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

class SplitRng {
  public:
    explicit SplitRng(RngSeed s) {
        state_ = mix(s.seed + 0x9E3779B97F4A7C15ULL * (s.stream + 1));
        state_ = mix(state_ ^ 0xBF58476D1CE4E5B9ULL);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    // uniform in [0,1) with 53 random bits
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return unit() < p; }

    // uniform in {0, ..., n-1}, unbiased by rejection
    std::uint64_t index(std::uint64_t n) {
        if (n == 0) throw domain_error("SplitRng::index: n must be positive");
        const std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = next_u64();
        while (v >= lim) v = next_u64();
        return v % n;
    }

    // exact Poisson by additivity: chunks of mean <= 16 via the product method
    std::int64_t poisson(double mean) {
        if (mean < 0.0) throw domain_error("poisson: mean must be >= 0");
        std::int64_t total = 0;
        while (mean > 0.0) {
            const double m = std::min(mean, 16.0);
            const double limit = std::exp(-m);
            double prod = unit();
            std::int64_t k = 0;
            while (prod >= limit) {
                prod *= unit();
                ++k;
            }
            total += k;
            mean -= m;
        }
        return total;
    }

    // uniform permutation of {0, ..., n-1}
    std::vector<int64_t> permutation(std::size_t n) {
        std::vector<int64_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int64_t>(i);
        for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[index(i)]);
        return p;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    std::uint64_t state_ = 0;
};

// ---------------------------------------------------------------------------
// Pattern probabilities and covariances
// ---------------------------------------------------------------------------

inline double clamp_probability(double p) {
    if (p < -1e-9) p = -1e-9;
    if (p > 1.0 + 1e-9) p = 1.0 + 1e-9;
    return std::clamp(p, 0.0, 1.0);
}

// E[c_m] = det(K(m_i, m_j)); empty pattern gives 1.
template <class Spec, class Site>
double pattern_probability(const Spec& spec, std::span<const Site> m) {
    if (m.empty()) return 1.0;
    const ComplexMatrix k = kernel_matrix(spec, m);
    return clamp_probability(det_lu(k).real());
}

inline double pattern_probability(const KernelSpecZ& spec, const PatternZ& m) {
    return pattern_probability(spec, std::span<const int64_t>(m));
}
inline double pattern_probability(const KernelSpecPP& spec, const PatternPP& m) {
    return pattern_probability(spec, std::span<const SitePP>(m));
}

// cov(c_m, c_m') = det(K on m u m') - det(K on m) det(K on m'); the patterns
// must be disjoint (for singletons this is -K(x,y)K(y,x)).
template <class Spec, class Site>
double pattern_covariance(const Spec& spec, std::vector<Site> m, std::vector<Site> mp) {
    std::vector<Site> joint = m;
    joint.insert(joint.end(), mp.begin(), mp.end());
    std::sort(joint.begin(), joint.end());
    if (std::adjacent_find(joint.begin(), joint.end()) != joint.end())
        throw overlap_error("pattern_covariance: patterns overlap");
    const ComplexMatrix kj = kernel_matrix(spec, std::span<const Site>(joint));
    const double dj = det_lu(kj).real();
    const double dm = m.empty() ? 1.0 : det_lu(kernel_matrix(spec, std::span<const Site>(m))).real();
    const double dp = mp.empty() ? 1.0 : det_lu(kernel_matrix(spec, std::span<const Site>(mp))).real();
    return dj - dm * dp;
}

// ---------------------------------------------------------------------------
// Exact window samplers
// ---------------------------------------------------------------------------

namespace detail {

// P(X cap W = S) by inclusion-exclusion over supersets of S within W.
inline double exact_config_probability(const ComplexMatrix& K, const std::vector<uint8_t>& occ) {
    const std::size_t n = K.n;
    std::vector<std::size_t> ones, zeros;
    for (std::size_t i = 0; i < n; ++i) (occ[i] ? ones : zeros).push_back(i);
    double p = 0.0;
    const std::size_t nz = zeros.size();
    for (std::size_t mask = 0; mask < (1u << nz); ++mask) {
        std::vector<std::size_t> idx = ones;
        int bits = 0;
        for (std::size_t b = 0; b < nz; ++b)
            if (mask & (1u << b)) {
                idx.push_back(zeros[b]);
                ++bits;
            }
        std::sort(idx.begin(), idx.end());
        ComplexMatrix sub(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < idx.size(); ++j) sub(i, j) = K(idx[i], idx[j]);
        const double d = idx.empty() ? 1.0 : det_lu(sub).real();
        p += ((bits & 1) ? -1.0 : 1.0) * d;
    }
    return p;
}

// Exact sampler: enumerate all configurations by inclusion-exclusion and draw
// from the categorical distribution. Windows up to 16 sites.
inline std::vector<uint8_t> sample_window_exact(const ComplexMatrix& K, SplitRng& rng) {
    const std::size_t n = K.n;
    if (n > 16) throw degeneracy_error("exact window sampler limited to 16 sites");
    const std::size_t total = std::size_t{1} << n;
    std::vector<double> probs(total);
    double sum = 0.0;
    for (std::size_t c = 0; c < total; ++c) {
        std::vector<uint8_t> occ(n);
        for (std::size_t i = 0; i < n; ++i) occ[i] = (c >> i) & 1;
        probs[c] = std::max(0.0, exact_config_probability(K, occ));
        sum += probs[c];
    }
    if (sum <= 0.0) throw degeneracy_error("exact window sampler: degenerate distribution");
    double u = rng.unit() * sum;
    std::size_t pick = total - 1;
    for (std::size_t c = 0; c < total; ++c) {
        u -= probs[c];
        if (u <= 0.0) {
            pick = c;
            break;
        }
    }
    std::vector<uint8_t> occ(n);
    for (std::size_t i = 0; i < n; ++i) occ[i] = (pick >> i) & 1;
    return occ;
}

}  // namespace detail

// Sequential conditional sampling of the window restriction: site k is drawn
// Bernoulli(K'(k,k)) and the kernel receives the Schur-complement update
//   include:  K'(x,y) -= K(x,k) K(k,y) / K(k,k)
//   exclude:  K'(x,y) -= K(x,k) (K(k,k)-1)^{-1} K(k,y).
// Valid for the non-symmetric kernels as well; any conditional probability
// outside [-1e-7, 1+1e-7] or a pivot below 1e-10 aborts to the exact
// inclusion-exclusion sampler.
inline std::vector<uint8_t> sample_window(const ComplexMatrix& kernel, SplitRng& rng) {
    const std::size_t n = kernel.n;
    if (n == 0) throw domain_error("sample_window: empty window");
    ComplexMatrix K = kernel;
    std::vector<uint8_t> occ(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        double p = K(k, k).real();
        if (p < -1e-7 || p > 1.0 + 1e-7) return detail::sample_window_exact(kernel, rng);
        p = std::clamp(p, 0.0, 1.0);
        const bool take = rng.bernoulli(p);
        occ[k] = take ? 1 : 0;
        if (k + 1 == n) break;
        const cplx pivot = take ? K(k, k) : (K(k, k) - 1.0);
        if (std::abs(pivot) < 1e-10) return detail::sample_window_exact(kernel, rng);
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                K(i, j) -= K(i, k) * K(k, j) / pivot;
    }
    return occ;
}

template <class Spec, class Site>
std::vector<uint8_t> sample_window(const Spec& spec, std::span<const Site> window, SplitRng& rng) {
    if (window.empty()) throw domain_error("sample_window: empty window");
    const ComplexMatrix K = kernel_matrix(spec, window);
    return sample_window(K, rng);
}

// ---------------------------------------------------------------------------
// Model samplers
// ---------------------------------------------------------------------------

// Poissonized Plancherel: N ~ Poisson(theta^2), then the RSK shape of a
// uniform permutation of [N].
inline Partition sample_plancherel(double theta, SplitRng& rng) {
    if (!(theta > 0.0)) throw domain_error("sample_plancherel: theta must be positive");
    const auto n = static_cast<std::size_t>(rng.poisson(theta * theta));
    const auto word = rng.permutation(n);
    return rsk_shape(word);
}

struct GlauberOptions {
    int64_t steps = -1;   // -1: use the burn-in heuristic
    int box = -1;         // support box side; -1: derived from q
    int height = -1;      // entry cap; -1: same as box
};

namespace detail {

inline int glauber_box(double q) {
    // q^box below 1e-12 keeps the truncation bias far below Monte Carlo noise
    const int b = static_cast<int>(std::ceil(28.0 / -std::log(q)));
    return std::clamp(b, 6, 96);
}

inline double expected_pp_weight(double q) {
    double s = 0.0;
    for (int n = 1; n < 400; ++n) {
        const double t = static_cast<double>(n) * n * std::pow(q, n) / (1.0 - std::pow(q, n));
        s += t;
        if (t < 1e-14) break;
    }
    return s;
}

}  // namespace detail

// Metropolis single-box dynamics for the q^{|pi|} measure: propose a uniform
// cell of the box and a direction; adds are accepted with probability q,
// removals always, so detailed balance holds cell by cell. The box truncates
// configurations with q^{box}-sized bias.
inline PlanePartition sample_plane_partition(const QParam& q, int64_t steps, SplitRng& rng,
                                             GlauberOptions opts = {}) {
    const int L = (opts.box > 0) ? opts.box : detail::glauber_box(q.q);
    const int H = (opts.height > 0) ? opts.height : L;
    if (steps < 0 && opts.steps > 0) steps = opts.steps;
    if (steps < 0)
        steps = std::max<int64_t>(
            10000, static_cast<int64_t>(50.0 * (detail::expected_pp_weight(q.q) + 1.0) * L * L));

    std::vector<std::vector<int64_t>> grid(static_cast<std::size_t>(L),
                                           std::vector<int64_t>(static_cast<std::size_t>(L), 0));
    auto val = [&](int i, int j) -> int64_t {
        if (i < 0 || j < 0) return H + 1;  // virtual walls above/left
        if (i >= L || j >= L) return 0;
        return grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    };
    for (int64_t s = 0; s < steps; ++s) {
        const auto cell = rng.index(static_cast<std::uint64_t>(L) * L);
        const int i = static_cast<int>(cell) / L, j = static_cast<int>(cell) % L;
        const bool add = rng.bernoulli(0.5);
        auto& v = grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (add) {
            const bool legal = v < H && v + 1 <= std::min(val(i - 1, j), val(i, j - 1));
            if (legal && rng.bernoulli(q.q)) ++v;
        } else {
            const bool legal = v > 0 && v - 1 >= std::max(val(i + 1, j), val(i, j + 1));
            if (legal) --v;
        }
    }
    std::vector<std::vector<int64_t>> rows;
    for (auto& r : grid) {
        std::vector<int64_t> row;
        for (auto x : r)
            if (x > 0)
                row.push_back(x);
            else
                break;
        if (row.empty()) break;
        rows.push_back(std::move(row));
    }
    return PlanePartition{std::move(rows)};
}

// ---------------------------------------------------------------------------
// Brute-force enumeration oracles
// ---------------------------------------------------------------------------

struct SchurPlancherelModel {
    double theta = 0.0;
};
struct PlanePartitionModel {
    QParam q;
};
using OracleModel = std::variant<SchurPlancherelModel, PlanePartitionModel>;

struct OracleValue {
    double value = 0.0;
    double tail_bound = 0.0;
};

// Poisson tail sum_{n>N} theta^{2n}/n!
inline double poisson_tail(double theta2, int64_t n_max) {
    double term = 1.0;
    for (int64_t k = 1; k <= n_max + 1; ++k) term *= theta2 / static_cast<double>(k);
    double s = 0.0;
    for (int64_t k = n_max + 1; k < n_max + 200; ++k) {
        s += term;
        term *= theta2 / static_cast<double>(k + 1);
        if (term < 1e-300) break;
    }
    return s;
}

// sum_{n>N} pp(n) q^n with a geometric majorant beyond the table
inline double plane_partition_tail(double q, int n_max) {
    if (q >= 0.45) throw domain_error("plane_partition_tail: rigorous bound needs q < 0.45");
    const int n2 = n_max + 60;
    const auto c = plane_partition_counts(n2);
    double s = 0.0;
    for (int n = n_max + 1; n <= n2; ++n) s += c[static_cast<std::size_t>(n)] * std::pow(q, n);
    // pp(n+1) <= 2 pp(n) for n >= 10, so the remainder is geometric
    s += c[static_cast<std::size_t>(n2)] * std::pow(q, n2) * (2.0 * q) / (1.0 - 2.0 * q);
    return s;
}

// Statistics of many size-<=2 patterns over one enumeration sweep: single-site
// and pairwise inclusion weights, already normalized.
struct OracleSiteStats {
    std::vector<double> single;              // E[c_{site_i}]
    std::vector<std::vector<double>> pair;   // E[c_{site_i, site_j}]
    double tail_bound = 0.0;
    double mass = 0.0;  // total enumerated probability mass
};

inline OracleSiteStats oracle_site_statistics(const SchurPlancherelModel& model,
                                              std::span<const int64_t> sites, int64_t max_weight) {
    const double th2 = model.theta * model.theta;
    const std::size_t ns = sites.size();
    OracleSiteStats out;
    out.single.assign(ns, 0.0);
    out.pair.assign(ns, std::vector<double>(ns, 0.0));
    const double norm = std::exp(-th2);
    enumerate_partitions(max_weight, [&](const Partition& lam) {
        const int64_t n = lam.weight();
        double logw = 0.0;
        for (int64_t k = 1; k <= n; ++k) logw += std::log(th2) - 2.0 * std::log(static_cast<double>(k));
        const double dim = static_cast<double>(plancherel_dim(lam));
        const double w = norm * std::exp(logw) * dim * dim;
        out.mass += w;
        std::vector<std::size_t> present;
        for (std::size_t i = 0; i < ns; ++i)
            if (partition_point_present(lam, sites[i])) present.push_back(i);
        for (auto i : present) {
            out.single[i] += w;
            for (auto j : present) out.pair[i][j] += w;
        }
    });
    out.tail_bound = poisson_tail(th2, max_weight);
    return out;
}

inline OracleSiteStats oracle_site_statistics(const PlanePartitionModel& model,
                                              std::span<const SitePP> sites, int64_t max_weight) {
    const double q = model.q.q;
    const std::size_t ns = sites.size();
    OracleSiteStats out;
    out.single.assign(ns, 0.0);
    out.pair.assign(ns, std::vector<double>(ns, 0.0));
    double m_const = 1.0;  // MacMahon normalization prod (1-q^n)^n
    for (int n = 1; n < 400; ++n) {
        const double f = std::pow(1.0 - std::pow(q, n), n);
        m_const *= f;
        if (std::fabs(1.0 - f) < 1e-18) break;
    }
    std::vector<double> qpow(static_cast<std::size_t>(max_weight) + 1);
    for (int64_t n = 0; n <= max_weight; ++n) qpow[static_cast<std::size_t>(n)] = std::pow(q, static_cast<double>(n));
    std::vector<std::size_t> present;
    present.reserve(ns);
    enumerate_plane_partitions(max_weight, [&](const PlanePartition& pi) {
        const double w = m_const * qpow[static_cast<std::size_t>(pi.weight())];
        out.mass += w;
        present.clear();
        for (std::size_t i = 0; i < ns; ++i)
            if (pp_point_present(pi, sites[i])) present.push_back(i);
        for (auto i : present) {
            out.single[i] += w;
            for (auto j : present) out.pair[i][j] += w;
        }
    });
    out.tail_bound = plane_partition_tail(q, static_cast<int>(max_weight));
    return out;
}

// Single-pattern oracle expectation with a rigorous tail bound.
inline OracleValue oracle_expectation(const OracleModel& model, const PatternZ& m,
                                      int64_t max_weight) {
    const auto* sm = std::get_if<SchurPlancherelModel>(&model);
    if (!sm) throw domain_error("oracle_expectation: integer pattern needs the Schur model");
    if (m.empty()) return {1.0, poisson_tail(sm->theta * sm->theta, max_weight)};
    const auto stats = oracle_site_statistics(*sm, std::span<const int64_t>(m), max_weight);
    double v = 0.0;
    if (m.size() == 1) {
        v = stats.single[0];
    } else if (m.size() == 2) {
        v = stats.pair[0][1];
    } else {
        // general patterns: dedicated sweep
        const double th2 = sm->theta * sm->theta;
        v = 0.0;
        const double norm = std::exp(-th2);
        enumerate_partitions(max_weight, [&](const Partition& lam) {
            for (auto x : m)
                if (!partition_point_present(lam, x)) return;
            const int64_t n = lam.weight();
            double logw = 0.0;
            for (int64_t k = 1; k <= n; ++k) logw += std::log(th2) - 2.0 * std::log(static_cast<double>(k));
            const double dim = static_cast<double>(plancherel_dim(lam));
            v += norm * std::exp(logw) * dim * dim;
        });
    }
    return {v, stats.tail_bound};
}

inline OracleValue oracle_expectation(const OracleModel& model, const PatternPP& m,
                                      int64_t max_weight) {
    const auto* pm = std::get_if<PlanePartitionModel>(&model);
    if (!pm) throw domain_error("oracle_expectation: PP pattern needs the plane-partition model");
    if (m.empty()) return {1.0, plane_partition_tail(pm->q.q, static_cast<int>(max_weight))};
    const auto stats = oracle_site_statistics(*pm, std::span<const SitePP>(m), max_weight);
    double v = 0.0;
    if (m.size() == 1)
        v = stats.single[0];
    else if (m.size() == 2)
        v = stats.pair[0][1];
    else {
        double m_const = 1.0;
        for (int n = 1; n < 400; ++n) m_const *= std::pow(1.0 - std::pow(pm->q.q, n), n);
        v = 0.0;
        enumerate_plane_partitions(max_weight, [&](const PlanePartition& pi) {
            for (auto& s : m)
                if (!pp_point_present(pi, s)) return;
            v += m_const * std::pow(pm->q.q, static_cast<double>(pi.weight()));
        });
    }
    return {v, stats.tail_bound};
}

}  // namespace dpp
