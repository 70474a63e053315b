#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dpp/errors.hpp"

namespace dpp {

using std::int64_t;

constexpr int64_t iabs(int64_t v) { return v < 0 ? -v : v; }

// An integer partition: non-increasing positive parts, trailing zeros dropped.
struct Partition {
    std::vector<int64_t> parts;

    Partition() = default;
    explicit Partition(std::vector<int64_t> p) : parts(std::move(p)) {
        while (!parts.empty() && parts.back() == 0) parts.pop_back();
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (parts[i] <= 0) throw domain_error("partition parts must be positive");
            if (i > 0 && parts[i] > parts[i - 1])
                throw domain_error("partition parts must be non-increasing");
        }
    }

    int64_t weight() const {
        int64_t s = 0;
        for (auto p : parts) s += p;
        return s;
    }
    // lambda_i with the convention lambda_i = 0 beyond the last part; i is 1-based.
    int64_t part(std::size_t i) const {
        return (i >= 1 && i <= parts.size()) ? parts[i - 1] : 0;
    }
    bool empty() const { return parts.empty(); }
    bool operator==(const Partition&) const = default;
};

// A plane partition: rows are partitions, columns non-increasing as well.
struct PlanePartition {
    std::vector<std::vector<int64_t>> rows;

    PlanePartition() = default;
    explicit PlanePartition(std::vector<std::vector<int64_t>> r) : rows(std::move(r)) {
        for (auto& row : rows)
            while (!row.empty() && row.back() == 0) row.pop_back();
        while (!rows.empty() && rows.back().empty()) rows.pop_back();
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].empty()) throw domain_error("interior empty row in plane partition");
            for (std::size_t j = 0; j < rows[i].size(); ++j) {
                if (rows[i][j] <= 0) throw domain_error("plane partition entries must be positive");
                if (j > 0 && rows[i][j] > rows[i][j - 1])
                    throw domain_error("plane partition rows must be non-increasing");
                if (i > 0 && (j >= rows[i - 1].size() || rows[i][j] > rows[i - 1][j]))
                    throw domain_error("plane partition columns must be non-increasing");
            }
        }
    }

    // pi_{i,j}, 1-based, zero outside the support.
    int64_t cell(std::size_t i, std::size_t j) const {
        if (i < 1 || i > rows.size()) return 0;
        const auto& r = rows[i - 1];
        return (j >= 1 && j <= r.size()) ? r[j - 1] : 0;
    }
    int64_t weight() const {
        int64_t s = 0;
        for (auto& r : rows)
            for (auto v : r) s += v;
        return s;
    }
    bool empty() const { return rows.empty(); }
    bool operator==(const PlanePartition&) const = default;
};

// Site of the plane-partition state space: time t and doubled height h2 = 2h,
// so half-integer heights are exact. Sites reachable from a plane partition
// satisfy h + (|t|+1)/2 in Z, i.e. h2 + |t| + 1 even.
struct SitePP {
    int64_t t = 0;
    int64_t h2 = 0;

    double h() const { return 0.5 * static_cast<double>(h2); }
    bool parity_ok() const { return ((h2 + iabs(t) + 1) & 1) == 0; }
    friend auto operator<=>(const SitePP&, const SitePP&) = default;
};

using PatternZ = std::vector<int64_t>;   // sorted, duplicate-free
using PatternPP = std::vector<SitePP>;   // sorted, duplicate-free

inline PatternZ make_pattern(std::vector<int64_t> sites) {
    std::sort(sites.begin(), sites.end());
    if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
        throw domain_error("pattern has duplicate sites");
    return sites;
}

inline PatternPP make_pattern(std::vector<SitePP> sites) {
    std::sort(sites.begin(), sites.end());
    if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
        throw domain_error("pattern has duplicate sites");
    return sites;
}

inline int64_t sup_norm(const PatternZ& m) {
    int64_t n = 0;
    for (auto x : m) n = std::max(n, iabs(x));
    return n;
}

// Supremum norm over both coordinates; returned doubled so half-integer
// heights stay exact (norm = max(|t|, |h|) = sup_norm2/2).
inline int64_t sup_norm2(const PatternPP& m) {
    int64_t n = 0;
    for (auto& s : m) n = std::max({n, 2 * iabs(s.t), iabs(s.h2)});
    return n;
}

struct WindowZ {
    int64_t lo = 0, hi = -1;  // inclusive; lo > hi means empty
};

struct WindowPP {
    int64_t t_lo = 0, t_hi = -1;
    int64_t h2_lo = 0, h2_hi = -1;
};

// Configuration of a partition on Z: {lambda_i - i, i >= 1}, restricted to a
// window. Points are strictly decreasing in i, so the result is sorted.
inline PatternZ partition_points(const Partition& lam, WindowZ w) {
    PatternZ out;
    if (w.lo > w.hi) return out;
    const auto n = static_cast<int64_t>(lam.parts.size());
    for (int64_t i = 1; i <= n; ++i) {
        int64_t x = lam.parts[static_cast<std::size_t>(i - 1)] - i;
        if (x >= w.lo && x <= w.hi) out.push_back(x);
    }
    // beyond the last part lambda_i = 0, giving the tail {-(n+1), -(n+2), ...}
    for (int64_t x = std::min(w.hi, -(n + 1)); x >= w.lo; --x) out.push_back(x);
    std::sort(out.begin(), out.end());
    return out;
}

// Membership test x in S(lambda) without materializing a window.
inline bool partition_point_present(const Partition& lam, int64_t x) {
    const auto n = static_cast<int64_t>(lam.parts.size());
    if (x <= -(n + 1)) return true;
    for (int64_t i = 1; i <= n; ++i) {
        int64_t p = lam.parts[static_cast<std::size_t>(i - 1)] - i;
        if (p == x) return true;
        if (p < x) return false;  // decreasing in i
    }
    return false;
}

// Configuration of a plane partition on Z x (1/2)Z:
// {(i-j, pi_{i,j} - (i+j-1)/2), i,j >= 1} with pi = 0 beyond the support,
// so each time slice carries an infinite down-sloping tail.
inline bool pp_point_present(const PlanePartition& pi, const SitePP& s) {
    if (!s.parity_ok()) return false;
    const int64_t at = iabs(s.t);
    for (int64_t d = 1;; ++d) {
        const int64_t i = (s.t >= 0) ? d + at : d;
        const int64_t j = (s.t >= 0) ? d : d + at;
        // site height doubled: need2/2 = h + (|t| + 2d - 1)/2 must equal pi_{i,j}
        const int64_t need2 = s.h2 + at + 2 * d - 1;
        if (need2 & 1) return false;
        const int64_t need = need2 / 2;
        const int64_t v = pi.cell(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (v == need && need >= 0) return true;
        if (v < need) return false;  // pi decreasing along the diagonal, need increasing
    }
}

inline PatternPP pp_points(const PlanePartition& pi, WindowPP w) {
    PatternPP out;
    for (int64_t t = w.t_lo; t <= w.t_hi; ++t) {
        const int64_t at = iabs(t);
        for (int64_t d = 1;; ++d) {
            const int64_t i = (t >= 0) ? d + at : d;
            const int64_t j = (t >= 0) ? d : d + at;
            const int64_t v = pi.cell(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            const int64_t h2 = 2 * v - (at + 2 * d - 1);
            if (h2 < w.h2_lo && v == 0) break;  // tail below the window
            if (h2 >= w.h2_lo && h2 <= w.h2_hi) out.push_back({t, h2});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Iterative enumeration of all partitions with weight <= max_weight.
// Per fixed weight the classic reverse-lexicographic next-partition step.
inline void enumerate_partitions(int64_t max_weight,
                                 const std::function<void(const Partition&)>& visit) {
    if (max_weight < 0) throw domain_error("max_weight must be >= 0");
    visit(Partition{});
    for (int64_t n = 1; n <= max_weight; ++n) {
        std::vector<int64_t> a{n};
        while (true) {
            visit(Partition{std::vector<int64_t>(a)});
            // find rightmost part > 1
            std::size_t k = a.size();
            int64_t rem = 0;
            while (k > 0 && a[k - 1] == 1) {
                ++rem;
                --k;
            }
            if (k == 0) break;
            a.resize(k);
            a[k - 1] -= 1;
            ++rem;
            const int64_t v = a[k - 1];
            while (rem > 0) {
                const int64_t c = std::min(v, rem);
                a.push_back(c);
                rem -= c;
            }
        }
    }
}

// Iterative DFS over plane partitions with weight <= max_weight. Rows are
// built cell by cell; value 0 closes the current row, and a closed empty row
// closes the plane partition (which is visited exactly there).
inline void enumerate_plane_partitions(int64_t max_weight,
                                       const std::function<void(const PlanePartition&)>& visit) {
    if (max_weight < 0) throw domain_error("max_weight must be >= 0");
    struct Dec {
        std::size_t row;
        int64_t v;
    };
    std::vector<std::vector<int64_t>> rows;
    std::vector<Dec> stack;
    int64_t used = 0;
    std::size_t i = 0;  // row being extended
    PlanePartition scratch;

    auto cap_at = [&](std::size_t row) -> int64_t {
        const std::size_t j = (row < rows.size()) ? rows[row].size() : 0;
        int64_t cap = max_weight - used;
        if (row > 0) {
            const auto& prev = rows[row - 1];
            cap = std::min(cap, (j < prev.size()) ? prev[j] : 0);
        }
        if (j > 0) cap = std::min(cap, rows[row][j - 1]);
        return cap;
    };

    int64_t cand = cap_at(0);
    while (true) {
        if (cand >= 1) {
            if (i >= rows.size()) rows.emplace_back();
            rows[i].push_back(cand);
            used += cand;
            stack.push_back({i, cand});
            cand = cap_at(i);
            continue;
        }
        // cand == 0: close the row
        const bool row_empty = (i >= rows.size()) || rows[i].empty();
        if (!row_empty) {
            stack.push_back({i, 0});
            ++i;
            cand = cap_at(i);
            continue;
        }
        // empty row closes the plane partition: visit rows[0..i-1]
        scratch.rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(i));
        visit(scratch);
        // backtrack to the most recent decision with an untried smaller value
        while (!stack.empty() && stack.back().v == 0) stack.pop_back();
        if (stack.empty()) break;
        const Dec d = stack.back();
        stack.pop_back();
        used -= d.v;
        rows[d.row].pop_back();
        rows.resize(d.row + 1);
        if (rows[d.row].empty()) rows.resize(d.row);
        i = d.row;
        cand = d.v - 1;
    }
}

// Coefficients of prod_n (1-q^n)^{-n} up to degree n_max: the number of plane
// partitions of each weight. Used for rigorous oracle tail bounds.
inline std::vector<double> plane_partition_counts(int n_max) {
    std::vector<double> a(static_cast<std::size_t>(n_max) + 1, 0.0);
    a[0] = 1.0;
    for (int s = 1; s <= n_max; ++s)
        for (int rep = 0; rep < s; ++rep)
            for (int j = s; j <= n_max; ++j) a[static_cast<std::size_t>(j)] += a[static_cast<std::size_t>(j - s)];
    return a;
}

// Number of standard Young tableaux of shape lambda (hook length formula).
// Exact in 128-bit intermediates for |lambda| <= 33.
inline std::uint64_t plancherel_dim(const Partition& lam) {
    const int64_t n = lam.weight();
    if (n == 0) return 1;
    if (n > 33) throw domain_error("plancherel_dim supports |lambda| <= 33");
    const auto len = lam.parts.size();
    std::vector<int64_t> conj(static_cast<std::size_t>(lam.parts[0]), 0);
    for (std::size_t j = 0; j < conj.size(); ++j)
        for (std::size_t i = 0; i < len; ++i)
            if (lam.parts[i] > static_cast<int64_t>(j)) ++conj[j];
    unsigned __int128 fact = 1, hooks = 1;
    for (int64_t k = 2; k <= n; ++k) fact *= static_cast<unsigned>(k);
    for (std::size_t i = 0; i < len; ++i)
        for (int64_t j = 0; j < lam.parts[i]; ++j) {
            const int64_t arm = lam.parts[i] - j - 1;
            const int64_t leg = conj[static_cast<std::size_t>(j)] - static_cast<int64_t>(i) - 1;
            hooks *= static_cast<unsigned>(arm + leg + 1);
        }
    return static_cast<std::uint64_t>(fact / hooks);
}

// Shape of the RSK insertion tableau of a word (row insertion).
inline Partition rsk_shape(std::span<const int64_t> word) {
    std::vector<std::vector<int64_t>> tab;
    for (int64_t a : word) {
        int64_t x = a;
        for (std::size_t r = 0;; ++r) {
            if (r == tab.size()) {
                tab.push_back({x});
                break;
            }
            auto& row = tab[r];
            auto it = std::upper_bound(row.begin(), row.end(), x);
            if (it == row.end()) {
                row.push_back(x);
                break;
            }
            std::swap(*it, x);
        }
    }
    std::vector<int64_t> shape(tab.size());
    for (std::size_t r = 0; r < tab.size(); ++r) shape[r] = static_cast<int64_t>(tab[r].size());
    return Partition{std::move(shape)};
}

}  // namespace dpp
