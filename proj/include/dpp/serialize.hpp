#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <vector>

#include "dpp/errors.hpp"
#include "dpp/partitions.hpp"

namespace dpp {

// Shortest round-trip decimal for doubles; fixed format keeps CLI output
// byte-identical across runs and worker counts.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// "4,2,2,1" <-> Partition; empty string is the empty partition.
inline std::string to_string(const Partition& p) {
    std::string out;
    for (std::size_t i = 0; i < p.parts.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(p.parts[i]);
    }
    return out;
}

inline Partition parse_partition(const std::string& text) {
    std::vector<int64_t> parts;
    const char* p = text.data();
    const char* end = p + text.size();
    while (p < end) {
        int64_t v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{}) throw usage_error("parse_partition: invalid integer in '" + text + "'");
        parts.push_back(v);
        p = next;
        if (p < end) {
            if (*p != ',') throw usage_error("parse_partition: expected ',' in '" + text + "'");
            ++p;
        }
    }
    return Partition{std::move(parts)};
}

// Rows separated by ';', entries by ',': "4,3,2;3,2;1".
inline std::string to_string(const PlanePartition& pp) {
    std::string out;
    for (std::size_t i = 0; i < pp.rows.size(); ++i) {
        if (i) out += ';';
        for (std::size_t j = 0; j < pp.rows[i].size(); ++j) {
            if (j) out += ',';
            out += std::to_string(pp.rows[i][j]);
        }
    }
    return out;
}

inline PlanePartition parse_plane_partition(const std::string& text) {
    std::vector<std::vector<int64_t>> rows;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t stop = std::min(text.find(';', start), text.size());
        const std::string row = text.substr(start, stop - start);
        if (!row.empty()) rows.push_back(parse_partition(row).parts);
        if (stop == text.size()) break;
        start = stop + 1;
    }
    return PlanePartition{std::move(rows)};
}

inline std::string to_string(const PatternZ& m) {
    std::string out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(m[i]);
    }
    return out.empty() ? "()" : out;
}

inline std::string to_string(const PatternPP& m) {
    std::string out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i) out += ' ';
        out += "(" + std::to_string(m[i].t) + "," + fmt_double(0.5 * static_cast<double>(m[i].h2)) + ")";
    }
    return out.empty() ? "()" : out;
}

}  // namespace dpp
