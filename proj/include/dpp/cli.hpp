#pragma once

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpp/errors.hpp"
#include "dpp/lln.hpp"
#include "dpp/process.hpp"
#include "dpp/serialize.hpp"

namespace dpp::cli {

using nlohmann::json;

inline constexpr const char* kToolName = "dppcli";
inline constexpr const char* kVersion = "0.1.0";

enum class Subcommand { kernel, sample, oracle_check, lln, converge, decorrelate };

inline const std::map<std::string, Subcommand>& subcommand_names() {
    static const std::map<std::string, Subcommand> names{
        {"kernel", Subcommand::kernel},       {"sample", Subcommand::sample},
        {"oracle-check", Subcommand::oracle_check}, {"lln", Subcommand::lln},
        {"converge", Subcommand::converge},   {"decorrelate", Subcommand::decorrelate},
    };
    return names;
}

inline std::string subcommand_name(Subcommand s) {
    for (const auto& [k, v] : subcommand_names())
        if (v == s) return k;
    return "?";
}

struct RunConfig {
    Subcommand sub = Subcommand::kernel;
    json raw;             // validated config, echoed into every output
    std::string output;   // path base; empty writes to the dispatch stream
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::set<std::string>& required, const std::string& scope) {
    if (!j.is_object()) throw usage_error("config: " + scope + " must be an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw usage_error("config: unknown key '" + (scope.empty() ? key : scope + "." + key) + "'");
    for (const auto& key : required)
        if (!j.contains(key))
            throw usage_error("config: missing key '" + (scope.empty() ? key : scope + "." + key) + "'");
}

inline double positive(const json& j, const std::string& key) {
    const double v = j.at(key).get<double>();
    if (!(v > 0.0)) throw usage_error("config: '" + key + "' must be positive");
    return v;
}

inline GCoefficients parse_g(const json& j) {
    require_keys(j, {"coeffs", "radius_margin"}, {"coeffs"}, "g");
    GCoefficients g;
    for (const auto& pair : j.at("coeffs")) {
        if (!pair.is_array() || pair.size() != 2)
            throw usage_error("config: g.coeffs entries must be [re, im] pairs");
        g.c.emplace_back(pair[0].get<double>(), pair[1].get<double>());
    }
    if (g.c.empty()) throw usage_error("config: g.coeffs must be nonempty");
    if (j.contains("radius_margin")) {
        g.radius_margin = j.at("radius_margin").get<double>();
        if (!(g.radius_margin > 0.0)) throw usage_error("config: 'g.radius_margin' must be positive");
    }
    return g;
}

inline QuadSettings parse_quad(const json& cfg) {
    QuadSettings qs;
    if (!cfg.contains("quad")) return qs;
    const json& j = cfg.at("quad");
    require_keys(j, {"tol", "max_nodes", "eps"}, {}, "quad");
    if (j.contains("tol")) qs.tol = positive(j, "tol");
    if (j.contains("max_nodes")) {
        qs.max_nodes = j.at("max_nodes").get<int>();
        if (qs.max_nodes < 64) throw usage_error("config: 'quad.max_nodes' must be >= 64");
    }
    if (j.contains("eps")) qs.eps = positive(j, "eps");
    return qs;
}

inline PatternZ parse_pattern_z(const json& j) {
    std::vector<int64_t> sites;
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw usage_error("config: 'pattern' sites must be integers");
        sites.push_back(v.get<int64_t>());
    }
    try {
        return make_pattern(std::move(sites));
    } catch (const domain_error& e) {
        throw usage_error(std::string("config: 'pattern' invalid: ") + e.what());
    }
}

inline SitePP parse_site_pp(const json& v) {
    if (!v.is_array() || v.size() != 2)
        throw usage_error("config: plane-partition sites must be [t, h] pairs");
    const double t = v[0].get<double>();
    const double h = v[1].get<double>();
    if (t != std::floor(t)) throw usage_error("config: site t must be an integer");
    const double h2 = 2.0 * h;
    if (std::fabs(h2 - std::round(h2)) > 1e-9)
        throw usage_error("config: site h must be a half-integer");
    SitePP s{static_cast<int64_t>(t), static_cast<int64_t>(std::llround(h2))};
    if (!s.parity_ok())
        throw usage_error("config: site (" + std::to_string(s.t) + "," + fmt_double(h) +
                          ") violates h + (|t|+1)/2 in Z");
    return s;
}

inline PatternPP parse_pattern_pp(const json& j) {
    std::vector<SitePP> sites;
    for (const auto& v : j) sites.push_back(parse_site_pp(v));
    try {
        return make_pattern(std::move(sites));
    } catch (const domain_error& e) {
        throw usage_error(std::string("config: 'pattern' invalid: ") + e.what());
    }
}

inline TestFunction1D parse_f1(const json& j) {
    require_keys(j, {"kind", "center", "width", "coeffs", "support", "grid", "values"}, {"kind"}, "f");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bump") {
        return TestFunction1D::bump(j.at("center").get<double>(), positive(j, "width"));
    }
    if (kind == "poly") {
        const auto sup = j.at("support");
        if (!sup.is_array() || sup.size() != 2) throw usage_error("config: 'f.support' must be [lo, hi]");
        return TestFunction1D::polynomial(j.at("coeffs").get<std::vector<double>>(),
                                          sup[0].get<double>(), sup[1].get<double>());
    }
    if (kind == "tabulated") {
        return TestFunction1D::tabulated(j.at("grid").get<std::vector<double>>(),
                                         j.at("values").get<std::vector<double>>());
    }
    throw usage_error("config: 'f.kind' must be bump, poly, or tabulated");
}

inline TestFunction2D parse_f2(const json& j) {
    require_keys(j, {"kind", "center", "width"}, {"kind"}, "f");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bump") {
        const auto c = j.at("center"), w = j.at("width");
        if (!c.is_array() || c.size() != 2 || !w.is_array() || w.size() != 2)
            throw usage_error("config: 2-D 'f' needs center [cx,cy] and width [wx,wy]");
        if (!(w[0].get<double>() > 0.0 && w[1].get<double>() > 0.0))
            throw usage_error("config: 'f.width' must be positive");
        return TestFunction2D::bump(c[0].get<double>(), c[1].get<double>(), w[0].get<double>(),
                                    w[1].get<double>());
    }
    throw usage_error("config: 2-D 'f.kind' must be bump");
}

inline void validate(RunConfig& cfg) {
    const json& j = cfg.raw;
    const std::set<std::string> common{"subcommand", "output", "quad"};
    auto with = [&](std::set<std::string> extra) {
        extra.insert(common.begin(), common.end());
        return extra;
    };
    auto model_of = [&]() -> std::string {
        const std::string m = j.at("model").get<std::string>();
        if (m != "schur_plancherel" && m != "schur" && m != "pp")
            throw usage_error("config: 'model' must be schur_plancherel, schur, or pp");
        return m;
    };
    auto check_q = [&]() {
        if (j.contains("q")) {
            const double q = j.at("q").get<double>();
            if (!(q > 0.0 && q < 1.0)) throw usage_error("config: 'q' must lie in (0,1)");
        }
        if (j.contains("r")) positive(j, "r");
        if (!j.contains("q") && !j.contains("r"))
            throw usage_error("config: missing key 'q' (or 'r')");
    };

    switch (cfg.sub) {
        case Subcommand::kernel: {
            require_keys(j, with({"kernel", "g", "theta", "alpha", "u", "q", "r", "tau", "chi", "sites"}),
                         {"kernel", "sites"}, "");
            const std::string k = j.at("kernel").get<std::string>();
            if (k == "schur") {
                if (!j.contains("g") && !j.contains("theta")) throw usage_error("config: missing key 'g'");
                if (j.contains("alpha")) positive(j, "alpha");
                parse_pattern_z(j.at("sites"));
                if (j.contains("g")) parse_g(j.at("g"));
            } else if (k == "sine") {
                if (!j.contains("g") && !j.contains("theta")) throw usage_error("config: missing key 'g'");
                if (!j.contains("u")) throw usage_error("config: missing key 'u'");
                parse_pattern_z(j.at("sites"));
                if (j.contains("g")) parse_g(j.at("g"));
            } else if (k == "pp") {
                check_q();
                parse_pattern_pp(j.at("sites"));
            } else if (k == "extended_sine") {
                if (!j.contains("tau") || !j.contains("chi"))
                    throw usage_error("config: missing key 'tau'/'chi'");
                if (!region_a_contains(j.at("tau").get<double>(), j.at("chi").get<double>()))
                    throw usage_error("config: (tau,chi) outside the liquid region");
                parse_pattern_pp(j.at("sites"));
            } else {
                throw usage_error("config: 'kernel' must be schur, sine, pp, or extended_sine");
            }
            break;
        }
        case Subcommand::sample: {
            require_keys(j, with({"model", "theta", "g", "q", "r", "window", "samples", "seed",
                                  "stream", "patterns", "glauber"}),
                         {"model", "window", "samples", "seed"}, "");
            const std::string m = model_of();
            if (m == "schur_plancherel") positive(j, "theta");
            if (m == "schur") parse_g(j.at("g"));
            if (m == "pp") check_q();
            const int samples = j.at("samples").get<int>();
            if (samples < 1) throw usage_error("config: 'samples' must be >= 1");
            if (m == "pp") {
                const json& w = j.at("window");
                require_keys(w, {"t", "h"}, {"t", "h"}, "window");
            } else {
                const json& w = j.at("window");
                if (!w.is_array() || w.size() != 2 || w[0].get<int64_t>() > w[1].get<int64_t>())
                    throw usage_error("config: 'window' must be [lo, hi]");
            }
            break;
        }
        case Subcommand::oracle_check: {
            require_keys(j, with({"model", "theta", "q", "r", "sites", "max_pattern_size",
                                  "max_weight", "tolerance"}),
                         {"model", "sites", "max_weight", "tolerance"}, "");
            const std::string m = model_of();
            if (m == "schur") throw usage_error("config: oracle-check supports schur_plancherel or pp");
            if (m == "schur_plancherel") positive(j, "theta");
            if (m == "pp") check_q();
            positive(j, "tolerance");
            if (j.at("max_weight").get<int>() < 0) throw usage_error("config: 'max_weight' must be >= 0");
            if (m == "pp")
                parse_pattern_pp(j.at("sites"));
            else
                parse_pattern_z(j.at("sites"));
            break;
        }
        case Subcommand::lln: {
            require_keys(j, with({"model", "theta", "g", "q", "r", "alpha", "pattern", "f",
                                  "replicas", "seed", "stream", "glauber", "i_tol"}),
                         {"model", "pattern", "f", "replicas", "seed"}, "");
            const std::string m = model_of();
            if (m == "schur_plancherel") {
                positive(j, "theta");
                if (!j.contains("alpha")) throw usage_error("config: missing key 'alpha'");
                positive(j, "alpha");
                parse_pattern_z(j.at("pattern"));
                parse_f1(j.at("f"));
            } else if (m == "schur") {
                parse_g(j.at("g"));
                if (!j.contains("alpha")) throw usage_error("config: missing key 'alpha'");
                positive(j, "alpha");
                parse_pattern_z(j.at("pattern"));
                parse_f1(j.at("f"));
            } else {
                check_q();
                parse_pattern_pp(j.at("pattern"));
                parse_f2(j.at("f"));
            }
            if (j.at("replicas").get<int>() < 2) throw usage_error("config: 'replicas' must be >= 2");
            break;
        }
        case Subcommand::converge: {
            require_keys(j, with({"model", "theta", "g", "u", "tau", "chi", "pattern", "scales"}),
                         {"model", "pattern", "scales"}, "");
            const std::string m = model_of();
            const auto scales = j.at("scales").get<std::vector<double>>();
            if (scales.size() < 2) throw usage_error("config: 'scales' needs at least two entries");
            if (m == "pp") {
                for (std::size_t i = 1; i < scales.size(); ++i)
                    if (!(scales[i] < scales[i - 1]))
                        throw usage_error("config: 'scales' (r values) must decrease");
                if (!j.contains("tau") || !j.contains("chi"))
                    throw usage_error("config: missing key 'tau'/'chi'");
                parse_pattern_pp(j.at("pattern"));
            } else {
                for (std::size_t i = 1; i < scales.size(); ++i)
                    if (!(scales[i] > scales[i - 1]))
                        throw usage_error("config: 'scales' (alpha values) must increase");
                if (!j.contains("u")) throw usage_error("config: missing key 'u'");
                if (m == "schur_plancherel")
                    positive(j, "theta");
                else
                    parse_g(j.at("g"));
                parse_pattern_z(j.at("pattern"));
            }
            break;
        }
        case Subcommand::decorrelate: {
            require_keys(j, with({"model", "theta", "g", "alpha", "q", "r", "tau", "pattern", "pairs"}),
                         {"model", "pattern", "pairs"}, "");
            const std::string m = model_of();
            const json& pairs = j.at("pairs");
            if (!pairs.is_array() || pairs.empty())
                throw usage_error("config: 'pairs' must be a nonempty array of [a, b] pairs");
            for (const auto& p : pairs)
                if (!p.is_array() || p.size() != 2) throw usage_error("config: 'pairs' entries must be [a, b]");
            if (m == "pp") {
                check_q();
                if (!j.contains("tau")) throw usage_error("config: missing key 'tau'");
                parse_pattern_pp(j.at("pattern"));
            } else {
                if (!j.contains("alpha")) throw usage_error("config: missing key 'alpha'");
                positive(j, "alpha");
                if (m == "schur_plancherel")
                    positive(j, "theta");
                else
                    parse_g(j.at("g"));
                parse_pattern_z(j.at("pattern"));
            }
            break;
        }
    }
}

inline std::string csv_comment_header(const RunConfig& cfg) {
    std::string out;
    out += std::string("# ") + kToolName + " " + kVersion + "\n";
    out += "# config: " + cfg.raw.dump() + "\n";
    return out;
}

inline json result_header(const RunConfig& cfg) {
    json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["config"] = cfg.raw;
    return j;
}

// ---------------------------------------------------------------------------
// Subcommand implementations
// ---------------------------------------------------------------------------

inline GCoefficients config_g(const json& j) {
    if (j.contains("g")) return parse_g(j.at("g"));
    return GCoefficients::plancherel(j.at("theta").get<double>());
}

inline QParam config_q(const json& j) {
    if (j.contains("q")) return QParam(j.at("q").get<double>());
    return QParam::from_rate(j.at("r").get<double>());
}

inline double config_rate(const json& j) {
    if (j.contains("r")) return j.at("r").get<double>();
    return -std::log(j.at("q").get<double>());
}

inline int run_kernel(const RunConfig& cfg, std::ostream& os) {
    const json& j = cfg.raw;
    const std::string k = j.at("kernel").get<std::string>();
    os << csv_comment_header(cfg);
    const QuadSettings qs = parse_quad(j);
    if (k == "schur" || k == "sine") {
        const auto sites = parse_pattern_z(j.at("sites"));
        os << "x,y,re,im,error_estimate\n";
        if (k == "schur") {
            SchurKernel kern(config_g(j), j.contains("alpha") ? j.at("alpha").get<double>() : 1.0, qs);
            for (auto x : sites)
                for (auto y : sites) {
                    const auto r = kern.eval(x, y);
                    os << x << ',' << y << ',' << fmt_double(r.value.real()) << ','
                       << fmt_double(r.value.imag()) << ',' << fmt_double(r.error_estimate) << '\n';
                }
        } else {
            const auto arcs = sine_arcs(config_g(j), j.at("u").get<double>());
            for (auto x : sites)
                for (auto y : sites) {
                    const cplx v = sine_kernel(arcs, x, y);
                    os << x << ',' << y << ',' << fmt_double(v.real()) << ','
                       << fmt_double(v.imag()) << ",0\n";
                }
        }
        return 0;
    }
    const auto sites = parse_pattern_pp(j.at("sites"));
    os << "t1,h1,t2,h2,re,im,error_estimate\n";
    if (k == "pp") {
        PlanePartitionKernel kern(config_q(j), qs);
        for (auto a : sites)
            for (auto b : sites) {
                const auto r = kern.eval(a, b);
                os << a.t << ',' << fmt_double(a.h()) << ',' << b.t << ',' << fmt_double(b.h())
                   << ',' << fmt_double(r.value.real()) << ',' << fmt_double(r.value.imag()) << ','
                   << fmt_double(r.error_estimate) << '\n';
            }
    } else {
        const double tau = j.at("tau").get<double>(), chi = j.at("chi").get<double>();
        for (auto a : sites)
            for (auto b : sites) {
                const double v = extended_sine_kernel(tau, chi, a.t - b.t, a.h2 - b.h2);
                os << a.t << ',' << fmt_double(a.h()) << ',' << b.t << ',' << fmt_double(b.h())
                   << ',' << fmt_double(v) << ",0,0\n";
            }
    }
    return 0;
}

inline int run_sample(const RunConfig& cfg, std::ostream& os) {
    const json& j = cfg.raw;
    const std::string model = j.at("model").get<std::string>();
    const int samples = j.at("samples").get<int>();
    const RngSeed seed{j.at("seed").get<std::uint64_t>(),
                       j.contains("stream") ? j.at("stream").get<std::uint64_t>() : 0};

    std::vector<std::string> lines;
    json freq = json::object();

    if (model == "pp") {
        const json& w = j.at("window");
        const auto trange = w.at("t").get<std::vector<double>>();
        const auto hrange = w.at("h").get<std::vector<double>>();
        WindowPP win{static_cast<int64_t>(trange[0]), static_cast<int64_t>(trange[1]),
                     static_cast<int64_t>(std::ceil(2 * hrange[0])),
                     static_cast<int64_t>(std::floor(2 * hrange[1]))};
        std::vector<SitePP> sites;
        for (int64_t t = win.t_lo; t <= win.t_hi; ++t)
            for (int64_t h2 = win.h2_lo; h2 <= win.h2_hi; ++h2)
                if (SitePP{t, h2}.parity_ok()) sites.push_back({t, h2});
        std::vector<PatternPP> pats;
        if (j.contains("patterns"))
            for (const auto& p : j.at("patterns")) pats.push_back(parse_pattern_pp(p));
        std::vector<long long> hits(pats.size(), 0);
        const QParam q = config_q(j);
        for (int s = 0; s < samples; ++s) {
            SplitRng rng({seed.seed, seed.stream + static_cast<std::uint64_t>(s)});
            const auto pi = sample_plane_partition(q, -1, rng);
            std::string bits(sites.size(), '0');
            for (std::size_t i = 0; i < sites.size(); ++i)
                if (pp_point_present(pi, sites[i])) bits[i] = '1';
            for (std::size_t p = 0; p < pats.size(); ++p) {
                bool all = true;
                for (const auto& site : pats[p])
                    if (!pp_point_present(pi, site)) {
                        all = false;
                        break;
                    }
                hits[p] += all;
            }
            lines.push_back(std::move(bits));
        }
        for (std::size_t p = 0; p < pats.size(); ++p)
            freq[to_string(pats[p])] = static_cast<double>(hits[p]) / samples;
    } else {
        const auto wv = j.at("window").get<std::vector<int64_t>>();
        const WindowZ win{wv[0], wv[1]};
        std::vector<PatternZ> pats;
        if (j.contains("patterns"))
            for (const auto& p : j.at("patterns")) pats.push_back(parse_pattern_z(p));
        std::vector<long long> hits(pats.size(), 0);

        std::optional<ComplexMatrix> K;
        std::vector<int64_t> sites;
        double theta = 0.0;
        if (model == "schur_plancherel") {
            theta = j.at("theta").get<double>();
        } else {
            for (int64_t x = win.lo; x <= win.hi; ++x) sites.push_back(x);
            SchurKernel kern(parse_g(j.at("g")), 1.0, parse_quad(j));
            K = kern.matrix(sites);
        }
        for (int s = 0; s < samples; ++s) {
            SplitRng rng({seed.seed, seed.stream + static_cast<std::uint64_t>(s)});
            WindowConfigZ c;
            if (model == "schur_plancherel") {
                c = WindowConfigZ::from_partition(sample_plancherel(theta, rng), win);
            } else {
                c.window = win;
                c.occupied = sample_window(*K, rng);
            }
            std::string bits(c.occupied.size(), '0');
            for (std::size_t i = 0; i < c.occupied.size(); ++i)
                if (c.occupied[i]) bits[i] = '1';
            for (std::size_t p = 0; p < pats.size(); ++p) {
                bool all = true;
                for (auto site : pats[p])
                    if (site < win.lo || site > win.hi || !c.occupied_at(site)) {
                        all = false;
                        break;
                    }
                hits[p] += all;
            }
            lines.push_back(std::move(bits));
        }
        for (std::size_t p = 0; p < pats.size(); ++p)
            freq[to_string(pats[p])] = static_cast<double>(hits[p]) / samples;
    }

    for (const auto& l : lines) os << l << '\n';
    json summary = result_header(cfg);
    summary["samples"] = samples;
    summary["pattern_frequencies"] = freq;
    os << summary.dump() << '\n';
    return 0;
}

inline int run_oracle_check(const RunConfig& cfg, std::ostream& os) {
    const json& j = cfg.raw;
    const std::string model = j.at("model").get<std::string>();
    const double tol = j.at("tolerance").get<double>();
    const auto max_weight = j.at("max_weight").get<int64_t>();
    const int max_size = j.contains("max_pattern_size") ? j.at("max_pattern_size").get<int>() : 2;
    const QuadSettings qs = parse_quad(j);

    os << csv_comment_header(cfg);
    os << "pattern,kernel_value,oracle_value,abs_diff,tail_bound\n";
    bool ok = true;

    auto emit = [&](const std::string& name, double kv, double ov, double tail) {
        const double diff = std::fabs(kv - ov);
        ok = ok && diff <= tol;
        os << '"' << name << "\"," << fmt_double(kv) << ',' << fmt_double(ov) << ','
           << fmt_double(diff) << ',' << fmt_double(tail) << '\n';
    };

    if (model == "schur_plancherel") {
        const double theta = j.at("theta").get<double>();
        const auto sites = parse_pattern_z(j.at("sites"));
        const auto stats = oracle_site_statistics(SchurPlancherelModel{theta},
                                                  std::span<const int64_t>(sites), max_weight);
        SchurKernel kern(GCoefficients::plancherel(theta), 1.0, qs);
        const auto K = kern.matrix(sites);
        for (std::size_t i = 0; i < sites.size(); ++i)
            emit(to_string(PatternZ{sites[i]}), K(i, i).real(), stats.single[i], stats.tail_bound);
        if (max_size >= 2)
            for (std::size_t i = 0; i < sites.size(); ++i)
                for (std::size_t k = i + 1; k < sites.size(); ++k) {
                    const double det = (K(i, i) * K(k, k) - K(i, k) * K(k, i)).real();
                    emit(to_string(PatternZ{sites[i], sites[k]}), det, stats.pair[i][k],
                         stats.tail_bound);
                }
    } else {
        const QParam q = config_q(j);
        const auto sites = parse_pattern_pp(j.at("sites"));
        const auto stats = oracle_site_statistics(PlanePartitionModel{q},
                                                  std::span<const SitePP>(sites), max_weight);
        PlanePartitionKernel kern(q, qs);
        const auto K = kern.matrix(sites);
        for (std::size_t i = 0; i < sites.size(); ++i)
            emit(to_string(PatternPP{sites[i]}), K(i, i).real(), stats.single[i], stats.tail_bound);
        if (max_size >= 2)
            for (std::size_t i = 0; i < sites.size(); ++i)
                for (std::size_t k = i + 1; k < sites.size(); ++k) {
                    const double det = (K(i, i) * K(k, k) - K(i, k) * K(k, i)).real();
                    emit(to_string(PatternPP{sites[i], sites[k]}), det, stats.pair[i][k],
                         stats.tail_bound);
                }
    }
    return ok ? 0 : 1;
}

inline int run_lln_cmd(const RunConfig& cfg, std::ostream& os_json, std::ostream& os_csv) {
    const json& j = cfg.raw;
    const std::string model = j.at("model").get<std::string>();
    const int replicas = j.at("replicas").get<int>();
    const RngSeed seed{j.at("seed").get<std::uint64_t>(),
                       j.contains("stream") ? j.at("stream").get<std::uint64_t>() : 0};

    ExperimentResult res;
    if (model == "pp") {
        PPExperimentSpec spec;
        spec.r = config_rate(j);
        if (j.contains("i_tol")) spec.i_tol = j.at("i_tol").get<double>();
        res = run_lln_experiment(spec, parse_f2(j.at("f")), parse_pattern_pp(j.at("pattern")),
                                 replicas, seed);
    } else {
        SchurExperimentSpec spec{config_g(j), j.at("alpha").get<double>(), parse_quad(j)};
        res = run_lln_experiment(spec, parse_f1(j.at("f")), parse_pattern_z(j.at("pattern")),
                                 replicas, seed);
    }

    json out = result_header(cfg);
    out["i_value"] = res.i_value;
    out["i_quadrature_error"] = res.i_quadrature_error;
    out["mean"] = res.mean;
    out["variance"] = res.variance;
    out["stderr"] = res.stderr_;
    out["z_score"] = res.z_score;
    out["replicas"] = replicas;
    out["sigma_samples"] = res.sigma_samples;
    os_json << out.dump(2) << '\n';

    os_csv << csv_comment_header(cfg);
    os_csv << "replica,sigma\n";
    for (std::size_t i = 0; i < res.sigma_samples.size(); ++i)
        os_csv << i << ',' << fmt_double(res.sigma_samples[i]) << '\n';
    return 0;
}

inline int run_converge(const RunConfig& cfg, std::ostream& os) {
    const json& j = cfg.raw;
    const std::string model = j.at("model").get<std::string>();
    const auto scales = j.at("scales").get<std::vector<double>>();
    ConvergenceTable tab;
    if (model == "pp") {
        tab = convergence_study_pp(parse_pattern_pp(j.at("pattern")), j.at("tau").get<double>(),
                                   j.at("chi").get<double>(), scales, parse_quad(j));
    } else {
        tab = convergence_study_schur(config_g(j), parse_pattern_z(j.at("pattern")),
                                      j.at("u").get<double>(), scales, parse_quad(j));
    }
    os << csv_comment_header(cfg);
    os << "scale,error,ratio_vs_prev,loglog_slope\n";
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
        os << fmt_double(tab.rows[i].scale) << ',' << fmt_double(tab.rows[i].error) << ',';
        if (i > 0) os << fmt_double(tab.ratios[i - 1]);
        os << ',' << fmt_double(tab.loglog_slope) << '\n';
    }
    return 0;
}

inline int run_decorrelate(const RunConfig& cfg, std::ostream& os) {
    const json& j = cfg.raw;
    const std::string model = j.at("model").get<std::string>();
    std::vector<std::pair<double, double>> pairs;
    for (const auto& p : j.at("pairs")) pairs.emplace_back(p[0].get<double>(), p[1].get<double>());
    DecorrelationTable tab;
    if (model == "pp") {
        tab = decorrelation_study_pp(config_rate(j), parse_pattern_pp(j.at("pattern")),
                                     j.at("tau").get<double>(), pairs, parse_quad(j));
    } else {
        tab = decorrelation_study_schur(config_g(j), j.at("alpha").get<double>(),
                                        parse_pattern_z(j.at("pattern")), pairs, parse_quad(j));
    }
    os << csv_comment_header(cfg);
    os << "separation,abs_cov,loglog_slope\n";
    for (const auto& row : tab.rows)
        os << fmt_double(row.separation) << ',' << fmt_double(row.cov) << ','
           << fmt_double(tab.loglog_slope) << '\n';
    return 0;
}

}  // namespace detail

// Parse and validate a JSON config. The subcommand comes either from the
// caller (CLI dispatch) or from a "subcommand" key in the text; unknown keys
// are rejected by name.
inline RunConfig parse_config(const std::string& text,
                              std::optional<Subcommand> sub = std::nullopt) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw usage_error(std::string("config: ") + e.what());
    }
    RunConfig cfg;
    if (j.contains("subcommand")) {
        const std::string name = j.at("subcommand").get<std::string>();
        const auto it = subcommand_names().find(name);
        if (it == subcommand_names().end())
            throw usage_error("config: unknown subcommand '" + name + "'");
        if (sub && *sub != it->second)
            throw usage_error("config: subcommand '" + name + "' does not match the CLI subcommand");
        cfg.sub = it->second;
    } else if (sub) {
        cfg.sub = *sub;
    } else {
        throw usage_error("config: missing key 'subcommand'");
    }
    cfg.raw = j;
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    detail::validate(cfg);
    return cfg;
}

// Run a validated config, writing machine-readable results. Returns the exit
// status: 0 success, 1 tolerance failure. Usage problems throw usage_error
// (exit 2 in the tool). With an output path, `lln` writes <output>.json and
// <output>.csv and everything else writes <output>; without one, everything
// goes to `fallback`.
inline int dispatch(const RunConfig& cfg, std::ostream& fallback = std::cout) {
    auto open_or = [&](const std::string& path) -> std::ofstream {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw usage_error("cannot open output file '" + path + "'");
        return f;
    };
    switch (cfg.sub) {
        case Subcommand::kernel:
        case Subcommand::sample:
        case Subcommand::oracle_check:
        case Subcommand::converge:
        case Subcommand::decorrelate: {
            std::ofstream file;
            std::ostream* os = &fallback;
            if (!cfg.output.empty()) {
                file = open_or(cfg.output);
                os = &file;
            }
            switch (cfg.sub) {
                case Subcommand::kernel: return detail::run_kernel(cfg, *os);
                case Subcommand::sample: return detail::run_sample(cfg, *os);
                case Subcommand::oracle_check: return detail::run_oracle_check(cfg, *os);
                case Subcommand::converge: return detail::run_converge(cfg, *os);
                default: return detail::run_decorrelate(cfg, *os);
            }
        }
        case Subcommand::lln: {
            if (cfg.output.empty()) return detail::run_lln_cmd(cfg, fallback, fallback);
            auto fj = open_or(cfg.output + ".json");
            auto fc = open_or(cfg.output + ".csv");
            return detail::run_lln_cmd(cfg, fj, fc);
        }
    }
    return 2;
}

}  // namespace dpp::cli
