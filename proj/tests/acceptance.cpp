// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured quantities.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "dpp/lln.hpp"
#include "dpp/process.hpp"
#include "dpp/serialize.hpp"
#include "support/stats.hpp"

using namespace dpp;
using Catch::Approx;

constexpr double pi = std::numbers::pi;

namespace {

void report(int criterion, const char* name, bool ok, const std::string& detail) {
    std::printf("[criterion %2d] %s  %s  (%s)\n", criterion, ok ? "PASS" : "FAIL", name,
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) { return fmt_double(v); }

}  // namespace

TEST_CASE("criterion 1: Schur oracle equivalence") {
    const double theta = 0.3;
    std::vector<int64_t> sites;
    for (int64_t x = -4; x <= 2; ++x) sites.push_back(x);

    const auto stats = oracle_site_statistics(SchurPlancherelModel{theta},
                                              std::span<const int64_t>(sites), 12);
    REQUIRE(stats.tail_bound < 1e-15);

    SchurKernel kern(GCoefficients::plancherel(theta), 1.0);
    const auto K = kern.matrix(sites);

    double worst = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i)
        worst = std::max(worst, std::fabs(K(i, i).real() - stats.single[i]));
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const double det = (K(i, i) * K(j, j) - K(i, j) * K(j, i)).real();
            worst = std::max(worst, std::fabs(det - stats.pair[i][j]));
        }
    const bool ok = worst <= 1e-6;
    report(1, "Schur oracle equivalence", ok,
           "28 patterns, max|diff| = " + fmt(worst) + ", tail = " + fmt(stats.tail_bound));
    CHECK(worst <= 1e-6);
}

TEST_CASE("criterion 2: plane-partition oracle equivalence") {
    const QParam q(0.2);
    std::vector<SitePP> sites;
    for (int64_t t = -2; t <= 2; ++t)
        for (int64_t h2 = -5; h2 <= 5; ++h2)
            if (SitePP{t, h2}.parity_ok()) sites.push_back({t, h2});
    REQUIRE(sites.size() == 28);

    // weight 31 keeps the enumeration tail honestly below 1e-15
    const auto stats = oracle_site_statistics(PlanePartitionModel{q},
                                              std::span<const SitePP>(sites), 31);
    REQUIRE(stats.tail_bound < 1e-15);

    PlanePartitionKernel kern(q);
    const auto K = kern.matrix(sites);

    double worst = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i)
        worst = std::max(worst, std::fabs(K(i, i).real() - stats.single[i]));
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j) {
            const double det = (K(i, i) * K(j, j) - K(i, j) * K(j, i)).real();
            worst = std::max(worst, std::fabs(det - stats.pair[i][j]));
        }
    const bool ok = worst <= 1e-6;
    report(2, "plane-partition oracle equivalence", ok,
           "406 patterns, max|diff| = " + fmt(worst) + ", tail = " + fmt(stats.tail_bound));
    CHECK(worst <= 1e-6);
}

TEST_CASE("criterion 3: kernel structure") {
    // Hermitian symmetry of K_alpha at 1e-9 on a 7x7 grid
    const GCoefficients gs[] = {
        GCoefficients::plancherel(1.0),
        {{cplx(0.3, 0.0), cplx(0.1, 0.0)}, 0.5},
        {{cplx(0.2, 0.4)}, 0.5},
    };
    std::vector<int64_t> grid;
    for (int64_t x = -3; x <= 3; ++x) grid.push_back(x);

    double herm = 0.0, diag_lo = 1.0, diag_hi = 0.0;
    for (const auto& g : gs)
        for (double alpha : {1.0, 5.0, 20.0}) {
            SchurKernel k(g, alpha);
            const auto K = k.matrix(grid);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                diag_lo = std::min(diag_lo, K(i, i).real());
                diag_hi = std::max(diag_hi, K(i, i).real());
                for (std::size_t j = 0; j < grid.size(); ++j)
                    herm = std::max(herm, std::abs(K(i, j) - std::conj(K(j, i))));
            }
        }

    // diagonals of the other kernels
    const auto arcs = sine_arcs(GCoefficients::plancherel(1.0), 0.3);
    diag_lo = std::min(diag_lo, sine_kernel(arcs, 0, 0).real());
    diag_hi = std::max(diag_hi, sine_kernel(arcs, 0, 0).real());
    PlanePartitionKernel kq(QParam(0.2));
    for (const SitePP s : {SitePP{0, -1}, SitePP{1, -2}, SitePP{-2, 3}}) {
        const double d = kq(s, s);
        diag_lo = std::min(diag_lo, d);
        diag_hi = std::max(diag_hi, d);
    }
    for (auto [tau, chi] : {std::pair{0.0, 0.0}, {1.0, 0.2}}) {
        const double d = extended_sine_kernel(tau, chi, 0, 0);
        diag_lo = std::min(diag_lo, d);
        diag_hi = std::max(diag_hi, d);
    }

    // Fourier projection cross-check: K_F(x,y) = K_alpha(-x-1, -y-1)
    const FourierProjectionKernel kf(GCoefficients::plancherel(0.3), 1.0, 48);
    const SchurKernel ka(GCoefficients::plancherel(0.3), 1.0);
    double refl = 0.0;
    for (int64_t x = -2; x <= 2; ++x)
        for (int64_t y = -2; y <= 2; ++y)
            refl = std::max(refl, std::abs(kf(x, y) - ka(-x - 1, -y - 1)));

    const bool ok = herm < 1e-9 && diag_lo >= -1e-8 && diag_hi <= 1.0 + 1e-8 && refl < 1e-8;
    report(3, "kernel structure", ok,
           "hermitian = " + fmt(herm) + ", diag in [" + fmt(diag_lo) + ", " + fmt(diag_hi) +
               "], reflection = " + fmt(refl));
    CHECK(herm < 1e-9);
    CHECK(diag_lo >= -1e-8);
    CHECK(diag_hi <= 1.0 + 1e-8);
    CHECK(refl < 1e-8);
}

TEST_CASE("criterion 4: sine-limit exactness") {
    const auto g = GCoefficients::plancherel(1.0);
    double worst = 0.0;
    for (double u : {-1.0, 0.0, 1.0}) {
        const double got = sine_kernel(sine_arcs(g, u), 0, 0).real();
        worst = std::max(worst, std::fabs(got - std::acos(u / 2) / pi));
    }
    const double at_min = sine_kernel(sine_arcs(g, -2.0), 0, 0).real();
    const double at_max = sine_kernel(sine_arcs(g, 2.0), 0, 0).real();
    const bool ok = worst <= 1e-12 && std::fabs(at_min - 1.0) < 1e-9 && std::fabs(at_max) < 1e-6;
    report(4, "sine-limit exactness", ok,
           "max|diag - acos(u/2)/pi| = " + fmt(worst) + ", density(u_min) = " + fmt(at_min) +
               ", density(u_max) = " + fmt(at_max));
    CHECK(worst <= 1e-12);
    CHECK(std::fabs(at_min - 1.0) < 1e-9);
    CHECK(std::fabs(at_max) < 1e-6);
}

TEST_CASE("criterion 5: extended-sine closed form") {
    double worst = 0.0;
    for (auto [tau, chi] : {std::pair{0.0, 0.0}, {1.0, 0.2}}) {
        const double ph = std::arg(critical_point_pp(tau, chi).z);
        for (int64_t dh = 1; dh <= 3; ++dh) {
            const double expect = std::exp(tau * dh / 2.0) * std::sin(ph * dh) / (pi * dh);
            const double got = extended_sine_kernel(tau, chi, 0, 2 * dh);
            worst = std::max(worst, std::fabs(got - expect));
        }
    }
    const bool ok = worst <= 1e-10;
    report(5, "extended-sine closed form", ok, "max|diff| = " + fmt(worst));
    CHECK(worst <= 1e-10);
}

TEST_CASE("criterion 6: rate studies") {
    // Schur: error at u = 0, m = {0} should halve (or better) per doubling
    const std::vector<double> alphas{25.0, 50.0, 100.0, 200.0};
    const auto tab = convergence_study_schur(GCoefficients::plancherel(1.0), PatternZ{0}, 0.0,
                                             alphas);
    std::string detail = "schur err:";
    for (const auto& row : tab.rows) detail += " " + fmt(row.error);
    detail += "; ratios:";
    bool schur_ok = true;
    for (double r : tab.ratios) {
        detail += " " + fmt(r);
        schur_ok = schur_ok && r < 0.5;
    }

    // PP: log err vs log r slope 1 +- 0.3 over r in {0.08, 0.04, 0.02}.
    // The two-point pattern sees the O(r) rate; the one-point diagonal has a
    // genuinely slower sqrt(r)-sized oscillating deviation, reported alongside.
    const std::vector<double> rs{0.08, 0.04, 0.02};
    const auto ptab = convergence_study_pp(PatternPP{{0, -1}, {0, -3}}, 0.0, 0.0, rs);
    std::string pdetail = "pp err:";
    for (const auto& row : ptab.rows) pdetail += " " + fmt(row.error);
    const double slope = ptab.loglog_slope;
    const bool pp_ok = std::fabs(slope - 1.0) <= 0.3;
    const auto ptab1 = convergence_study_pp(PatternPP{{0, -1}}, 0.0, 0.0, rs);

    report(6, "rate studies", schur_ok && pp_ok,
           detail + " | " + pdetail + "; pp slope = " + fmt(slope) +
               " (one-point diag slope = " + fmt(ptab1.loglog_slope) + ")");
    CHECK(schur_ok);
    CHECK(pp_ok);
}

TEST_CASE("criterion 7: action diagnostics") {
    const GCoefficients gs[] = {
        GCoefficients::plancherel(1.0),
        {{cplx(0.3, 0.0), cplx(0.1, 0.0)}, 0.5},
        {{cplx(0.2, 0.4)}, 0.5},
    };
    double worst_schur = 0.0;
    for (const auto& g : gs)
        for (double u : {-0.5, 0.0, 1.0})
            for (int k = 0; k < 256; ++k) {
                const double ang = -pi + 2 * pi * (k + 0.5) / 256;
                worst_schur = std::max(worst_schur,
                                       std::fabs(action_schur(g, u, std::polar(1.0, ang)).real()));
            }

    double worst_pp = 0.0;
    for (auto [tau, chi] : {std::pair{0.5, 0.0}, {1.0, 0.3}, {2.0, -0.5}}) {
        const double expect = -(0.5 * tau) * (0.5 * tau + chi);
        for (int k = 0; k < 256; ++k) {
            const double ang = -pi + 2 * pi * (k + 0.5) / 256;
            const double re = action_pp(std::polar(std::exp(0.5 * tau), ang), tau, chi).real();
            worst_pp = std::max(worst_pp, std::fabs(re - expect));
        }
    }
    const bool ok = worst_schur <= 1e-12 && worst_pp <= 1e-10;
    report(7, "action diagnostics", ok,
           "max|Re S_u| = " + fmt(worst_schur) + ", max|Re S - const| = " + fmt(worst_pp));
    CHECK(worst_schur <= 1e-12);
    CHECK(worst_pp <= 1e-10);
}

TEST_CASE("criterion 8: sampler correctness") {
    // (a) window sampler vs determinant probabilities, 4 sites, 1e5 samples
    const KernelSpecZ spec{SchurSpec{GCoefficients::plancherel(0.5), 1.0, {}}};
    std::vector<int64_t> w{-2, -1, 0, 1};
    const ComplexMatrix K = kernel_matrix(spec, std::span<const int64_t>(w));
    std::vector<double> probs(16, 0.0);
    for (int c = 0; c < 16; ++c) {
        std::vector<uint8_t> occ(4);
        for (int b = 0; b < 4; ++b) occ[static_cast<std::size_t>(b)] = (c >> b) & 1;
        probs[static_cast<std::size_t>(c)] =
            std::max(0.0, detail::exact_config_probability(K, occ));
    }
    SplitRng rng({20250810, 0});
    std::vector<long long> obs(16, 0);
    const long long n = 100000;
    for (long long i = 0; i < n; ++i) {
        const auto occ = sample_window(K, rng);
        int idx = 0;
        for (int b = 0; b < 4; ++b) idx |= (occ[static_cast<std::size_t>(b)] << b);
        ++obs[static_cast<std::size_t>(idx)];
    }
    const double p_value = teststat::chi_square_p(teststat::chi_square_stat(obs, probs, n), 15);

    // (b) Plancherel sampler one-point function at 1e6 samples
    const double theta = 0.3;
    const SchurKernel kern(GCoefficients::plancherel(theta), 1.0);
    const double kval = kern(-1, -1).real();
    SplitRng rng2({424243, 0});
    long long hits = 0;
    const long long n2 = 1000000;
    for (long long i = 0; i < n2; ++i)
        hits += partition_point_present(sample_plancherel(theta, rng2), -1);
    const double freq = static_cast<double>(hits) / static_cast<double>(n2);
    const double sigma = std::sqrt(kval * (1.0 - kval) / static_cast<double>(n2));
    const double dev_b = std::fabs(freq - kval) / sigma;

    // (c) Glauber vacuum probability vs the MacMahon constant at q = 0.2
    const QParam q(0.2);
    double m_const = 1.0;
    for (int k = 1; k < 200; ++k) m_const *= std::pow(1.0 - std::pow(0.2, k), k);
    long long empty = 0;
    const long long n3 = 20000;
    for (long long i = 0; i < n3; ++i) {
        SplitRng r({97531, static_cast<uint64_t>(i)});
        empty += sample_plane_partition(q, -1, r).empty();
    }
    const double vfreq = static_cast<double>(empty) / static_cast<double>(n3);
    const double vsigma = std::sqrt(m_const * (1.0 - m_const) / static_cast<double>(n3));
    const double dev_c = std::fabs(vfreq - m_const) / vsigma;

    const bool ok = p_value > 0.001 && dev_b <= 3.0 && dev_c <= 3.0;
    report(8, "sampler correctness", ok,
           "chi2 p = " + fmt(p_value) + ", plancherel dev = " + fmt(dev_b) +
               " sigma, glauber dev = " + fmt(dev_c) + " sigma");
    CHECK(p_value > 0.001);
    CHECK(dev_b <= 3.0);
    CHECK(dev_c <= 3.0);
}

TEST_CASE("criterion 9: LLN endpoint at desk scale") {
    SchurExperimentSpec spec{GCoefficients::plancherel(1.0), 30.0, {}};
    const auto f = TestFunction1D::bump(0.0, 1.0);

    bool all_ok = true;
    std::string detail;
    double ratio0 = 0.0;
    for (const PatternZ& m : {PatternZ{}, PatternZ{0}, PatternZ{0, 1}}) {
        const auto res = run_lln_experiment(spec, f, m, 64, {8086, 0});
        // the reference integral carries its own quadrature error estimate
        const double band = 3.0 * res.stderr_ + res.i_quadrature_error;
        const bool ok = std::fabs(res.mean - res.i_value) <= band;
        all_ok = all_ok && ok;
        detail += "m=" + to_string(m) + ": |mean-I| = " + fmt(std::fabs(res.mean - res.i_value)) +
                  " vs 3se = " + fmt(3.0 * res.stderr_) + "; ";
        if (m == PatternZ{0}) ratio0 = res.stderr_ / std::fabs(res.i_value);
        CHECK(std::fabs(res.mean - res.i_value) <= band);
    }
    const bool prec_ok = ratio0 < 0.05;
    report(9, "LLN endpoint", all_ok && prec_ok,
           detail + "stderr/I (m={0}) = " + fmt(ratio0));
    CHECK(prec_ok);
}

TEST_CASE("criterion 10: variance decay in alpha") {
    const auto f = TestFunction1D::bump(0.0, 1.0);
    const PatternZ m{0};
    auto var_of = [&](double alpha, uint64_t seed) {
        SchurExperimentSpec spec{GCoefficients::plancherel(1.0), alpha, {}};
        const auto res = run_lln_experiment(spec, f, m, 256, {seed, 0});
        // moment-based standard error of the sample variance
        double m4 = 0.0;
        for (double v : res.sigma_samples) {
            const double d = v - res.mean;
            m4 += d * d * d * d;
        }
        m4 /= static_cast<double>(res.sigma_samples.size());
        const double se =
            std::sqrt(std::max(0.0, m4 - res.variance * res.variance) /
                      static_cast<double>(res.sigma_samples.size()));
        return std::pair{res.variance, se};
    };
    const auto [v30, se30] = var_of(30.0, 555);
    const auto [v60, se60] = var_of(60.0, 556);
    const bool ok = v60 + 2.0 * se60 < v30 - 2.0 * se30;
    report(10, "variance decay", ok,
           "var(30) = " + fmt(v30) + " +- " + fmt(se30) + ", var(60) = " + fmt(v60) + " +- " +
               fmt(se60));
    CHECK(ok);
}

TEST_CASE("criterion 11: decorrelation shapes") {
    // Schur at fixed alpha = 100: pattern translates at odd site separations
    // d = alpha |u1 - u2| (odd keeps the half-filling sine factor away from
    // its zeros)
    const double alpha = 100.0;
    std::vector<std::pair<double, double>> pairs;
    for (int64_t d : {9, 17, 33, 65}) pairs.push_back({0.0, static_cast<double>(d) / alpha});
    const auto tab =
        decorrelation_study_schur(GCoefficients::plancherel(1.0), alpha, PatternZ{0}, pairs);
    const double slope_schur = tab.loglog_slope;

    // PP at fixed tau, r = 0.05: chi separations doubling
    const double r = 0.05, tau = 0.5;
    std::vector<std::pair<double, double>> cpairs{{-0.1, 0.1}, {-0.2, 0.2}, {-0.4, 0.4}};
    const auto ptab = decorrelation_study_pp(r, PatternPP{{0, -1}}, tau, cpairs);
    const double slope_pp = ptab.loglog_slope;

    std::string detail = "schur |cov|:";
    for (const auto& row : tab.rows) detail += " " + fmt(row.cov);
    detail += "; pp |cov|:";
    for (const auto& row : ptab.rows) detail += " " + fmt(row.cov);

    const bool ok_s = std::fabs(slope_schur - (-1.0)) <= 0.4;
    const bool ok_p = std::fabs(slope_pp - (-1.0)) <= 0.4;
    report(11, "decorrelation shapes", ok_s && ok_p,
           "schur slope = " + fmt(slope_schur) + ", pp slope = " + fmt(slope_pp) + "; " + detail);
    CHECK(ok_s);
    CHECK(ok_p);
}
