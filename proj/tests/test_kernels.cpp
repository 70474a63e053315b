#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>

#include "dpp/kernels.hpp"

using namespace dpp;
using Catch::Approx;

constexpr double pi = std::numbers::pi;

TEST_CASE("u_range closed forms") {
    auto [a, b] = u_range(GCoefficients::plancherel(1.0));
    CHECK(a == Approx(-2.0).margin(1e-9));
    CHECK(b == Approx(2.0).margin(1e-9));

    auto [a3, b3] = u_range(GCoefficients::plancherel(0.3));
    CHECK(a3 == Approx(-0.6).margin(1e-9));
    CHECK(b3 == Approx(0.6).margin(1e-9));

    const GCoefficients g2{{cplx(0.0, 0.0), cplx(0.5, 0.0)}, 0.5};
    auto [a2, b2] = u_range(g2);
    CHECK(a2 == Approx(-2.0).margin(1e-9));
    CHECK(b2 == Approx(2.0).margin(1e-9));
}

TEST_CASE("sine arcs") {
    const auto g = GCoefficients::plancherel(1.0);

    // 2 cos(phi) >= 0: single arc [-pi/2, pi/2]
    const auto arcs0 = sine_arcs(g, 0.0);
    REQUIRE(arcs0.arcs.size() == 1);
    CHECK(arcs0.arcs[0].first == Approx(-pi / 2).margin(1e-10));
    CHECK(arcs0.arcs[0].second == Approx(pi / 2).margin(1e-10));

    // u = u_min: full circle
    const auto arcs_min = sine_arcs(g, -2.0);
    CHECK(arcs_min.total_measure() == Approx(2 * pi).margin(1e-9));

    // u = u_max: degenerate arc, zero measure
    const auto arcs_max = sine_arcs(g, 2.0);
    CHECK(arcs_max.total_measure() == Approx(0.0).margin(1e-6));

    // 2 cos(2 phi) >= 0: two arcs, total measure pi
    const GCoefficients g2{{cplx(0.0, 0.0), cplx(0.5, 0.0)}, 0.5};
    const auto arcs2 = sine_arcs(g2, 0.0);
    CHECK(arcs2.arcs.size() == 2);
    CHECK(arcs2.total_measure() == Approx(pi).margin(1e-10));

    // endpoints solve zG' = u
    for (auto& [s, e] : arcs2.arcs) {
        CHECK(std::fabs(zg_prime_angle(g2, s)) < 1e-10);
        CHECK(std::fabs(zg_prime_angle(g2, e)) < 1e-10);
    }
}

TEST_CASE("sine kernel closed forms") {
    const auto g = GCoefficients::plancherel(1.0);
    const auto arcs = sine_arcs(g, 0.0);
    CHECK(sine_kernel(arcs, 0, 0).real() == Approx(0.5).margin(1e-12));
    CHECK(std::abs(sine_kernel(arcs, 0, 1)) == Approx(1.0 / pi).margin(1e-12));

    // diagonal density arccos(u/2)/pi for the Plancherel family
    for (double u : {-1.0, 0.0, 1.0, 0.37}) {
        const auto a = sine_arcs(g, u);
        CHECK(sine_kernel(a, 3, 3).real() == Approx(std::acos(u / 2) / pi).margin(1e-12));
    }
    CHECK(sine_kernel(sine_arcs(g, -2.0), 5, 5).real() == Approx(1.0).margin(1e-9));
    CHECK(sine_kernel(sine_arcs(g, 2.0), 5, 5).real() == Approx(0.0).margin(1e-6));

    // full circle: off-diagonal entries vanish
    CHECK(std::abs(sine_kernel(sine_arcs(g, -2.0), 0, 3)) < 1e-9);

    // Hermitian on a 7x7 grid at three u values
    for (double u : {-1.0, 0.0, 0.8}) {
        const auto a = sine_arcs(g, u);
        for (int64_t x = -3; x <= 3; ++x)
            for (int64_t y = -3; y <= 3; ++y)
                CHECK(std::abs(sine_kernel(a, x, y) - std::conj(sine_kernel(a, y, x))) < 1e-14);
    }
}

TEST_CASE("liquid region membership") {
    CHECK(region_a_contains(0.0, 0.0));
    CHECK_FALSE(region_a_contains(10.0, 0.0));
    CHECK_FALSE(region_a_contains(0.0, -std::log(4.0)));  // boundary excluded
    CHECK(region_a_contains(1.0, 0.2));
}

TEST_CASE("critical point of the plane-partition action") {
    // (0,0): unit circles centered at 0 and 1 intersect at e^{i pi/3}
    const auto c0 = critical_point_pp(0.0, 0.0);
    CHECK(std::abs(c0.z - std::polar(1.0, pi / 3)) < 1e-12);

    for (auto [tau, chi] : {std::pair{1.0, 0.0}, {0.5, 0.3}, {2.0, -0.4}}) {
        const auto c = critical_point_pp(tau, chi);
        CHECK(c.z.imag() > 0.0);
        CHECK(std::fabs(std::abs(c.z) - std::exp(-tau / 2)) < 1e-12);
        CHECK(std::fabs(std::abs(c.z - 1.0) - std::exp(-tau / 4 - chi / 2)) < 1e-12);
        // e^{tau} z solves (1 - 1/w)(1 - e^{-tau} w) = e^{-tau/2 - chi}
        const cplx w = std::exp(tau) * c.z;
        const cplx lhs = (1.0 - 1.0 / w) * (1.0 - std::exp(-tau) * w);
        CHECK(std::abs(lhs - std::exp(-tau / 2 - chi)) < 1e-12);
    }
    CHECK_THROWS_AS(critical_point_pp(10.0, 0.0), region_error);
}

TEST_CASE("extended sine kernel closed forms") {
    // dt = 0: e^{tau dh/2} sin(phi dh) / (pi dh) with phi = arg z(tau,chi)
    for (auto [tau, chi] : {std::pair{0.0, 0.0}, {1.0, 0.2}}) {
        const double ph = std::arg(critical_point_pp(tau, chi).z);
        for (int64_t dh = 1; dh <= 3; ++dh) {
            const double expect = std::exp(tau * dh / 2.0) * std::sin(ph * dh) / (pi * dh);
            CHECK(extended_sine_kernel(tau, chi, 0, 2 * dh) == Approx(expect).margin(1e-10));
        }
    }
    // diagonal: arc fraction phi/pi; at (0,0) equals 1/3
    CHECK(extended_sine_kernel(0.0, 0.0, 0, 0) == Approx(1.0 / 3.0).margin(1e-12));
    const double ph = std::arg(critical_point_pp(0.7, -0.1).z);
    CHECK(extended_sine_kernel(0.7, -0.1, 0, 0) == Approx(ph / pi).margin(1e-12));

    CHECK_THROWS_AS(extended_sine_kernel(0.0, 0.0, 1, 0), parity_error);
    CHECK_THROWS_AS(extended_sine_kernel(10.0, 0.0, 0, 0), region_error);
}

TEST_CASE("extended sine kernel is continuous in (tau, chi)") {
    // finite-difference modulus of continuity bounded on a compact grid in A
    const double d = 1e-3;
    for (auto [dt, dh2] : {std::pair<int64_t, int64_t>{0, 0}, {0, 2}, {1, 1}, {-2, 0}}) {
        for (double tau : {0.3, 0.8, 1.5})
            for (double chi : {-0.2, 0.0, 0.4}) {
                if (!region_a_contains(tau + d, chi + d)) continue;
                const double base = extended_sine_kernel(tau, chi, dt, dh2);
                const double dtau = extended_sine_kernel(tau + d, chi, dt, dh2);
                const double dchi = extended_sine_kernel(tau, chi + d, dt, dh2);
                CHECK(std::fabs(dtau - base) < 0.05);
                CHECK(std::fabs(dchi - base) < 0.05);
            }
    }
}

TEST_CASE("schur kernel: vacuum specialization") {
    // G = 0: the measure is delta at the empty partition, configuration
    // {-1,-2,...}, so K(x,y) = 1{x = y <= -1}
    const GCoefficients g0{{}, 0.5};
    const SchurKernel k(g0, 1.0);
    for (int64_t x = -3; x <= 2; ++x)
        for (int64_t y = -3; y <= 2; ++y) {
            const double expect = (x == y && x <= -1) ? 1.0 : 0.0;
            CHECK(std::abs(k(x, y) - expect) < 1e-10);
        }
}

TEST_CASE("schur kernel matches the enumeration oracle at theta = 0.3") {
    // frozen from the weight-12 Poissonized Plancherel enumeration
    // (tail < 1e-15); one-point functions P(x occupied)
    const struct {
        int64_t x;
        double value;
    } table[] = {
        {-4, 0.9999998897}, {-3, 0.9999805327}, {-2, 0.9980738921}, {-1, 0.9158764355},
        {0, 0.0841235645},  {1, 0.0019261079},  {2, 0.0000194673},
    };
    const SchurKernel k(GCoefficients::plancherel(0.3), 1.0);
    for (const auto& row : table)
        CHECK(k(row.x, row.x).real() == Approx(row.value).margin(1e-8));
}

TEST_CASE("schur kernel structure: Hermitian, diagonal in [0,1]") {
    const GCoefficients gs[] = {
        GCoefficients::plancherel(1.0),
        {{cplx(0.3, 0.0), cplx(0.1, 0.0)}, 0.5},
        {{cplx(0.2, 0.4)}, 0.5},
    };
    for (const auto& g : gs)
        for (double alpha : {1.0, 5.0, 20.0}) {
            const SchurKernel k(g, alpha);
            std::vector<int64_t> sites;
            for (int64_t x = -3; x <= 3; ++x) sites.push_back(x);
            const auto K = k.matrix(sites);
            for (std::size_t i = 0; i < sites.size(); ++i) {
                CHECK(K(i, i).real() >= -1e-8);
                CHECK(K(i, i).real() <= 1.0 + 1e-8);
                CHECK(std::fabs(K(i, i).imag()) < 1e-9);
                for (std::size_t j = 0; j < sites.size(); ++j)
                    CHECK(std::abs(K(i, j) - std::conj(K(j, i))) < 1e-9);
            }
        }
}

TEST_CASE("schur kernel: matrix path agrees with single-entry path") {
    const SchurKernel k(GCoefficients::plancherel(0.7), 3.0);
    const std::vector<int64_t> sites{-2, 0, 1};
    const auto K = k.matrix(sites);
    for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = 0; j < sites.size(); ++j)
            CHECK(std::abs(K(i, j) - k(sites[i], sites[j])) < 1e-9);
}

TEST_CASE("schur kernel converges to the sine kernel in the bulk") {
    const auto g = GCoefficients::plancherel(1.0);
    for (double u : {0.0, 0.9}) {
        const auto arcs = sine_arcs(g, u);
        const SchurKernel k(g, 50.0);
        const auto s = static_cast<int64_t>(std::floor(50.0 * u));
        // gauge-invariant comparisons: diagonal and K(x,y)K(y,x)
        CHECK(std::fabs(k(s, s).real() - sine_kernel(arcs, 0, 0).real()) < 5e-3);
        const cplx prod_fin = k(s, s + 1) * k(s + 1, s);
        const cplx prod_lim = sine_kernel(arcs, 0, 1) * sine_kernel(arcs, 1, 0);
        CHECK(std::abs(prod_fin - prod_lim) < 5e-3);
    }
}

TEST_CASE("fourier projection kernel") {
    // G = 0 gives F = 1 and the projection onto nonnegative modes
    const GCoefficients g0{{}, 0.5};
    const FourierProjectionKernel k0(g0, 1.0, 16);
    for (int64_t x = -2; x <= 2; ++x)
        for (int64_t y = -2; y <= 2; ++y) {
            const double expect = (x == y && x >= 0) ? 1.0 : 0.0;
            CHECK(std::abs(k0(x, y) - expect) < 1e-10);
        }

    // Hermitian by construction
    const FourierProjectionKernel kf(GCoefficients::plancherel(0.3), 1.0, 48);
    for (int64_t x = -1; x <= 2; ++x)
        for (int64_t y = -1; y <= 2; ++y)
            CHECK(std::abs(kf(x, y) - std::conj(kf(y, x))) < 1e-14);

    // reflection identity against the double-contour kernel:
    // K_F(x,y) = K_alpha(-x-1, -y-1) on a 5x5 grid
    const SchurKernel ka(GCoefficients::plancherel(0.3), 1.0);
    for (int64_t x = -2; x <= 2; ++x)
        for (int64_t y = -2; y <= 2; ++y)
            CHECK(std::abs(kf(x, y) - ka(-x - 1, -y - 1)) < 1e-8);
}

TEST_CASE("plane partition kernel: vacuum limit") {
    const PlanePartitionKernel k(QParam(1e-6));
    CHECK(k({0, -1}, {0, -1}) == Approx(1.0).margin(1e-3));
    CHECK(k({0, 1}, {0, 1}) == Approx(0.0).margin(1e-3));
    CHECK(k({2, -3}, {2, -3}) == Approx(1.0).margin(1e-3));
    CHECK(k({-2, 3}, {-2, 3}) == Approx(0.0).margin(1e-3));
}

TEST_CASE("plane partition kernel matches the enumeration oracle at q = 0.2") {
    // frozen from the weight-16 enumeration (tail ~ 3e-8)
    const struct {
        SitePP s;
        double value;
    } table[] = {
        {{0, -1}, 0.71628628},  {{0, 1}, 0.22495079}, {{0, -3}, 0.99734076},
        {{1, -2}, 0.93868505},  {{1, 0}, 0.05876291}, {{2, -3}, 0.98754767},
        {{-1, -2}, 0.93868505}, {{0, 3}, 0.04896636},
    };
    const PlanePartitionKernel k(QParam(0.2));
    for (const auto& row : table)
        CHECK(k(row.s, row.s) == Approx(row.value).margin(1e-6));

    // parity enforcement
    CHECK_THROWS_AS(k.eval({0, 0}, {0, 0}), parity_error);
}

TEST_CASE("plane partition kernel diagonals lie in [0,1]") {
    const PlanePartitionKernel k(QParam(0.35));
    for (int64_t t = -2; t <= 2; ++t)
        for (int64_t h2 = -5; h2 <= 5; ++h2) {
            const SitePP s{t, h2};
            if (!s.parity_ok()) continue;
            const double d = k(s, s);
            CHECK(d >= -1e-8);
            CHECK(d <= 1.0 + 1e-8);
        }
}

TEST_CASE("plane partition kernel converges to the extended sine kernel") {
    // diagonal at the lattice point nearest (tau,chi)/r vs arc fraction
    const double tau = 0.0, chi = 0.0, r = 0.05;
    const PlanePartitionKernel k(QParam::from_rate(r));
    const SitePP s{0, -1};  // (tau,chi)/r rounds to the origin cell
    const double lim = extended_sine_kernel(tau, chi, 0, 0);
    CHECK(std::fabs(k(s, s) - lim) < 0.05);
}

TEST_CASE("kernel_matrix dispatch") {
    const std::vector<int64_t> zs{-1, 0};
    const auto Ks = kernel_matrix(KernelSpecZ{SineSpec{GCoefficients::plancherel(1.0), 0.0}}, zs);
    CHECK(Ks(0, 0).real() == Approx(0.5).margin(1e-12));

    const std::vector<SitePP> ps{{0, -1}, {0, -3}};
    const auto Kp = kernel_matrix(KernelSpecPP{ExtendedSineSpec{0.0, 0.0, 1e-10}}, ps);
    CHECK(Kp(0, 0).real() == Approx(1.0 / 3).margin(1e-9));
    CHECK(Kp(0, 1).real() == Approx(Kp(1, 0).real()).margin(1e-9));
}
