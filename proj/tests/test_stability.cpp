#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "support.hpp"

using namespace threenode;
using Catch::Approx;

namespace {

EquilibriumState fig4_state() {
    const auto c = testing::example1(50.0, 0.5);
    return *select_branch(solve_equilibria(c), Branch::Negative);
}

CharCoefficients fig4_coeffs() { return char_coefficients(testing::example1(50.0, 0.5), fig4_state()); }

// Taylor series of (1 - e^{-z}) / z in long double.
std::complex<long double> kernel_series(std::complex<long double> z) {
    std::complex<long double> term = 1.0L, sum = 0.0L;
    for (int n = 0; n < 30; ++n) {
        sum += term;
        term *= -z / static_cast<long double>(n + 2);
    }
    return sum;
}

int rhp_roots_in(const EigenSearch& s) {
    int n = 0;
    for (const auto& e : s.roots) {
        if (e.sigma > 0.0) n += e.omega > 1e-9 ? 2 : 1;
    }
    return n;
}

}  // namespace

TEST_CASE("coefficient structure") {
    SECTION("linear viscosity zeroes every coefficient") {
        const auto c = testing::example1(1.0, 0.4);
        for (const auto& s : solve_equilibria(c)) {
            const auto k = char_coefficients(c, s);
            CHECK(k.a == 0.0);
            CHECK(k.b == 0.0);
            CHECK(k.c == 0.0);
            CHECK(k.d == 0.0);
        }
    }
    SECTION("without separation only b survives") {
        // Needs distinct inlet fractions and flow from node 1 through C; with
        // phi_1 = phi_2 every coefficient vanishes.
        auto c = testing::no_separation(20.0, 0.7);
        c.inlets = InletConditions::make(0.7, 0.82, 0.6);
        for (const auto& s : solve_equilibria(c)) {
            REQUIRE(s.q_c > 0.0);
            const auto k = char_coefficients(c, s);
            CHECK(k.a == Approx(0.0).margin(1e-15));
            CHECK(k.c == 0.0);
            CHECK(k.d == 0.0);
            CHECK(k.b != 0.0);
        }
    }
    SECTION("Fig. 4 state") {
        const auto k = fig4_coeffs();
        for (double v : {k.a, k.b, k.c, k.d, k.tau_a, k.tau_b, k.tau_c}) CHECK(std::isfinite(v));
        CHECK(fig4_state().q_c == Approx(-0.19).margin(0.005));
    }
}

TEST_CASE("delay kernel") {
    CHECK(std::abs(delay_kernel({1e-12, 0.0}) - 1.0) < 1e-12);
    CHECK(std::abs(delay_kernel({0.0, M_PI}) - cplx(0.0, -2.0 / M_PI)) < 1e-15);
    double worst = 0.0;
    for (double r : {kKernelSeriesRadius * (1.0 - 1e-9), kKernelSeriesRadius * (1.0 + 1e-9)}) {
        for (int k = 0; k < 16; ++k) {
            const double th = 2.0 * M_PI * k / 16.0;
            const cplx z = std::polar(r, th);
            const auto ref = kernel_series({z.real(), z.imag()});
            worst = std::max(worst, std::abs(delay_kernel(z) - cplx(double(ref.real()), double(ref.imag()))));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("kernel derivative matches finite differences") {
    for (cplx z : {cplx(1e-3, 2e-3), cplx(0.02, -0.01), cplx(0.5, 3.0), cplx(-1.0, 7.0)}) {
        const double h = 1e-5;
        const cplx fd = (delay_kernel(z + h) - delay_kernel(z - h)) / (2.0 * h);
        CHECK(std::abs(delay_kernel_derivative(z) - fd) < 1e-8);
    }
}

TEST_CASE("characteristic function") {
    CharCoefficients zero;
    zero.tau_c = 2.0;
    for (cplx l : {cplx(0, 0), cplx(1, 2), cplx(-3, 40)}) CHECK(std::abs(chi(zero, l) + 1.0) < 1e-15);

    const auto k = fig4_coeffs();
    for (double s : {-1.0, 0.0, 0.3, 2.0}) CHECK(chi(k, {s, 0.0}).imag() == 0.0);
}

TEST_CASE("property: conjugate symmetry of chi") {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> us(-2.0, 1.0), uw(-40.0, 40.0), uc(-3.0, 3.0), ut(0.1, 5.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        CharCoefficients k = i % 2 ? fig4_coeffs() : CharCoefficients{uc(rng), uc(rng), uc(rng), uc(rng), ut(rng), ut(rng), ut(rng)};
        const cplx l{us(rng), uw(rng)};
        const cplx v = chi(k, l);
        worst = std::max(worst, std::abs(chi(k, std::conj(l)) - std::conj(v)) / std::max(1.0, std::abs(v)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("contour field") {
    const auto k = fig4_coeffs();
    SECTION("the real axis row has I = 0") {
        const auto f = eigen_contours(k, Window{-1.0, 0.5, 0.0, 15.0}, 50, 50);
        for (std::size_t i = 0; i < f.x.size(); ++i) CHECK(f.I(i, 0) == 0.0);
    }
    SECTION("Fig. 4 topology") {
        const auto f = eigen_contours(k, Window{-1.0, 0.5, 0.0, 15.0}, 400, 400);
        const auto pts = contour_intersections(f);
        int strongly_unstable = 0;
        for (const auto& p : pts) {
            if (p.x > 0.01) {
                ++strongly_unstable;
                CHECK(p.x == Approx(0.04).margin(0.01));
                CHECK(p.y == Approx(9.16).margin(0.05));
            }
        }
        // Two further roots lie within 0.005 of the imaginary axis.
        CHECK(strongly_unstable == 1);
    }
    SECTION("a stable state far from bifurcation has no intersections with sigma >= 0") {
        const auto c = testing::example1(5.0, 0.2);
        const auto states = solve_equilibria(c);
        REQUIRE(states.size() == 1);
        const auto f = eigen_contours(char_coefficients(c, states[0]), Window{-1.0, 0.5, 0.0, 15.0}, 400, 400);
        for (const auto& p : contour_intersections(f)) CHECK(p.x < 0.0);
    }
}

TEST_CASE("eigenvalue search") {
    const auto k = fig4_coeffs();
    const auto found = find_eigenvalues(k, Window{});
    REQUIRE(!found.roots.empty());
    const auto& dom = found.roots.front();
    CHECK(dom.sigma == Approx(0.04).margin(0.02));
    CHECK(dom.omega == Approx(9.16).margin(0.02));
    CHECK(std::abs(chi(k, {0.04, 9.16})) < std::abs(chi(k, {0.04, 9.5})));
    for (const auto& e : found.roots) CHECK(std::abs(chi(k, {e.sigma, e.omega})) < 1e-10);

    CharCoefficients zero;
    CHECK(find_eigenvalues(zero, Window{}).roots.empty());
}

TEST_CASE("property: refined roots do not depend on the grid") {
    const auto k = fig4_coeffs();
    const auto coarse = find_eigenvalues(k, Window{}, EigenSearchOptions{200, 200});
    const auto fine = find_eigenvalues(k, Window{}, EigenSearchOptions{400, 400});
    int matched = 0;
    for (const auto& a : fine.roots) {
        for (const auto& b : coarse.roots) {
            if (std::hypot(a.sigma - b.sigma, a.omega - b.omega) < 1e-4) {
                CHECK(std::hypot(a.sigma - b.sigma, a.omega - b.omega) < 1e-8);
                ++matched;
            }
        }
    }
    CHECK(matched >= 10);
    // The unstable roots are found on both grids.
    CHECK(rhp_roots_in(coarse) == rhp_roots_in(fine));
}

TEST_CASE("property: without separation every root is real") {
    for (double contrast : {5.0, 50.0, 500.0}) {
        for (double q1 : {0.1, 0.5, 0.8}) {
            const auto c = testing::no_separation(contrast, q1);
            for (const auto& s : solve_equilibria(c)) {
                const auto k = char_coefficients(c, s);
                for (const Window& w : {Window{}, Window{-1.0, 1.0, 0.05, 100.0}}) {
                    for (const auto& p : contour_intersections(eigen_contours(k, w, 300, 300))) CHECK(p.y <= 1e-6);
                    for (const auto& e : find_eigenvalues(k, w).roots) CHECK(std::abs(e.omega) <= 1e-6);
                }
                CHECK(count_unstable_roots(k).oscillatory() == 0);
            }
        }
    }
}

TEST_CASE("property: exchange symmetry of the spectrum") {
    for (double q1 : {0.3, 0.45, 0.6}) {
        const auto c = testing::lopsided(40.0, q1);
        const auto sw = symmetry_swap(c);
        for (const auto& s : solve_equilibria(c)) {
            const auto k1 = char_coefficients(c, s.q_c);
            const auto k2 = char_coefficients(sw, -s.q_c);
            for (auto [u, v] : {std::pair{k1.a, k2.a}, {k1.b, k2.b}, {k1.c, k2.c}, {k1.d, k2.d},
                                {k1.tau_a, k2.tau_a}, {k1.tau_b, k2.tau_b}}) {
                CHECK(u == Approx(v).margin(1e-9));
            }
            const auto r1 = find_eigenvalues(k1, Window{-1.0, 1.0, 0.05, 20.0}, {200, 200}).roots;
            const auto r2 = find_eigenvalues(k2, Window{-1.0, 1.0, 0.05, 20.0}, {200, 200}).roots;
            REQUIRE(r1.size() == r2.size());
            for (std::size_t i = 0; i < r1.size(); ++i) {
                CHECK(r1[i].sigma == Approx(r2[i].sigma).margin(1e-9));
                CHECK(r1[i].omega == Approx(r2[i].omega).margin(1e-9));
            }
        }
    }
}

TEST_CASE("property: Nyquist count agrees with the located roots") {
    struct Case {
        NetworkConfig c;
    };
    int checked = 0;
    for (auto c : {testing::example1(50.0, 0.5), testing::example1(30.0, 0.33), testing::example1(30.0, 0.2),
                   testing::example1(10.0, 0.53), testing::example2(30.0, 0.99), testing::example2(13.0, 0.9),
                   testing::lopsided(60.0, 0.4)}) {
        for (const auto& s : solve_equilibria(c)) {
            const auto k = char_coefficients(c, s);
            const auto count = count_unstable_roots(k);
            CHECK(count.resolved);
            const auto found = find_eigenvalues(k, Window{0.0, 2.0, 0.05, 60.0}, {300, 600});
            // Positive real roots can sit far out: chi(s) < sum|coef| / (s tau_min) - 1.
            const double bound = (std::abs(k.a) + std::abs(k.b) + std::abs(k.c) + std::abs(k.d)) /
                                 std::min({k.tau_a, k.tau_b, k.has_loop() ? k.tau_c : k.tau_a});
            const auto real = detail::real_roots(k, 1e-9, bound + 1.0, 20000);
            INFO("q1 " << s.q1 << ", q_c " << s.q_c);
            CHECK(rhp_roots_in(found) + static_cast<int>(real.size()) == count.unstable);
            CHECK(static_cast<int>(real.size()) == count.real_unstable);
            ++checked;
        }
    }
    CHECK(checked >= 10);
}

TEST_CASE("Hopf scan") {
    SECTION("Example-1, contrast 50: symmetric pairs including low frequencies near the folds") {
        const auto c = testing::example1(50.0);
        const auto curve = continue_curve(c, 0.0, 1.0);
        const auto scan = hopf_scan(c, curve);
        REQUIRE(scan.points.size() >= 4);
        bool low = false;
        const auto folds = detect_folds(c, curve);
        for (const auto& h : scan.points) {
            bool mirrored = false;
            for (const auto& m : scan.points) {
                mirrored |= std::abs(m.q1 - (1.0 - h.q1)) < 1e-6 && std::abs(m.q_c + h.q_c) < 1e-6 &&
                            std::abs(m.omega - h.omega) < 1e-6;
            }
            CHECK(mirrored);
            for (const auto& f : folds) low |= h.omega < 2.0 && std::abs(h.q1 - f.q1) < 0.05;
            const auto r = hopf_residual(c, h.q1, h.q_c, h.omega);
            CHECK(std::abs(r(0)) < 1e-10);
            CHECK(std::abs(r(1)) < 1e-10);
            CHECK(std::abs(r(2)) < 1e-10);
        }
        CHECK(low);
    }
    SECTION("Example-1, contrast 2: none") {
        const auto c = testing::example1(2.0);
        CHECK(hopf_scan(c, continue_curve(c, 0.0, 1.0)).points.empty());
    }
    SECTION("Example-2, contrast 50: all on the right") {
        const auto c = testing::example2(50.0);
        const auto scan = hopf_scan(c, continue_curve(c, 0.0, 1.0));
        REQUIRE(!scan.points.empty());
        for (const auto& h : scan.points) CHECK(h.q1 > 0.5);
    }
}

TEST_CASE("stability along equilibrium curves") {
    SECTION("contrast 2 is stable everywhere") {
        const auto c = testing::example1(2.0);
        const auto st = classify_stability(c, continue_curve(c, 0.0, 1.0));
        for (auto l : st.labels) CHECK(l == Stability::Stable);
    }
    SECTION("contrast 30 has the high-frequency band and its mirror") {
        const auto c = testing::example1(30.0);
        const auto curve = continue_curve(c, 0.0, 1.0);
        const auto st = classify_stability(c, curve);
        std::vector<std::pair<double, double>> bands;
        for (const auto& seg : st.segments) {
            const auto& a = curve.points[seg.begin].state;
            const auto& b = curve.points[seg.end].state;
            if (seg.label == Stability::Oscillatory && std::abs(a.q1 - b.q1) > 0.05) bands.push_back({a.q1, b.q1});
        }
        REQUIRE(bands.size() == 2);
        CHECK(std::min(bands[0].first, bands[0].second) == Approx(0.286).margin(0.01));
        CHECK(std::max(bands[0].first, bands[0].second) == Approx(0.397).margin(0.01));
        CHECK(std::min(bands[1].first, bands[1].second) == Approx(1.0 - 0.397).margin(0.01));
        CHECK(std::max(bands[1].first, bands[1].second) == Approx(1.0 - 0.286).margin(0.01));
    }
    SECTION("Example-2, contrast 30: the whole positive branch is unstable") {
        const auto c = testing::example2(30.0);
        const auto curve = continue_curve(c, 0.0, 1.0);
        const auto st = classify_stability(c, curve);
        int positive = 0;
        for (std::size_t i = 0; i < curve.points.size(); ++i) {
            const auto& s = curve.points[i].state;
            if (s.q_c > 1e-3 && fold_criterion(with_q1(c, s.q1), s) < 0.0) {
                ++positive;
                CHECK(st.labels[i] != Stability::Stable);
            }
        }
        CHECK(positive > 10);
    }
}
