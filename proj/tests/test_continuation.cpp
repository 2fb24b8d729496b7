#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace threenode;
using Catch::Approx;

namespace {

SaddleNodePoint fold_seed(const NetworkConfig& base, double contrast, int which) {
    const auto c = with_contrast(base, contrast);
    const auto folds = detect_folds(c, continue_curve(c, 0.0, 1.0));
    REQUIRE(folds.size() == 2);
    return folds[which];
}

double fold_width_at(const NetworkConfig& base, double contrast) {
    const auto c = with_contrast(base, contrast);
    const auto folds = detect_folds(c, continue_curve(c, 0.0, 1.0));
    REQUIRE(folds.size() == 2);
    return std::abs(folds[0].q1 - folds[1].q1);
}

/// q1 values where a tracked curve crosses the given contrast.
std::vector<double> crossings(const BifurcationCurve& curve, double contrast) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        if ((a.contrast - contrast) * (b.contrast - contrast) <= 0.0 && a.contrast != b.contrast) {
            const double t = (std::log(contrast) - std::log(a.contrast)) / (std::log(b.contrast) - std::log(a.contrast));
            out.push_back(a.q1 + t * (b.q1 - a.q1));
        }
    }
    return out;
}

}  // namespace

TEST_CASE("saddle-node locus emergence") {
    SECTION("Example 1 emerges at (0.5, 3.39) and widens") {
        const auto base = testing::example1();
        const auto curve = track_saddle_node(base, fold_seed(base, 10.0, 0), {2.0, 500.0});
        const auto p = min_contrast_point(curve);
        CHECK(p.q1 == Approx(0.5).margin(0.01));
        CHECK(p.contrast == Approx(3.39).margin(0.05));
        CHECK(fold_width_at(base, 50.0) > fold_width_at(base, 10.0));
        CHECK(fold_width_at(base, 10.0) > fold_width_at(base, 5.0));
    }
    SECTION("Example 2 emerges at (16/17, 3.49)") {
        const auto base = testing::example2();
        const auto e = saddle_node_emergence(base, fold_seed(base, 10.0, 0), {2.0, 500.0});
        CHECK(e.q1 == Approx(16.0 / 17.0).margin(0.01));
        CHECK(e.contrast == Approx(3.49).margin(0.05));
    }
}

TEST_CASE("property: fold loci of a symmetric network mirror each other") {
    const auto base = testing::example1();
    const auto curve = track_saddle_node(base, fold_seed(base, 10.0, 0), {3.0, 500.0});
    REQUIRE(curve.points.size() > 20);
    for (const auto& p : curve.points) {
        const auto r = fold_system(with_contrast(base, p.contrast), 1.0 - p.q1, -p.q_c);
        CHECK(r.lpNorm<Eigen::Infinity>() < 1e-8);
    }
}

TEST_CASE("property: every tracked point re-verifies its defining system") {
    const auto base = testing::example1();
    std::vector<std::string> warnings;
    const auto curves = trace_bifurcation_curves(base, {2.0, 500.0}, PhaseDiagramOptions{}, warnings);
    CHECK(warnings.empty());
    int sn = 0, hopf = 0;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            const auto cfg = with_q1(with_contrast(base, p.contrast), p.q1);
            if (c.kind == CurveKind::SaddleNode) {
                // A fold is a double root, so polishing would only recover q_c to
                // about sqrt(eps); evaluate the defining system in place instead.
                const auto state = evaluate_state(cfg, p.q_c);
                CHECK(std::abs(psi_residual(cfg, p.q_c)) < 1e-10);
                CHECK(std::abs(fold_criterion(cfg, state)) < 1e-8);
                ++sn;
            } else {
                // Fresh equilibrium solve and coefficient build at the point.
                const auto state = polish_equilibrium(cfg, p.q_c);
                REQUIRE(state.has_value());
                CHECK(std::abs(state->q_c - p.q_c) < 1e-8);
                CHECK(std::abs(chi(char_coefficients(cfg, p.q_c), {0.0, p.omega})) < 1e-9);
                ++hopf;
            }
        }
    }
    CHECK(sn > 0);
    CHECK(hopf > 0);
}

TEST_CASE("property: brute-force Hopf re-detection lies on the tracked curves") {
    const auto base = testing::example1();
    std::vector<std::string> warnings;
    const auto curves = trace_bifurcation_curves(base, {2.0, 500.0}, PhaseDiagramOptions{}, warnings);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> lc(std::log(30.0), std::log(200.0));
    int compared = 0;
    for (int trial = 0; trial < 5; ++trial) {
        const double contrast = std::exp(lc(rng));
        const auto c = with_contrast(base, contrast);
        for (const auto& h : hopf_scan(c, continue_curve(c, 0.0, 1.0)).points) {
            double best = 1.0;
            for (const auto& curve : curves) {
                if (curve.kind != CurveKind::Hopf) continue;
                for (double q1 : crossings(curve, contrast)) best = std::min(best, std::abs(q1 - h.q1));
            }
            // Interpolating along the tracked polyline adds at most a few 1e-5.
            if (h.omega > 1.0) {
                CHECK(best < 1e-4);
                ++compared;
            }
        }
    }
    CHECK(compared >= 10);
}

TEST_CASE("region labels") {
    const auto base = testing::example1();
    CHECK(classify_region(with_contrast(base, 2.0)).region == Region::I);
    CHECK(classify_region(with_contrast(base, 10.0)).region == Region::II);
    CHECK(classify_region(with_contrast(base, 36.0)).region == Region::V);
    CHECK(classify_region(with_q1(with_contrast(base, 30.0), 0.33)).region == Region::IV);
    CHECK(classify_region(with_q1(with_contrast(base, 30.0), 0.58)).region == Region::III);
}

TEST_CASE("phase diagrams") {
    SECTION("property: a symmetric network gives a mirror-symmetric diagram") {
        const auto base = testing::example1();
        const auto pd = build_phase_diagram(base, linspace(0.0, 1.0, 41), logspace(2.0, 500.0, 25), {0, false});
        CHECK(pd.failed() == 0);
        for (std::size_t ic = 0; ic < pd.contrasts.size(); ++ic) {
            for (std::size_t iq = 0; iq < pd.q1s.size(); ++iq) {
                const auto& a = pd.at(iq, ic);
                const auto& b = pd.at(pd.q1s.size() - 1 - iq, ic);
                REQUIRE(a.info);
                REQUIRE(b.info);
                CHECK(a.info->region == b.info->region);
            }
        }
    }
    SECTION("property: label changes along a column are bracketed by a curve point") {
        const auto base = testing::example1();
        const std::size_t nq = 21, nc = 30;
        const auto pd = build_phase_diagram(base, linspace(0.0, 1.0, nq), logspace(2.0, 500.0, nc));
        REQUIRE(pd.failed() == 0);
        const double dq = 1.0 / (nq - 1);
        int transitions = 0;
        for (std::size_t iq = 0; iq < nq; ++iq) {
            for (std::size_t ic = 0; ic + 1 < nc; ++ic) {
                if (pd.at(iq, ic).info->region == pd.at(iq, ic + 1).info->region) continue;
                ++transitions;
                const double c0 = pd.contrasts[ic], c1 = pd.contrasts[ic + 1];
                bool bracketed = false;
                for (const auto& curve : pd.curves) {
                    for (const auto& p : curve.points) {
                        bracketed |= std::abs(p.q1 - pd.q1s[iq]) <= dq && p.contrast >= c0 && p.contrast <= c1;
                    }
                }
                INFO("q1 = " << pd.q1s[iq] << ", contrast " << c0 << " -> " << c1);
                CHECK(bracketed);
            }
        }
        CHECK(transitions > 0);
    }
    SECTION("grids need two points per axis") {
        CHECK_THROWS_AS(build_phase_diagram(testing::example1(), {0.5}, {2.0, 3.0}), DomainError);
    }
}

TEST_CASE("Hopf emergence and threshold helpers") {
    const auto base = testing::example1();
    const auto s30 = with_contrast(base, 30.0);
    const auto seeds = hopf_scan(s30, continue_curve(s30, 0.0, 1.0)).points;
    REQUIRE(!seeds.empty());
    const auto b = hopf_emergence(base, seeds.front(), {2.0, 500.0});
    CHECK(b.contrast == Approx(27.8).epsilon(0.05));
    CHECK(b.q1 == Approx(0.33).margin(0.02));

    const auto d = oscillation_onset_at(base, 0.5, Branch::Negative, 30.0, 50.0);
    CHECK(d.contrast > b.contrast);
    CHECK(std::abs(d.omega) > 1.0);
}

TEST_CASE("thread pool covers every index once") {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) CHECK(h == 1);
}
