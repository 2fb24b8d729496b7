#pragma once

// Equilibria of the loop flow equation Q_C = psi(Q_C).
//
// At equilibrium each vessel holds a uniform volume fraction set by the node
// conditions, so the resistances, and with them psi, are functions of Q_C
// alone. States with Q_C < 0 are evaluated in the exchanged frame, where the
// flow in C runs from inlet 1 to inlet 2.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "threenode/arclength.hpp"
#include "threenode/model.hpp"

namespace threenode {

struct EquilibriumState {
    double q1 = 0.0;
    double q_c = 0.0;
    double q_a = 0.0;
    double q_b = 0.0;
    double phi_a = 0.0, phi_b = 0.0, phi_c = 0.0;
    double mu_a = 1.0, mu_b = 1.0, mu_c = 1.0;
    double res_a = 0.0, res_b = 0.0, res_c = 0.0;
    double tau_a = 0.0, tau_b = 0.0, tau_c = 0.0;
    double residual = 0.0;  // psi(q_c) - q_c
};

namespace detail {

/// Node balances in a frame where q_c >= 0.
struct OrientedSplit {
    double q1, q2, qc, qa, qb;
    double phi_a, phi_b, phi_c;
    double slope;  // x f'(x) / f(x) at x = qc / q1
};

inline OrientedSplit split_flows(const NetworkConfig& c, double qc) {
    const double q1 = c.inlets.q1;
    const double q2 = c.inlets.q2;
    if (!(qc >= 0.0)) throw DomainError("oriented flow must be non-negative");
    if (!(qc < q1)) throw DomainError("vessel A is starved (Q_C >= Q_1)");
    if (!(q2 + qc > 0.0)) throw DomainError("vessel B is starved (Q_2 + Q_C <= 0)");
    const double x = qc / q1;
    OrientedSplit s{};
    s.q1 = q1;
    s.q2 = q2;
    s.qc = qc;
    s.qa = q1 - qc;
    s.qb = q2 + qc;
    s.phi_c = c.inlets.phi1 * separation_f(c.separation, x);
    s.phi_a = c.inlets.phi1 * phi_a_fraction(c.separation, x);
    s.phi_b = (c.inlets.phi2 * q2 + s.phi_c * qc) / s.qb;
    s.phi_a = std::clamp(s.phi_a, 0.0, 1.0);
    s.phi_b = std::clamp(s.phi_b, 0.0, 1.0);
    s.phi_c = std::clamp(s.phi_c, 0.0, 1.0);
    s.slope = skimming_log_slope(c.separation, x);
    return s;
}

}  // namespace detail

inline EquilibriumState evaluate_state(const NetworkConfig& config, double q_c) {
    const OrientedConfig o = orient(config, q_c);
    const NetworkConfig& c = o.config;
    const auto s = detail::split_flows(c, o.q_c);
    const auto& g = c.geometry;

    EquilibriumState st;
    st.q1 = config.inlets.q1;
    st.q_c = q_c;
    st.q_a = s.qa;
    st.q_b = s.qb;
    st.phi_a = s.phi_a;
    st.phi_b = s.phi_b;
    st.phi_c = s.phi_c;
    st.mu_a = rel_viscosity(c.viscosity, s.phi_a);
    st.mu_b = rel_viscosity(c.viscosity, s.phi_b);
    st.mu_c = rel_viscosity(c.viscosity, s.phi_c);
    st.res_a = g.r(Vessel::A) * st.mu_a;
    st.res_b = g.r(Vessel::B) * st.mu_b;
    st.res_c = g.r(Vessel::C) * st.mu_c;
    const double vol = g.total_volume();
    st.tau_a = g.vol(Vessel::A) / (s.qa * vol);
    st.tau_b = g.vol(Vessel::B) / (s.qb * vol);
    st.tau_c = s.qc > 0.0 ? g.vol(Vessel::C) / (s.qc * vol) : std::numeric_limits<double>::infinity();
    const double psi = (s.q1 * st.res_a - s.q2 * st.res_b) / (st.res_a + st.res_b + st.res_c);
    st.residual = psi - s.qc;

    if (o.swapped) {
        std::swap(st.q_a, st.q_b);
        std::swap(st.phi_a, st.phi_b);
        std::swap(st.mu_a, st.mu_b);
        std::swap(st.res_a, st.res_b);
        std::swap(st.tau_a, st.tau_b);
        st.residual = -st.residual;
    }
    return st;
}

/// psi(q_c) - q_c.
inline double psi_residual(const NetworkConfig& config, double q_c) {
    return evaluate_state(config, q_c).residual;
}

inline double psi(const NetworkConfig& config, double q_c) { return psi_residual(config, q_c) + q_c; }

/// Central difference of psi with respect to q_c.
inline double dpsi_dqc(const NetworkConfig& config, double q_c, double h = 1e-6) {
    if (std::abs(q_c) >= h) return (psi(config, q_c + h) - psi(config, q_c - h)) / (2.0 * h);
    // psi may have a kink at q_c = 0: stay on the side of q_c.
    const double s = q_c < 0.0 ? -h : h;
    return (-3.0 * psi(config, q_c) + 4.0 * psi(config, q_c + s) - psi(config, q_c + 2.0 * s)) / (2.0 * s);
}

inline constexpr double kEndpointShrink = 1e-9;

/// Open interval of q_c keeping both q_a and q_b positive, shrunk at both ends.
inline std::pair<double, double> admissible_interval(const NetworkConfig& config) {
    return {-config.inlets.q2 + kEndpointShrink, config.inlets.q1 - kEndpointShrink};
}

struct RootScanOptions {
    int samples = 2001;
    double residual_tol = 1e-12;
};

struct EquilibriumScan {
    std::vector<EquilibriumState> states;
    std::vector<double> singular_points;  // scan samples where psi could not be evaluated
};

inline EquilibriumScan scan_equilibria(const NetworkConfig& config, const RootScanOptions& opt = {}) {
    EquilibriumScan out;
    const auto [lo, hi] = admissible_interval(config);
    if (!(hi > lo)) return out;

    const int n = std::max(opt.samples, 3);
    std::vector<double> xs(n), ys(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = i == n - 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / (n - 1);
        try {
            ys[i] = psi_residual(config, xs[i]);
        } catch (const std::exception&) {
            ys[i] = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(ys[i])) out.singular_points.push_back(xs[i]);
    }

    std::vector<double> roots;
    auto f = [&config](double q) { return psi_residual(config, q); };
    for (int i = 0; i < n; ++i) {
        if (ys[i] == 0.0) {
            roots.push_back(xs[i]);
            continue;
        }
        if (i + 1 < n && std::isfinite(ys[i]) && std::isfinite(ys[i + 1]) && ys[i] * ys[i + 1] < 0.0) {
            std::uintmax_t iters = 200;
            const auto bracket = boost::math::tools::toms748_solve(
                f, xs[i], xs[i + 1], ys[i], ys[i + 1],
                boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 1),
                iters);
            double root = 0.5 * (bracket.first + bracket.second);
            if (std::abs(f(bracket.first)) < std::abs(f(root))) root = bracket.first;
            if (std::abs(f(bracket.second)) < std::abs(f(root))) root = bracket.second;
            roots.push_back(root);
        }
    }

    // A root sitting on the constitutive kink at q_c = 0 is snapped onto it
    // when both one-sided residuals vanish.
    for (double& r : roots) {
        if (std::abs(r) < 1e-10 && lo < 0.0 && hi > 0.0) {
            const double plus = psi_residual(config, 0.0);
            const double minus = -psi_residual(symmetry_swap(config), 0.0);
            if (std::abs(plus) < opt.residual_tol && std::abs(minus) < opt.residual_tol) r = 0.0;
        }
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                roots.end());
    for (double r : roots) {
        EquilibriumState st = evaluate_state(config, r);
        if (std::abs(st.residual) < opt.residual_tol) out.states.push_back(st);
    }
    return out;
}

inline std::vector<EquilibriumState> solve_equilibria(const NetworkConfig& config,
                                                      const RootScanOptions& opt = {}) {
    return scan_equilibria(config, opt).states;
}

/// Newton polish of a single equilibrium from a nearby guess.
inline std::optional<EquilibriumState> polish_equilibrium(const NetworkConfig& config, double guess,
                                                          double tol = 1e-12) {
    Vec<1> x;
    x(0) = guess;
    auto g = [&config](const Vec<1>& z) {
        Vec<1> r;
        r(0) = psi_residual(config, z(0));
        return r;
    };
    const auto report = newton_solve<1>(g, x, NewtonOptions{30, tol, 1e-7});
    if (!report.converged) return std::nullopt;
    return evaluate_state(config, x(0));
}

enum class Branch { Negative, Positive };

/// The most negative or most positive equilibrium, if any lies on that side.
inline std::optional<EquilibriumState> select_branch(const std::vector<EquilibriumState>& states,
                                                     Branch branch) {
    if (states.empty()) return std::nullopt;
    if (branch == Branch::Negative) {
        if (states.front().q_c > 0.0 && states.size() > 1) return std::nullopt;
        return states.front();
    }
    if (states.back().q_c < 0.0 && states.size() > 1) return std::nullopt;
    return states.back();
}

// ---------------------------------------------------------------------------
// Fold (saddle-node) condition.

/// d psi / d q_c - 1 expressed through resistances and volume fractions:
///   ln(mu_b/mu_a) [R_A (Phi_A - Phi_C) + R_B (Phi_B - Phi_C) - Phi_C g sum R] / sum R - 1
/// with g = x f'/f in the frame where C flows from inlet 1. Vanishes at folds.
inline double fold_criterion(const NetworkConfig& config, const EquilibriumState& state) {
    const OrientedConfig o = orient(config, state.q_c);
    const EquilibriumState s = evaluate_state(o.config, o.q_c);
    const double slope = skimming_log_slope(o.config.separation, o.q_c / o.config.inlets.q1);
    const double sum = s.res_a + s.res_b + s.res_c;
    const double lnc = dln_mu_dphi(config.viscosity, 0.0);
    const double bracket = s.res_a * (s.phi_a - s.phi_c) + s.res_b * (s.phi_b - s.phi_c) -
                           s.phi_c * slope * sum;
    return lnc * bracket / sum - 1.0;
}

/// Onset criterion at Q_C* = 0, relative residual
///   [R_A + R_B + R_C - ln(contrast) (R_A (Phi_1 - Phi_C) + R_B (Phi_2 - Phi_C))] / sum R.
inline double onset_criterion_residual(const NetworkConfig& config) {
    const EquilibriumState s = evaluate_state(config, 0.0);
    const double sum = s.res_a + s.res_b + s.res_c;
    const double lnc = dln_mu_dphi(config.viscosity, 0.0);
    return (sum - lnc * (s.res_a * (config.inlets.phi1 - s.phi_c) +
                         s.res_b * (config.inlets.phi2 - s.phi_c))) /
           sum;
}

struct SaddleNodePoint {
    double q1 = 0.0;
    double q_c = 0.0;
    double contrast = 0.0;
    int side = 1;  // sign of q_c at the fold
};

/// [psi - q_c, d psi/d q_c - 1] at (q1, q_c).
inline Vec<2> fold_system(const NetworkConfig& config, double q1, double q_c) {
    const NetworkConfig c = with_q1(config, q1);
    Vec<2> r;
    r(0) = psi_residual(c, q_c);
    r(1) = dpsi_dqc(c, q_c) - 1.0;
    return r;
}

inline std::optional<SaddleNodePoint> refine_fold(const NetworkConfig& config, double q1, double q_c) {
    Vec<2> x(q1, q_c);
    auto g = [&config](const Vec<2>& z) { return fold_system(config, z(0), z(1)); };
    const auto report = newton_solve<2>(g, x, NewtonOptions{30, 1e-9, 1e-5});
    if (!report.converged) return std::nullopt;
    return SaddleNodePoint{x(0), x(1), contrast(config.viscosity), x(1) < 0.0 ? -1 : 1};
}

struct OnsetEstimate {
    double contrast = 0.0;       // root of the reduced criterion
    double approximation = 0.0;  // exp(1 / Phi_1), the r_C << r_A + r_B limit
    double q1 = 0.0;             // where Q_C* = 0 is an equilibrium
};

/// Viscosity contrast at which multiple equilibria appear at Q_C* = 0, from
///   1 + (1 / mu_1) r_C / (r_A + r_B) = ln(mu_1),   mu_1 = contrast^Phi_1.
/// Requires Phi_1 = Phi_2 and f(0) = 0.
inline OnsetEstimate onset_contrast(const NetworkConfig& config) {
    const double phi1 = config.inlets.phi1;
    if (std::abs(phi1 - config.inlets.phi2) > 1e-12) {
        throw DomainError("onset criterion requires Phi_1 = Phi_2");
    }
    if (separation_at_zero(config.separation) != 0.0) {
        throw DomainError("onset criterion requires f(0) = 0");
    }
    if (!(phi1 > 0.0)) throw DomainError("onset criterion requires Phi_1 > 0");
    const auto& g = config.geometry;
    const double ratio = g.r(Vessel::C) / (g.r(Vessel::A) + g.r(Vessel::B));

    // In u = ln(mu_1): 1 + ratio e^{-u} - u = 0, bracketed by [1, 1 + ratio].
    auto h = [ratio](double u) { return 1.0 + ratio * std::exp(-u) - u; };
    double u = 1.0;
    if (ratio > 0.0) {
        std::uintmax_t iters = 200;
        const auto bracket = boost::math::tools::toms748_solve(
            h, 1.0, 1.0 + ratio, boost::math::tools::eps_tolerance<double>(52), iters);
        u = 0.5 * (bracket.first + bracket.second);
    }
    OnsetEstimate out;
    out.contrast = std::exp(u / phi1);
    out.approximation = std::exp(1.0 / phi1);
    out.q1 = trivial_point_q1(with_contrast(config, out.contrast));
    return out;
}

// ---------------------------------------------------------------------------
// Equilibrium curve in the (Q_1, Q_C*) plane.

struct CurvePoint {
    double s = 0.0;  // arclength from the first point
    EquilibriumState state;
};

struct EquilibriumCurve {
    std::vector<CurvePoint> points;
    std::vector<std::size_t> fold_indices;
    Termination termination = Termination::RangeExit;

    std::size_t size() const { return points.size(); }
};

struct CurveOptions {
    double ds_max = 2e-3;
    double ds_initial = 1e-3;
    double ds_min = 1e-10;
    double residual_tol = 1e-12;
    int max_steps = 200000;
};

/// Index of points where q1 changes direction.
inline std::vector<std::size_t> find_turning_points(const std::vector<CurvePoint>& pts) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
        const double d0 = pts[i].state.q1 - pts[i - 1].state.q1;
        const double d1 = pts[i + 1].state.q1 - pts[i].state.q1;
        if (d0 * d1 < 0.0) out.push_back(i);
    }
    return out;
}

/// Pseudo-arclength continuation of F_E(q1, q_c) = psi - q_c from the lowest
/// equilibrium at q1_min until q1 leaves [q1_min, q1_max].
inline EquilibriumCurve continue_curve(const NetworkConfig& config, double q1_min, double q1_max,
                                       const CurveOptions& opt = {}) {
    if (!(q1_max > q1_min)) throw DomainError("continuation needs q1_max > q1_min");
    const auto seeds = solve_equilibria(with_q1(config, q1_min));
    if (seeds.empty()) throw SolverError("no seed equilibrium at q1 = " + std::to_string(q1_min));
    const double qc0 = seeds.front().q_c;

    auto residual = [&config](const Vec<2>& z) {
        Vec<1> r;
        r(0) = psi_residual(with_q1(config, z(0)), z(1));
        return r;
    };

    // Initial tangent from a small step in q1.
    const double dq = std::min(1e-4, 0.1 * (q1_max - q1_min));
    const auto nudged = polish_equilibrium(with_q1(config, q1_min + dq), qc0, opt.residual_tol);
    if (!nudged) throw SolverError("could not start continuation at q1 = " + std::to_string(q1_min));
    const Vec<2> start(q1_min, qc0);
    const Vec<2> direction(dq, nudged->q_c - qc0);

    ArclengthOptions ao;
    ao.ds_initial = opt.ds_initial;
    ao.ds_max = opt.ds_max;
    ao.ds_min = opt.ds_min;
    ao.max_steps = opt.max_steps;
    ao.newton = NewtonOptions{10, opt.residual_tol, 1e-7};

    auto monitor = [q1_min, q1_max](const Vec<2>&, const Vec<2>& next) {
        if (next(0) > q1_max) return StepAction::clip(0, q1_max, Termination::RangeExit);
        if (next(0) < q1_min) return StepAction::clip(0, q1_min, Termination::RangeExit);
        return StepAction::proceed();
    };
    const auto branch = trace_branch<2>(residual, start, direction, Vec<2>(1.0, 1.0), ao, monitor);
    if (branch.termination == Termination::StepCollapse) {
        throw SolverError("equilibrium continuation step collapsed near q1 = " +
                          std::to_string(branch.points.back()(0)));
    }

    EquilibriumCurve curve;
    curve.termination = branch.termination;
    double s = 0.0;
    for (std::size_t i = 0; i < branch.points.size(); ++i) {
        const auto& p = branch.points[i];
        if (i > 0) s += (p - branch.points[i - 1]).norm();
        curve.points.push_back({s, evaluate_state(with_q1(config, p(0)), p(1))});
    }
    curve.fold_indices = find_turning_points(curve.points);
    return curve;
}

/// Folds of a continued curve, each refined on [psi - q_c, psi' - 1] = 0.
inline std::vector<SaddleNodePoint> detect_folds(const NetworkConfig& config, const EquilibriumCurve& curve) {
    std::vector<SaddleNodePoint> out;
    if (curve.points.size() < 3) return out;
    for (std::size_t i : find_turning_points(curve.points)) {
        const auto& st = curve.points[i].state;
        if (auto fold = refine_fold(config, st.q1, st.q_c)) {
            out.push_back(*fold);
        } else {
            // Vertex of the parabola q1(q_c) through the three points around the turn.
            const auto& a = curve.points[i - 1].state;
            const auto& c = curve.points[i + 1].state;
            const double x0 = a.q_c, x1 = st.q_c, x2 = c.q_c;
            const double y0 = a.q1, y1 = st.q1, y2 = c.q1;
            const double d = (x0 - x1) * (x0 - x2) * (x1 - x2);
            const double A = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / d;
            const double B = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / d;
            const double C = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / d;
            const double xv = -B / (2.0 * A);
            out.push_back({C - B * B / (4.0 * A), xv, contrast(config.viscosity), xv < 0.0 ? -1 : 1});
        }
    }
    return out;
}

}  // namespace threenode
