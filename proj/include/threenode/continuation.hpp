#pragma once

// Saddle-node and Hopf loci in the (Q_1, contrast) plane, phase-diagram region
// labels, and the threshold contrasts at which the diagram changes character.
//
// The contrast is continued in log space. Fold loci solve
//   [psi - q_c, d psi / d q_c - 1] = 0          in (q1, q_c, ln c),
// Hopf loci solve
//   [psi - q_c, Re chi(i w), Im chi(i w)] = 0   in (q1, q_c, w, ln c).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "threenode/arclength.hpp"
#include "threenode/equilibrium.hpp"
#include "threenode/stability.hpp"

namespace threenode {

enum class CurveKind { SaddleNode, Hopf };

inline const char* curve_kind_name(CurveKind k) { return k == CurveKind::SaddleNode ? "saddle_node" : "hopf"; }

struct BifurcationPoint {
    double q1 = 0.0;
    double contrast = 0.0;
    double q_c = 0.0;
    double omega = 0.0;  // zero for saddle-node points
};

struct BifurcationCurve {
    CurveKind kind = CurveKind::SaddleNode;
    std::vector<BifurcationPoint> points;
    Termination end_low = Termination::RangeExit;   // how the backward half ended
    Termination end_high = Termination::RangeExit;  // how the forward half ended
};

struct ContrastRange {
    double min = 2.0;
    double max = 500.0;
};

struct TrackOptions {
    double ds_max = 1e-2;
    double ds_initial = 1e-3;
    double residual_tol = 1e-10;
    int max_steps = 20000;
    double omega_min = 0.05;
};

namespace detail {

template <int N, class F, class Monitor>
std::vector<Vec<N>> trace_both_ways(F&& residual, const Vec<N>& seed, const Vec<N>& scale,
                                    const ArclengthOptions& ao, Monitor&& monitor, Termination& low,
                                    Termination& high) {
    const Vec<N> dir = null_direction<N>(residual, seed);
    auto fwd = trace_branch<N>(residual, seed, dir, scale, ao, monitor);
    auto bwd = trace_branch<N>(residual, seed, Vec<N>(-dir), scale, ao, monitor);
    high = fwd.termination;
    low = bwd.termination;
    std::vector<Vec<N>> out(bwd.points.rbegin(), bwd.points.rend());
    out.insert(out.end(), fwd.points.begin() + 1, fwd.points.end());
    return out;
}

}  // namespace detail

/// Follows the fold locus through the seed in both directions until q1 leaves
/// [0, 1] or the contrast leaves the range.
inline BifurcationCurve track_saddle_node(const NetworkConfig& config, const SaddleNodePoint& seed,
                                          const ContrastRange& range, const TrackOptions& opt = {}) {
    auto residual = [&config](const Vec<3>& z) {
        return fold_system(with_contrast(config, std::exp(z(2))), z(0), z(1));
    };
    Vec<3> start(seed.q1, seed.q_c, std::log(seed.contrast));
    if (!newton_solve<2 + 1>(
             [&](const Vec<3>& z) {
                 Vec<3> g;
                 g.head<2>() = residual(z);
                 g(2) = z(2) - std::log(seed.contrast);
                 return g;
             },
             start, NewtonOptions{30, opt.residual_tol, 1e-6})
             .converged) {
        throw SolverError("saddle-node seed did not converge");
    }

    const double lo = std::log(range.min), hi = std::log(range.max);
    auto monitor = [lo, hi](const Vec<3>&, const Vec<3>& next) {
        if (next(0) < 0.0) return StepAction::clip(0, 0.0, Termination::BoundaryExit);
        if (next(0) > 1.0) return StepAction::clip(0, 1.0, Termination::BoundaryExit);
        if (next(2) < lo) return StepAction::clip(2, lo, Termination::RangeExit);
        if (next(2) > hi) return StepAction::clip(2, hi, Termination::RangeExit);
        return StepAction::proceed();
    };
    ArclengthOptions ao;
    ao.ds_initial = opt.ds_initial;
    ao.ds_max = opt.ds_max;
    ao.max_steps = opt.max_steps;
    ao.newton = NewtonOptions{10, opt.residual_tol, 1e-6};

    BifurcationCurve curve;
    curve.kind = CurveKind::SaddleNode;
    const auto pts = detail::trace_both_ways<3>(residual, start, Vec<3>(1.0, 1.0, 2.0), ao, monitor,
                                                curve.end_low, curve.end_high);
    for (const auto& p : pts) curve.points.push_back({p(0), std::exp(p(2)), p(1), 0.0});
    return curve;
}

inline BifurcationCurve track_hopf(const NetworkConfig& config, const HopfPoint& seed, const ContrastRange& range,
                                   const TrackOptions& opt = {}) {
    auto residual = [&config](const Vec<4>& z) {
        return hopf_residual(with_contrast(config, std::exp(z(3))), z(0), z(1), z(2));
    };
    const Vec<4> start(seed.q1, seed.q_c, seed.omega, std::log(seed.contrast));
    if (residual(start).lpNorm<Eigen::Infinity>() > 1e-8) throw SolverError("Hopf seed is not converged");

    const double lo = std::log(range.min), hi = std::log(range.max);
    const double wmin = opt.omega_min;
    auto monitor = [lo, hi, wmin](const Vec<4>&, const Vec<4>& next) {
        if (next(0) < 0.0) return StepAction::clip(0, 0.0, Termination::BoundaryExit);
        if (next(0) > 1.0) return StepAction::clip(0, 1.0, Termination::BoundaryExit);
        if (next(3) < lo) return StepAction::clip(3, lo, Termination::RangeExit);
        if (next(3) > hi) return StepAction::clip(3, hi, Termination::RangeExit);
        if (next(2) < wmin) return StepAction::stop(Termination::Stopped);
        return StepAction::proceed();
    };
    ArclengthOptions ao;
    ao.ds_initial = opt.ds_initial;
    ao.ds_max = opt.ds_max;
    ao.max_steps = opt.max_steps;
    ao.newton = NewtonOptions{10, opt.residual_tol, 1e-7};

    BifurcationCurve curve;
    curve.kind = CurveKind::Hopf;
    const auto pts = detail::trace_both_ways<4>(residual, start, Vec<4>(1.0, 1.0, 10.0, 2.0), ao, monitor,
                                                curve.end_low, curve.end_high);
    for (const auto& p : pts) curve.points.push_back({p(0), std::exp(p(3)), p(1), p(2)});
    return curve;
}

/// Point of lowest contrast on a curve, refined by a parabola through the
/// neighbouring samples (in arclength index).
inline BifurcationPoint min_contrast_point(const BifurcationCurve& curve) {
    if (curve.points.empty()) throw SolverError("empty bifurcation curve");
    const auto& p = curve.points;
    std::size_t k = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i].contrast < p[k].contrast) k = i;
    }
    if (k == 0 || k + 1 >= p.size()) return p[k];
    const double y0 = p[k - 1].contrast, y1 = p[k].contrast, y2 = p[k + 1].contrast;
    const double den = y0 - 2.0 * y1 + y2;
    if (!(den > 0.0)) return p[k];
    const double t = 0.5 * (y0 - y2) / den;  // offset in [-1/2, 1/2] steps
    auto lerp = [t](double a, double b, double c) {
        return b + 0.5 * t * (c - a) + 0.5 * t * t * (a - 2.0 * b + c);
    };
    return {lerp(p[k - 1].q1, p[k].q1, p[k + 1].q1), y1 - 0.125 * (y0 - y2) * (y0 - y2) / den,
            lerp(p[k - 1].q_c, p[k].q_c, p[k + 1].q_c), lerp(p[k - 1].omega, p[k].omega, p[k + 1].omega)};
}

// ---------------------------------------------------------------------------
// Regions.

enum class Region { I = 1, II, III, IV, V };

inline const char* region_name(Region r) {
    switch (r) {
        case Region::I: return "i";
        case Region::II: return "ii";
        case Region::III: return "iii";
        case Region::IV: return "iv";
        case Region::V: return "v";
    }
    return "?";
}

struct RegionInfo {
    Region region = Region::I;
    int n_equilibria = 0;
    int n_stable = 0;
    int n_oscillatory = 0;
};

class AmbiguousCountError : public SolverError {
public:
    using SolverError::SolverError;
};

/// (i) one stable equilibrium; (ii) two stable; (iii) one stable and one
/// unstable (typically oscillating); (iv) a single oscillatory state;
/// (v) two coexisting oscillatory states. Saddles between folds are ignored.
inline RegionInfo classify_region(const NetworkConfig& config) {
    auto states = solve_equilibria(config);
    if (states.size() % 2 == 0) states = solve_equilibria(config, RootScanOptions{20001, 1e-12});
    if (states.size() % 2 == 0) {
        throw AmbiguousCountError("found " + std::to_string(states.size()) + " equilibria at q1 = " +
                                  std::to_string(config.inlets.q1));
    }
    RegionInfo info;
    info.n_equilibria = static_cast<int>(states.size());
    int n_unstable = 0;
    for (const auto& s : states) {
        switch (classify_point(char_coefficients(config, s.q_c))) {
            case Stability::Stable: ++info.n_stable; break;
            case Stability::Oscillatory: ++info.n_oscillatory; break;
            case Stability::Unstable: ++n_unstable; break;
            case Stability::Saddle: break;
        }
    }
    if (info.n_equilibria == 1) {
        if (info.n_stable == 1) {
            info.region = Region::I;
        } else if (info.n_oscillatory == 1) {
            info.region = Region::IV;
        } else {
            throw SolverError("single equilibrium with purely real instability");
        }
    } else if (info.n_stable >= 2) {
        info.region = Region::II;
    } else if (info.n_stable == 1) {
        info.region = Region::III;
    } else if (info.n_oscillatory >= 2) {
        info.region = Region::V;
    } else {
        info.region = Region::IV;
    }
    return info;
}

// ---------------------------------------------------------------------------
// Phase diagram.

struct PhaseCell {
    double q1 = 0.0;
    double contrast = 0.0;
    std::optional<RegionInfo> info;
    std::string error;  // set when the cell could not be labeled
};

struct PhaseDiagramOptions {
    unsigned threads = 0;  // 0: hardware concurrency
    bool curves = true;
    double hopf_slice = 50.0;  // contrast of the first slice that seeds Hopf branches
    double sn_slice = 10.0;    // contrast of the slice that seeds fold branches
    int hopf_slices = 12;      // further log-spaced seeding slices across the range
};

struct PhaseDiagram {
    std::vector<double> q1s;
    std::vector<double> contrasts;
    std::vector<PhaseCell> cells;  // row-major in contrast
    std::vector<BifurcationCurve> curves;
    std::vector<std::string> warnings;

    const PhaseCell& at(std::size_t iq, std::size_t ic) const { return cells[ic * q1s.size() + iq]; }
    std::size_t failed() const {
        return static_cast<std::size_t>(
            std::count_if(cells.begin(), cells.end(), [](const PhaseCell& c) { return !c.info; }));
    }
};

inline std::vector<double> logspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        out[i] = n == 1 ? a : std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / (n - 1));
    }
    return out;
}

inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) over a small worker pool.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Fold and Hopf loci for the diagram overlay. Fold branches are seeded from
/// the folds of the equilibrium curve at the sn_slice contrast. Hopf branches
/// are seeded by hopf_scan at the hopf_slice contrast and then at hopf_slices
/// log-spaced contrasts, so families that never reach one slice are still
/// found; seeds already lying on a traced curve are skipped.
inline std::vector<BifurcationCurve> trace_bifurcation_curves(const NetworkConfig& config,
                                                               const ContrastRange& range,
                                                               const PhaseDiagramOptions& opt,
                                                               std::vector<std::string>& warnings) {
    std::vector<BifurcationCurve> out;
    // Distance to the traced polylines in (q1, ln contrast, omega / 10).
    auto on_curve = [&out](CurveKind kind, double q1, double contrast, double omega) {
        const Eigen::Vector3d x(q1, std::log(contrast), 0.1 * omega);
        for (const auto& c : out) {
            if (c.kind != kind) continue;
            for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
                const auto& p = c.points[i];
                const auto& q = c.points[i + 1];
                const Eigen::Vector3d a(p.q1, std::log(p.contrast), 0.1 * p.omega);
                const Eigen::Vector3d d = Eigen::Vector3d(q.q1, std::log(q.contrast), 0.1 * q.omega) - a;
                const double len2 = d.squaredNorm();
                const double t = len2 > 0.0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
                if ((a + t * d - x).norm() < 2e-3) return true;
            }
        }
        return false;
    };

    const double sn_contrast = std::clamp(opt.sn_slice, range.min, range.max);
    try {
        const NetworkConfig slice = with_contrast(config, sn_contrast);
        const auto curve = continue_curve(slice, 0.0, 1.0);
        for (const auto& fold : detect_folds(slice, curve)) {
            if (on_curve(CurveKind::SaddleNode, fold.q1, fold.contrast, 0.0)) continue;
            out.push_back(track_saddle_node(config, fold, range));
        }
    } catch (const std::exception& e) {
        warnings.push_back(std::string("saddle-node tracking: ") + e.what());
    }

    std::vector<double> slices{std::clamp(opt.hopf_slice, range.min, range.max)};
    for (int i = 0; i < opt.hopf_slices; ++i) {
        slices.push_back(range.min * std::pow(range.max / range.min, (i + 0.5) / opt.hopf_slices));
    }
    for (double contrast : slices) {
        try {
            const NetworkConfig slice = with_contrast(config, contrast);
            const auto curve = continue_curve(slice, 0.0, 1.0);
            auto seeds = hopf_scan(slice, curve).points;
            std::sort(seeds.begin(), seeds.end(),
                      [](const HopfPoint& a, const HopfPoint& b) { return a.omega < b.omega; });
            for (const auto& h : seeds) {
                if (on_curve(CurveKind::Hopf, h.q1, h.contrast, h.omega)) continue;
                try {
                    out.push_back(track_hopf(config, h, range));
                } catch (const std::exception& e) {
                    warnings.push_back(std::string("Hopf tracking: ") + e.what());
                }
            }
        } catch (const std::exception& e) {
            warnings.push_back("Hopf seeding at contrast " + std::to_string(contrast) + ": " + e.what());
        }
    }
    return out;
}

inline PhaseDiagram build_phase_diagram(const NetworkConfig& config, const std::vector<double>& q1s,
                                        const std::vector<double>& contrasts,
                                        const PhaseDiagramOptions& opt = {}) {
    if (q1s.size() < 2 || contrasts.size() < 2) throw DomainError("phase diagram grids need >= 2 points per axis");
    PhaseDiagram pd;
    pd.q1s = q1s;
    pd.contrasts = contrasts;
    pd.cells.resize(q1s.size() * contrasts.size());
    parallel_for(pd.cells.size(), resolve_threads(opt.threads), [&](std::size_t idx) {
        PhaseCell& cell = pd.cells[idx];
        cell.q1 = q1s[idx % q1s.size()];
        cell.contrast = contrasts[idx / q1s.size()];
        try {
            cell.info = classify_region(with_contrast(with_q1(config, cell.q1), cell.contrast));
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });
    if (opt.curves) {
        const auto [lo, hi] = std::minmax_element(contrasts.begin(), contrasts.end());
        pd.curves = trace_bifurcation_curves(config, {*lo, *hi}, opt, pd.warnings);
    }
    return pd;
}

// ---------------------------------------------------------------------------
// Thresholds.

struct Threshold {
    double contrast = 0.0;
    double q1 = 0.0;
    double q_c = 0.0;
    double omega = 0.0;  // frequency of the critical pair, when oscillatory
};

/// The branch equilibrium at (q1, contrast), if it exists.
inline std::optional<EquilibriumState> branch_state(const NetworkConfig& config, Branch branch) {
    return select_branch(solve_equilibria(config), branch);
}

inline bool branch_oscillatory(const NetworkConfig& config, Branch branch) {
    const auto s = branch_state(config, branch);
    if (!s) throw SolverError("branch has no equilibrium at q1 = " + std::to_string(config.inlets.q1));
    return classify_point(char_coefficients(config, s->q_c)) == Stability::Oscillatory;
}

/// Frequency of the pair closest to the imaginary axis.
inline double critical_frequency(const NetworkConfig& config, double q_c) {
    const auto k = char_coefficients(config, q_c);
    const auto found = find_eigenvalues(k, Window{-0.05, 0.05, 0.05, 40.0}, {100, 800});
    double best = 0.0, dist = std::numeric_limits<double>::infinity();
    for (const auto& e : found.roots) {
        if (e.omega > 0.0 && std::abs(e.sigma) < dist) {
            dist = std::abs(e.sigma);
            best = e.omega;
        }
    }
    return best;
}

/// Bisection in contrast on a predicate that is false at lo and true at hi.
template <class Pred>
double bisect_contrast(Pred&& unstable, double lo, double hi, double rel_tol) {
    if (unstable(lo) || !unstable(hi)) {
        throw SolverError("threshold not bracketed in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    while (hi / lo - 1.0 > rel_tol) {
        const double mid = std::sqrt(lo * hi);
        (unstable(mid) ? hi : lo) = mid;
    }
    return std::sqrt(lo * hi);
}

/// Contrast at which the given branch at fixed q1 loses stability to an
/// oscillatory mode.
inline Threshold oscillation_onset_at(const NetworkConfig& config, double q1, Branch branch, double lo, double hi,
                                      double rel_tol = 1e-6) {
    const NetworkConfig base = with_q1(config, q1);
    const double c = bisect_contrast(
        [&](double x) { return branch_oscillatory(with_contrast(base, x), branch); }, lo, hi, rel_tol);
    Threshold t;
    t.contrast = c;
    t.q1 = q1;
    const NetworkConfig at = with_contrast(base, c);
    t.q_c = branch_state(at, branch)->q_c;
    t.omega = critical_frequency(at, t.q_c);
    return t;
}

enum class WindowEdge { Lower, Upper };

/// q1 of the lower or upper edge of the multiple-equilibria window.
inline std::optional<SaddleNodePoint> window_edge(const NetworkConfig& config, WindowEdge edge) {
    const auto folds = detect_folds(config, continue_curve(config, 0.0, 1.0));
    if (folds.empty()) return std::nullopt;
    return *std::min_element(folds.begin(), folds.end(), [edge](const auto& a, const auto& b) {
        return edge == WindowEdge::Lower ? a.q1 < b.q1 : a.q1 > b.q1;
    });
}

/// Contrast at which the oscillatory band on a branch reaches the given edge of
/// the multiple-equilibria window, i.e. where the branch becomes oscillatory at
/// the fold of the other branch.
inline Threshold oscillation_at_window_edge(const NetworkConfig& config, WindowEdge edge, Branch branch,
                                            double lo, double hi, double rel_tol = 1e-6) {
    auto at_edge = [&](double c) {
        const NetworkConfig cfg = with_contrast(config, c);
        const auto fold = window_edge(cfg, edge);
        if (!fold) throw SolverError("no multiple-equilibria window at contrast " + std::to_string(c));
        return with_q1(cfg, fold->q1);
    };
    const double c = bisect_contrast([&](double x) { return branch_oscillatory(at_edge(x), branch); }, lo, hi,
                                     rel_tol);
    const NetworkConfig at = at_edge(c);
    Threshold t;
    t.contrast = c;
    t.q1 = at.inlets.q1;
    t.q_c = branch_state(at, branch)->q_c;
    t.omega = critical_frequency(at, t.q_c);
    return t;
}

/// Lowest contrast on the Hopf locus through the seed (the point where the
/// oscillatory band is born).
inline Threshold hopf_emergence(const NetworkConfig& config, const HopfPoint& seed, const ContrastRange& range) {
    const auto curve = track_hopf(config, seed, range);
    const auto p = min_contrast_point(curve);
    return {p.contrast, p.q1, p.q_c, p.omega};
}

/// Lowest contrast on the fold locus through the seed (the cusp where multiple
/// equilibria appear).
inline Threshold saddle_node_emergence(const NetworkConfig& config, const SaddleNodePoint& seed,
                                       const ContrastRange& range) {
    const auto curve = track_saddle_node(config, seed, range);
    const auto p = min_contrast_point(curve);
    return {p.contrast, p.q1, p.q_c, 0.0};
}

}  // namespace threenode
