#pragma once

// Keller pseudo-arclength continuation for a curve F(x) = 0, F: R^N -> R^(N-1).
// The predictor follows the secant of the last two accepted points; the
// corrector is Newton on [F(x); t . (x - x_pred)] with a central-difference
// Jacobian. Unknowns are rescaled by a per-component weight before distances
// and tangents are measured.

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace threenode {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

struct NewtonOptions {
    int max_iter = 12;
    double residual_tol = 1e-11;
    double fd_step = 1e-6;  // relative
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// Newton's method on a square system g: R^N -> R^N with a central-difference
/// Jacobian. Exceptions thrown by g count as divergence.
template <int N, class G>
NewtonReport newton_solve(G&& g, Vec<N>& x, const NewtonOptions& opt) {
    NewtonReport report;
    try {
        Vec<N> r = g(x);
        for (int it = 0; it < opt.max_iter; ++it) {
            report.iterations = it + 1;
            Eigen::Matrix<double, N, N> jac;
            for (int j = 0; j < N; ++j) {
                const double h = opt.fd_step * std::max(1.0, std::abs(x(j)));
                Vec<N> xp = x, xm = x;
                xp(j) += h;
                xm(j) -= h;
                jac.col(j) = (g(xp) - g(xm)) / (2.0 * h);
            }
            const Vec<N> dx = jac.fullPivLu().solve(-r);
            if (!dx.allFinite()) return report;
            x += dx;
            r = g(x);
            report.residual = r.template lpNorm<Eigen::Infinity>();
            if (!std::isfinite(report.residual)) return report;
            if (report.residual < opt.residual_tol) {
                report.converged = true;
                return report;
            }
        }
    } catch (const std::exception&) {
        report.converged = false;
    }
    return report;
}

/// Unit null vector of the (N-1) x N central-difference Jacobian of F at x,
/// i.e. the local tangent of the solution curve. Sign is arbitrary.
template <int N, class F>
Vec<N> null_direction(F&& residual, const Vec<N>& x, double fd_step = 1e-6) {
    Eigen::Matrix<double, N - 1, N> jac;
    for (int j = 0; j < N; ++j) {
        const double h = fd_step * std::max(1.0, std::abs(x(j)));
        Vec<N> xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        jac.col(j) = (residual(xp) - residual(xm)) / (2.0 * h);
    }
    // The smallest right singular vector is the null direction.
    Eigen::JacobiSVD<Eigen::Matrix<double, N - 1, N>> svd(jac, Eigen::ComputeFullV);
    Vec<N> t = svd.matrixV().col(N - 1);
    return t.normalized();
}

enum class Termination { RangeExit, BoundaryExit, StepCollapse, MaxSteps, Stopped };

inline const char* termination_name(Termination t) {
    switch (t) {
        case Termination::RangeExit: return "range_exit";
        case Termination::BoundaryExit: return "boundary_exit";
        case Termination::StepCollapse: return "step_collapse";
        case Termination::MaxSteps: return "max_steps";
        case Termination::Stopped: return "stopped";
    }
    return "unknown";
}

/// What the monitor wants after a step from prev to next.
struct StepAction {
    enum class Kind { Continue, Clip, Stop } kind = Kind::Continue;
    int component = 0;    // for Clip: which unknown crossed its bound
    double value = 0.0;   // for Clip: the bound
    Termination reason = Termination::RangeExit;

    static StepAction proceed() { return {}; }
    static StepAction clip(int component, double value, Termination reason) {
        return {Kind::Clip, component, value, reason};
    }
    static StepAction stop(Termination reason) { return {Kind::Stop, 0, 0.0, reason}; }
};

struct ArclengthOptions {
    double ds_initial = 1e-3;
    double ds_min = 1e-9;
    double ds_max = 5e-3;
    int max_steps = 100000;
    double min_turn_cos = 0.95;
    NewtonOptions newton{8, 1e-11, 1e-6};
};

template <int N>
struct ArclengthBranch {
    std::vector<Vec<N>> points;
    Termination termination = Termination::MaxSteps;
};

template <int N, class F, class Monitor>
ArclengthBranch<N> trace_branch(F&& residual, const Vec<N>& start, const Vec<N>& direction,
                                const Vec<N>& scale, const ArclengthOptions& opt,
                                Monitor&& monitor) {
    ArclengthBranch<N> branch;
    branch.points.push_back(start);

    Vec<N> x = start;
    Vec<N> t = (direction.array() / scale.array()).matrix();
    if (!(t.norm() > 0.0)) throw std::invalid_argument("continuation direction must be non-zero");
    t.normalize();
    double ds = opt.ds_initial;

    for (int step = 0; step < opt.max_steps; ++step) {
        const Vec<N> y = (x.array() / scale.array()).matrix();
        const Vec<N> y_pred = y + ds * t;
        auto augmented = [&](const Vec<N>& z) {
            Vec<N> g;
            g.template head<N - 1>() = residual(z);
            g(N - 1) = t.dot((z.array() / scale.array()).matrix() - y_pred);
            return g;
        };
        Vec<N> next = (y_pred.array() * scale.array()).matrix();
        const NewtonReport report = newton_solve<N>(augmented, next, opt.newton);

        Vec<N> secant = (next.array() / scale.array()).matrix() - y;
        const bool turned = !(secant.norm() > 0.0) || secant.normalized().dot(t) < opt.min_turn_cos;
        if (!report.converged || turned) {
            ds *= 0.5;
            if (ds < opt.ds_min) {
                branch.termination = Termination::StepCollapse;
                return branch;
            }
            continue;
        }

        const StepAction action = monitor(x, next);
        if (action.kind == StepAction::Kind::Stop) {
            branch.termination = action.reason;
            return branch;
        }
        if (action.kind == StepAction::Kind::Clip) {
            const int k = action.component;
            const double frac = (action.value - x(k)) / (next(k) - x(k));
            Vec<N> edge = x + std::clamp(frac, 0.0, 1.0) * (next - x);
            edge(k) = action.value;
            auto pinned = [&](const Vec<N>& z) {
                Vec<N> g;
                g.template head<N - 1>() = residual(z);
                g(N - 1) = z(k) - action.value;
                return g;
            };
            if (newton_solve<N>(pinned, edge, opt.newton).converged) branch.points.push_back(edge);
            branch.termination = action.reason;
            return branch;
        }

        branch.points.push_back(next);
        t = secant.normalized();
        x = next;
        if (report.iterations <= 3) ds = std::min(1.5 * ds, opt.ds_max);
    }
    branch.termination = Termination::MaxSteps;
    return branch;
}

}  // namespace threenode
