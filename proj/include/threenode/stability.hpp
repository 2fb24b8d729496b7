#pragma once

// Linear stability of an equilibrium. Perturbations to the volume fraction are
// carried through each vessel with its transit time, so growth rates lambda are
// roots of
//
//   chi(lambda) = a K(lambda tau_A) + (b + d e^{-lambda tau_C}) K(lambda tau_B)
//               + c K(lambda tau_C) - 1,        K(z) = (1 - e^{-z}) / z,
//
// written in the frame where the flow in C runs from inlet 1 to inlet 2.
//
// Two independent routes to the spectrum are provided: zero-contour
// intersections of Re chi and Im chi followed by complex Newton (explicit
// roots in a window), and an argument-principle count along the imaginary axis
// (number of roots with positive real part, no window needed).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "threenode/arclength.hpp"
#include "threenode/equilibrium.hpp"
#include "threenode/model.hpp"

namespace threenode {

using cplx = std::complex<double>;

struct CharCoefficients {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    double tau_a = 1.0, tau_b = 1.0;
    double tau_c = std::numeric_limits<double>::infinity();

    /// Whether the loop vessel C contributes (it does not when Q_C* = 0).
    bool has_loop() const { return std::isfinite(tau_c) && (c != 0.0 || d != 0.0); }
};

inline CharCoefficients char_coefficients(const NetworkConfig& config, double q_c) {
    const OrientedConfig o = orient(config, q_c);
    const EquilibriumState s = evaluate_state(o.config, o.q_c);
    const double g = skimming_log_slope(o.config.separation, o.q_c / o.config.inlets.q1);
    const double sum = s.res_a + s.res_b + s.res_c;
    const auto& law = config.viscosity;
    const double la = dln_mu_dphi(law, s.phi_a);
    const double lb = dln_mu_dphi(law, s.phi_b);
    const double lc = dln_mu_dphi(law, s.phi_c);

    CharCoefficients k;
    k.a = -((s.phi_c - s.phi_a) + s.phi_c * g) * (s.res_a / sum) * la;
    k.b = -(s.phi_c - s.phi_b) * (s.res_b / sum) * lb;
    k.c = -s.phi_c * g * (s.res_c / sum) * lc;
    k.d = -s.phi_c * g * (s.res_b / sum) * lb;
    k.tau_a = s.tau_a;
    k.tau_b = s.tau_b;
    k.tau_c = s.tau_c;
    if (!std::isfinite(k.tau_c)) k.c = k.d = 0.0;
    return k;
}

inline CharCoefficients char_coefficients(const NetworkConfig& config, const EquilibriumState& state) {
    return char_coefficients(config, state.q_c);
}

// ---------------------------------------------------------------------------
// Characteristic function.

inline constexpr double kKernelSeriesRadius = 1e-4;

/// 1 - e^{-z} without cancellation for small |z|.
inline cplx one_minus_exp_neg(cplx z) {
    const double x = z.real(), y = z.imag();
    const double s = std::sin(0.5 * y);
    return {-std::expm1(-x) * std::cos(y) + 2.0 * s * s, std::exp(-x) * std::sin(y)};
}

inline cplx delay_kernel(cplx z) {
    if (std::abs(z) < kKernelSeriesRadius) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
    return one_minus_exp_neg(z) / z;
}

/// K'(z) = (e^{-z}(1 + z) - 1) / z^2. The closed form cancels to O(z^2), so
/// the series is used out to a wider radius.
inline cplx delay_kernel_derivative(cplx z) {
    if (std::abs(z) < 1e-2) {
        return -0.5 + z * (1.0 / 3.0 + z * (-1.0 / 8.0 + z * (1.0 / 30.0 + z * (-1.0 / 144.0 + z / 840.0))));
    }
    return (z * std::exp(-z) - one_minus_exp_neg(z)) / (z * z);
}

inline cplx chi(const CharCoefficients& k, cplx lambda) {
    cplx v = k.a * delay_kernel(lambda * k.tau_a) + k.b * delay_kernel(lambda * k.tau_b) - 1.0;
    if (k.has_loop()) {
        v += k.d * std::exp(-lambda * k.tau_c) * delay_kernel(lambda * k.tau_b) +
             k.c * delay_kernel(lambda * k.tau_c);
    }
    return v;
}

inline cplx chi_derivative(const CharCoefficients& k, cplx lambda) {
    cplx v = k.a * k.tau_a * delay_kernel_derivative(lambda * k.tau_a) +
             k.b * k.tau_b * delay_kernel_derivative(lambda * k.tau_b);
    if (k.has_loop()) {
        const cplx e = std::exp(-lambda * k.tau_c);
        v += k.d * e * k.tau_b * delay_kernel_derivative(lambda * k.tau_b) -
             k.d * k.tau_c * e * delay_kernel(lambda * k.tau_b) +
             k.c * k.tau_c * delay_kernel_derivative(lambda * k.tau_c);
    }
    return v;
}

struct Eigenvalue {
    double sigma = 0.0;
    double omega = 0.0;
    double residual = 0.0;  // |chi(sigma + i omega)|

    cplx lambda() const { return {sigma, omega}; }
};

// ---------------------------------------------------------------------------
// Sampled fields and zero-contour intersections.

/// Two real fields sampled on a rectangular grid, value(i, j) at (x[i], y[j]).
struct ContourField {
    std::vector<double> x, y;
    std::vector<double> re, im;  // row-major in x

    double R(std::size_t i, std::size_t j) const { return re[i * y.size() + j]; }
    double I(std::size_t i, std::size_t j) const { return im[i * y.size() + j]; }
};

struct Window {
    double sigma_min = -2.0, sigma_max = 1.0;
    double omega_min = 0.05, omega_max = 40.0;
};

inline std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    return out;
}

inline ContourField eigen_contours(const CharCoefficients& k, const Window& w, int n_sigma, int n_omega) {
    if (n_sigma < 2 || n_omega < 2) throw DomainError("contour grid needs at least 2 points per axis");
    ContourField f;
    f.x = linspace(w.sigma_min, w.sigma_max, n_sigma);
    f.y = linspace(w.omega_min, w.omega_max, n_omega);
    f.re.resize(f.x.size() * f.y.size());
    f.im.resize(f.re.size());
    for (std::size_t i = 0; i < f.x.size(); ++i) {
        for (std::size_t j = 0; j < f.y.size(); ++j) {
            const cplx v = chi(k, {f.x[i], f.y[j]});
            f.re[i * f.y.size() + j] = v.real();
            f.im[i * f.y.size() + j] = v.imag();
        }
    }
    return f;
}

struct Point2 {
    double x = 0.0, y = 0.0;
};

namespace detail {

struct Segment {
    Point2 p, q;
};

/// Zero-level segments of one field inside the cell (i, j).
template <class Value>
std::vector<Segment> cell_segments(const ContourField& f, std::size_t i, std::size_t j, Value v) {
    const Point2 corner[4] = {{f.x[i], f.y[j]}, {f.x[i + 1], f.y[j]}, {f.x[i + 1], f.y[j + 1]}, {f.x[i], f.y[j + 1]}};
    const double val[4] = {v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)};
    std::vector<Point2> hits;
    for (int e = 0; e < 4; ++e) {
        const int n = (e + 1) % 4;
        const double v0 = val[e], v1 = val[n];
        if (!std::isfinite(v0) || !std::isfinite(v1)) return {};
        if ((v0 < 0.0) != (v1 < 0.0)) {
            const double t = v0 / (v0 - v1);
            hits.push_back({corner[e].x + t * (corner[n].x - corner[e].x),
                            corner[e].y + t * (corner[n].y - corner[e].y)});
        }
    }
    std::vector<Segment> out;
    if (hits.size() == 2) out.push_back({hits[0], hits[1]});
    if (hits.size() == 4) {
        // Saddle cell: disambiguate by the sign at the center.
        const double mid = 0.25 * (val[0] + val[1] + val[2] + val[3]);
        if ((mid < 0.0) == (val[0] < 0.0)) {
            out.push_back({hits[0], hits[3]});
            out.push_back({hits[1], hits[2]});
        } else {
            out.push_back({hits[0], hits[1]});
            out.push_back({hits[2], hits[3]});
        }
    }
    return out;
}

inline std::optional<Point2> intersect(const Segment& s, const Segment& t) {
    const double rx = s.q.x - s.p.x, ry = s.q.y - s.p.y;
    const double sx = t.q.x - t.p.x, sy = t.q.y - t.p.y;
    const double den = rx * sy - ry * sx;
    if (den == 0.0) return std::nullopt;
    const double qx = t.p.x - s.p.x, qy = t.p.y - s.p.y;
    const double u = (qx * sy - qy * sx) / den;
    const double v = (qx * ry - qy * rx) / den;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;
    return Point2{s.p.x + u * rx, s.p.y + u * ry};
}

}  // namespace detail

/// Marching squares on both fields; returns the intersection points of the
/// R = 0 and I = 0 segments. A cell crossed by both contours without a segment
/// intersection contributes its center, since the linear segments can miss a
/// crossing near a corner, unless a cell within two already reported one.
inline std::vector<Point2> contour_intersections(const ContourField& f) {
    std::vector<Point2> out;
    auto R = [&f](std::size_t i, std::size_t j) { return f.R(i, j); };
    auto I = [&f](std::size_t i, std::size_t j) { return f.I(i, j); };
    const std::size_t nx = f.x.size() - 1, ny = f.y.size() - 1;
    std::vector<char> hit(nx * ny, 0);  // 1: segment intersection, 2: both contours only
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const auto rs = detail::cell_segments(f, i, j, R);
            if (rs.empty()) continue;
            const auto is = detail::cell_segments(f, i, j, I);
            if (is.empty()) continue;
            hit[i * ny + j] = 2;
            for (const auto& r : rs) {
                for (const auto& s : is) {
                    if (auto p = detail::intersect(r, s)) {
                        out.push_back(*p);
                        hit[i * ny + j] = 1;
                    }
                }
            }
        }
    }
    std::vector<char> taken(nx * ny, 0);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            if (hit[i * ny + j] != 2) continue;
            bool near = false;
            for (std::size_t a = i > 1 ? i - 2 : 0; a <= std::min(i + 2, nx - 1); ++a) {
                for (std::size_t b = j > 1 ? j - 2 : 0; b <= std::min(j + 2, ny - 1); ++b) {
                    near |= hit[a * ny + b] == 1 || taken[a * ny + b];
                }
            }
            if (near) continue;
            taken[i * ny + j] = 1;
            out.push_back({0.5 * (f.x[i] + f.x[i + 1]), 0.5 * (f.y[j] + f.y[j + 1])});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Root finding in a window.

struct EigenSearchOptions {
    int n_sigma = 400;
    int n_omega = 400;
    double tol = 1e-10;
    double dedup = 1e-6;
    int max_iter = 60;
};

struct EigenSearch {
    std::vector<Eigenvalue> roots;        // sorted by decreasing sigma
    std::vector<Eigenvalue> unconverged;  // seeds where Newton stalled
};

/// Damped complex Newton. Returns the final iterate and whether |chi| < tol.
inline std::pair<cplx, bool> newton_root(const CharCoefficients& k, cplx z, double tol, int max_iter = 60) {
    cplx v = chi(k, z);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(v) < tol) return {z, true};
        const cplx dv = chi_derivative(k, z);
        if (dv == 0.0) break;
        const cplx step = v / dv;
        double t = 1.0;
        bool improved = false;
        for (int h = 0; h < 30; ++h) {
            const cplx trial = z - t * step;
            const cplx tv = chi(k, trial);
            if (std::isfinite(tv.real()) && std::isfinite(tv.imag()) && std::abs(tv) < std::abs(v)) {
                z = trial;
                v = tv;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if (!improved) break;
    }
    return {z, std::abs(v) < tol};
}

namespace detail {

inline void add_unique(std::vector<Eigenvalue>& list, const Eigenvalue& e, double dedup) {
    for (const auto& r : list) {
        if (std::abs(r.lambda() - e.lambda()) < dedup) return;
    }
    list.push_back(e);
}

/// Real roots of chi on [s0, s1] by sign changes on n samples.
inline std::vector<double> real_roots(const CharCoefficients& k, double s0, double s1, int n) {
    std::vector<double> out;
    auto f = [&k](double s) { return chi(k, {s, 0.0}).real(); };
    double x0 = s0, y0 = f(s0);
    if (y0 == 0.0) out.push_back(x0);
    for (int i = 1; i < n; ++i) {
        const double x1 = s0 + (s1 - s0) * static_cast<double>(i) / (n - 1);
        const double y1 = f(x1);
        if (y1 == 0.0) {
            out.push_back(x1);
        } else if (std::isfinite(y0) && std::isfinite(y1) && y0 != 0.0 && (y0 < 0.0) != (y1 < 0.0)) {
            std::uintmax_t iters = 200;
            const auto br = boost::math::tools::toms748_solve(
                f, x0, x1, y0, y1, boost::math::tools::eps_tolerance<double>(52), iters);
            out.push_back(0.5 * (br.first + br.second));
        }
        x0 = x1;
        y0 = y1;
    }
    return out;
}

}  // namespace detail

inline EigenSearch find_eigenvalues(const CharCoefficients& k, const Window& w,
                                    const EigenSearchOptions& opt = {}) {
    EigenSearch out;
    const double ds = (w.sigma_max - w.sigma_min) / std::max(opt.n_sigma - 1, 1);
    const double dw = (w.omega_max - w.omega_min) / std::max(opt.n_omega - 1, 1);
    auto inside = [&](cplx z) {
        return z.real() >= w.sigma_min - ds && z.real() <= w.sigma_max + ds &&
               std::abs(z.imag()) >= w.omega_min - dw && std::abs(z.imag()) <= w.omega_max + dw;
    };

    const ContourField field = eigen_contours(k, w, opt.n_sigma, opt.n_omega);
    for (const Point2& p : contour_intersections(field)) {
        const auto [z, ok] = newton_root(k, {p.x, p.y}, opt.tol, opt.max_iter);
        const cplx zc = {z.real(), std::abs(z.imag())};
        if (!ok) {
            detail::add_unique(out.unconverged, {p.x, p.y, std::abs(chi(k, {p.x, p.y}))}, opt.dedup);
            continue;
        }
        if (!inside(zc)) continue;
        // Roots on the real axis come back with a round-off imaginary part.
        const double omega = std::abs(zc.imag()) < opt.dedup ? 0.0 : zc.imag();
        detail::add_unique(out.roots, {zc.real(), omega, std::abs(chi(k, {zc.real(), omega}))}, opt.dedup);
    }

    if (w.omega_min <= 0.0) {
        for (double s : detail::real_roots(k, w.sigma_min, w.sigma_max, 4 * opt.n_sigma)) {
            const double r = std::abs(chi(k, {s, 0.0}));
            if (r < opt.tol) detail::add_unique(out.roots, {s, 0.0, r}, opt.dedup);
        }
    }

    std::sort(out.roots.begin(), out.roots.end(),
              [](const Eigenvalue& x, const Eigenvalue& y) { return x.sigma > y.sigma; });
    return out;
}

// ---------------------------------------------------------------------------
// Argument-principle count.

struct RootCount {
    int unstable = 0;       // roots with Re lambda > 0, with multiplicity
    int real_unstable = 0;  // of those, positive real roots (parity-exact)
    bool resolved = true;   // false if the phase sweep hit its resolution floor

    int oscillatory() const { return unstable - real_unstable; }
};

/// Number of roots of chi in Re lambda > 0.
///
/// chi is entire and tends to -1 uniformly in the closed right half-plane, so
/// the count is minus the winding of chi(i omega) over omega from -inf to +inf,
/// i.e. -(1/pi) times the phase change over [0, inf). Beyond Omega the
/// perturbation |chi + 1| stays below 1/2 and the remaining phase change is
/// the principal angle to -1.
inline RootCount count_unstable_roots(const CharCoefficients& k) {
    const bool loop = k.has_loop();
    const double rate = std::abs(k.a) / k.tau_a + (std::abs(k.b) + std::abs(k.d)) / k.tau_b +
                        (loop ? std::abs(k.c) / k.tau_c : 0.0);
    RootCount out;

    const double big_omega = std::max(1.0, 4.0 * rate);
    const double h_slow = 0.25 / std::max(k.tau_a, k.tau_b);
    const double h_fast = loop ? 0.5 / k.tau_c : std::numeric_limits<double>::infinity();
    const double fast_mag = loop ? 4.0 * (std::abs(k.c) + std::abs(k.d)) : 0.0;
    const double floor = 1e-12 * big_omega;

    auto slow = [&k](double w) {
        const cplx z{0.0, w};
        return k.a * delay_kernel(z * k.tau_a) + k.b * delay_kernel(z * k.tau_b) - 1.0;
    };

    struct Node {
        double w;
        cplx v;
        double slow_mag;
    };
    auto sample = [&](double w) { return Node{w, chi(k, {0.0, w}), loop ? std::abs(slow(w)) : 0.0}; };

    double phase = 0.0;
    const int n_base = std::max(1, static_cast<int>(std::ceil(big_omega / h_slow)));
    Node left = sample(0.0);
    std::vector<Node> stack;
    for (int b = 1; b <= n_base; ++b) {
        stack.push_back(sample(big_omega * static_cast<double>(b) / n_base));
        while (!stack.empty()) {
            const Node right = stack.back();
            const double len = right.w - left.w;
            const bool fast_ok = len <= h_fast || (left.slow_mag > fast_mag && right.slow_mag > fast_mag);
            const double step = std::arg(right.v / left.v);
            if ((fast_ok && std::abs(step) < M_PI / 3.0) || len < floor) {
                if (len < floor) out.resolved = false;
                phase += step;
                left = right;
                stack.pop_back();
            } else {
                stack.push_back(sample(0.5 * (left.w + right.w)));
            }
        }
    }
    phase -= std::arg(-left.v);
    out.unstable = static_cast<int>(std::lround(-phase / M_PI));

    // Positive real roots: chi(sigma) < 0 for sigma > 2 rate.
    const double s_max = std::max(1e-6, 2.0 * rate);
    std::vector<double> grid = linspace(0.0, s_max, 2001);
    for (int i = 0; i <= 200; ++i) grid.push_back(s_max * std::pow(10.0, -9.0 + 9.0 * i / 200.0));
    std::sort(grid.begin(), grid.end());
    double prev = chi(k, {0.0, 0.0}).real();
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = chi(k, {grid[i], 0.0}).real();
        if (prev != 0.0 && v != 0.0 && (prev < 0.0) != (v < 0.0)) ++out.real_unstable;
        if (v != 0.0) prev = v;
    }
    if (out.unstable < out.real_unstable || (out.unstable - out.real_unstable) % 2 != 0) {
        out.resolved = false;
    }
    return out;
}

enum class Stability { Stable, Saddle, Oscillatory, Unstable };

inline const char* stability_name(Stability s) {
    switch (s) {
        case Stability::Stable: return "stable";
        case Stability::Saddle: return "saddle";
        case Stability::Oscillatory: return "oscillatory";
        case Stability::Unstable: return "unstable";
    }
    return "?";
}

/// Stable: no roots in the right half-plane. Saddle: chi(0) > 0, i.e. the
/// middle branch between folds. Oscillatory: a complex pair in the right
/// half-plane. Unstable: real growth only.
inline Stability classify_point(const CharCoefficients& k) {
    const RootCount n = count_unstable_roots(k);
    if (chi(k, {0.0, 0.0}).real() > 0.0) return Stability::Saddle;
    if (n.unstable == 0) return Stability::Stable;
    if (n.oscillatory() > 0) return Stability::Oscillatory;
    return Stability::Unstable;
}

inline std::optional<Eigenvalue> dominant_eigenvalue(const CharCoefficients& k, const Window& w,
                                                     const EigenSearchOptions& opt = {}) {
    const auto found = find_eigenvalues(k, w, opt);
    if (found.roots.empty()) return std::nullopt;
    return found.roots.front();
}

// ---------------------------------------------------------------------------
// Hopf points.

struct HopfPoint {
    double q1 = 0.0;
    double q_c = 0.0;
    double contrast = 0.0;
    double omega = 0.0;
};

/// [psi - q_c, Re chi(i omega), Im chi(i omega)] at (q1, q_c).
inline Vec<3> hopf_residual(const NetworkConfig& config, double q1, double q_c, double omega) {
    const NetworkConfig c = with_q1(config, q1);
    Vec<3> r;
    r(0) = psi_residual(c, q_c);
    const cplx v = chi(char_coefficients(c, q_c), {0.0, omega});
    r(1) = v.real();
    r(2) = v.imag();
    return r;
}

inline std::optional<HopfPoint> refine_hopf(const NetworkConfig& config, double q1, double q_c, double omega,
                                            double tol = 1e-11) {
    Vec<3> x(q1, q_c, omega);
    auto g = [&config](const Vec<3>& z) { return hopf_residual(config, z(0), z(1), z(2)); };
    const auto report = newton_solve<3>(g, x, NewtonOptions{40, tol, 1e-7});
    if (!report.converged || !(x(2) > 0.0)) return std::nullopt;
    return HopfPoint{x(0), x(1), contrast(config.viscosity), x(2)};
}

struct HopfScanOptions {
    double omega_min = 0.05;
    double omega_max = 40.0;
    int n_omega = 400;
    double dedup = 1e-6;
};

struct HopfScan {
    std::vector<HopfPoint> points;  // sorted by q1
    std::vector<std::size_t> gaps;  // curve indices with no usable coefficients
    ContourField field;             // x = curve arclength s, y = omega
};

/// R(s, omega) and I(s, omega) along the curve on the imaginary axis; each
/// intersection of their zero contours is refined on the full Hopf system.
inline HopfScan hopf_scan(const NetworkConfig& config, const EquilibriumCurve& curve,
                          const HopfScanOptions& opt = {}) {
    HopfScan out;
    const std::size_t n = curve.points.size();
    out.field.y = linspace(opt.omega_min, opt.omega_max, opt.n_omega);
    std::vector<CharCoefficients> coeffs;
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& st = curve.points[i].state;
        try {
            coeffs.push_back(char_coefficients(with_q1(config, st.q1), st.q_c));
            used.push_back(i);
        } catch (const std::exception&) {
            out.gaps.push_back(i);
        }
    }
    if (used.size() < 2) return out;

    for (std::size_t i : used) out.field.x.push_back(curve.points[i].s);
    out.field.re.resize(used.size() * out.field.y.size());
    out.field.im.resize(out.field.re.size());
    for (std::size_t i = 0; i < used.size(); ++i) {
        for (std::size_t j = 0; j < out.field.y.size(); ++j) {
            const cplx v = chi(coeffs[i], {0.0, out.field.y[j]});
            out.field.re[i * out.field.y.size() + j] = v.real();
            out.field.im[i * out.field.y.size() + j] = v.imag();
        }
    }

    for (const Point2& p : contour_intersections(out.field)) {
        // Locate the curve segment containing s and interpolate the seed.
        const auto it = std::upper_bound(out.field.x.begin(), out.field.x.end(), p.x);
        std::size_t hi = std::clamp<std::size_t>(it - out.field.x.begin(), 1, used.size() - 1);
        std::size_t lo = hi - 1;
        const auto& a = curve.points[used[lo]];
        const auto& b = curve.points[used[hi]];
        const double t = b.s > a.s ? (p.x - a.s) / (b.s - a.s) : 0.0;
        const double q1 = a.state.q1 + t * (b.state.q1 - a.state.q1);
        const double qc = a.state.q_c + t * (b.state.q_c - a.state.q_c);
        const auto h = refine_hopf(config, q1, qc, p.y);
        if (!h || h->omega < opt.omega_min || h->q1 < 0.0 || h->q1 > 1.0) continue;
        bool dup = false;
        for (const auto& e : out.points) {
            if (std::abs(e.q1 - h->q1) < opt.dedup && std::abs(e.q_c - h->q_c) < opt.dedup &&
                std::abs(e.omega - h->omega) < opt.dedup) {
                dup = true;
            }
        }
        if (!dup) out.points.push_back(*h);
    }
    std::sort(out.points.begin(), out.points.end(),
              [](const HopfPoint& x, const HopfPoint& y) { return x.q1 < y.q1; });
    return out;
}

struct StabilitySegment {
    std::size_t begin = 0, end = 0;  // inclusive curve indices
    Stability label = Stability::Stable;
};

struct CurveStability {
    std::vector<Stability> labels;
    std::vector<StabilitySegment> segments;
};

/// Labels every curve point and groups consecutive equal labels.
inline CurveStability classify_stability(const NetworkConfig& config, const EquilibriumCurve& curve) {
    CurveStability out;
    for (const auto& p : curve.points) {
        out.labels.push_back(classify_point(char_coefficients(with_q1(config, p.state.q1), p.state.q_c)));
    }
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        if (out.segments.empty() || out.segments.back().label != out.labels[i]) {
            out.segments.push_back({i, i, out.labels[i]});
        } else {
            out.segments.back().end = i;
        }
    }
    return out;
}

}  // namespace threenode
