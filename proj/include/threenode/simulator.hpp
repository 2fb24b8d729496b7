#pragma once

// Direct simulation of the transport problem: each vessel carries its volume
// fraction profile at the uniform speed Q_i V / V_i, the node balances set the
// inflow values, and the loop flow Q_C follows algebraically from the mean
// viscosities.
//
// The default scheme stores Lagrangian parcels: N + 2 samples per vessel at
// (j - 1 + theta) dx, j = 0..N+1, whose values never change while they move.
// Advection only shifts theta; when a parcel crosses a cell boundary the
// outflow ghost is dropped and a new inflow parcel is created. Profiles are
// reconstructed piecewise linearly between parcels, so there is no numerical
// diffusion and the transport delays are exact. A fixed-grid linear
// interpolation scheme is kept for comparison; it is strongly diffusive.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "threenode/equilibrium.hpp"
#include "threenode/model.hpp"

namespace threenode {

class StarvedVesselError : public std::runtime_error {
public:
    StarvedVesselError(const std::string& what, double time)
        : std::runtime_error(what + " at t = " + std::to_string(time)), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class AdvectionScheme { Parcel, FixedGridLinear };

struct SimConfig {
    int cells_per_vessel = 512;
    double cfl = 0.9;
    double t_end = 400.0;
    double transient_skip = -1.0;  // negative: t_end / 2
    double perturbation = 1e-4;
    Vessel perturbed_vessel = Vessel::C;
    std::optional<EquilibriumState> seed_state;
    AdvectionScheme scheme = AdvectionScheme::Parcel;
    int record_every = 1;
    bool record_phi = false;

    double skip() const { return transient_skip < 0.0 ? 0.5 * t_end : transient_skip; }
};

inline std::vector<std::string> validate(const SimConfig& sim) {
    std::vector<std::string> errors;
    if (sim.cells_per_vessel < 16) errors.push_back("cells_per_vessel must be at least 16");
    if (!(sim.cfl > 0.0 && sim.cfl <= 1.0)) errors.push_back("cfl must lie in (0, 1]");
    if (!(sim.t_end > 0.0)) errors.push_back("t_end must be positive");
    if (!(sim.skip() >= 0.0 && sim.skip() < sim.t_end)) errors.push_back("transient_skip must lie in [0, t_end)");
    if (!(sim.perturbation > -1.0) || !std::isfinite(sim.perturbation)) {
        errors.push_back("perturbation must be finite and greater than -1");
    }
    if (sim.record_every < 1) errors.push_back("record_every must be at least 1");
    return errors;
}

/// Volume fraction and relative viscosity of one parcel.
struct Sample {
    double phi = 0.0;
    double mu = 1.0;
};

/// Profile on one vessel, x in [0, 1].
class VesselProfile {
public:
    VesselProfile() = default;
    VesselProfile(int cells, AdvectionScheme scheme, Sample fill)
        : cells_(cells), scheme_(scheme), samples_(static_cast<std::size_t>(cells) + 2, fill) {}

    int cells() const { return cells_; }
    AdvectionScheme scheme() const { return scheme_; }
    double dx() const { return 1.0 / cells_; }
    double theta() const { return theta_; }
    const std::deque<Sample>& samples() const { return samples_; }
    std::deque<Sample>& samples() { return samples_; }

    /// Position of sample j.
    double position(std::size_t j) const {
        return (static_cast<double>(j) - 1.0 + theta_) * dx();
    }

    /// Moves the profile by `shift` (in units of x, |shift| <= dx); parcels
    /// entering the vessel take the value `inflow`.
    void advect(double shift, Sample inflow, const ViscosityLaw& law) {
        if (scheme_ == AdvectionScheme::Parcel) {
            theta_ += shift / dx();
            if (theta_ >= 1.0) {
                samples_.pop_back();
                samples_.push_front(inflow);
                theta_ -= 1.0;
            } else if (theta_ < 0.0) {
                samples_.pop_front();
                samples_.push_back(inflow);
                theta_ += 1.0;
            }
            return;
        }
        // Fixed grid: nodes 1..N+1 sit at 0..1; interpolate at the foot of
        // each characteristic.
        const double c = shift / dx();
        const std::size_t n = samples_.size();
        if (c >= 0.0) {
            for (std::size_t j = n - 1; j >= 2; --j) {
                samples_[j].phi -= c * (samples_[j].phi - samples_[j - 1].phi);
            }
            samples_[1] = inflow;
        } else {
            for (std::size_t j = 1; j + 1 < n; ++j) {
                samples_[j].phi -= c * (samples_[j + 1].phi - samples_[j].phi);
            }
            samples_[n - 1] = inflow;
        }
        for (std::size_t j = 1; j < n; ++j) samples_[j].mu = rel_viscosity_unchecked(law, samples_[j].phi);
    }

    /// Overwrites the sample that sits at or beyond the inflow end.
    void set_inflow(bool from_left, Sample value) {
        if (scheme_ == AdvectionScheme::Parcel) {
            (from_left ? samples_.front() : samples_.back()) = value;
        } else {
            (from_left ? samples_[1] : samples_.back()) = value;
        }
    }

    /// Linear reconstruction at x = 0 (left) or x = 1 (right).
    Sample end_value(bool left) const {
        if (scheme_ == AdvectionScheme::FixedGridLinear) return left ? samples_[1] : samples_.back();
        const std::size_t n = samples_.size();
        const Sample& a = left ? samples_[0] : samples_[n - 2];
        const Sample& b = left ? samples_[1] : samples_[n - 1];
        const double w = 1.0 - theta_;
        return {a.phi + w * (b.phi - a.phi), a.mu + w * (b.mu - a.mu)};
    }

    /// Trapezoid means of phi and mu over [0, 1]. The inflow end uses the
    /// boundary value, the outflow end the reconstruction.
    Sample mean(bool inflow_left, Sample inflow) const {
        const std::size_t n = samples_.size();
        if (scheme_ == AdvectionScheme::FixedGridLinear) {
            Sample s{0.0, 0.0};
            for (std::size_t j = 1; j < n; ++j) {
                const double w = (j == 1 || j == n - 1) ? 0.5 : 1.0;
                s.phi += w * samples_[j].phi;
                s.mu += w * samples_[j].mu;
            }
            return {s.phi * dx(), s.mu * dx()};
        }
        const Sample left = inflow_left ? inflow : end_value(true);
        const Sample right = inflow_left ? end_value(false) : inflow;
        const Sample& first = samples_[1];
        const Sample& last = samples_[n - 2];
        Sample interior{0.0, 0.0};
        for (std::size_t j = 1; j + 1 < n; ++j) {
            interior.phi += samples_[j].phi;
            interior.mu += samples_[j].mu;
        }
        interior.phi -= 0.5 * (first.phi + last.phi);
        interior.mu -= 0.5 * (first.mu + last.mu);
        const double a = 0.5 * theta_, b = 0.5 * (1.0 - theta_);
        return {dx() * (a * (left.phi + first.phi) + interior.phi + b * (last.phi + right.phi)),
                dx() * (a * (left.mu + first.mu) + interior.mu + b * (last.mu + right.mu))};
    }

    /// Reconstructed phi at x in [0, 1] (piecewise linear between samples).
    double phi_at(double x) const {
        if (scheme_ == AdvectionScheme::FixedGridLinear) {
            const double u = std::clamp(x / dx(), 0.0, static_cast<double>(cells_));
            const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(u), cells_ - 1);
            const double w = u - static_cast<double>(j);
            return samples_[j + 1].phi + w * (samples_[j + 2].phi - samples_[j + 1].phi);
        }
        const double u = std::clamp(x / dx() + 1.0 - theta_, 0.0, static_cast<double>(samples_.size() - 1));
        const std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(u), samples_.size() - 2);
        const double w = u - static_cast<double>(j);
        return samples_[j].phi + w * (samples_[j + 1].phi - samples_[j].phi);
    }

    std::pair<double, double> phi_range() const {
        double lo = 1.0, hi = 0.0;
        for (const auto& s : samples_) {
            lo = std::min(lo, s.phi);
            hi = std::max(hi, s.phi);
        }
        return {lo, hi};
    }

private:
    int cells_ = 0;
    AdvectionScheme scheme_ = AdvectionScheme::Parcel;
    double theta_ = 0.0;
    std::deque<Sample> samples_;
};

/// Volume fractions injected at the nodes during the last step.
struct NodeValues {
    double phi_a_in = 0.0;  // Phi_A(0)
    double phi_b_in = 0.0;  // Phi_B(0)
    double phi_c_0 = 0.0;   // Phi_C(0)
    double phi_c_1 = 0.0;   // Phi_C(1)
    double q_c = 0.0;       // flow used to evaluate them
};

struct SimState {
    VesselProfile a, b, c;
    double q_c = 0.0;
    double t = 0.0;
    double q_c_prev = 0.0;  // flow and step size of the previous step, for extrapolation
    double dt_prev = 0.0;
    NodeValues nodes;
    Sample mean_a, mean_b, mean_c;
};

namespace detail {

inline Sample make_sample(const ViscosityLaw& law, double phi) {
    phi = checked_fraction(phi, "volume fraction");
    return {phi, rel_viscosity_unchecked(law, phi)};
}

/// Kirchhoff loop flow from mean viscosities.
inline double loop_flow(const NetworkConfig& config, double mu_a, double mu_b, double mu_c) {
    const auto& g = config.geometry;
    const double ra = g.r(Vessel::A) * mu_a, rb = g.r(Vessel::B) * mu_b, rc = g.r(Vessel::C) * mu_c;
    return (config.inlets.q1 * ra - config.inlets.q2 * rb) / (ra + rb + rc);
}

struct Speeds {
    double a, b, c;
    double max() const { return std::max({std::abs(a), std::abs(b), std::abs(c)}); }
};

inline Speeds speeds(const NetworkConfig& config, double q_c) {
    const auto& g = config.geometry;
    const double vol = g.total_volume();
    return {(config.inlets.q1 - q_c) * vol / g.vol(Vessel::A), (config.inlets.q2 + q_c) * vol / g.vol(Vessel::B),
            q_c * vol / g.vol(Vessel::C)};
}

/// Node balances given the current flow and the values leaving vessel C.
inline NodeValues node_values(const NetworkConfig& config, double q_c, const VesselProfile& c) {
    const auto& in = config.inlets;
    NodeValues n;
    n.q_c = q_c;
    if (q_c >= 0.0) {
        n.phi_c_0 = in.phi1 * separation_f(config.separation, in.q1 > 0.0 ? q_c / in.q1 : 0.0);
        n.phi_c_1 = c.end_value(false).phi;
    } else {
        n.phi_c_0 = c.end_value(true).phi;
        n.phi_c_1 = in.phi2 * separation_f(config.separation, -q_c / in.q2);
    }
    n.phi_a_in = (in.phi1 * in.q1 - n.phi_c_0 * q_c) / (in.q1 - q_c);
    n.phi_b_in = (in.phi2 * in.q2 + n.phi_c_1 * q_c) / (in.q2 + q_c);
    return n;
}

}  // namespace detail

/// Uniform profiles at the seed equilibrium, one vessel scaled by
/// (1 + perturbation), and q_c from the flow equation on those profiles.
inline SimState init(const NetworkConfig& config, const SimConfig& sim) {
    if (auto errors = validate(sim); !errors.empty()) throw DomainError("invalid simulation settings: " + errors.front());
    if (!sim.seed_state) throw DomainError("simulation needs a seed equilibrium");
    const EquilibriumState& seed = *sim.seed_state;
    if (std::abs(psi_residual(config, seed.q_c)) > 1e-9) throw DomainError("seed state is not an equilibrium");

    const auto& law = config.viscosity;
    auto fill = [&](Vessel v, double phi) {
        if (v == sim.perturbed_vessel) phi = std::min(1.0, phi * (1.0 + sim.perturbation));
        return VesselProfile(sim.cells_per_vessel, sim.scheme, detail::make_sample(law, phi));
    };
    SimState s;
    s.a = fill(Vessel::A, seed.phi_a);
    s.b = fill(Vessel::B, seed.phi_b);
    s.c = fill(Vessel::C, seed.phi_c);
    s.t = 0.0;
    const bool c_left = seed.q_c >= 0.0;
    s.mean_a = s.a.mean(true, s.a.samples().front());
    s.mean_b = s.b.mean(true, s.b.samples().front());
    s.mean_c = s.c.mean(c_left, c_left ? s.c.samples().front() : s.c.samples().back());
    s.q_c = detail::loop_flow(config, s.mean_a.mu, s.mean_b.mu, s.mean_c.mu);
    s.nodes = detail::node_values(config, s.q_c, s.c);
    return s;
}

/// Largest step allowed by the Courant condition at the current flow.
inline double stable_dt(const SimState& s, const NetworkConfig& config, double cfl) {
    const double dt = cfl * s.a.dx() / detail::speeds(config, s.q_c).max();
    if (!(s.dt_prev > 0.0)) return dt;
    // Speeds are linear in q_c, so the bound at the extrapolated midpoint
    // for this trial step also covers any shorter step.
    const double q_mid = s.q_c + 0.5 * dt * (s.q_c - s.q_c_prev) / s.dt_prev;
    return cfl * s.a.dx() / std::max(detail::speeds(config, s.q_c).max(), detail::speeds(config, q_mid).max());
}

/// One step. The flow is extrapolated linearly from the last two steps to the
/// step midpoint for the advection speeds and to the step end for the node
/// balances; the new flow then follows from the updated mean viscosities.
inline void step(SimState& s, const NetworkConfig& config, double dt, double cfl = 1.0) {
    const double slope = s.dt_prev > 0.0 ? (s.q_c - s.q_c_prev) / s.dt_prev : 0.0;
    const double q_mid = s.q_c + 0.5 * dt * slope;
    const double q_end = s.q_c + dt * slope;
    const auto v = detail::speeds(config, q_mid);
    if (!(dt > 0.0) || dt * v.max() > cfl * s.a.dx() * (1.0 + 1e-12)) {
        throw CflError("time step " + std::to_string(dt) + " violates the Courant limit");
    }
    const auto& law = config.viscosity;
    const bool c_left = q_mid >= 0.0;
    const Sample in_a = detail::make_sample(law, s.nodes.phi_a_in);
    const Sample in_b = detail::make_sample(law, s.nodes.phi_b_in);
    const Sample in_c = detail::make_sample(law, c_left ? s.nodes.phi_c_0 : s.nodes.phi_c_1);
    s.a.advect(v.a * dt, in_a, law);
    s.b.advect(v.b * dt, in_b, law);
    s.c.advect(v.c * dt, in_c, law);

    s.nodes = detail::node_values(config, q_end, s.c);
    const bool c_left_end = q_end >= 0.0;
    const Sample na = detail::make_sample(law, s.nodes.phi_a_in);
    const Sample nb = detail::make_sample(law, s.nodes.phi_b_in);
    const Sample nc = detail::make_sample(law, c_left_end ? s.nodes.phi_c_0 : s.nodes.phi_c_1);
    // The parcel waiting outside the inflow end enters after travelling its
    // distance to the end; give it the boundary value extrapolated to then.
    const auto v_end = detail::speeds(config, q_end);
    auto entering = [&](const VesselProfile& p, bool left, double speed, const Sample& now, const Sample& before) {
        if (p.scheme() != AdvectionScheme::Parcel || !(std::abs(speed) > 0.0)) return now;
        const double dist = (left ? 1.0 - p.theta() : p.theta()) * p.dx();
        const double frac = std::clamp(dist / (std::abs(speed) * dt), 0.0, 1.5);
        return detail::make_sample(law, std::clamp(now.phi + frac * (now.phi - before.phi), 0.0, 1.0));
    };
    s.a.set_inflow(true, entering(s.a, true, v_end.a, na, in_a));
    s.b.set_inflow(true, entering(s.b, true, v_end.b, nb, in_b));
    s.c.set_inflow(c_left_end, c_left_end == c_left ? entering(s.c, c_left_end, v_end.c, nc, in_c) : nc);

    s.mean_a = s.a.mean(true, na);
    s.mean_b = s.b.mean(true, nb);
    s.mean_c = s.c.mean(c_left_end, nc);
    s.t += dt;
    s.q_c_prev = s.q_c;
    s.dt_prev = dt;
    s.q_c = detail::loop_flow(config, s.mean_a.mu, s.mean_b.mu, s.mean_c.mu);

    if (!(s.q_c < config.inlets.q1)) throw StarvedVesselError("vessel A starved (Q_C >= Q_1)", s.t);
    if (!(s.q_c > -config.inlets.q2)) throw StarvedVesselError("vessel B starved (Q_C <= -Q_2)", s.t);
}

struct TimeSeries {
    std::vector<double> t;
    std::vector<double> q_c;
    std::vector<double> phi_a, phi_b, phi_c;  // mean per vessel, if recorded

    std::size_t size() const { return t.size(); }
};

struct SimResult {
    TimeSeries series;
    SimState final_state;
};

inline SimResult run(const NetworkConfig& config, const SimConfig& sim) {
    SimResult out;
    SimState s = init(config, sim);
    auto record = [&](const SimState& st) {
        out.series.t.push_back(st.t);
        out.series.q_c.push_back(st.q_c);
        if (sim.record_phi) {
            out.series.phi_a.push_back(st.mean_a.phi);
            out.series.phi_b.push_back(st.mean_b.phi);
            out.series.phi_c.push_back(st.mean_c.phi);
        }
    };
    record(s);
    long n = 0;
    while (s.t < sim.t_end) {
        double dt = stable_dt(s, config, sim.cfl);
        bool last = false;
        if (s.t + dt >= sim.t_end) {
            dt = sim.t_end - s.t;
            last = true;
        }
        step(s, config, dt, sim.cfl);
        if (last) s.t = sim.t_end;
        if (++n % sim.record_every == 0 || last) record(s);
    }
    out.final_state = std::move(s);
    return out;
}

// ---------------------------------------------------------------------------
// Time-series analysis.

struct CycleStats {
    double period = 0.0;
    double omega = 0.0;
    double amplitude_min = 0.0;  // q_c extremes after the transient
    double amplitude_max = 0.0;
    double mean = 0.0;
    double growth_rate = std::numeric_limits<double>::quiet_NaN();
    double linear_omega = std::numeric_limits<double>::quiet_NaN();
    double harmonic_distortion = std::numeric_limits<double>::quiet_NaN();
    int periods_observed = 0;
    bool converged = false;
    bool fixed_point = false;
    bool decaying = false;
};

struct AnalysisOptions {
    double reference = std::numeric_limits<double>::quiet_NaN();  // equilibrium q_c; default first sample
    double fit_start = 0.0;        // ignore the envelope before this time
    double fit_fraction = 0.1;     // envelope samples below this share of saturation enter the fit
    double fixed_tol = 1e-9;       // post-transient range below this is a fixed point
    double period_agreement = 0.01;
    int harmonics = 10;
};

namespace detail {

/// Upward zero crossings of y with hysteresis `h`, linearly interpolated.
inline std::vector<double> up_crossings(const std::vector<double>& t, const std::vector<double>& y, double h,
                                        std::size_t begin, std::size_t end) {
    std::vector<double> out;
    bool armed = false;
    for (std::size_t i = begin; i + 1 < end; ++i) {
        if (y[i] < -h) armed = true;
        if (armed && y[i] < 0.0 && y[i + 1] >= 0.0) {
            out.push_back(t[i] + (t[i + 1] - t[i]) * (-y[i]) / (y[i + 1] - y[i]));
            armed = false;
        }
    }
    return out;
}

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

inline CycleStats analyze_cycle(const TimeSeries& series, double transient_skip, const AnalysisOptions& opt = {}) {
    CycleStats st;
    const auto& t = series.t;
    const auto& q = series.q_c;
    if (t.size() < 4) return st;
    const std::size_t begin =
        static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), transient_skip) - t.begin());
    const std::size_t end = t.size();
    if (end - begin < 4) return st;

    const auto [mn, mx] = std::minmax_element(q.begin() + begin, q.end());
    st.amplitude_min = *mn;
    st.amplitude_max = *mx;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += q[i];
    st.mean = sum / static_cast<double>(end - begin);

    const double range = st.amplitude_max - st.amplitude_min;
    if (range < opt.fixed_tol) {
        st.fixed_point = true;
        return st;
    }

    // Amplitude trend across the analysis window.
    const std::size_t quarter = (end - begin) / 4;
    auto span = [&](std::size_t a, std::size_t b) {
        const auto [lo, hi] = std::minmax_element(q.begin() + a, q.begin() + b);
        return *hi - *lo;
    };
    st.decaying = quarter > 1 && span(end - quarter, end) < 0.5 * span(begin, begin + quarter);

    std::vector<double> y(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) y[i] = q[i] - st.mean;
    const auto ups = detail::up_crossings(t, y, 0.1 * 0.5 * range, begin, end);
    st.periods_observed = ups.size() > 1 ? static_cast<int>(ups.size() - 1) : 0;
    if (ups.size() >= 2) {
        st.period = (ups.back() - ups.front()) / static_cast<double>(ups.size() - 1);
        st.omega = 2.0 * M_PI / st.period;
    }
    if (ups.size() >= 4) {
        const std::size_t k = ups.size();
        const double p1 = ups[k - 1] - ups[k - 2], p2 = ups[k - 2] - ups[k - 3], p3 = ups[k - 3] - ups[k - 4];
        const double lo = std::min({p1, p2, p3}), hi = std::max({p1, p2, p3});
        st.converged = !st.decaying && (hi - lo) / st.period < opt.period_agreement;
    }

    // Harmonic content over the whole periods between the first and last crossing.
    if (ups.size() >= 2) {
        std::vector<double> re(opt.harmonics + 1, 0.0), im(opt.harmonics + 1, 0.0);
        const double t0 = ups.front(), t1 = ups.back();
        for (std::size_t i = begin; i + 1 < end; ++i) {
            if (t[i] < t0 || t[i + 1] > t1) continue;
            const double dt = t[i + 1] - t[i];
            const double tm = 0.5 * (t[i] + t[i + 1]);
            const double ym = 0.5 * (y[i] + y[i + 1]);
            for (int n = 1; n <= opt.harmonics; ++n) {
                re[n] += ym * std::cos(n * st.omega * tm) * dt;
                im[n] += ym * std::sin(n * st.omega * tm) * dt;
            }
        }
        double higher = 0.0;
        for (int n = 2; n <= opt.harmonics; ++n) higher += re[n] * re[n] + im[n] * im[n];
        const double fund = std::hypot(re[1], im[1]);
        if (fund > 0.0) st.harmonic_distortion = std::sqrt(higher) / fund;
    }

    // Linear growth: envelope of |q_c - reference| while still small.
    const double ref = std::isnan(opt.reference) ? q.front() : opt.reference;
    const double saturation = std::max(std::abs(st.amplitude_max - ref), std::abs(st.amplitude_min - ref));
    std::vector<double> dev(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dev[i] = q[i] - ref;
    std::vector<double> pt, pv;
    for (std::size_t i = 1; i + 1 < q.size(); ++i) {
        const double a = std::abs(dev[i]);
        if (t[i] < opt.fit_start || a >= opt.fit_fraction * saturation) continue;
        if (a > std::abs(dev[i - 1]) && a >= std::abs(dev[i + 1]) && a > 0.0) {
            pt.push_back(t[i]);
            pv.push_back(std::log(a));
        }
    }
    if (pt.size() >= 4) {
        st.growth_rate = detail::ls_slope(pt, pv);
        const double fit_end = pt.back();
        const double h = 0.1 * std::exp(pv.front());
        std::size_t a = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), pt.front()) - t.begin());
        std::size_t b = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), fit_end) - t.begin());
        const auto lin_ups = detail::up_crossings(t, dev, h, a, std::min(b + 1, t.size()));
        if (lin_ups.size() >= 2) {
            st.linear_omega = 2.0 * M_PI * static_cast<double>(lin_ups.size() - 1) / (lin_ups.back() - lin_ups.front());
        }
    }
    return st;
}

enum class ProbeOutcome { SettledPositive, SettledNegative, CyclePositive, CycleNegative, CycleSpanning, Unclassified };

inline const char* probe_outcome_name(ProbeOutcome o) {
    switch (o) {
        case ProbeOutcome::SettledPositive: return "settled_positive";
        case ProbeOutcome::SettledNegative: return "settled_negative";
        case ProbeOutcome::CyclePositive: return "cycle_positive";
        case ProbeOutcome::CycleNegative: return "cycle_negative";
        case ProbeOutcome::CycleSpanning: return "cycle_spanning";
        case ProbeOutcome::Unclassified: return "unclassified";
    }
    return "?";
}

struct ProbeResult {
    ProbeOutcome outcome = ProbeOutcome::Unclassified;
    CycleStats stats;
    double final_q_c = 0.0;
};

/// Runs from the equilibrium on the chosen branch and names the attractor.
inline ProbeResult bistability_probe(const NetworkConfig& config, SimConfig sim, Branch side) {
    const auto seed = select_branch(solve_equilibria(config), side);
    if (!seed) throw SolverError("no equilibrium on the requested branch");
    sim.seed_state = *seed;
    const auto result = run(config, sim);
    ProbeResult out;
    AnalysisOptions ao;
    ao.reference = seed->q_c;
    out.stats = analyze_cycle(result.series, sim.skip(), ao);
    out.final_q_c = result.final_state.q_c;
    const auto& st = out.stats;
    if (st.fixed_point || st.decaying) {
        out.outcome = out.final_q_c >= 0.0 ? ProbeOutcome::SettledPositive : ProbeOutcome::SettledNegative;
    } else if (st.converged) {
        if (st.amplitude_min > 0.0) {
            out.outcome = ProbeOutcome::CyclePositive;
        } else if (st.amplitude_max < 0.0) {
            out.outcome = ProbeOutcome::CycleNegative;
        } else {
            out.outcome = ProbeOutcome::CycleSpanning;
        }
    }
    return out;
}

}  // namespace threenode
