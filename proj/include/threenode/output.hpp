#pragma once

// Serialization of results: CSV at 17 significant digits, JSON records, and
// write-then-rename file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "threenode/continuation.hpp"
#include "threenode/equilibrium.hpp"
#include "threenode/simulator.hpp"
#include "threenode/stability.hpp"

namespace threenode {

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvBuilder {
public:
    explicit CsvBuilder(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            if (!first) out_ << ',';
            out_ << h;
            first = false;
        }
        out_ << '\n';
    }

    CsvBuilder& row(std::initializer_list<double> values) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ',';
            out_ << format_number(v);
            first = false;
        }
        out_ << '\n';
        return *this;
    }

    /// Numbers followed by free-text fields (written verbatim, must not contain commas).
    CsvBuilder& row(std::initializer_list<double> values, std::initializer_list<std::string> text) {
        bool first = true;
        for (double v : values) {
            if (!first) out_ << ',';
            out_ << format_number(v);
            first = false;
        }
        for (const auto& s : text) {
            if (!first) out_ << ',';
            out_ << s;
            first = false;
        }
        out_ << '\n';
        return *this;
    }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

/// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Tables

inline std::string curve_csv(const EquilibriumCurve& curve, const CurveStability* stability = nullptr) {
    CsvBuilder csv({"s", "q1", "q_c", "phi_a", "phi_b", "phi_c", "res_a", "res_b", "res_c", "stable_flag",
                    "fold_flag", "stability"});
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        const auto& s = p.state;
        const bool fold = std::find(curve.fold_indices.begin(), curve.fold_indices.end(), i) !=
                          curve.fold_indices.end();
        const double stable = stability ? (stability->labels[i] == Stability::Stable ? 1.0 : 0.0) : -1.0;
        csv.row({p.s, s.q1, s.q_c, s.phi_a, s.phi_b, s.phi_c, s.res_a, s.res_b, s.res_c, stable, fold ? 1.0 : 0.0},
                {stability ? stability_name(stability->labels[i]) : "unknown"});
    }
    return csv.str();
}

inline std::string states_csv(const std::vector<EquilibriumState>& states, const std::vector<Stability>& labels) {
    CsvBuilder csv({"q1", "q_c", "q_a", "q_b", "phi_a", "phi_b", "phi_c", "mu_a", "mu_b", "mu_c", "res_a", "res_b",
                    "res_c", "tau_a", "tau_b", "tau_c", "residual", "stability"});
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        csv.row({s.q1, s.q_c, s.q_a, s.q_b, s.phi_a, s.phi_b, s.phi_c, s.mu_a, s.mu_b, s.mu_c, s.res_a, s.res_b, s.res_c,
                 s.tau_a, s.tau_b, s.tau_c, s.residual},
                {i < labels.size() ? stability_name(labels[i]) : "unknown"});
    }
    return csv.str();
}

inline std::string contour_csv(const ContourField& f, const char* x_name) {
    CsvBuilder csv({x_name, "omega", "R", "I"});
    for (std::size_t i = 0; i < f.x.size(); ++i) {
        for (std::size_t j = 0; j < f.y.size(); ++j) csv.row({f.x[i], f.y[j], f.R(i, j), f.I(i, j)});
    }
    return csv.str();
}

inline std::string series_csv(const TimeSeries& s) {
    const bool phi = s.phi_a.size() == s.t.size();
    std::string header = phi ? "t,q_c,phi_a,phi_b,phi_c\n" : "t,q_c\n";
    std::string out = header;
    out.reserve(s.t.size() * (phi ? 120 : 48));
    for (std::size_t i = 0; i < s.t.size(); ++i) {
        out += format_number(s.t[i]);
        out += ',';
        out += format_number(s.q_c[i]);
        if (phi) {
            out += ',' + format_number(s.phi_a[i]) + ',' + format_number(s.phi_b[i]) + ',' + format_number(s.phi_c[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string profile_csv(const SimState& s, int points) {
    CsvBuilder csv({"x", "phi_a", "phi_b", "phi_c"});
    for (int i = 0; i < points; ++i) {
        const double x = static_cast<double>(i) / (points - 1);
        csv.row({x, s.a.phi_at(x), s.b.phi_at(x), s.c.phi_at(x)});
    }
    return csv.str();
}

// ---------------------------------------------------------------------------
// JSON records

inline nlohmann::json to_json(const EquilibriumState& s) {
    return {{"q1", s.q1},       {"q_c", s.q_c},     {"q_a", s.q_a},     {"q_b", s.q_b},     {"phi_a", s.phi_a},
            {"phi_b", s.phi_b}, {"phi_c", s.phi_c}, {"res_a", s.res_a}, {"res_b", s.res_b}, {"res_c", s.res_c},
            {"tau_a", s.tau_a}, {"tau_b", s.tau_b},
            {"tau_c", std::isfinite(s.tau_c) ? nlohmann::json(s.tau_c) : nlohmann::json(nullptr)},
            {"residual", s.residual}};
}

inline nlohmann::json to_json(const Eigenvalue& e, const EquilibriumState& at, double contrast) {
    return {{"q1", at.q1}, {"q_c", at.q_c}, {"contrast", contrast}, {"sigma", e.sigma}, {"omega", e.omega},
            {"residual", e.residual}};
}

inline nlohmann::json to_json(const SaddleNodePoint& p) {
    return {{"q1", p.q1}, {"q_c", p.q_c}, {"contrast", p.contrast}, {"side", p.side}};
}

inline nlohmann::json to_json(const HopfPoint& h) {
    return {{"q1", h.q1}, {"q_c", h.q_c}, {"contrast", h.contrast}, {"sigma", 0.0}, {"omega", h.omega}};
}

inline nlohmann::json to_json(const BifurcationCurve& c) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) {
        nlohmann::json r = {{"q1", p.q1}, {"contrast", p.contrast}, {"q_c", p.q_c}};
        if (c.kind == CurveKind::Hopf) r["omega"] = p.omega;
        pts.push_back(r);
    }
    return {{"kind", curve_kind_name(c.kind)},
            {"end_low", termination_name(c.end_low)},
            {"end_high", termination_name(c.end_high)},
            {"points", pts}};
}

inline nlohmann::json to_json(const CycleStats& s) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j = {{"converged", s.converged},
                        {"fixed_point", s.fixed_point},
                        {"decaying", s.decaying},
                        {"amplitude_min", s.amplitude_min},
                        {"amplitude_max", s.amplitude_max},
                        {"mean", s.mean},
                        {"periods_observed", s.periods_observed},
                        {"growth_rate", num(s.growth_rate)},
                        {"linear_omega", num(s.linear_omega)},
                        {"harmonic_distortion", num(s.harmonic_distortion)}};
    if (s.fixed_point || s.period <= 0.0) {
        j["period"] = nullptr;
        j["omega"] = nullptr;
    } else {
        j["period"] = s.period;
        j["omega"] = s.omega;
    }
    return j;
}

}  // namespace threenode
