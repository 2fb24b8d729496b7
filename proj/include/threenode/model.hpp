#pragma once

// Dimensionless description of the three-node network (two controlled inlets,
// one loop vessel C, one outlet) and the two constitutive laws that close it:
// the relative viscosity of the mixture and the phase separation function at a
// diverging node.
//
// Geometry is stored as raw nominal resistances and volumes of vessels A, B, C.
// The common factors 128 mu_alpha / pi (Poiseuille) and pi / 4 (volume) are
// dropped since only ratios enter the dimensionless problem.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace threenode {

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs this far outside [0,1] are clamped instead of rejected.
inline constexpr double kFractionTolerance = 1e-12;

inline double checked_fraction(double value, const char* what) {
    if (!(value >= -kFractionTolerance && value <= 1.0 + kFractionTolerance)) {
        throw DomainError(std::string(what) + " outside [0,1]: " + std::to_string(value));
    }
    return std::clamp(value, 0.0, 1.0);
}

enum class Vessel : int { A = 0, B = 1, C = 2 };

inline constexpr std::size_t index(Vessel v) { return static_cast<std::size_t>(v); }

inline const char* vessel_name(Vessel v) {
    switch (v) {
        case Vessel::A: return "A";
        case Vessel::B: return "B";
        case Vessel::C: return "C";
    }
    return "?";
}

struct VesselGeometry {
    double diameter = 1.0;
    double length = 1.0;

    /// l / d^4, i.e. the Poiseuille resistance without 128 mu_alpha / pi.
    double nominal_resistance() const { return length / std::pow(diameter, 4); }
    /// d^2 l, i.e. the volume without pi / 4.
    double volume() const { return diameter * diameter * length; }
};

struct NetworkGeometry {
    std::array<double, 3> resistance{1.0, 1.0, 1.0};
    std::array<double, 3> volume{1.0, 1.0, 1.0};

    static NetworkGeometry from_vessels(const VesselGeometry& a, const VesselGeometry& b,
                                        const VesselGeometry& c) {
        for (const auto* v : {&a, &b, &c}) {
            if (!(v->diameter > 0.0) || !(v->length > 0.0)) {
                throw DomainError("vessel diameter and length must be positive");
            }
        }
        return {{a.nominal_resistance(), b.nominal_resistance(), c.nominal_resistance()},
                {a.volume(), b.volume(), c.volume()}};
    }

    /// Canonical form from the four dimensionless ratios, with r_C = V_C = 1.
    static NetworkGeometry from_ratios(double rA_rC, double rA_rB, double VA_VC, double VA_VB) {
        if (!(rA_rC > 0.0) || !(rA_rB > 0.0) || !(VA_VC > 0.0) || !(VA_VB > 0.0)) {
            throw DomainError("geometry ratios must be positive");
        }
        return {{rA_rC, rA_rC / rA_rB, 1.0}, {VA_VC, VA_VC / VA_VB, 1.0}};
    }

    double r(Vessel v) const { return resistance[index(v)]; }
    double vol(Vessel v) const { return volume[index(v)]; }
    double total_volume() const { return volume[0] + volume[1] + volume[2]; }

    double rA_rC() const { return resistance[0] / resistance[2]; }
    double rA_rB() const { return resistance[0] / resistance[1]; }
    double VA_VC() const { return volume[0] / volume[2]; }
    double VA_VB() const { return volume[0] / volume[1]; }
};

/// Inlet flow fractions and volume fractions. q2 is kept explicitly so that the
/// A/B exchange is a bit-exact involution.
struct InletConditions {
    double q1 = 0.5;
    double q2 = 0.5;
    double phi1 = 0.0;
    double phi2 = 0.0;

    static InletConditions make(double q1, double phi1, double phi2) {
        return {q1, 1.0 - q1, phi1, phi2};
    }
};

struct Arrhenius {
    double contrast = 1.0;  // mu_beta / mu_alpha
};

using ViscosityLaw = std::variant<Arrhenius>;

struct Microvascular {
    double p = 2.0;
};

struct Stratified {
    double gamma = 1.0;
};

struct NoSeparation {};

using SeparationLaw = std::variant<Microvascular, Stratified, NoSeparation>;

struct NetworkConfig {
    NetworkGeometry geometry;
    InletConditions inlets;
    ViscosityLaw viscosity = Arrhenius{};
    SeparationLaw separation = NoSeparation{};

    double q1() const { return inlets.q1; }
    double q2() const { return inlets.q2; }
};

// ---------------------------------------------------------------------------
// Viscosity

inline double contrast(const ViscosityLaw& law) {
    return std::visit([](const auto& l) { return l.contrast; }, law);
}

inline void set_contrast(ViscosityLaw& law, double value) {
    std::visit([value](auto& l) { l.contrast = value; }, law);
}

/// (mu_beta / mu_alpha)^phi
inline double rel_viscosity(const ViscosityLaw& law, double phi) {
    phi = checked_fraction(phi, "volume fraction");
    return std::visit([phi](const Arrhenius& l) { return std::pow(l.contrast, phi); }, law);
}

/// Same as rel_viscosity but without the domain check, for inner loops that
/// already hold clamped fractions.
inline double rel_viscosity_unchecked(const ViscosityLaw& law, double phi) {
    return std::visit([phi](const Arrhenius& l) { return std::exp(phi * std::log(l.contrast)); },
                      law);
}

inline double dln_mu_dphi(const ViscosityLaw& law, double phi) {
    checked_fraction(phi, "volume fraction");
    return std::visit([](const Arrhenius& l) { return std::log(l.contrast); }, law);
}

// ---------------------------------------------------------------------------
// Phase separation. x is the flow into the daughter branch normalized by the
// flow entering the node; f(x) is the daughter's volume fraction normalized by
// the parent's.

inline double separation_f(const SeparationLaw& law, double x) {
    x = checked_fraction(x, "normalized flow");
    return std::visit(
        [x](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Microvascular>) {
                const double den = std::pow(x, l.p) + std::pow(1.0 - x, l.p);
                return std::pow(x, l.p - 1.0) / den;
            } else if constexpr (std::is_same_v<T, Stratified>) {
                return (1.0 - l.gamma) + l.gamma * x * (2.0 - x);
            } else {
                return 1.0;
            }
        },
        law);
}

inline double separation_fprime(const SeparationLaw& law, double x) {
    x = checked_fraction(x, "normalized flow");
    return std::visit(
        [x](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Microvascular>) {
                const double p = l.p;
                if (x == 0.0 && p < 2.0) {
                    throw SingularityError("f'(0) is unbounded for microvascular p < 2");
                }
                const double den = std::pow(x, p) + std::pow(1.0 - x, p);
                const double num = std::pow(x, p - 1.0);
                const double dnum = (p - 1.0) * std::pow(x, p - 2.0);
                const double dden = p * (std::pow(x, p - 1.0) - std::pow(1.0 - x, p - 1.0));
                return (dnum * den - num * dden) / (den * den);
            } else if constexpr (std::is_same_v<T, Stratified>) {
                return 2.0 * l.gamma * (1.0 - x);
            } else {
                return 0.0;
            }
        },
        law);
}

/// x f'(x) / f(x), in a form that stays finite as x -> 0.
inline double skimming_log_slope(const SeparationLaw& law, double x) {
    x = checked_fraction(x, "normalized flow");
    return std::visit(
        [x](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Microvascular>) {
                const double p = l.p;
                const double den = std::pow(x, p) + std::pow(1.0 - x, p);
                return (p - 1.0) - p * (std::pow(x, p) - x * std::pow(1.0 - x, p - 1.0)) / den;
            } else if constexpr (std::is_same_v<T, Stratified>) {
                if (x == 0.0) return l.gamma == 1.0 ? 1.0 : 0.0;
                return 2.0 * l.gamma * x * (1.0 - x) / ((1.0 - l.gamma) + l.gamma * x * (2.0 - x));
            } else {
                return 0.0;
            }
        },
        law);
}

/// Phi_A / Phi_1 from constituent conservation at the splitting node.
inline double phi_a_fraction(const SeparationLaw& law, double x) {
    x = checked_fraction(x, "normalized flow");
    if (x >= 1.0) throw SingularityError("vessel A is starved (Q_C = Q_1)");
    return (1.0 - separation_f(law, x) * x) / (1.0 - x);
}

inline double separation_at_zero(const SeparationLaw& law) { return separation_f(law, 0.0); }

// ---------------------------------------------------------------------------
// Exchange symmetry: Q_C <-> -Q_C, Q_1 <-> Q_2, Phi_1 <-> Phi_2, A <-> B.

inline NetworkConfig symmetry_swap(const NetworkConfig& config) {
    NetworkConfig out = config;
    std::swap(out.geometry.resistance[0], out.geometry.resistance[1]);
    std::swap(out.geometry.volume[0], out.geometry.volume[1]);
    std::swap(out.inlets.q1, out.inlets.q2);
    std::swap(out.inlets.phi1, out.inlets.phi2);
    return out;
}

/// A config viewed so that the flow in C runs from inlet 1 to inlet 2.
struct OrientedConfig {
    NetworkConfig config;
    bool swapped = false;
    double q_c = 0.0;  // non-negative in the oriented frame

    double sign() const { return swapped ? -1.0 : 1.0; }
};

inline OrientedConfig orient(const NetworkConfig& config, double q_c) {
    if (q_c < 0.0) return {symmetry_swap(config), true, -q_c};
    return {config, false, q_c};
}

inline NetworkConfig with_q1(NetworkConfig config, double q1) {
    config.inlets.q1 = q1;
    config.inlets.q2 = 1.0 - q1;
    return config;
}

inline NetworkConfig with_contrast(NetworkConfig config, double value) {
    set_contrast(config.viscosity, value);
    return config;
}

/// Q_1 at which Q_C* = 0 is an equilibrium: q1 r_A mu_1 = q2 r_B mu_2.
inline double trivial_point_q1(const NetworkConfig& config) {
    const double mu1 = rel_viscosity(config.viscosity, config.inlets.phi1);
    const double mu2 = rel_viscosity(config.viscosity, config.inlets.phi2);
    const double ra = config.geometry.r(Vessel::A);
    const double rb = config.geometry.r(Vessel::B);
    return rb * mu2 / (rb * mu2 + ra * mu1);
}

/// Every violated invariant, so a caller can report them all at once.
inline std::vector<std::string> validate(const NetworkConfig& config) {
    std::vector<std::string> errors;
    const auto& g = config.geometry;
    for (int i = 0; i < 3; ++i) {
        const char* name = vessel_name(static_cast<Vessel>(i));
        if (!(g.resistance[i] > 0.0) || !std::isfinite(g.resistance[i])) {
            errors.push_back(std::string("geometry: resistance of vessel ") + name +
                             " must be finite and positive");
        }
        if (!(g.volume[i] > 0.0) || !std::isfinite(g.volume[i])) {
            errors.push_back(std::string("geometry: volume of vessel ") + name +
                             " must be finite and positive");
        }
    }
    const auto& in = config.inlets;
    if (!(in.q1 >= 0.0 && in.q1 <= 1.0)) errors.push_back("inlets.q1 must lie in [0,1]");
    if (!(in.phi1 >= 0.0 && in.phi1 <= 1.0)) errors.push_back("inlets.phi1 must lie in [0,1]");
    if (!(in.phi2 >= 0.0 && in.phi2 <= 1.0)) errors.push_back("inlets.phi2 must lie in [0,1]");
    const double c = contrast(config.viscosity);
    if (!(c > 0.0) || !std::isfinite(c)) errors.push_back("viscosity.contrast must be positive");
    std::visit(
        [&errors](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Microvascular>) {
                if (!(l.p > 1.0)) errors.push_back("separation.p must exceed 1");
            } else if constexpr (std::is_same_v<T, Stratified>) {
                if (!(l.gamma > 0.0 && l.gamma <= 1.0)) {
                    errors.push_back("separation.gamma must lie in (0,1]");
                }
            }
        },
        config.separation);
    return errors;
}

}  // namespace threenode
