#pragma once

#include <string>

#include "threenode/threenode.hpp"

namespace testing {

inline threenode::NetworkConfig example(int which, double contrast, double q1) {
    auto c = threenode::load_config(std::string(THREENODE_CONFIG_DIR) + "/example" + std::to_string(which) + ".json");
    return threenode::with_q1(threenode::with_contrast(c, contrast), q1);
}

inline threenode::NetworkConfig example1(double contrast = 50.0, double q1 = 0.5) { return example(1, contrast, q1); }
inline threenode::NetworkConfig example2(double contrast = 50.0, double q1 = 0.5) { return example(2, contrast, q1); }

/// Example-1 with the separation law removed.
inline threenode::NetworkConfig no_separation(double contrast = 50.0, double q1 = 0.5) {
    auto c = example1(contrast, q1);
    c.separation = threenode::NoSeparation{};
    return c;
}

/// A deliberately asymmetric network for symmetry properties.
inline threenode::NetworkConfig lopsided(double contrast = 20.0, double q1 = 0.37) {
    threenode::NetworkConfig c;
    c.geometry = threenode::NetworkGeometry::from_vessels({1.0, 1.3}, {0.8, 0.9}, {1.7, 0.6});
    c.inlets = threenode::InletConditions::make(q1, 0.7, 0.55);
    c.viscosity = threenode::Arrhenius{contrast};
    c.separation = threenode::Microvascular{2.0};
    return c;
}

}  // namespace testing
