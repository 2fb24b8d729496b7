#pragma once

// JSON config documents:
//
//   {
//     "geometry":   {"dA": 1, "dB": 1, "dC": 2.5, "lA": 1, "lB": 1, "lC": 0.75},
//     "inlets":     {"q1": 0.5, "phi1": 0.82, "phi2": 0.82},
//     "viscosity":  {"type": "arrhenius", "contrast": 50},
//     "separation": {"type": "microvascular", "p": 2}
//   }
//
// geometry may instead carry the four ratios {"rA_rC", "rA_rB", "VA_VC", "VA_VB"}.
// separation.type is one of "microvascular" (p), "stratified" (gamma), "none".

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "threenode/model.hpp"

namespace threenode {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid config";
        for (const auto& item : items) out += "\n  " + item;
        return out;
    }

    std::vector<std::string> problems_;
};

namespace detail {

class FieldReader {
public:
    explicit FieldReader(std::vector<std::string>& problems) : problems_(problems) {}

    const nlohmann::json* section(const nlohmann::json& doc, const char* key) {
        if (!doc.is_object() || !doc.contains(key)) {
            problems_.push_back(std::string("missing section '") + key + "'");
            return nullptr;
        }
        const auto& node = doc.at(key);
        if (!node.is_object()) {
            problems_.push_back(std::string("section '") + key + "' must be an object");
            return nullptr;
        }
        return &node;
    }

    double number(const nlohmann::json& node, const std::string& path, const char* key) {
        if (!node.contains(key)) {
            problems_.push_back("missing field '" + path + "." + key + "'");
            return 0.0;
        }
        const auto& v = node.at(key);
        if (!v.is_number()) {
            problems_.push_back("field '" + path + "." + key + "' must be a number");
            return 0.0;
        }
        return v.get<double>();
    }

    std::string text(const nlohmann::json& node, const std::string& path, const char* key) {
        if (!node.contains(key) || !node.at(key).is_string()) {
            problems_.push_back("field '" + path + "." + key + "' must be a string");
            return {};
        }
        return node.at(key).get<std::string>();
    }

private:
    std::vector<std::string>& problems_;
};

}  // namespace detail

/// Parses and validates; throws ConfigError listing every problem found.
inline NetworkConfig config_from_json(const nlohmann::json& doc) {
    std::vector<std::string> problems;
    detail::FieldReader read(problems);
    NetworkConfig config;

    if (const auto* g = read.section(doc, "geometry")) {
        if (g->contains("rA_rC")) {
            const double rac = read.number(*g, "geometry", "rA_rC");
            const double rab = read.number(*g, "geometry", "rA_rB");
            const double vac = read.number(*g, "geometry", "VA_VC");
            const double vab = read.number(*g, "geometry", "VA_VB");
            if (rac > 0 && rab > 0 && vac > 0 && vab > 0) {
                config.geometry = NetworkGeometry::from_ratios(rac, rab, vac, vab);
            } else {
                problems.push_back("geometry ratios must be positive");
            }
        } else {
            VesselGeometry a{read.number(*g, "geometry", "dA"), read.number(*g, "geometry", "lA")};
            VesselGeometry b{read.number(*g, "geometry", "dB"), read.number(*g, "geometry", "lB")};
            VesselGeometry c{read.number(*g, "geometry", "dC"), read.number(*g, "geometry", "lC")};
            bool ok = true;
            for (const auto& [v, name] : {std::pair{a, "A"}, std::pair{b, "B"}, std::pair{c, "C"}}) {
                if (!(v.diameter > 0.0) || !(v.length > 0.0)) {
                    problems.push_back(std::string("geometry: vessel ") + name +
                                       " needs positive diameter and length");
                    ok = false;
                }
            }
            if (ok) config.geometry = NetworkGeometry::from_vessels(a, b, c);
        }
    }

    if (const auto* in = read.section(doc, "inlets")) {
        config.inlets = InletConditions::make(read.number(*in, "inlets", "q1"),
                                              read.number(*in, "inlets", "phi1"),
                                              read.number(*in, "inlets", "phi2"));
    }

    if (const auto* v = read.section(doc, "viscosity")) {
        const std::string type = v->contains("type") ? read.text(*v, "viscosity", "type")
                                                     : std::string("arrhenius");
        if (type != "arrhenius") problems.push_back("viscosity.type '" + type + "' is not supported");
        config.viscosity = Arrhenius{read.number(*v, "viscosity", "contrast")};
    }

    if (const auto* s = read.section(doc, "separation")) {
        const std::string type = read.text(*s, "separation", "type");
        if (type == "microvascular") {
            config.separation = Microvascular{read.number(*s, "separation", "p")};
        } else if (type == "stratified") {
            config.separation = Stratified{read.number(*s, "separation", "gamma")};
        } else if (type == "none") {
            config.separation = NoSeparation{};
        } else if (!type.empty()) {
            problems.push_back("separation.type '" + type + "' is not one of microvascular, stratified, none");
        }
    }

    if (problems.empty()) {
        auto invariants = validate(config);
        problems.insert(problems.end(), invariants.begin(), invariants.end());
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return config;
}

inline NetworkConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // nlohmann reports a byte offset; translate it to line:column.
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i < text.size() && i + 1 < e.byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError({"JSON syntax error at line " + std::to_string(line) + ", column " +
                           std::to_string(column) + ": " + e.what()});
    }
    return config_from_json(doc);
}

inline NetworkConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

inline nlohmann::json config_to_json(const NetworkConfig& config) {
    const auto& g = config.geometry;
    nlohmann::json doc;
    doc["geometry"] = {{"rA_rC", g.rA_rC()}, {"rA_rB", g.rA_rB()},
                       {"VA_VC", g.VA_VC()}, {"VA_VB", g.VA_VB()}};
    doc["inlets"] = {{"q1", config.inlets.q1},
                     {"phi1", config.inlets.phi1},
                     {"phi2", config.inlets.phi2}};
    doc["viscosity"] = {{"type", "arrhenius"}, {"contrast", contrast(config.viscosity)}};
    std::visit(
        [&doc](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Microvascular>) {
                doc["separation"] = {{"type", "microvascular"}, {"p", l.p}};
            } else if constexpr (std::is_same_v<T, Stratified>) {
                doc["separation"] = {{"type", "stratified"}, {"gamma", l.gamma}};
            } else {
                doc["separation"] = {{"type", "none"}};
            }
        },
        config.separation);
    return doc;
}

}  // namespace threenode
