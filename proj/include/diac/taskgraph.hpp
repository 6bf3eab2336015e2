#pragma once

// JSON task-graph dialect. Nodes default to LUT kind; explicit power/delay
// override the gate library. Unknown per-node fields (e.g. `stage`, `nvm`
// written by codegen) are ignored on input.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "diac/circuit.hpp"
#include "diac/error.hpp"

namespace diac {

using json = nlohmann::json;

namespace detail {

inline std::vector<std::string> string_list(const json& j, const char* field) {
    if (!j.contains(field)) throw ParseError(std::string("missing field '") + field + "'", 0);
    const auto& v = j.at(field);
    if (!v.is_array()) throw ParseError(std::string("field '") + field + "' must be an array", 0);
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ParseError(std::string("field '") + field + "' must hold strings", 0);
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline CircuitGraph taskgraph_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("task graph must be a JSON object", 0);
    CircuitGraph g;
    if (doc.contains("name") && doc["name"].is_string()) g.name = doc["name"].get<std::string>();
    g.primary_inputs = detail::string_list(doc, "primary_inputs");
    g.primary_outputs = detail::string_list(doc, "primary_outputs");
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) throw ParseError("missing array field 'nodes'", 0);
    for (const auto& jn : doc["nodes"]) {
        if (!jn.is_object() || !jn.contains("name") || !jn["name"].is_string())
            throw ParseError("node without a string 'name'", 0);
        GateNode n;
        n.name = jn["name"].get<std::string>();
        n.kind = GateKind::Lut;
        if (jn.contains("kind")) {
            if (!jn["kind"].is_string()) throw ParseError("node '" + n.name + "': 'kind' must be a string", 0);
            auto k = gate_kind_from_token(jn["kind"].get<std::string>());
            if (!k) throw ParseError("node '" + n.name + "': unknown kind", 0);
            n.kind = *k;
        }
        n.inputs = detail::string_list(jn, "inputs");
        for (const char* field : {"power_mJ", "delay_ms"}) {
            if (!jn.contains(field)) continue;
            if (!jn[field].is_number() || jn[field].get<double>() < 0)
                throw ParseError("node '" + n.name + "': '" + field + "' must be a non-negative number", 0);
        }
        if (jn.contains("power_mJ")) n.power_mJ = jn["power_mJ"].get<double>();
        if (jn.contains("delay_ms")) n.delay_ms = jn["delay_ms"].get<double>();
        if (jn.contains("operand")) {
            if (!jn["operand"].is_string()) throw ParseError("node '" + n.name + "': 'operand' must be a string", 0);
            n.operand = jn["operand"].get<std::string>();
        }
        g.nodes.push_back(std::move(n));
    }
    for (const auto& po : g.primary_outputs)
        if (!g.find(po)) throw GraphError("primary output '" + po + "' is undriven by any node");
    check_graph(g);
    return levelize(std::move(g));
}

[[nodiscard]] inline CircuitGraph parse_taskgraph_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 0);
    }
    return taskgraph_from_json(doc);
}

[[nodiscard]] inline json to_json(const CircuitGraph& g, bool with_levels = false) {
    json nodes = json::array();
    for (const auto& n : g.nodes) {
        json jn = {{"name", n.name}, {"kind", std::string(to_string(n.kind))}, {"inputs", n.inputs}};
        if (n.power_mJ) jn["power_mJ"] = *n.power_mJ;
        if (n.delay_ms) jn["delay_ms"] = *n.delay_ms;
        if (!n.operand.empty()) jn["operand"] = n.operand;
        if (with_levels) jn["level"] = n.level;
        nodes.push_back(std::move(jn));
    }
    json out = {{"nodes", std::move(nodes)},
                {"primary_inputs", g.primary_inputs},
                {"primary_outputs", g.primary_outputs}};
    if (!g.name.empty()) out["name"] = g.name;
    return out;
}

}  // namespace diac
