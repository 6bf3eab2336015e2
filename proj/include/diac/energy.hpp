#pragma once

// Gate-library lookup and operand-level energy estimates.
//
// Units: library values are uW and ns; every public energy is mJ; delays are
// ns. One uW sustained for one ns is 1e-12 mJ.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "diac/circuit.hpp"
#include "diac/error.hpp"

namespace diac {

inline constexpr double kMilliJoulePerMicroWattNanosecond = 1e-12;
inline constexpr double kNanosecondsPerMillisecond = 1e6;

/// uW * ns -> mJ
[[nodiscard]] constexpr double uw_ns_to_mj(double microwatt_ns) noexcept {
    return microwatt_ns * kMilliJoulePerMicroWattNanosecond;
}

struct GateEntry {
    double dynamic_uW = 0;
    double static_uW = 0;
    double delay_ns = 0;
};

class GateLibrary {
public:
    std::string name;
    double voltage_V = 1.0;

    /// `arity == 0` registers a catch-all entry for the kind.
    void set(GateKind kind, std::size_t arity, GateEntry entry) {
        if (!(entry.dynamic_uW > 0 && entry.static_uW > 0 && entry.delay_ns > 0))
            throw Error("gate library values must be positive (" + std::string(to_string(kind)) + ")");
        table_[{kind, arity}] = entry;
    }

    [[nodiscard]] std::optional<GateEntry> lookup(GateKind kind, std::size_t arity) const {
        if (auto it = table_.find({kind, arity}); it != table_.end()) return it->second;
        if (auto it = table_.find({kind, 0}); it != table_.end()) return it->second;
        return std::nullopt;
    }

    [[nodiscard]] std::size_t size() const noexcept { return table_.size(); }

private:
    std::map<std::pair<GateKind, std::size_t>, GateEntry> table_;
};

/// Reads `{name, voltage_V, gates: {KIND: {arity|"*": {dyn_uW, static_uW, delay_ns}}}}`.
[[nodiscard]] inline GateLibrary gate_library_from_json(const nlohmann::json& doc) {
    GateLibrary lib;
    try {
        lib.name = doc.value("name", std::string("unnamed"));
        lib.voltage_V = doc.value("voltage_V", 1.0);
        if (!(lib.voltage_V > 0)) throw Error("gate library voltage must be positive");
        for (const auto& [kind_tok, arities] : doc.at("gates").items()) {
            auto kind = gate_kind_from_token(kind_tok);
            if (!kind) throw Error("gate library: unknown gate kind '" + kind_tok + "'");
            for (const auto& [arity_tok, e] : arities.items()) {
                std::size_t arity = arity_tok == "*" ? 0 : std::stoul(arity_tok);
                lib.set(*kind, arity,
                        GateEntry{e.at("dyn_uW").get<double>(), e.at("static_uW").get<double>(),
                                  e.at("delay_ns").get<double>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("gate library: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw Error("gate library: arity keys must be integers or \"*\"");
    }
    return lib;
}

[[nodiscard]] inline GateLibrary load_gate_library(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open gate library '" + path + "'");
    try {
        return gate_library_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what(), 0);
    }
}

/// Per-node (or per-cluster) feature dictionary.
struct FeatureRecord {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    int level = 0;
    double power_mJ = 0;
    double delay_ns = 0;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// Resolved physical cost of one gate.
struct GateCost {
    double active_mJ = 0;  ///< switching energy (doubled-delay convention) or explicit override
    double static_uW = 0;
    double delay_ns = 0;
};

struct AnnotatedGraph {
    CircuitGraph graph;
    std::vector<FeatureRecord> features;
    std::vector<GateCost> costs;
    std::string library_name;
};

namespace detail {

inline std::vector<std::size_t> po_refcount(const CircuitGraph& g) {
    std::vector<std::size_t> refs(g.nodes.size(), 0);
    auto idx = driver_index(g);
    for (const auto& po : g.primary_outputs)
        if (auto it = idx.find(po); it != idx.end()) ++refs[it->second];
    return refs;
}

}  // namespace detail

/// Builds an AnnotatedGraph from already resolved per-node costs.
[[nodiscard]] inline AnnotatedGraph annotate_with_costs(CircuitGraph graph, std::vector<GateCost> costs,
                                                        std::string library_name) {
    if (costs.size() != graph.nodes.size()) throw Error("annotate: cost table does not match the graph");
    if (!graph.nodes.empty() && graph.nodes.front().level < 0) graph = levelize(std::move(graph));
    AnnotatedGraph out;
    out.library_name = std::move(library_name);
    auto fanouts = fanout_lists(graph);
    auto po_refs = detail::po_refcount(graph);
    out.features.resize(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        auto& f = out.features[i];
        f.fan_in = graph.nodes[i].inputs.size();
        f.fan_out = fanouts[i].size() + po_refs[i];
        f.level = std::max(graph.nodes[i].level, 0);
        f.power_mJ = costs[i].active_mJ;
        f.delay_ns = costs[i].delay_ns;
    }
    out.costs = std::move(costs);
    out.graph = std::move(graph);
    return out;
}

/// Attaches a FeatureRecord and a GateCost to every node.
[[nodiscard]] inline AnnotatedGraph annotate(CircuitGraph graph, const GateLibrary& lib) {
    std::vector<GateCost> costs(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        auto entry = lib.lookup(n.kind, n.inputs.size());
        GateCost c;
        if (entry) {
            c.static_uW = entry->static_uW;
            c.delay_ns = entry->delay_ns;
            c.active_mJ = 2.0 * uw_ns_to_mj(entry->delay_ns * entry->dynamic_uW);
        } else if (!n.power_mJ) {
            throw Error("gate library '" + lib.name + "' has no entry for " + std::string(to_string(n.kind)) +
                        "/" + std::to_string(n.inputs.size()) + " (node '" + n.name + "')");
        }
        if (n.power_mJ) {
            c.active_mJ = *n.power_mJ;
            c.static_uW = 0;
        }
        if (n.delay_ms) c.delay_ns = *n.delay_ms * kNanosecondsPerMillisecond;
        costs[i] = c;
    }
    return annotate_with_costs(std::move(graph), std::move(costs), lib.name);
}

/// 2 x sum(delay_i x dynamic_power_i) over the cluster, in mJ.
[[nodiscard]] inline double dynamic_energy(const AnnotatedGraph& ag, std::span<const std::size_t> cluster) {
    if (cluster.empty()) throw Error("dynamic_energy: empty cluster");
    double e = 0;
    for (auto i : cluster) e += ag.costs.at(i).active_mJ;
    return e;
}

/// Longest delay path through the cluster's induced subgraph, ns.
[[nodiscard]] inline double critical_delay_ns(const AnnotatedGraph& ag, std::span<const std::size_t> cluster) {
    const auto& g = ag.graph;
    std::unordered_map<std::string, std::size_t> member;
    for (auto i : cluster) member.emplace(g.nodes.at(i).name, i);
    // Members sorted by level form a topological order of the combinational subgraph.
    std::vector<std::size_t> order(cluster.begin(), cluster.end());
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return std::pair(g.nodes[a].level, a) < std::pair(g.nodes[b].level, b);
    });
    std::unordered_map<std::size_t, double> arrival;
    double cdp = 0;
    for (auto i : order) {
        double start = 0;
        for (const auto& in : g.nodes[i].inputs) {
            auto it = member.find(in);
            if (it == member.end() || g.nodes[it->second].sequential()) continue;
            start = std::max(start, arrival[it->second]);
        }
        arrival[i] = start + ag.costs[i].delay_ns;
        cdp = std::max(cdp, arrival[i]);
    }
    return cdp;
}

/// CDP x (sum static_power - max static_power): every gate but the most
/// leaky one is counted as idle for the whole critical path.
[[nodiscard]] inline double static_energy(const AnnotatedGraph& ag, std::span<const std::size_t> cluster) {
    if (cluster.empty()) throw Error("static_energy: empty cluster");
    double sum = 0, mx = 0;
    for (auto i : cluster) {
        sum += ag.costs.at(i).static_uW;
        mx = std::max(mx, ag.costs[i].static_uW);
    }
    return uw_ns_to_mj(critical_delay_ns(ag, cluster) * (sum - mx));
}

/// True if the cluster's members form one weakly connected component.
[[nodiscard]] inline bool cluster_connected(const CircuitGraph& g, std::span<const std::size_t> cluster) {
    if (cluster.size() <= 1) return true;
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t k = 0; k < cluster.size(); ++k) pos.emplace(g.nodes.at(cluster[k]).name, k);
    std::vector<std::size_t> parent(cluster.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t k = 0; k < cluster.size(); ++k)
        for (const auto& in : g.nodes[cluster[k]].inputs)
            if (auto it = pos.find(in); it != pos.end()) parent[find(k)] = find(it->second);
    auto root = find(0);
    for (std::size_t k = 1; k < cluster.size(); ++k)
        if (find(k) != root) return false;
    return true;
}

/// Operand-level feature record. Fan counts are pin/edge counts crossing the
/// cluster boundary; level is the topmost member level.
[[nodiscard]] inline FeatureRecord cluster_power(const AnnotatedGraph& ag, std::span<const std::size_t> cluster) {
    if (cluster.empty()) throw Error("cluster_power: empty cluster");
    const auto& g = ag.graph;
    std::unordered_set<std::string> members;
    for (auto i : cluster) members.insert(g.nodes.at(i).name);
    FeatureRecord r;
    r.power_mJ = dynamic_energy(ag, cluster) + static_energy(ag, cluster);
    r.delay_ns = critical_delay_ns(ag, cluster);
    auto fanouts = fanout_lists(g);
    auto po_refs = detail::po_refcount(g);
    for (auto i : cluster) {
        const auto& n = g.nodes[i];
        r.level = std::max(r.level, n.level);
        for (const auto& in : n.inputs)
            if (!members.contains(in)) ++r.fan_in;
        for (auto s : fanouts[i])
            if (!members.contains(g.nodes[s].name)) ++r.fan_out;
        r.fan_out += po_refs[i];
    }
    return r;
}

/// 64-bit FNV-1a of a byte string; used to pin library files.
[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace diac
