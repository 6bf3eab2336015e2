#pragma once

// Canonical circuit representation: a DAG of gates once flip-flops are cut
// into pseudo-primary-input/output pairs.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diac/error.hpp"

namespace diac {

enum class GateKind { And, Nand, Or, Nor, Xor, Xnor, Not, Buf, Dff, Lut };

inline constexpr std::size_t kMaxGateArity = 64;

[[nodiscard]] inline std::string_view to_string(GateKind kind) {
    switch (kind) {
        case GateKind::And: return "AND";
        case GateKind::Nand: return "NAND";
        case GateKind::Or: return "OR";
        case GateKind::Nor: return "NOR";
        case GateKind::Xor: return "XOR";
        case GateKind::Xnor: return "XNOR";
        case GateKind::Not: return "NOT";
        case GateKind::Buf: return "BUF";
        case GateKind::Dff: return "DFF";
        case GateKind::Lut: return "LUT";
    }
    return "?";
}

/// Case-insensitive gate token lookup. `BUFF` is accepted as BUF.
[[nodiscard]] inline std::optional<GateKind> gate_kind_from_token(std::string_view token) {
    std::string up(token);
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    static const std::map<std::string, GateKind, std::less<>> table = {
        {"AND", GateKind::And}, {"NAND", GateKind::Nand}, {"OR", GateKind::Or},
        {"NOR", GateKind::Nor}, {"XOR", GateKind::Xor},   {"XNOR", GateKind::Xnor},
        {"NOT", GateKind::Not}, {"BUF", GateKind::Buf},   {"BUFF", GateKind::Buf},
        {"DFF", GateKind::Dff}, {"LUT", GateKind::Lut},
    };
    auto it = table.find(up);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

/// One gate. The gate's name is the signal it drives.
struct GateNode {
    std::string name;
    GateKind kind = GateKind::Buf;
    std::vector<std::string> inputs;
    /// Explicit energy per activation; overrides the gate library.
    std::optional<double> power_mJ;
    /// Explicit delay; overrides the gate library.
    std::optional<double> delay_ms;
    /// Operand group the node initially belongs to (empty: its own operand).
    std::string operand;
    /// -1 until levelized.
    int level = -1;

    [[nodiscard]] const std::string& output() const noexcept { return name; }
    [[nodiscard]] bool sequential() const noexcept { return kind == GateKind::Dff; }
    [[nodiscard]] const std::string& operand_name() const noexcept {
        return operand.empty() ? name : operand;
    }

    friend bool operator==(const GateNode&, const GateNode&) = default;
};

[[nodiscard]] inline bool arity_ok(GateKind kind, std::size_t n) {
    if (n > kMaxGateArity) return false;
    switch (kind) {
        case GateKind::Not:
        case GateKind::Buf:
        case GateKind::Dff: return n == 1;
        case GateKind::Lut: return n >= 1;
        default: return n >= 2;
    }
}

struct CircuitGraph {
    std::string name;
    std::vector<GateNode> nodes;
    std::vector<std::string> primary_inputs;
    std::vector<std::string> primary_outputs;

    [[nodiscard]] std::optional<std::size_t> find(std::string_view signal) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == signal) return i;
        return std::nullopt;
    }

    [[nodiscard]] bool is_primary_input(std::string_view signal) const {
        return std::find(primary_inputs.begin(), primary_inputs.end(), signal) != primary_inputs.end();
    }

    [[nodiscard]] bool is_primary_output(std::string_view signal) const {
        return std::find(primary_outputs.begin(), primary_outputs.end(), signal) !=
               primary_outputs.end();
    }

    /// Indices of the flip-flop nodes.
    [[nodiscard]] std::vector<std::size_t> sequential_elements() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].sequential()) out.push_back(i);
        return out;
    }

    [[nodiscard]] std::size_t combinational_count() const {
        return nodes.size() - sequential_elements().size();
    }
};

/// Signal name -> driving node index. PIs are absent.
[[nodiscard]] inline std::unordered_map<std::string, std::size_t> driver_index(const CircuitGraph& g) {
    std::unordered_map<std::string, std::size_t> idx;
    idx.reserve(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) idx.emplace(g.nodes[i].name, i);
    return idx;
}

/// For each node, the node indices that read its output (one entry per pin).
[[nodiscard]] inline std::vector<std::vector<std::size_t>> fanout_lists(const CircuitGraph& g) {
    auto idx = driver_index(g);
    std::vector<std::vector<std::size_t>> out(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (const auto& in : g.nodes[i].inputs)
            if (auto it = idx.find(in); it != idx.end()) out[it->second].push_back(i);
    return out;
}

namespace detail {

// Topological order of the combinational subgraph. Flip-flop outputs act as
// pseudo-primary inputs, so edges leaving a DFF are ignored. Ties are broken
// by node name so the order is independent of declaration order.
inline std::vector<std::size_t> combinational_order(const CircuitGraph& g) {
    auto idx = driver_index(g);
    std::vector<std::size_t> pending(g.nodes.size(), 0);
    std::vector<std::vector<std::size_t>> succ(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        for (const auto& in : g.nodes[i].inputs) {
            auto it = idx.find(in);
            if (it == idx.end() || g.nodes[it->second].sequential()) continue;
            succ[it->second].push_back(i);
            ++pending[i];
        }
    }
    auto cmp = [&](std::size_t a, std::size_t b) { return g.nodes[a].name > g.nodes[b].name; };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (pending[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(g.nodes.size());
    while (!ready.empty()) {
        auto n = ready.top();
        ready.pop();
        order.push_back(n);
        for (auto s : succ[n])
            if (--pending[s] == 0) ready.push(s);
    }
    if (order.size() != g.nodes.size()) {
        std::vector<std::string> stuck;
        for (std::size_t i = 0; i < g.nodes.size(); ++i)
            if (pending[i] != 0) stuck.push_back(g.nodes[i].name);
        std::sort(stuck.begin(), stuck.end());
        std::string msg = "cyclic combinational logic through";
        for (std::size_t k = 0; k < stuck.size() && k < 8; ++k) msg += " " + stuck[k];
        throw GraphError(msg);
    }
    return order;
}

}  // namespace detail

/// Throws GraphError unless every CircuitGraph invariant holds.
inline void check_graph(const CircuitGraph& g) {
    std::set<std::string, std::less<>> signals;
    for (const auto& pi : g.primary_inputs)
        if (!signals.insert(pi).second) throw GraphError("duplicate primary input '" + pi + "'");
    for (const auto& n : g.nodes) {
        if (n.name.empty()) throw GraphError("node with empty name");
        if (!signals.insert(n.name).second)
            throw GraphError("duplicate definition of signal '" + n.name + "'");
        if (!arity_ok(n.kind, n.inputs.size()))
            throw GraphError("gate '" + n.name + "' of kind " + std::string(to_string(n.kind)) +
                             " has invalid arity " + std::to_string(n.inputs.size()));
    }
    for (const auto& n : g.nodes)
        for (const auto& in : n.inputs)
            if (!signals.contains(in))
                throw GraphError("undriven signal '" + in + "' read by '" + n.name + "'");
    std::set<std::string, std::less<>> pos;
    for (const auto& po : g.primary_outputs) {
        if (!signals.contains(po)) throw GraphError("primary output '" + po + "' is undriven");
        if (!pos.insert(po).second) throw GraphError("duplicate primary output '" + po + "'");
    }
    (void)detail::combinational_order(g);
}

/// Annotates `level` on every node: primary inputs and flip-flop outputs sit
/// at level 0, a gate is one above its deepest driver.
[[nodiscard]] inline CircuitGraph levelize(CircuitGraph g) {
    auto idx = driver_index(g);
    auto order = detail::combinational_order(g);
    for (auto i : order) {
        auto& n = g.nodes[i];
        if (n.sequential()) {
            n.level = 0;
            continue;
        }
        int lvl = 0;
        for (const auto& in : n.inputs) {
            auto it = idx.find(in);
            if (it == idx.end()) continue;
            const auto& d = g.nodes[it->second];
            lvl = std::max(lvl, d.sequential() ? 0 : d.level);
        }
        n.level = lvl + 1;
    }
    return g;
}

[[nodiscard]] inline int max_level(const CircuitGraph& g) {
    int m = 0;
    for (const auto& n : g.nodes) m = std::max(m, n.level);
    return m;
}

/// Structural equality up to node order: same signals, kinds, pin lists, PIs
/// and POs (the latter two compared as sets).
[[nodiscard]] inline bool isomorphic(const CircuitGraph& a, const CircuitGraph& b) {
    auto key = [](const CircuitGraph& g) {
        std::map<std::string, std::pair<GateKind, std::vector<std::string>>> m;
        for (const auto& n : g.nodes) m.emplace(n.name, std::pair{n.kind, n.inputs});
        return m;
    };
    auto as_set = [](const std::vector<std::string>& v) { return std::set<std::string>(v.begin(), v.end()); };
    return key(a) == key(b) && as_set(a.primary_inputs) == as_set(b.primary_inputs) &&
           as_set(a.primary_outputs) == as_set(b.primary_outputs);
}

}  // namespace diac
