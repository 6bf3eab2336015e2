#pragma once

// NV-enhanced netlist emission and its validation checks.
//
// The netlist is the task-graph JSON dialect with three additions per node:
// `operand` names the node's cluster, `stage` its checkpoint stage, and
// `nvm` marks signals written to NVM at the end of that stage.

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "diac/cluster.hpp"
#include "diac/json_io.hpp"
#include "diac/placement.hpp"
#include "diac/policy.hpp"

namespace diac {

inline constexpr const char* kToolVersion = "diac 1.0.0";

struct NvMetadata {
    std::string library_name;
    std::uint64_t library_hash = 0;
    json policy = json::object();
    PlacementWeights weights;
    std::string tool_version = kToolVersion;
};

struct NvNetlist {
    ClusterGraph graph;
    NvmPlan plan;
    std::map<std::string, int> stage_index;
    NvMetadata meta;
};

[[nodiscard]] inline NvNetlist generate(const ClusterGraph& cg, const NvmPlan& plan, NvMetadata meta = {}) {
    auto cuts = cut_set_of(cg, plan);  // throws on unknown cluster names
    NvNetlist nv{cg, plan, {}, std::move(meta)};
    if (nv.meta.library_name.empty()) nv.meta.library_name = cg.base.library_name;
    auto stages = stage_index(cg, cuts);
    for (std::size_t c = 0; c < cg.size(); ++c) nv.stage_index[cg.clusters[c].name] = stages[c];
    return nv;
}

enum class Check { Acyclic, Grading, Energy, Timing, Restore, Plan };

[[nodiscard]] inline std::string_view to_string(Check c) {
    switch (c) {
        case Check::Acyclic: return "acyclic";
        case Check::Grading: return "stage-grading";
        case Check::Energy: return "stage-energy";
        case Check::Timing: return "timing";
        case Check::Restore: return "restore-consistency";
        case Check::Plan: return "plan";
    }
    return "?";
}

struct Diagnostic {
    Check check;
    std::string cluster;
    std::string message;
};

[[nodiscard]] inline json to_json(const Diagnostic& d) {
    return {{"check", std::string(to_string(d.check))}, {"cluster", d.cluster}, {"message", d.message}};
}

struct Validation {
    std::vector<Diagnostic> diagnostics;
    std::vector<std::string> notes;

    [[nodiscard]] bool ok() const noexcept { return diagnostics.empty(); }
    [[nodiscard]] bool fired(Check c) const {
        return std::any_of(diagnostics.begin(), diagnostics.end(), [&](const auto& d) { return d.check == c; });
    }
};

namespace detail {

// Cluster edges rebuilt from the base netlist and the membership lists, so a
// corrupted adjacency cannot hide a fault. Abstract graphs fall back to succ.
inline std::vector<std::set<std::size_t>> rebuilt_edges(const ClusterGraph& cg) {
    std::vector<std::set<std::size_t>> out(cg.size());
    const auto& g = cg.base.graph;
    bool abstract = g.nodes.empty();
    if (abstract) {
        for (std::size_t c = 0; c < cg.size(); ++c) out[c].insert(cg.succ[c].begin(), cg.succ[c].end());
        return out;
    }
    std::vector<std::ptrdiff_t> owner(g.nodes.size(), -1);
    for (std::size_t c = 0; c < cg.size(); ++c)
        for (auto i : cg.clusters[c].members) owner[i] = static_cast<std::ptrdiff_t>(c);
    auto idx = driver_index(g);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (owner[i] < 0) continue;
        for (const auto& in : g.nodes[i].inputs) {
            auto it = idx.find(in);
            if (it == idx.end() || owner[it->second] < 0 || owner[it->second] == owner[i]) continue;
            out[static_cast<std::size_t>(owner[it->second])].insert(static_cast<std::size_t>(owner[i]));
        }
    }
    return out;
}

}  // namespace detail

/// Runs every check; an empty diagnostic list means the netlist is sound.
[[nodiscard]] inline Validation validate(const NvNetlist& nv, double budget_mJ,
                                         std::optional<double> clock_ns = std::nullopt) {
    Validation v;
    const auto& cg = nv.graph;
    const auto n = cg.size();
    auto succ = detail::rebuilt_edges(cg);
    std::vector<std::vector<std::size_t>> pred(n);
    for (std::size_t c = 0; c < n; ++c)
        for (auto s : succ[c]) pred[s].push_back(c);

    std::map<std::string, const CutRecord*> cut;
    for (const auto& r : nv.plan.cuts) {
        if (!cg.find(r.cluster)) {
            v.diagnostics.push_back({Check::Plan, r.cluster, "plan names a cluster that is not in the graph"});
            continue;
        }
        cut[r.cluster] = &r;
    }
    auto is_cut = [&](std::size_t c) { return cut.contains(cg.clusters[c].name); };

    // (a) acyclicity
    std::vector<std::size_t> indeg(n, 0), order;
    for (std::size_t c = 0; c < n; ++c) indeg[c] = pred[c].size();
    std::queue<std::size_t> ready;
    for (std::size_t c = 0; c < n; ++c)
        if (indeg[c] == 0) ready.push(c);
    while (!ready.empty()) {
        auto c = ready.front();
        ready.pop();
        order.push_back(c);
        for (auto s : succ[c])
            if (--indeg[s] == 0) ready.push(s);
    }
    const bool acyclic = order.size() == n;
    if (!acyclic)
        for (std::size_t c = 0; c < n; ++c)
            if (indeg[c] > 0) v.diagnostics.push_back({Check::Acyclic, cg.clusters[c].name, "cluster lies on a cycle"});

    // (b) stage grading
    std::vector<int> stage(n, 0);
    bool staged = true;
    for (std::size_t c = 0; c < n; ++c) {
        auto it = nv.stage_index.find(cg.clusters[c].name);
        if (it == nv.stage_index.end() || it->second < 0) {
            v.diagnostics.push_back({Check::Grading, cg.clusters[c].name, "cluster has no stage"});
            staged = false;
            continue;
        }
        stage[c] = it->second;
    }
    if (staged)
        for (std::size_t c = 0; c < n; ++c)
            for (auto s : succ[c])
                if (stage[s] < stage[c])
                    v.diagnostics.push_back({Check::Grading, cg.clusters[s].name,
                                             "reads '" + cg.clusters[c].name + "' from a later stage"});

    // (e) restore consistency
    if (staged)
        for (std::size_t c = 0; c < n; ++c)
            for (auto s : succ[c])
                if (stage[c] < stage[s] && !is_cut(c))
                    v.diagnostics.push_back({Check::Restore, cg.clusters[s].name,
                                             "reads unsaved signal of '" + cg.clusters[c].name + "' from stage " +
                                                 std::to_string(stage[c])});

    if (!acyclic || !staged) {
        v.notes.push_back("energy and timing checks skipped: no valid stage order");
        return v;
    }

    // (c) per-stage energy along every in-stage path, entry restore to closing backup
    std::vector<double> energy(n, 0.0), delay(n, 0.0);
    for (auto c : order) {
        double in = 0, d = 0;
        for (auto p : pred[c]) {
            if (stage[p] == stage[c]) {
                in = std::max(in, energy[p]);
                d = std::max(d, delay[p]);
            } else if (auto it = cut.find(cg.clusters[p].name); it != cut.end()) {
                in = std::max(in, it->second->restore_mJ);
            }
        }
        energy[c] = in + cg.clusters[c].features.power_mJ;
        delay[c] = d + cg.clusters[c].features.delay_ns;
        bool closes = is_cut(c) || std::none_of(succ[c].begin(), succ[c].end(), [&](auto s) { return stage[s] == stage[c]; });
        if (!closes) continue;
        double need = energy[c] + (is_cut(c) ? cut.at(cg.clusters[c].name)->backup_mJ : 0.0);
        if (need > budget_mJ + kBudgetSlack)
            v.diagnostics.push_back({Check::Energy, cg.clusters[c].name,
                                     "stage " + std::to_string(stage[c]) + " path needs " + std::to_string(need) +
                                         " mJ, budget " + std::to_string(budget_mJ) + " mJ"});
    }

    // (d) timing per stage
    if (!clock_ns) {
        v.notes.push_back("timing check skipped: no clock period given");
    } else {
        std::map<int, double> cdp;
        std::map<int, bool> writes;
        for (std::size_t c = 0; c < n; ++c) {
            cdp[stage[c]] = std::max(cdp[stage[c]], delay[c]);
            if (is_cut(c)) writes[stage[c]] = true;
        }
        for (const auto& [s, d] : cdp) {
            double total = d + (writes[s] ? nv.plan.nvm.write_latency_ns : 0.0);
            if (total > *clock_ns + 1e-9)
                v.diagnostics.push_back({Check::Timing, "stage " + std::to_string(s),
                                         "critical path " + std::to_string(total) + " ns exceeds clock " +
                                             std::to_string(*clock_ns) + " ns"});
        }
    }
    return v;
}

[[nodiscard]] inline json to_json(const NvMetadata& m) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.library_hash));
    return {{"library", m.library_name}, {"library_fnv1a64", hash}, {"policy", m.policy},
            {"weights", to_json(m.weights)}, {"tool_version", m.tool_version}};
}

/// Task-graph JSON with `operand`, `stage` and `nvm` per node.
[[nodiscard]] inline json to_json(const NvNetlist& nv) {
    const auto& cg = nv.graph;
    const auto& g = cg.base.graph;
    json doc;
    json nodes = json::array();
    if (!g.nodes.empty()) {
        std::vector<std::ptrdiff_t> owner(g.nodes.size(), -1);
        for (std::size_t c = 0; c < cg.size(); ++c)
            for (auto i : cg.clusters[c].members) owner[i] = static_cast<std::ptrdiff_t>(c);
        std::map<std::size_t, int> word;
        for (const auto& r : nv.plan.cuts) {
            const auto& cl = cg.clusters[*cg.find(r.cluster)];
            int k = 0;
            for (auto i : cl.exports) word[i] = k++;
        }
        doc = to_json(g, true);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            auto& jn = doc["nodes"][i];
            if (owner[i] < 0) continue;  // flip-flops stay outside every stage
            const auto& cl = cg.clusters[static_cast<std::size_t>(owner[i])];
            jn["operand"] = cl.name;
            jn["stage"] = nv.stage_index.at(cl.name);
            if (auto it = word.find(i); it != word.end()) jn["nvm"] = {{"cluster", cl.name}, {"word", it->second}};
        }
    } else {
        // Abstract graph: one LUT node per cluster, sources fed by a synthetic input.
        doc["primary_inputs"] = {"in"};
        json pos = json::array();
        for (std::size_t c = 0; c < cg.size(); ++c) {
            const auto& cl = cg.clusters[c];
            json ins = json::array();
            for (auto p : cg.pred[c]) ins.push_back(cg.clusters[p].name);
            if (ins.empty()) ins.push_back("in");
            json jn = {{"name", cl.name}, {"kind", "LUT"}, {"inputs", ins}, {"power_mJ", cl.features.power_mJ},
                       {"operand", cl.name}, {"stage", nv.stage_index.at(cl.name)}};
            if (nv.plan.is_cut(cl.name)) jn["nvm"] = {{"cluster", cl.name}, {"word", 0}};
            nodes.push_back(std::move(jn));
            if (cg.succ[c].empty()) pos.push_back(cl.name);
        }
        doc["nodes"] = std::move(nodes);
        doc["primary_outputs"] = std::move(pos);
    }
    json clusters = json::array();
    for (std::size_t c = 0; c < cg.size(); ++c) {
        const auto& cl = cg.clusters[c];
        json succ = json::array();
        for (auto s : cg.succ[c]) succ.push_back(cg.clusters[s].name);
        clusters.push_back({{"name", cl.name},
                            {"stage", nv.stage_index.at(cl.name)},
                            {"cut", nv.plan.is_cut(cl.name)},
                            {"power_mJ", cl.features.power_mJ},
                            {"signals_out", cl.signals_out},
                            {"succ", std::move(succ)}});
    }
    doc["clusters"] = std::move(clusters);
    doc["plan"] = to_json(nv.plan);
    doc["metadata"] = to_json(nv.meta);
    return doc;
}

}  // namespace diac
