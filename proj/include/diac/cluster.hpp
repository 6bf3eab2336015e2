#pragma once

// Operand-level view of a circuit: a partition of the combinational gates
// into clusters, contracted into a DAG. Flip-flops never belong to a cluster.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "diac/energy.hpp"
#include "diac/error.hpp"

namespace diac {

struct Cluster {
    std::string name;
    /// Base-graph node indices, ascending. Empty for abstract clusters.
    std::vector<std::size_t> members;
    /// Level is the cluster-DAG level (sources at 1).
    FeatureRecord features;
    /// Distinct signals leaving the cluster: the words an NVM here must hold.
    std::size_t signals_out = 0;
    /// Members whose output leaves the cluster (base indices, ascending).
    std::vector<std::size_t> exports;
};

struct ClusterGraph {
    AnnotatedGraph base;
    std::vector<Cluster> clusters;
    std::vector<std::vector<std::size_t>> succ;
    std::vector<std::vector<std::size_t>> pred;

    [[nodiscard]] std::size_t size() const noexcept { return clusters.size(); }

    [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < clusters.size(); ++i)
            if (clusters[i].name == name) return i;
        return std::nullopt;
    }

    [[nodiscard]] double power(std::size_t c) const { return clusters[c].features.power_mJ; }

    [[nodiscard]] double total_power() const {
        double s = 0;
        for (const auto& c : clusters) s += c.features.power_mJ;
        return s;
    }

    [[nodiscard]] int max_level() const {
        int m = 0;
        for (const auto& c : clusters) m = std::max(m, c.features.level);
        return m;
    }

    /// Cluster indices in topological order, ties by name.
    [[nodiscard]] std::vector<std::size_t> topological_order() const {
        std::vector<std::size_t> indeg(size(), 0);
        for (std::size_t c = 0; c < size(); ++c) indeg[c] = pred[c].size();
        auto cmp = [&](std::size_t a, std::size_t b) { return clusters[a].name > clusters[b].name; };
        std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
        for (std::size_t c = 0; c < size(); ++c)
            if (indeg[c] == 0) ready.push(c);
        std::vector<std::size_t> order;
        while (!ready.empty()) {
            auto c = ready.top();
            ready.pop();
            order.push_back(c);
            for (auto s : succ[c])
                if (--indeg[s] == 0) ready.push(s);
        }
        if (order.size() != size()) throw GraphError("cluster graph is cyclic");
        return order;
    }
};

namespace detail {

inline void finish_cluster_graph(ClusterGraph& cg) {
    for (auto& v : cg.succ) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    for (auto& v : cg.pred) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    auto order = cg.topological_order();
    for (auto c : order) {
        int lvl = 0;
        for (auto p : cg.pred[c]) lvl = std::max(lvl, cg.clusters[p].features.level);
        cg.clusters[c].features.level = lvl + 1;
    }
}

}  // namespace detail

/// Contracts `partition` (lists of combinational node indices) over `base`.
/// Clusters are stored sorted by name.
[[nodiscard]] inline ClusterGraph build_cluster_graph(
    AnnotatedGraph base, std::vector<std::pair<std::string, std::vector<std::size_t>>> partition) {
    const auto& g = base.graph;
    std::sort(partition.begin(), partition.end());
    std::vector<std::ptrdiff_t> owner(g.nodes.size(), -1);
    for (std::size_t c = 0; c < partition.size(); ++c) {
        if (c > 0 && partition[c].first == partition[c - 1].first)
            throw GraphError("duplicate cluster name '" + partition[c].first + "'");
        if (partition[c].second.empty()) throw GraphError("empty cluster '" + partition[c].first + "'");
        for (auto i : partition[c].second) {
            if (i >= g.nodes.size() || g.nodes[i].sequential())
                throw GraphError("cluster '" + partition[c].first + "' holds a non-combinational node");
            if (owner[i] != -1) throw GraphError("node '" + g.nodes[i].name + "' in two clusters");
            owner[i] = static_cast<std::ptrdiff_t>(c);
        }
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (!g.nodes[i].sequential() && owner[i] == -1)
            throw GraphError("node '" + g.nodes[i].name + "' is in no cluster");

    ClusterGraph cg;
    cg.clusters.resize(partition.size());
    cg.succ.resize(partition.size());
    cg.pred.resize(partition.size());
    auto idx = driver_index(g);
    std::vector<bool> leaves(g.nodes.size(), false);
    for (const auto& po : g.primary_outputs)
        if (auto it = idx.find(po); it != idx.end()) leaves[it->second] = true;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        for (const auto& in : g.nodes[i].inputs) {
            auto it = idx.find(in);
            if (it == idx.end()) continue;
            auto d = it->second;
            if (g.nodes[d].sequential()) continue;
            if (owner[i] != owner[d]) leaves[d] = true;
            if (g.nodes[i].sequential()) continue;
            if (owner[i] != owner[d]) {
                cg.succ[static_cast<std::size_t>(owner[d])].push_back(static_cast<std::size_t>(owner[i]));
                cg.pred[static_cast<std::size_t>(owner[i])].push_back(static_cast<std::size_t>(owner[d]));
            }
        }
    }
    for (std::size_t c = 0; c < partition.size(); ++c) {
        auto& cl = cg.clusters[c];
        cl.name = partition[c].first;
        cl.members = partition[c].second;
        std::sort(cl.members.begin(), cl.members.end());
        cl.features = cluster_power(base, cl.members);
        for (auto i : cl.members)
            if (leaves[i]) cl.exports.push_back(i);
        cl.signals_out = cl.exports.size();
    }
    cg.base = std::move(base);
    detail::finish_cluster_graph(cg);
    return cg;
}

/// One cluster per operand (nodes sharing `operand`, or each node alone).
[[nodiscard]] inline ClusterGraph operand_clusters(AnnotatedGraph base) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < base.graph.nodes.size(); ++i) {
        const auto& n = base.graph.nodes[i];
        if (!n.sequential()) groups[n.operand_name()].push_back(i);
    }
    std::vector<std::pair<std::string, std::vector<std::size_t>>> part(groups.begin(), groups.end());
    return build_cluster_graph(std::move(base), std::move(part));
}

/// One cluster per combinational gate.
[[nodiscard]] inline ClusterGraph gate_clusters(AnnotatedGraph base) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> part;
    for (std::size_t i = 0; i < base.graph.nodes.size(); ++i)
        if (!base.graph.nodes[i].sequential()) part.push_back({base.graph.nodes[i].name, {i}});
    return build_cluster_graph(std::move(base), std::move(part));
}

/// Current partition of `cg` as (name, members) pairs.
[[nodiscard]] inline std::vector<std::pair<std::string, std::vector<std::size_t>>> partition_of(
    const ClusterGraph& cg) {
    std::vector<std::pair<std::string, std::vector<std::size_t>>> part;
    for (const auto& c : cg.clusters) part.emplace_back(c.name, c.members);
    return part;
}

struct AbstractCluster {
    std::string name;
    double power_mJ = 0;
    std::size_t signals_out = 1;
    double delay_ns = 0;
};

/// Cluster graph with no underlying circuit; used for placement studies.
/// Fan-in counts incoming edges, fan-out outgoing edges (sinks count their
/// primary output as one).
[[nodiscard]] inline ClusterGraph make_abstract_cluster_graph(
    const std::vector<AbstractCluster>& clusters, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    ClusterGraph cg;
    cg.clusters.resize(clusters.size());
    cg.succ.resize(clusters.size());
    cg.pred.resize(clusters.size());
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        cg.clusters[c].name = clusters[c].name;
        cg.clusters[c].features.power_mJ = clusters[c].power_mJ;
        cg.clusters[c].features.delay_ns = clusters[c].delay_ns;
        cg.clusters[c].signals_out = clusters[c].signals_out;
    }
    for (auto [u, v] : edges) {
        if (u >= clusters.size() || v >= clusters.size() || u == v) throw GraphError("bad cluster edge");
        cg.succ[u].push_back(v);
        cg.pred[v].push_back(u);
    }
    detail::finish_cluster_graph(cg);
    for (std::size_t c = 0; c < cg.size(); ++c) {
        cg.clusters[c].features.fan_in = cg.pred[c].size();
        cg.clusters[c].features.fan_out = cg.succ[c].empty() ? 1 : cg.succ[c].size();
    }
    return cg;
}

}  // namespace diac
