#pragma once

// Operand resizing policies.
//   P1 splits clusters above the upper bound along internal level cuts.
//   P2 greedily merges small adjacent clusters below the lower bound.
//   P3 is P2 applied to the output of P1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "diac/cluster.hpp"
#include "diac/error.hpp"

namespace diac {

enum class Policy { P1, P2, P3 };

struct PolicyConfig {
    Policy policy = Policy::P3;
    double upper_mJ = 25.0;
    double lower_mJ = 20.0;
    /// Budget proxy derived from harvesting; 0 disables the related checks.
    double v_th_mJ = 0.0;
    double v_peak_mJ = 0.0;
    double merge_ratio = 0.8;

    void check() const {
        if (!(upper_mJ > 0)) throw Error("policy: upper bound must be positive");
        if (policy != Policy::P1 && !(lower_mJ > 0 && lower_mJ < upper_mJ))
            throw Error("policy: bounds must satisfy 0 < lower < upper");
        if (v_th_mJ > 0 && !(upper_mJ < v_th_mJ)) throw Error("policy: upper bound must be below v_th");
        if (v_th_mJ > 0 && v_peak_mJ > 0 && !(v_th_mJ < v_peak_mJ))
            throw Error("policy: v_th must be below v_peak");
        if (!(merge_ratio > 0 && merge_ratio <= 1)) throw Error("policy: merge ratio must be in (0, 1]");
    }
};

namespace detail {

using Part = std::pair<std::string, std::vector<std::size_t>>;

// Longest-path level of each member inside the member-induced subgraph.
inline std::vector<int> internal_levels(const CircuitGraph& g, const std::vector<std::size_t>& members) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t k = 0; k < members.size(); ++k) pos.emplace(g.nodes[members[k]].name, k);
    std::vector<std::size_t> order(members.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        return std::pair(g.nodes[members[a]].level, members[a]) < std::pair(g.nodes[members[b]].level, members[b]);
    });
    std::vector<int> lvl(members.size(), 0);
    for (auto k : order)
        for (const auto& in : g.nodes[members[k]].inputs)
            if (auto it = pos.find(in); it != pos.end()) lvl[k] = std::max(lvl[k], lvl[it->second] + 1);
    return lvl;
}

inline std::size_t crossing_signals(const CircuitGraph& g, const std::vector<std::size_t>& from,
                                    const std::vector<std::size_t>& to) {
    std::unordered_set<std::string> src;
    for (auto i : from) src.insert(g.nodes[i].name);
    std::set<std::string> crossing;
    for (auto i : to)
        for (const auto& in : g.nodes[i].inputs)
            if (src.contains(in)) crossing.insert(in);
    return crossing.size();
}

// Splits `members` into pieces whose power is at most `upper`.
inline void split_members(const AnnotatedGraph& ag, std::vector<std::size_t> members, double upper,
                          std::vector<std::vector<std::size_t>>& out) {
    if (cluster_power(ag, members).power_mJ <= upper) {
        out.push_back(std::move(members));
        return;
    }
    if (members.size() == 1)
        throw InfeasibleError("node '" + ag.graph.nodes[members[0]].name + "' alone exceeds the upper bound",
                              ag.graph.nodes[members[0]].name);
    std::sort(members.begin(), members.end(),
              [&](auto a, auto b) { return ag.graph.nodes[a].name < ag.graph.nodes[b].name; });
    auto lvl = internal_levels(ag.graph, members);
    int top = *std::max_element(lvl.begin(), lvl.end());

    // Candidate (lower, upper) pairs: level frontiers, or name-ordered prefixes
    // when every member sits on one level.
    using Cand = std::tuple<double, std::size_t, int>;
    Cand best{std::numeric_limits<double>::infinity(), 0, 0};
    std::vector<std::size_t> best_lo, best_hi;
    const int n_cuts = top > 0 ? top : static_cast<int>(members.size()) - 1;
    for (int t = 1; t <= n_cuts; ++t) {
        std::vector<std::size_t> lo, hi;
        for (std::size_t k = 0; k < members.size(); ++k) {
            bool low = top > 0 ? lvl[k] < t : static_cast<int>(k) < t;
            (low ? lo : hi).push_back(members[k]);
        }
        double worst = std::max(cluster_power(ag, lo).power_mJ, cluster_power(ag, hi).power_mJ);
        Cand cand{worst, crossing_signals(ag.graph, lo, hi), t};
        if (cand < best) {
            best = cand;
            best_lo = std::move(lo);
            best_hi = std::move(hi);
        }
    }
    split_members(ag, std::move(best_lo), upper, out);
    split_members(ag, std::move(best_hi), upper, out);
}

inline bool merge_keeps_acyclic(const ClusterGraph& cg, std::size_t a, std::size_t b) {
    // A cycle appears iff some path a -> x -> ... -> b (or b -> ... -> a) leaves
    // the pair and comes back.
    auto reaches_via_outside = [&](std::size_t from, std::size_t to) {
        std::vector<bool> seen(cg.size(), false);
        std::vector<std::size_t> stack;
        for (auto s : cg.succ[from])
            if (s != to) stack.push_back(s);
        while (!stack.empty()) {
            auto x = stack.back();
            stack.pop_back();
            if (x == to) return true;
            if (seen[x]) continue;
            seen[x] = true;
            for (auto s : cg.succ[x]) stack.push_back(s);
        }
        return false;
    };
    return !reaches_via_outside(a, b) && !reaches_via_outside(b, a);
}

inline std::string merged_name(const std::string& a, const std::string& b) {
    std::vector<std::string> parts;
    for (const auto* s : {&a, &b}) {
        std::size_t start = 0;
        while (true) {
            auto plus = s->find('+', start);
            parts.push_back(s->substr(start, plus - start));
            if (plus == std::string::npos) break;
            start = plus + 1;
        }
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
    return out;
}

}  // namespace detail

[[nodiscard]] inline ClusterGraph apply_policy1(const ClusterGraph& cg, const PolicyConfig& cfg) {
    cfg.check();
    std::vector<detail::Part> part;
    bool changed = false;
    std::set<std::string> taken;
    for (const auto& c : cg.clusters) taken.insert(c.name);
    for (const auto& c : cg.clusters) {
        if (c.features.power_mJ <= cfg.upper_mJ) {
            part.emplace_back(c.name, c.members);
            continue;
        }
        if (c.members.empty())
            throw InfeasibleError("abstract cluster '" + c.name + "' exceeds the upper bound", c.name);
        std::vector<std::vector<std::size_t>> pieces;
        detail::split_members(cg.base, c.members, cfg.upper_mJ, pieces);
        if (pieces.size() == 1) {
            part.emplace_back(c.name, c.members);
            continue;
        }
        changed = true;
        // Order pieces by their lowest member level so piece numbers follow dataflow.
        std::sort(pieces.begin(), pieces.end(), [&](const auto& a, const auto& b) {
            auto key = [&](const auto& p) {
                int lo = std::numeric_limits<int>::max();
                for (auto i : p) lo = std::min(lo, cg.base.graph.nodes[i].level);
                return std::pair(lo, cg.base.graph.nodes[p.front()].name);
            };
            return key(a) < key(b);
        });
        taken.erase(c.name);
        std::size_t k = 1;
        for (auto& p : pieces) {
            std::string name;
            do name = c.name + "." + std::to_string(k++);
            while (taken.contains(name));
            taken.insert(name);
            part.emplace_back(std::move(name), std::move(p));
        }
    }
    if (!changed) return cg;
    return build_cluster_graph(cg.base, std::move(part));
}

[[nodiscard]] inline ClusterGraph apply_policy2(const ClusterGraph& cg, const PolicyConfig& cfg) {
    cfg.check();
    ClusterGraph cur = cg;
    const double target = 0.5 * (cfg.lower_mJ + cfg.upper_mJ);
    while (true) {
        std::vector<std::size_t> small;
        for (std::size_t c = 0; c < cur.size(); ++c)
            if (cur.power(c) < cfg.lower_mJ) small.push_back(c);
        std::sort(small.begin(), small.end(), [&](auto a, auto b) {
            return std::pair(cur.power(a), cur.clusters[a].name) < std::pair(cur.power(b), cur.clusters[b].name);
        });
        bool merged = false;
        for (auto c : small) {
            std::vector<std::size_t> adj = cur.succ[c];
            adj.insert(adj.end(), cur.pred[c].begin(), cur.pred[c].end());
            std::optional<std::size_t> best;
            std::pair<double, std::string> best_key;
            for (auto p : adj) {
                if (!(cur.power(p) < cfg.lower_mJ)) continue;
                auto members = cur.clusters[c].members;
                members.insert(members.end(), cur.clusters[p].members.begin(), cur.clusters[p].members.end());
                double power = members.empty() ? cur.power(c) + cur.power(p)
                                               : cluster_power(cur.base, members).power_mJ;
                if (power > cfg.upper_mJ) continue;
                if (!detail::merge_keeps_acyclic(cur, c, p)) continue;
                std::pair key{std::abs(power - target), cur.clusters[p].name};
                if (!best || key < best_key) {
                    best = p;
                    best_key = std::move(key);
                }
            }
            if (!best) continue;
            if (cur.clusters[c].members.empty())
                throw Error("policy2: abstract cluster graphs cannot be merged");
            auto part = partition_of(cur);
            auto name = detail::merged_name(cur.clusters[c].name, cur.clusters[*best].name);
            auto members = cur.clusters[c].members;
            members.insert(members.end(), cur.clusters[*best].members.begin(), cur.clusters[*best].members.end());
            std::erase_if(part, [&](const auto& pr) {
                return pr.first == cur.clusters[c].name || pr.first == cur.clusters[*best].name;
            });
            part.emplace_back(std::move(name), std::move(members));
            cur = build_cluster_graph(std::move(cur.base), std::move(part));
            merged = true;
            break;
        }
        if (!merged) return cur;
    }
}

[[nodiscard]] inline ClusterGraph apply_policy3(const ClusterGraph& cg, const PolicyConfig& cfg) {
    return apply_policy2(apply_policy1(cg, cfg), cfg);
}

[[nodiscard]] inline ClusterGraph apply_policy(const ClusterGraph& cg, const PolicyConfig& cfg) {
    switch (cfg.policy) {
        case Policy::P1: return apply_policy1(cg, cfg);
        case Policy::P2: return apply_policy2(cg, cfg);
        case Policy::P3: return apply_policy3(cg, cfg);
    }
    return cg;
}

/// True if `c` (below the lower bound) still has a legal merge partner.
[[nodiscard]] inline bool has_legal_merge(const ClusterGraph& cg, std::size_t c, const PolicyConfig& cfg) {
    if (!(cg.power(c) < cfg.lower_mJ)) return false;
    std::vector<std::size_t> adj = cg.succ[c];
    adj.insert(adj.end(), cg.pred[c].begin(), cg.pred[c].end());
    for (auto p : adj) {
        if (!(cg.power(p) < cfg.lower_mJ)) continue;
        auto members = cg.clusters[c].members;
        members.insert(members.end(), cg.clusters[p].members.begin(), cg.clusters[p].members.end());
        double power = members.empty() ? cg.power(c) + cg.power(p) : cluster_power(cg.base, members).power_mJ;
        if (power <= cfg.upper_mJ && detail::merge_keeps_acyclic(cg, c, p)) return true;
    }
    return false;
}

struct PolicyReport {
    std::size_t clusters = 0;
    std::size_t gates = 0;
    double min_mJ = 0, avg_mJ = 0, max_mJ = 0;
    /// Mean energy per gate, the alternative reading of the average bound.
    double avg_per_gate_mJ = 0;
    std::vector<std::size_t> histogram;  ///< 10 equal bins over [0, max]
    std::vector<std::string> violations;
    std::vector<std::string> warnings;
};

[[nodiscard]] inline PolicyReport policy_report(const ClusterGraph& cg, const PolicyConfig& cfg) {
    PolicyReport r;
    r.clusters = cg.size();
    r.histogram.assign(10, 0);
    if (cg.size() == 0) return r;
    r.min_mJ = std::numeric_limits<double>::infinity();
    double sum = 0;
    for (const auto& c : cg.clusters) {
        r.min_mJ = std::min(r.min_mJ, c.features.power_mJ);
        r.max_mJ = std::max(r.max_mJ, c.features.power_mJ);
        sum += c.features.power_mJ;
        r.gates += std::max<std::size_t>(c.members.size(), 1);
    }
    r.avg_mJ = sum / static_cast<double>(cg.size());
    r.avg_per_gate_mJ = sum / static_cast<double>(r.gates);
    for (const auto& c : cg.clusters) {
        auto bin = r.max_mJ > 0 ? static_cast<std::size_t>(c.features.power_mJ / r.max_mJ * 10.0) : 0;
        ++r.histogram[std::min<std::size_t>(bin, 9)];
    }
    for (std::size_t c = 0; c < cg.size(); ++c) {
        const auto& cl = cg.clusters[c];
        if (cfg.policy != Policy::P2 && cl.features.power_mJ > cfg.upper_mJ)
            r.violations.push_back("cluster '" + cl.name + "' above upper bound");
        if (cfg.policy != Policy::P1 && !cl.members.empty() && has_legal_merge(cg, c, cfg))
            r.violations.push_back("cluster '" + cl.name + "' below lower bound with a legal merge partner");
    }
    if (cfg.v_th_mJ > 0) {
        if (cfg.policy == Policy::P1 && !(r.avg_mJ < cfg.v_th_mJ))
            r.warnings.push_back("average cluster energy not below v_th");
        if (cfg.policy == Policy::P2 && !(r.max_mJ <= 0.5 * cfg.v_th_mJ))
            r.warnings.push_back("largest cluster not well below v_th");
    }
    if (cfg.policy != Policy::P1 && r.min_mJ < cfg.merge_ratio * r.max_mJ)
        r.warnings.push_back("smallest cluster below merge_ratio x largest");
    return r;
}

}  // namespace diac
