#pragma once

// NVM insertion over a cluster DAG.
//
// A cut at cluster n stores n's outgoing signals in NVM after n executes.
// Along any input-to-output path the energy spent between consecutive cuts
// (restore of the opening cut + cluster energies + backup of the closing
// cut) must fit the budget, and every stage may only read primary inputs,
// registers, or NVM outputs of earlier stages.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "diac/cluster.hpp"
#include "diac/error.hpp"

namespace diac {

enum class NvmTechnology { Mram, Reram, Custom };

[[nodiscard]] inline std::string_view to_string(NvmTechnology t) {
    switch (t) {
        case NvmTechnology::Mram: return "MRAM";
        case NvmTechnology::Reram: return "ReRAM";
        case NvmTechnology::Custom: return "custom";
    }
    return "?";
}

/// ReRAM writes cost this many MRAM writes.
inline constexpr double kReramWriteFactor = 4.4;

struct NvmParams {
    NvmTechnology technology = NvmTechnology::Mram;
    double write_mJ_per_word = 0.001;
    double read_mJ_per_word = 0.0002;
    double write_latency_ns = 10.0;
    std::size_t word_bits = 32;

    /// Synthetic MRAM preset (not characterized silicon data).
    [[nodiscard]] static NvmParams mram() { return {}; }

    [[nodiscard]] static NvmParams reram() {
        NvmParams p;
        p.technology = NvmTechnology::Reram;
        p.write_mJ_per_word = kReramWriteFactor * mram().write_mJ_per_word;
        return p;
    }

    void check() const {
        if (!(read_mJ_per_word > 0 && write_mJ_per_word >= read_mJ_per_word))
            throw Error("nvm: need write energy >= read energy > 0");
        if (write_latency_ns < 0 || word_bits == 0) throw Error("nvm: bad latency or word size");
    }

    /// One signal occupies one word.
    [[nodiscard]] double backup_mJ(std::size_t signals) const {
        return static_cast<double>(signals) * write_mJ_per_word;
    }
    [[nodiscard]] double restore_mJ(std::size_t signals) const {
        return static_cast<double>(signals) * read_mJ_per_word;
    }
};

struct PlacementWeights {
    double level = 1.0;
    double power = 1.0;
    double fan = 1.0;

    void check() const {
        if (level < 0 || power < 0 || fan < 0 || (level == 0 && power == 0 && fan == 0))
            throw Error("placement weights must be non-negative and not all zero");
    }
};

struct CutRecord {
    std::string cluster;
    std::size_t signals_stored = 0;
    double backup_mJ = 0;
    double restore_mJ = 0;
    /// Accumulated energy of the cut node's cone when the cut closes it.
    double checkpoint_mJ = 0;
};

struct NvmPlan {
    double budget_mJ = 0;
    NvmParams nvm;
    std::vector<CutRecord> cuts;  ///< sorted by cluster name
    std::map<std::string, double> residual_accumulation;

    [[nodiscard]] bool is_cut(std::string_view cluster) const {
        return std::any_of(cuts.begin(), cuts.end(), [&](const auto& c) { return c.cluster == cluster; });
    }

    [[nodiscard]] std::size_t words_per_pass() const {
        std::size_t w = 0;
        for (const auto& c : cuts) w += c.signals_stored;
        return w;
    }
};

using CutSet = std::vector<bool>;

[[nodiscard]] inline CutSet cut_set_of(const ClusterGraph& cg, const NvmPlan& plan) {
    CutSet cuts(cg.size(), false);
    for (const auto& c : plan.cuts) {
        auto i = cg.find(c.cluster);
        if (!i) throw GraphError("plan names unknown cluster '" + c.cluster + "'");
        cuts[*i] = true;
    }
    return cuts;
}

enum class CheckpointSemantics {
    /// Downstream accumulation restarts at the cut's restore energy.
    Restore,
    /// Downstream accumulation restarts at the cut's checkpoint value (P_total + P_n).
    Propagate,
};

/// Cone accumulation: each cluster's own energy plus every ancestor reachable
/// without crossing a cut, each counted once. A cut in the cone contributes
/// its restore energy (or, with Propagate, its own accumulated value) instead
/// of its ancestors.
[[nodiscard]] inline std::vector<double> accumulate(const ClusterGraph& cg, const CutSet& cuts,
                                                    const NvmParams* nvm = nullptr,
                                                    CheckpointSemantics sem = CheckpointSemantics::Restore) {
    const auto n = cg.size();
    auto order = cg.topological_order();
    std::vector<std::vector<bool>> cone(n, std::vector<bool>(n, false));
    std::vector<std::vector<bool>> boundary(n, std::vector<bool>(n, false));
    std::vector<double> total(n, 0.0);
    for (auto c : order) {
        for (auto p : cg.pred[c]) {
            if (cuts[p]) {
                boundary[c][p] = true;
                continue;
            }
            cone[c][p] = true;
            for (std::size_t k = 0; k < n; ++k) {
                if (cone[p][k]) cone[c][k] = true;
                if (boundary[p][k]) boundary[c][k] = true;
            }
        }
        double t = cg.power(c);
        for (std::size_t k = 0; k < n; ++k) {
            if (cone[c][k]) t += cg.power(k);
            if (boundary[c][k]) {
                if (sem == CheckpointSemantics::Propagate)
                    t += total[k];
                else if (nvm)
                    t += nvm->restore_mJ(cg.clusters[k].signals_out);
            }
        }
        total[c] = t;
    }
    return total;
}

struct GraphExtremes {
    int max_level = 0;
    double max_total = 0;
    std::size_t max_fan = 0;
};

[[nodiscard]] inline double score(const FeatureRecord& f, double p_total, const GraphExtremes& ext,
                                  const PlacementWeights& w) {
    double s = 0;
    if (ext.max_level > 0) s += w.level * static_cast<double>(f.level) / ext.max_level;
    if (ext.max_total > 0) s += w.power * p_total / ext.max_total;
    if (ext.max_fan > 0) s += w.fan * static_cast<double>(f.fan_in + f.fan_out) / static_cast<double>(ext.max_fan);
    return s;
}

/// Criterion score of every cluster with no cuts placed.
[[nodiscard]] inline std::vector<double> score_all(const ClusterGraph& cg, const PlacementWeights& w) {
    auto totals = accumulate(cg, CutSet(cg.size(), false));
    GraphExtremes ext;
    for (std::size_t c = 0; c < cg.size(); ++c) {
        const auto& f = cg.clusters[c].features;
        ext.max_level = std::max(ext.max_level, f.level);
        ext.max_total = std::max(ext.max_total, totals[c]);
        ext.max_fan = std::max(ext.max_fan, f.fan_in + f.fan_out);
    }
    std::vector<double> s(cg.size());
    for (std::size_t c = 0; c < cg.size(); ++c) s[c] = score(cg.clusters[c].features, totals[c], ext, w);
    return s;
}

/// Checkpoint stage of each cluster: the number of cuts crossed on the way in.
[[nodiscard]] inline std::vector<int> stage_index(const ClusterGraph& cg, const CutSet& cuts) {
    std::vector<int> stage(cg.size(), 0);
    for (auto c : cg.topological_order())
        for (auto p : cg.pred[c]) stage[c] = std::max(stage[c], stage[p] + (cuts[p] ? 1 : 0));
    return stage;
}

struct CutCheck {
    bool consistent = true;
    bool feasible = true;
    std::string offender;
    /// Path accumulation per cluster (worst path since the last cut).
    std::vector<double> path_energy;
};

inline constexpr double kBudgetSlack = 1e-9;

/// Path-energy and restore-consistency check of a cut set.
[[nodiscard]] inline CutCheck check_cuts(const ClusterGraph& cg, const CutSet& cuts, double budget,
                                         const NvmParams& nvm) {
    CutCheck r;
    auto order = cg.topological_order();
    auto stage = stage_index(cg, cuts);
    r.path_energy.assign(cg.size(), 0.0);
    for (auto c : order) {
        double in = 0;
        for (auto p : cg.pred[c]) {
            if (!cuts[p] && stage[p] != stage[c] && r.consistent) {
                r.consistent = false;
                r.offender = cg.clusters[p].name;
            }
            in = std::max(in, cuts[p] ? nvm.restore_mJ(cg.clusters[p].signals_out) : r.path_energy[p]);
        }
        r.path_energy[c] = in + cg.power(c);
        double need = r.path_energy[c];
        if (cuts[c]) need += nvm.backup_mJ(cg.clusters[c].signals_out);
        if ((cuts[c] || cg.succ[c].empty()) && need > budget + kBudgetSlack && r.feasible) {
            r.feasible = false;
            if (r.consistent) r.offender = cg.clusters[c].name;
        }
    }
    return r;
}

struct PlaceOptions {
    /// Fraction of the budget the sweep may plan against.
    double safety = 1.0;
    CheckpointSemantics semantics = CheckpointSemantics::Restore;
    /// Largest graph on which pair moves are tried during refinement.
    std::size_t pair_move_limit = 40;
};

namespace detail {

inline std::size_t cut_words(const ClusterGraph& cg, const CutSet& cuts) {
    std::size_t w = 0;
    for (std::size_t c = 0; c < cg.size(); ++c)
        if (cuts[c]) w += cg.clusters[c].signals_out;
    return w;
}

inline bool cuts_ok(const ClusterGraph& cg, const CutSet& cuts, double budget, const NvmParams& nvm) {
    auto r = check_cuts(cg, cuts, budget, nvm);
    return r.consistent && r.feasible;
}

// Adds the non-cut producers a later stage reads until the cut set is consistent.
inline void close_cuts(const ClusterGraph& cg, CutSet& cuts) {
    while (true) {
        auto stage = stage_index(cg, cuts);
        bool changed = false;
        for (std::size_t c = 0; c < cg.size(); ++c)
            for (auto p : cg.pred[c])
                if (!cuts[p] && stage[p] < stage[c]) {
                    cuts[p] = true;
                    changed = true;
                }
        if (!changed) return;
    }
}

// Repairs consistency the other way: drops the cuts that lift a consumer
// above one of its unsaved producers.
inline void uncut_closure(const ClusterGraph& cg, CutSet& cuts) {
    while (true) {
        auto stage = stage_index(cg, cuts);
        bool changed = false;
        for (std::size_t v = 0; v < cg.size(); ++v)
            for (auto u : cg.pred[v])
                if (!cuts[u] && stage[u] < stage[v])
                    for (auto p : cg.pred[v])
                        if (cuts[p] && stage[p] + 1 > stage[u]) {
                            cuts[p] = false;
                            changed = true;
                        }
        if (!changed) return;
    }
}

// Uncut ancestors of `v` back to the nearest cuts, plus `v` itself.
inline std::vector<std::size_t> open_cone(const ClusterGraph& cg, const CutSet& cuts, std::size_t v) {
    std::vector<bool> seen(cg.size(), false);
    std::vector<std::size_t> stack{v}, out;
    seen[v] = true;
    while (!stack.empty()) {
        auto x = stack.back();
        stack.pop_back();
        out.push_back(x);
        for (auto p : cg.pred[x])
            if (!cuts[p] && !seen[p]) {
                seen[p] = true;
                stack.push_back(p);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// First cluster, bottom-up, whose segment overflows the budget.
inline std::optional<std::size_t> first_overflow(const ClusterGraph& cg, const CutSet& cuts, double budget,
                                                 const NvmParams& nvm, const std::vector<double>& path) {
    for (auto c : cg.topological_order()) {
        double need = path[c] + (cuts[c] ? nvm.backup_mJ(cg.clusters[c].signals_out) : 0.0);
        if ((cuts[c] || cg.succ[c].empty()) && need > budget + kBudgetSlack) return c;
    }
    return std::nullopt;
}

// Bottom-up sweep. Walking the levels upward, the first cluster whose segment
// overflows is relieved by a cut somewhere in its open cone; each candidate
// is priced with the extra cuts needed to keep the stages consistent.
inline std::optional<CutSet> sweep(const ClusterGraph& cg, double budget, const NvmParams& nvm,
                                   const std::vector<double>& scores, std::string& offender) {
    CutSet cuts(cg.size(), false);
    while (true) {
        auto r = check_cuts(cg, cuts, budget, nvm);
        auto v = first_overflow(cg, cuts, budget, nvm, r.path_energy);
        if (!v) return cuts;
        struct Option {
            CutSet cuts;
            bool relieves;
            double path;
            std::size_t words;
            double score;
        };
        std::optional<Option> best;
        for (auto x : open_cone(cg, cuts, *v)) {
            if (cuts[x] || cg.succ[x].empty()) continue;
            CutSet cand = cuts;
            cand[x] = true;
            close_cuts(cg, cand);
            auto rc = check_cuts(cg, cand, budget, nvm);
            double need = rc.path_energy[*v] + (cand[*v] ? nvm.backup_mJ(cg.clusters[*v].signals_out) : 0.0);
            Option o{cand, need <= budget + kBudgetSlack, need, cut_words(cg, cand), 0.0};
            for (std::size_t c = 0; c < cg.size(); ++c)
                if (cand[c]) o.score += scores[c];
            auto key = [](const Option& a) { return std::tuple(!a.relieves, a.relieves ? 0.0 : a.path, a.words, -a.score); };
            if (!best || key(o) < key(*best)) best = std::move(o);
        }
        if (!best) {
            offender = cg.clusters[*v].name;
            return std::nullopt;
        }
        cuts = std::move(best->cuts);
    }
}

struct Objective {
    std::size_t words;
    double score;
    bool operator<(const Objective& o) const {
        if (words != o.words) return words < o.words;
        return score > o.score + 1e-12;
    }
};

inline Objective objective(const ClusterGraph& cg, const CutSet& cuts, const std::vector<double>& scores) {
    Objective o{cut_words(cg, cuts), 0.0};
    for (std::size_t c = 0; c < cg.size(); ++c)
        if (cuts[c]) o.score += scores[c];
    return o;
}

// Drops checkpoints, largest first, while the plan stays valid.
inline void prune(const ClusterGraph& cg, CutSet& cuts, double budget, const NvmParams& nvm,
                  std::optional<std::size_t> keep = std::nullopt) {
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<std::size_t> on;
        for (std::size_t c = 0; c < cg.size(); ++c)
            if (cuts[c]) on.push_back(c);
        std::stable_sort(on.begin(), on.end(), [&](auto a, auto b) {
            return cg.clusters[a].signals_out > cg.clusters[b].signals_out;
        });
        for (auto c : on) {
            if (c == keep) continue;
            CutSet cand = cuts;
            cand[c] = false;
            CutSet thin = cand;
            uncut_closure(cg, thin);
            for (auto* option : {&thin, &cand}) {
                if (keep && !(*option)[*keep]) continue;
                if (cut_words(cg, *option) < cut_words(cg, cuts) && cuts_ok(cg, *option, budget, nvm)) {
                    cuts = *option;
                    changed = true;
                    break;
                }
            }
            if (changed) break;
        }
    }
}

// Steepest-descent refinement over remove / move / merge-two / split-one moves.
inline void refine(const ClusterGraph& cg, CutSet& cuts, double budget, const NvmParams& nvm,
                   const std::vector<double>& scores, const PlaceOptions& opt) {
    const auto n = cg.size();
    const bool pairs = n <= opt.pair_move_limit;
    while (true) {
        auto best_obj = objective(cg, cuts, scores);
        std::optional<CutSet> best;
        auto consider = [&](CutSet cand) {
            close_cuts(cg, cand);
            auto o = objective(cg, cand, scores);
            if (o < best_obj && cuts_ok(cg, cand, budget, nvm)) {
                best_obj = o;
                best = std::move(cand);
            }
        };
        std::vector<std::size_t> on, off;
        for (std::size_t c = 0; c < n; ++c) (cuts[c] ? on : off).push_back(c);
        for (auto x : off) {
            if (cg.succ[x].empty()) continue;
            CutSet cand = cuts;
            cand[x] = true;
            close_cuts(cg, cand);
            prune(cg, cand, budget, nvm, x);
            consider(cand);
        }
        for (auto c : on) {
            CutSet cand = cuts;
            cand[c] = false;
            consider(cand);
            {
                CutSet thin = cand;
                uncut_closure(cg, thin);
                consider(thin);
            }
            for (auto x : off) {
                cand[x] = true;
                consider(cand);
                if (pairs)
                    for (auto y : off)
                        if (y > x) {
                            cand[y] = true;
                            consider(cand);
                            cand[y] = false;
                        }
                cand[x] = false;
            }
            if (pairs)
                for (auto d : on)
                    if (d > c) {
                        cand[d] = false;
                        for (auto x : off) {
                            cand[x] = true;
                            consider(cand);
                            cand[x] = false;
                        }
                        cand[d] = true;
                    }
        }
        if (!best) return;
        cuts = std::move(*best);
    }
}

// Second start: checkpoint every cluster that has a consumer, then drop the
// checkpoints whose own write overflows the budget.
inline std::optional<CutSet> dense_start(const ClusterGraph& cg, double budget, const NvmParams& nvm) {
    CutSet cuts(cg.size(), false);
    for (std::size_t c = 0; c < cg.size(); ++c) cuts[c] = !cg.succ[c].empty();
    for (std::size_t round = 0; round <= 2 * cg.size(); ++round) {
        auto r = check_cuts(cg, cuts, budget, nvm);
        auto v = first_overflow(cg, cuts, budget, nvm, r.path_energy);
        if (!v) return cuts;
        if (!cuts[*v]) return std::nullopt;
        cuts[*v] = false;
        close_cuts(cg, cuts);
        if (cuts[*v]) return std::nullopt;
    }
    return std::nullopt;
}

// Topological order if the cluster DAG is one simple path.
inline std::optional<std::vector<std::size_t>> chain_order(const ClusterGraph& cg) {
    std::optional<std::size_t> head;
    for (std::size_t c = 0; c < cg.size(); ++c) {
        if (cg.pred[c].size() > 1 || cg.succ[c].size() > 1) return std::nullopt;
        if (cg.pred[c].empty()) {
            if (head) return std::nullopt;
            head = c;
        }
    }
    if (!head) return std::nullopt;
    std::vector<std::size_t> order{*head};
    while (!cg.succ[order.back()].empty()) order.push_back(cg.succ[order.back()].front());
    if (order.size() != cg.size()) return std::nullopt;
    return order;
}

// Exact segmentation of a chain: fewest words, then highest summed score.
inline std::optional<CutSet> chain_optimum(const ClusterGraph& cg, const std::vector<std::size_t>& order,
                                           double budget, const NvmParams& nvm, const std::vector<double>& scores) {
    const auto n = order.size();
    struct Cell {
        bool reachable = false;
        Objective obj{0, 0.0};
        std::ptrdiff_t prev = -1;
    };
    // best[i]: segments covering order[0..i] with a cut at order[i]; index n is the sink end.
    std::vector<Cell> best(n + 1);
    auto words = [&](std::size_t i) { return cg.clusters[order[i]].signals_out; };
    for (std::size_t j = 0; j <= n; ++j) {
        const bool end = j == n;
        const std::size_t last = end ? n - 1 : j;
        if (!end && j == n - 1) continue;  // a sink never needs a checkpoint
        for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(last) - 1; i >= -1; --i) {
            if (i >= 0 && !best[static_cast<std::size_t>(i)].reachable) continue;
            double seg = i >= 0 ? nvm.restore_mJ(words(static_cast<std::size_t>(i))) : 0.0;
            for (auto k = static_cast<std::size_t>(i + 1); k <= last; ++k) seg += cg.power(order[k]);
            if (!end) seg += nvm.backup_mJ(words(j));
            if (seg > budget + kBudgetSlack) continue;
            Objective o = i >= 0 ? best[static_cast<std::size_t>(i)].obj : Objective{0, 0.0};
            if (!end) {
                o.words += words(j);
                o.score += scores[order[j]];
            }
            if (!best[j].reachable || o < best[j].obj) best[j] = {true, o, i};
        }
    }
    if (!best[n].reachable) return std::nullopt;
    CutSet cuts(cg.size(), false);
    for (auto i = best[n].prev; i >= 0; i = best[static_cast<std::size_t>(i)].prev) cuts[order[static_cast<std::size_t>(i)]] = true;
    return cuts;
}

}  // namespace detail

[[nodiscard]] inline NvmPlan make_plan(const ClusterGraph& cg, const CutSet& cuts, double budget,
                                       const NvmParams& nvm,
                                       CheckpointSemantics sem = CheckpointSemantics::Restore) {
    NvmPlan plan;
    plan.budget_mJ = budget;
    plan.nvm = nvm;
    auto totals = accumulate(cg, cuts, &nvm, sem);
    for (std::size_t c = 0; c < cg.size(); ++c) {
        plan.residual_accumulation[cg.clusters[c].name] = totals[c];
        if (!cuts[c]) continue;
        const auto w = cg.clusters[c].signals_out;
        plan.cuts.push_back({cg.clusters[c].name, w, nvm.backup_mJ(w), nvm.restore_mJ(w), totals[c]});
    }
    std::sort(plan.cuts.begin(), plan.cuts.end(), [](const auto& a, const auto& b) { return a.cluster < b.cluster; });
    return plan;
}

/// Chooses NVM insertion points minimizing word writes under `budget`.
[[nodiscard]] inline NvmPlan place(const ClusterGraph& cg, double budget, const NvmParams& nvm,
                                   const PlacementWeights& weights = {}, const PlaceOptions& opt = {}) {
    nvm.check();
    weights.check();
    if (cg.size() == 0) throw GraphError("place: cluster graph has no clusters");
    if (!(opt.safety > 0 && opt.safety <= 1)) throw Error("place: safety factor must be in (0, 1]");
    const double eff = budget * opt.safety;
    for (std::size_t c = 0; c < cg.size(); ++c) {
        double need = cg.power(c) + (cg.succ[c].empty() ? 0.0 : nvm.backup_mJ(cg.clusters[c].signals_out));
        if (need > eff + kBudgetSlack)
            throw InfeasibleError("cluster '" + cg.clusters[c].name + "' cannot fit the budget; split it first",
                                  cg.clusters[c].name);
    }
    auto scores = score_all(cg, weights);
    if (auto order = detail::chain_order(cg)) {
        auto cuts = detail::chain_optimum(cg, *order, eff, nvm, scores);
        if (!cuts) throw InfeasibleError("no feasible placement on chain", cg.clusters[order->back()].name);
        return make_plan(cg, *cuts, budget, nvm, opt.semantics);
    }
    std::string offender;
    auto cuts = detail::sweep(cg, eff, nvm, scores, offender);
    if (cuts) detail::refine(cg, *cuts, eff, nvm, scores, opt);
    if (auto dense = detail::dense_start(cg, eff, nvm)) {
        detail::refine(cg, *dense, eff, nvm, scores, opt);
        if (!cuts || detail::objective(cg, *dense, scores) < detail::objective(cg, *cuts, scores)) cuts = std::move(dense);
    }
    if (!cuts) throw InfeasibleError("no feasible placement at cluster '" + offender + "'", offender);
    return make_plan(cg, *cuts, budget, nvm, opt.semantics);
}

struct PlanCost {
    std::size_t writes = 0;
    double backup_energy_total_mJ = 0;
    double restore_energy_total_mJ = 0;
};

[[nodiscard]] inline PlanCost plan_cost(const NvmPlan& plan, std::size_t workload_repeats) {
    PlanCost c;
    for (const auto& cut : plan.cuts) {
        c.writes += cut.signals_stored * workload_repeats;
        c.backup_energy_total_mJ += cut.backup_mJ * static_cast<double>(workload_repeats);
        c.restore_energy_total_mJ += cut.restore_mJ * static_cast<double>(workload_repeats);
    }
    return c;
}

}  // namespace diac
