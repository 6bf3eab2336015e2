#pragma once

// Turns an NVM-enhanced cluster graph into the per-cycle compute workload the
// simulator executes: an ordered list of stages with their live and commit
// word counts.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diac/codegen.hpp"
#include "diac/error.hpp"
#include "diac/placement.hpp"
#include "diac/sim.hpp"

namespace diac {

struct StagedCluster {
    std::string name;
    int stage = 0;
    bool cut = false;
    double power_mJ = 0;
    std::size_t signals_out = 0;
    std::vector<std::size_t> succ;
};

[[nodiscard]] inline std::vector<StagedCluster> staged_clusters(const NvNetlist& nv) {
    const auto& cg = nv.graph;
    std::vector<StagedCluster> out(cg.size());
    for (std::size_t c = 0; c < cg.size(); ++c) {
        const auto& cl = cg.clusters[c];
        out[c] = {cl.name, nv.stage_index.at(cl.name), nv.plan.is_cut(cl.name), cl.features.power_mJ,
                  cl.signals_out, cg.succ[c]};
    }
    return out;
}

/// Reads the `clusters` array of an NV-netlist document.
[[nodiscard]] inline std::vector<StagedCluster> staged_clusters_from_json(const nlohmann::json& doc) {
    try {
        const auto& arr = doc.at("clusters");
        std::vector<StagedCluster> out;
        std::map<std::string, std::size_t> index;
        for (const auto& j : arr) {
            StagedCluster c;
            c.name = j.at("name").get<std::string>();
            c.stage = j.at("stage").get<int>();
            c.cut = j.at("cut").get<bool>();
            c.power_mJ = j.at("power_mJ").get<double>();
            c.signals_out = j.at("signals_out").get<std::size_t>();
            if (c.stage < 0) throw Error("nv netlist: negative stage on '" + c.name + "'");
            if (!index.emplace(c.name, out.size()).second) throw Error("nv netlist: duplicate cluster '" + c.name + "'");
            out.push_back(std::move(c));
        }
        std::size_t k = 0;
        for (const auto& j : arr) {
            for (const auto& s : j.value("succ", nlohmann::json::array())) {
                auto it = index.find(s.get<std::string>());
                if (it == index.end()) throw Error("nv netlist: unknown successor '" + s.get<std::string>() + "'");
                out[k].succ.push_back(it->second);
            }
            ++k;
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("nv netlist: ") + e.what());
    }
}

struct WorkloadOptions {
    /// Energy of one netlist pass after scaling; 0 keeps the raw cluster powers.
    double pass_energy_mJ = 0;
    /// Netlist passes per compute operation.
    std::size_t repeats = 1;
    /// Write every cut cluster's outputs whenever its stage completes.
    bool commit_every_stage = false;
    /// Fraction of NVM words physically present; word counts are rounded up.
    double word_ratio = 1.0;
    std::size_t sample_words = 1;
};

namespace detail {

inline std::size_t scaled_words(std::size_t words, double ratio) {
    if (words == 0) return 0;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(static_cast<double>(words) * ratio - 1e-9)));
}

}  // namespace detail

/// Stage s costs the sum of its clusters. After stage s completes, the live
/// words are the cut outputs still awaited by a later stage plus every
/// finished primary output.
[[nodiscard]] inline Workload build_workload(const std::vector<StagedCluster>& cs, const NvmParams& nvm,
                                             const WorkloadOptions& opt, std::string name = "netlist") {
    if (cs.empty()) throw Error("workload: empty cluster graph");
    if (opt.repeats == 0) throw Error("workload: repeats must be at least 1");
    if (!(opt.word_ratio > 0 && opt.word_ratio <= 1)) throw Error("workload: word ratio must be in (0, 1]");
    nvm.check();
    int last = 0;
    double total = 0;
    for (const auto& c : cs) {
        last = std::max(last, c.stage);
        total += c.power_mJ;
    }
    if (!(total > 0)) throw Error("workload: graph has no energy");
    double scale = opt.pass_energy_mJ > 0 ? opt.pass_energy_mJ / total : 1.0;

    auto n = static_cast<std::size_t>(last) + 1;
    std::vector<WorkloadStage> pass(n);
    std::size_t result_words = 0;
    for (const auto& c : cs) {
        auto s = static_cast<std::size_t>(c.stage);
        pass[s].energy_mJ += c.power_mJ * scale;
        if (c.cut && opt.commit_every_stage) pass[s].commit_words += c.signals_out;
        if (c.succ.empty()) result_words += c.signals_out;
    }
    for (std::size_t b = 0; b < n; ++b) {
        std::size_t live = 0;
        for (const auto& c : cs) {
            if (static_cast<std::size_t>(c.stage) > b) continue;
            if (c.succ.empty()) {
                live += c.signals_out;
                continue;
            }
            bool awaited = std::any_of(c.succ.begin(), c.succ.end(),
                                       [&](std::size_t s) { return static_cast<std::size_t>(cs[s].stage) > b; });
            if (c.cut && awaited) live += c.signals_out;
        }
        pass[b].live_words = detail::scaled_words(live, opt.word_ratio);
        pass[b].commit_words = detail::scaled_words(pass[b].commit_words, opt.word_ratio);
    }
    // Stages with no cluster (possible only in hand-edited files) are dropped.
    std::erase_if(pass, [](const WorkloadStage& s) { return !(s.energy_mJ > 0); });

    Workload w;
    w.name = std::move(name);
    w.stages.reserve(pass.size() * opt.repeats);
    for (std::size_t r = 0; r < opt.repeats; ++r) w.stages.insert(w.stages.end(), pass.begin(), pass.end());
    w.sample_words = detail::scaled_words(opt.sample_words, opt.word_ratio);
    w.result_words = detail::scaled_words(std::max<std::size_t>(result_words, 1), opt.word_ratio);
    w.write_mJ_per_word = nvm.write_mJ_per_word;
    w.read_mJ_per_word = nvm.read_mJ_per_word;
    return w;
}

/// Smallest k >= 1 with k * graph_energy strictly above capacity.
[[nodiscard]] inline std::size_t amplify_workload(double graph_energy_mJ, double capacity_mJ) {
    if (!(graph_energy_mJ > 0)) throw Error("amplify_workload: graph energy must be positive");
    if (!(capacity_mJ >= 0)) throw Error("amplify_workload: capacity must be non-negative");
    auto k = static_cast<std::size_t>(std::floor(capacity_mJ / graph_energy_mJ)) + 1;
    while (k > 1 && static_cast<double>(k - 1) * graph_energy_mJ > capacity_mJ) --k;
    while (!(static_cast<double>(k) * graph_energy_mJ > capacity_mJ)) ++k;
    return k;
}

}  // namespace diac
