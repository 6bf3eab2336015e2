#pragma once

// JSON forms of cluster graphs and NVM plans, as exchanged between CLI stages.

#include <string>

#include <nlohmann/json.hpp>

#include "diac/cluster.hpp"
#include "diac/placement.hpp"
#include "diac/policy.hpp"
#include "diac/sim.hpp"
#include "diac/taskgraph.hpp"

namespace diac {

[[nodiscard]] inline json to_json(const FeatureRecord& f) {
    return {{"fan_in", f.fan_in}, {"fan_out", f.fan_out}, {"level", f.level}, {"power_mJ", f.power_mJ},
            {"delay_ns", f.delay_ns}};
}

[[nodiscard]] inline json to_json(const ClusterGraph& cg) {
    json out;
    const auto& g = cg.base.graph;
    const bool abstract = g.nodes.empty();
    if (!abstract) {
        out["graph"] = to_json(g, true);
        out["library"] = cg.base.library_name;
        json costs = json::object();
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const auto& c = cg.base.costs[i];
            costs[g.nodes[i].name] = {{"active_mJ", c.active_mJ}, {"static_uW", c.static_uW}, {"delay_ns", c.delay_ns}};
        }
        out["costs"] = std::move(costs);
    }
    json clusters = json::array();
    for (std::size_t c = 0; c < cg.size(); ++c) {
        const auto& cl = cg.clusters[c];
        json jc = {{"name", cl.name}, {"features", to_json(cl.features)}, {"signals_out", cl.signals_out}};
        json members = json::array();
        for (auto i : cl.members) members.push_back(g.nodes[i].name);
        if (!abstract) jc["members"] = std::move(members);
        json succ = json::array();
        for (auto s : cg.succ[c]) succ.push_back(cg.clusters[s].name);
        jc["succ"] = std::move(succ);
        clusters.push_back(std::move(jc));
    }
    out["clusters"] = std::move(clusters);
    return out;
}

[[nodiscard]] inline ClusterGraph cluster_graph_from_json(const json& doc) {
    try {
        const auto& jclusters = doc.at("clusters");
        if (!doc.contains("graph")) {
            std::vector<AbstractCluster> cl;
            std::map<std::string, std::size_t> index;
            for (const auto& jc : jclusters) {
                index[jc.at("name").get<std::string>()] = cl.size();
                cl.push_back({jc.at("name").get<std::string>(), jc.at("features").at("power_mJ").get<double>(),
                              jc.value("signals_out", std::size_t{1}), jc.at("features").value("delay_ns", 0.0)});
            }
            std::vector<std::pair<std::size_t, std::size_t>> edges;
            for (const auto& jc : jclusters)
                for (const auto& s : jc.value("succ", json::array())) {
                    auto it = index.find(s.get<std::string>());
                    if (it == index.end()) throw GraphError("edge to unknown cluster '" + s.get<std::string>() + "'");
                    edges.emplace_back(index.at(jc.at("name").get<std::string>()), it->second);
                }
            return make_abstract_cluster_graph(cl, edges);
        }
        auto g = taskgraph_from_json(doc.at("graph"));
        std::vector<GateCost> costs(g.nodes.size());
        const auto& jcosts = doc.at("costs");
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            const auto& jc = jcosts.at(g.nodes[i].name);
            costs[i] = {jc.at("active_mJ").get<double>(), jc.at("static_uW").get<double>(),
                        jc.at("delay_ns").get<double>()};
        }
        auto ag = annotate_with_costs(std::move(g), std::move(costs), doc.value("library", std::string()));
        std::vector<std::pair<std::string, std::vector<std::size_t>>> part;
        for (const auto& jc : jclusters) {
            std::vector<std::size_t> members;
            for (const auto& m : jc.at("members")) {
                auto i = ag.graph.find(m.get<std::string>());
                if (!i) throw GraphError("cluster member '" + m.get<std::string>() + "' is not in the graph");
                members.push_back(*i);
            }
            part.emplace_back(jc.at("name").get<std::string>(), std::move(members));
        }
        return build_cluster_graph(std::move(ag), std::move(part));
    } catch (const json::exception& e) {
        throw ParseError(std::string("cluster graph: ") + e.what(), 0);
    }
}

[[nodiscard]] inline json to_json(const NvmParams& p) {
    return {{"technology", std::string(to_string(p.technology))},
            {"write_mJ_per_word", p.write_mJ_per_word},
            {"read_mJ_per_word", p.read_mJ_per_word},
            {"write_latency_ns", p.write_latency_ns},
            {"word_bits", p.word_bits}};
}

[[nodiscard]] inline NvmParams nvm_params_from_json(const json& j) {
    NvmParams p;
    try {
        auto tech = j.value("technology", std::string("custom"));
        p.technology = tech == "MRAM" ? NvmTechnology::Mram : tech == "ReRAM" ? NvmTechnology::Reram : NvmTechnology::Custom;
        p.write_mJ_per_word = j.at("write_mJ_per_word").get<double>();
        p.read_mJ_per_word = j.at("read_mJ_per_word").get<double>();
        p.write_latency_ns = j.value("write_latency_ns", p.write_latency_ns);
        p.word_bits = j.value("word_bits", p.word_bits);
    } catch (const json::exception& e) {
        throw ParseError(std::string("nvm parameters: ") + e.what(), 0);
    }
    p.check();
    return p;
}

[[nodiscard]] inline json to_json(const NvmPlan& plan) {
    json cuts = json::array();
    for (const auto& c : plan.cuts)
        cuts.push_back({{"cluster", c.cluster},
                        {"signals_stored", c.signals_stored},
                        {"backup_mJ", c.backup_mJ},
                        {"restore_mJ", c.restore_mJ},
                        {"checkpoint_mJ", c.checkpoint_mJ}});
    return {{"budget_mJ", plan.budget_mJ},
            {"nvm", to_json(plan.nvm)},
            {"cuts", std::move(cuts)},
            {"words_per_pass", plan.words_per_pass()},
            {"residual_accumulation", plan.residual_accumulation}};
}

[[nodiscard]] inline NvmPlan nvm_plan_from_json(const json& j) {
    NvmPlan plan;
    try {
        plan.budget_mJ = j.at("budget_mJ").get<double>();
        plan.nvm = nvm_params_from_json(j.at("nvm"));
        for (const auto& c : j.at("cuts"))
            plan.cuts.push_back({c.at("cluster").get<std::string>(), c.at("signals_stored").get<std::size_t>(),
                                 c.at("backup_mJ").get<double>(), c.at("restore_mJ").get<double>(),
                                 c.value("checkpoint_mJ", 0.0)});
        if (j.contains("residual_accumulation"))
            plan.residual_accumulation = j["residual_accumulation"].get<std::map<std::string, double>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("nvm plan: ") + e.what(), 0);
    }
    std::sort(plan.cuts.begin(), plan.cuts.end(), [](const auto& a, const auto& b) { return a.cluster < b.cluster; });
    return plan;
}

[[nodiscard]] inline std::string_view to_string(Policy p) {
    switch (p) {
        case Policy::P1: return "p1";
        case Policy::P2: return "p2";
        case Policy::P3: return "p3";
    }
    return "?";
}

[[nodiscard]] inline json to_json(const PolicyConfig& c) {
    return {{"policy", std::string(to_string(c.policy))}, {"upper_mJ", c.upper_mJ}, {"lower_mJ", c.lower_mJ},
            {"v_th_mJ", c.v_th_mJ},   {"v_peak_mJ", c.v_peak_mJ}, {"merge_ratio", c.merge_ratio}};
}

[[nodiscard]] inline json to_json(const PolicyReport& r) {
    return {{"clusters", r.clusters},   {"gates", r.gates},           {"min_mJ", r.min_mJ},
            {"avg_mJ", r.avg_mJ},       {"max_mJ", r.max_mJ},         {"avg_per_gate_mJ", r.avg_per_gate_mJ},
            {"histogram", r.histogram}, {"violations", r.violations}, {"warnings", r.warnings}};
}

[[nodiscard]] inline json to_json(const PlacementWeights& w) {
    return {{"level", w.level}, {"power", w.power}, {"fan", w.fan}};
}

[[nodiscard]] inline json to_json(const Thresholds& t) {
    return {{"off", t.off}, {"bk", t.bk}, {"safe_zone", t.safe_zone}, {"se", t.se}, {"cp", t.cp}, {"tr", t.tr}};
}

[[nodiscard]] inline json to_json(const EnergyConfig& c) {
    return {{"capacitance_mF", c.capacitance_mF},
            {"voltage_V", c.voltage_V},
            {"E_MAX_mJ", c.e_max()},
            {"leakage_mW", c.leakage_mW},
            {"op_costs", {{"sense", c.op_costs.sense_mJ}, {"compute", c.op_costs.compute_mJ},
                          {"transmit", c.op_costs.transmit_mJ}}},
            {"uncertainty", c.uncertainty},
            {"tick_ms", c.tick_ms},
            {"compute_duration_ms", c.compute_duration_ms},
            {"transmit_duration_ms", c.transmit_duration_ms},
            {"sampling_interval_ms", c.sampling_interval_ms},
            {"target_harvest_mW", c.target_harvest_mW},
            {"max_interval_factor", c.max_interval_factor},
            {"initial_energy_mJ", c.initial_energy_mJ},
            {"safe_zone_enabled", c.safe_zone_enabled},
            {"safe_margin_mJ", c.safe_margin_mJ},
            {"off_mJ", c.off_mJ},
            {"backup_headroom", c.backup_headroom},
            {"dispatch_headroom", c.dispatch_headroom},
            {"transmit_required", c.transmit_required}};
}

/// Every field is optional; missing ones keep their defaults.
[[nodiscard]] inline EnergyConfig energy_config_from_json(const json& j) {
    EnergyConfig c;
    try {
        auto num = [&](const char* key, double& dst) {
            if (j.contains(key)) dst = j.at(key).get<double>();
        };
        num("capacitance_mF", c.capacitance_mF);
        num("voltage_V", c.voltage_V);
        num("leakage_mW", c.leakage_mW);
        num("uncertainty", c.uncertainty);
        num("tick_ms", c.tick_ms);
        num("compute_duration_ms", c.compute_duration_ms);
        num("transmit_duration_ms", c.transmit_duration_ms);
        num("sampling_interval_ms", c.sampling_interval_ms);
        num("target_harvest_mW", c.target_harvest_mW);
        num("max_interval_factor", c.max_interval_factor);
        num("initial_energy_mJ", c.initial_energy_mJ);
        num("safe_margin_mJ", c.safe_margin_mJ);
        num("off_mJ", c.off_mJ);
        num("backup_headroom", c.backup_headroom);
        num("dispatch_headroom", c.dispatch_headroom);
        if (j.contains("safe_zone_enabled")) c.safe_zone_enabled = j.at("safe_zone_enabled").get<bool>();
        if (j.contains("transmit_required")) c.transmit_required = j.at("transmit_required").get<bool>();
        if (j.contains("op_costs")) {
            const auto& o = j.at("op_costs");
            c.op_costs.sense_mJ = o.value("sense", c.op_costs.sense_mJ);
            c.op_costs.compute_mJ = o.value("compute", c.op_costs.compute_mJ);
            c.op_costs.transmit_mJ = o.value("transmit", c.op_costs.transmit_mJ);
        }
        if (j.contains("thresholds")) {
            const auto& t = j.at("thresholds");
            auto opt = [&](const char* key, std::optional<double>& dst) {
                if (t.contains(key)) dst = t.at(key).get<double>();
            };
            opt("off", c.overrides.off);
            opt("bk", c.overrides.bk);
            opt("safe_zone", c.overrides.safe_zone);
            opt("se", c.overrides.se);
            opt("cp", c.overrides.cp);
            opt("tr", c.overrides.tr);
        }
    } catch (const json::exception& e) {
        throw Error(std::string("energy config: ") + e.what());
    }
    c.check();
    return c;
}

[[nodiscard]] inline json to_json(const EnergyLedger& e) {
    return {{"initial", e.initial},   {"harvested", e.harvested}, {"spilled", e.spilled},
            {"sense", e.sense},       {"compute", e.compute},     {"transmit", e.transmit},
            {"backup", e.backup},     {"restore", e.restore},     {"commit", e.commit},
            {"leakage", e.leakage},   {"consumed", e.consumed()}, {"final", e.final_energy},
            {"drift", e.drift()}};
}

[[nodiscard]] inline json to_json(const SimReport& r) {
    double pdp = compute_pdp(r);
    return {{"completed_cycles", r.completed_cycles},
            {"nvm_word_writes", r.nvm_word_writes},
            {"commit_word_writes", r.commit_word_writes},
            {"backups", r.backups},
            {"restores", r.restores},
            {"shutdowns", r.shutdowns},
            {"safe_zone_entries", r.safe_zone_entries},
            {"safe_zone_recoveries", r.safe_zone_recoveries},
            {"backup_recoveries", r.backup_recoveries},
            {"energy_mJ", to_json(r.energy)},
            {"rollback_mJ", r.rollback_mJ},
            {"makespan_ms", r.makespan_ms},
            {"duration_ms", r.duration_ms},
            {"ticks", r.ticks},
            {"min_energy_mJ", r.min_energy},
            {"max_energy_mJ", r.max_energy},
            {"pdp_mJ_ms", std::isfinite(pdp) ? json(pdp) : json(nullptr)},
            {"thresholds", to_json(r.thresholds)}};
}

}  // namespace diac
