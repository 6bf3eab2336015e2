#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "diac/diac.hpp"

using namespace diac;

namespace {

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

json load_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

GateLibrary library_or_default(const std::string& path) {
    return load_gate_library(path.empty() ? std::string(DIAC_DEFAULT_LIBRARY) : path);
}

// Accepts a ClusterGraph document, or any circuit file which is then
// annotated and grouped into its operands.
ClusterGraph load_cluster_graph(const std::string& path, const std::string& lib_path) {
    if (circuit_format_of(path) == CircuitFormat::Json) {
        auto doc = load_json(path);
        if (doc.contains("clusters")) return cluster_graph_from_json(doc);
    }
    return operand_clusters(annotate(load_circuit(path), library_or_default(lib_path)));
}

NvmParams nvm_from_arg(const std::string& s) {
    if (s == "mram") return NvmParams::mram();
    if (s == "reram") return NvmParams::reram();
    return nvm_params_from_json(load_json(s));
}

PlacementWeights weights_from_arg(const std::string& s) {
    PlacementWeights w;
    std::istringstream in(s);
    std::string a, b, c, rest;
    if (!std::getline(in, a, ',') || !std::getline(in, b, ',') || !std::getline(in, c, ',') || std::getline(in, rest))
        throw Error("--weights wants three comma-separated numbers");
    try {
        w = {std::stod(a), std::stod(b), std::stod(c)};
    } catch (const std::exception&) {
        throw Error("--weights wants three comma-separated numbers");
    }
    w.check();
    return w;
}

Policy policy_from_arg(const std::string& s) {
    if (s == "p1") return Policy::P1;
    if (s == "p2") return Policy::P2;
    if (s == "p3") return Policy::P3;
    throw Error("unknown policy '" + s + "'");
}

struct ParseArgs {
    std::string file, format;
    bool levels = false;
};

int cmd_parse(const ParseArgs& a) {
    std::optional<CircuitFormat> fmt;
    if (!a.format.empty()) fmt = circuit_format_from_string(a.format);
    print(to_json(load_circuit(a.file, fmt), a.levels));
    return 0;
}

struct AnnotateArgs {
    std::string file, lib;
};

int cmd_annotate(const AnnotateArgs& a) {
    auto lib = library_or_default(a.lib);
    auto cg = operand_clusters(annotate(load_circuit(a.file), lib));
    auto doc = to_json(cg);
    doc["library_hash"] = fnv1a64(read_file(a.lib.empty() ? std::string(DIAC_DEFAULT_LIBRARY) : a.lib));
    print(doc);
    return 0;
}

struct TransformArgs {
    std::string file, lib, policy = "p3";
    double upper = 25, lower = 20, merge_ratio = 0.8;
};

int cmd_transform(const TransformArgs& a) {
    PolicyConfig pc;
    pc.policy = policy_from_arg(a.policy);
    pc.upper_mJ = a.upper;
    pc.lower_mJ = a.lower;
    pc.merge_ratio = a.merge_ratio;
    pc.check();
    auto in = load_cluster_graph(a.file, a.lib);
    auto out = apply_policy(in, pc);
    auto doc = to_json(out);
    doc["policy"] = to_json(pc);
    doc["report"] = to_json(policy_report(out, pc));
    print(doc);
    return 0;
}

struct PlaceArgs {
    std::string file, lib, nvm = "mram", weights = "1,1,1";
    double budget = 0, safety = 1.0;
};

int cmd_place(const PlaceArgs& a) {
    auto cg = load_cluster_graph(a.file, a.lib);
    auto w = weights_from_arg(a.weights);
    PlaceOptions po;
    po.safety = a.safety;
    auto plan = place(cg, a.budget, nvm_from_arg(a.nvm), w, po);
    auto doc = to_json(plan);
    doc["weights"] = to_json(w);
    print(doc);
    return 0;
}

struct CodegenArgs {
    std::string graph, plan, out;
    std::optional<double> clock;
};

// Emits the NV netlist and one JSON line per diagnostic on stderr.
int cmd_codegen(const CodegenArgs& a) {
    auto gdoc = load_json(a.graph);
    auto pdoc = load_json(a.plan);
    auto cg = cluster_graph_from_json(gdoc);
    auto plan = nvm_plan_from_json(pdoc);
    NvMetadata meta;
    meta.library_name = gdoc.value("library", std::string());
    meta.library_hash = gdoc.value("library_hash", std::uint64_t{0});
    if (gdoc.contains("policy")) meta.policy = gdoc["policy"];
    if (pdoc.contains("weights")) {
        const auto& w = pdoc["weights"];
        meta.weights = {w.value("level", 1.0), w.value("power", 1.0), w.value("fan", 1.0)};
    }
    auto nv = generate(cg, plan, meta);
    auto v = validate(nv, plan.budget_mJ, a.clock);
    auto text = to_json(nv).dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream f(a.out, std::ios::binary);
        if (!f) throw Error("cannot write '" + a.out + "'");
        f << text << '\n';
    }
    for (const auto& d : v.diagnostics) std::cerr << to_json(d).dump() << '\n';
    return v.ok() ? 0 : 1;
}

struct SimulateArgs {
    std::string netlist, trace, config, log;
    std::uint64_t seed = 0;
    std::size_t repeats = 1, cycles = 0;
    double pass_energy = 0, duration = 0;
};

int cmd_simulate(const SimulateArgs& a) {
    auto doc = load_json(a.netlist);
    auto clusters = staged_clusters_from_json(doc);
    NvmParams nvm = doc.contains("plan") ? nvm_params_from_json(doc["plan"].at("nvm")) : NvmParams::mram();
    WorkloadOptions wo;
    wo.repeats = a.repeats;
    wo.pass_energy_mJ = a.pass_energy;
    auto name = doc.contains("metadata") ? std::filesystem::path(a.netlist).stem().string() : std::string("netlist");
    auto w = build_workload(clusters, nvm, wo, name);
    auto cfg = a.config.empty() ? EnergyConfig{} : energy_config_from_json(load_json(a.config));
    auto trace = load_trace(a.trace);
    RunLimits lim;
    lim.max_duration_ms = a.duration > 0 ? a.duration : (trace.repeat ? 120000.0 : 0.0);
    lim.target_cycles = a.cycles;
    lim.record_log = !a.log.empty();
    auto r = run(trace, cfg, w, a.seed, lim);
    if (!a.log.empty()) {
        std::ofstream f(a.log, std::ios::binary);
        if (!f) throw Error("cannot write '" + a.log + "'");
        f.precision(10);
        write_tick_log(f, r);
    }
    print(to_json(r));
    return 0;
}

struct EvaluateArgs {
    std::string bench, traces, schemes = "all", seeds = "0..9", out = "results", lib, config, nvm = "mram";
    unsigned threads = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
    EvalOptions opt;
    opt.schemes = parse_schemes(a.schemes);
    opt.seeds = parse_seeds(a.seeds);
    opt.nvm = nvm_from_arg(a.nvm);
    opt.threads = a.threads;
    if (!a.config.empty()) opt.cfg = energy_config_from_json(load_json(a.config));
    auto benches = load_benchmark_dir(a.bench, library_or_default(a.lib), opt.scheme);
    auto traces = load_trace_dir(a.traces);
    auto r = evaluate(benches, traces, opt);
    write_reports(a.out, r, opt);
    std::cout << summary_json(r, opt)["checks"].dump(2) << '\n';
    for (const auto& n : r.notes) std::cerr << "note: " << n << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Checkpoint-aware synthesis and simulation for intermittent circuits"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    ParseArgs pa;
    auto* parse = app.add_subcommand("parse", "Read a circuit and print its JSON graph");
    parse->add_option("file", pa.file, "Circuit file")->required()->check(CLI::ExistingFile);
    parse->add_option("--format", pa.format, "Input format")->check(CLI::IsMember({"bench", "blif", "json"}));
    parse->add_flag("--dump-levels", pa.levels, "Include node levels");

    AnnotateArgs aa;
    auto* ann = app.add_subcommand("annotate", "Attach gate costs and print the operand cluster graph");
    ann->add_option("graph", aa.file, "Circuit file")->required()->check(CLI::ExistingFile);
    ann->add_option("--lib", aa.lib, "Gate library JSON")->check(CLI::ExistingFile);

    TransformArgs ta;
    auto* tr = app.add_subcommand("transform", "Resize operands with a sizing policy");
    tr->add_option("graph", ta.file, "Cluster graph JSON or circuit file")->required()->check(CLI::ExistingFile);
    tr->add_option("--policy", ta.policy, "p1, p2 or p3")->check(CLI::IsMember({"p1", "p2", "p3"}));
    tr->add_option("--upper", ta.upper, "Upper operand bound in mJ")->required();
    tr->add_option("--lower", ta.lower, "Lower operand bound in mJ");
    tr->add_option("--merge-ratio", ta.merge_ratio, "Merge acceptance ratio");
    tr->add_option("--lib", ta.lib, "Gate library for circuit inputs")->check(CLI::ExistingFile);

    PlaceArgs pl;
    auto* plc = app.add_subcommand("place", "Choose NVM insertion points");
    plc->add_option("clustergraph", pl.file, "Cluster graph JSON")->required()->check(CLI::ExistingFile);
    plc->add_option("--budget", pl.budget, "Energy budget per checkpoint interval in mJ")->required();
    plc->add_option("--nvm", pl.nvm, "mram, reram or a parameter JSON file");
    plc->add_option("--weights", pl.weights, "Level, power and fan weights as l,p,f");
    plc->add_option("--safety", pl.safety, "Budget derating in (0, 1]");
    plc->add_option("--lib", pl.lib, "Gate library for circuit inputs")->check(CLI::ExistingFile);

    CodegenArgs ca;
    double clock = 0;
    auto* cg = app.add_subcommand("codegen", "Emit and validate the NV netlist");
    cg->add_option("clustergraph", ca.graph, "Cluster graph JSON")->required()->check(CLI::ExistingFile);
    cg->add_option("plan", ca.plan, "NVM plan JSON")->required()->check(CLI::ExistingFile);
    auto* clock_opt = cg->add_option("--clock", clock, "Clock period in ns");
    cg->add_option("-o,--out", ca.out, "Write the netlist here instead of stdout");

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Run the intermittent node on a harvest trace");
    sim->add_option("nvnetlist", sa.netlist, "NV netlist JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--trace", sa.trace, "Harvest trace CSV")->required()->check(CLI::ExistingFile);
    sim->add_option("--config", sa.config, "Energy config JSON")->check(CLI::ExistingFile);
    sim->add_option("--seed", sa.seed, "Random seed")->required();
    sim->add_option("--log", sa.log, "Write the tick log CSV here");
    sim->add_option("--repeats", sa.repeats, "Netlist passes per compute operation")->check(CLI::PositiveNumber);
    sim->add_option("--pass-energy", sa.pass_energy, "Rescale one pass to this many mJ");
    sim->add_option("--duration", sa.duration, "Simulated time in ms");
    sim->add_option("--cycles", sa.cycles, "Stop after this many completed cycles");

    EvaluateArgs ea;
    auto* ev = app.add_subcommand("evaluate", "Compare checkpointing schemes over benchmarks and traces");
    ev->add_option("--bench", ea.bench, "Benchmark directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--traces", ea.traces, "Trace directory")->required()->check(CLI::ExistingDirectory);
    ev->add_option("--schemes", ea.schemes, "all or a comma-separated list");
    ev->add_option("--seeds", ea.seeds, "a..b or a comma-separated list");
    ev->add_option("--out", ea.out, "Output directory");
    ev->add_option("--nvm", ea.nvm, "mram, reram or a parameter JSON file");
    ev->add_option("--lib", ea.lib, "Gate library JSON")->check(CLI::ExistingFile);
    ev->add_option("--config", ea.config, "Energy config JSON")->check(CLI::ExistingFile);
    ev->add_option("--threads", ea.threads, "Worker threads, 0 for all");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*parse) return cmd_parse(pa);
        if (*ann) return cmd_annotate(aa);
        if (*tr) return cmd_transform(ta);
        if (*plc) return cmd_place(pl);
        if (*cg) {
            if (*clock_opt) ca.clock = clock;
            return cmd_codegen(ca);
        }
        if (*sim) return cmd_simulate(sa);
        if (*ev) return cmd_evaluate(ea);
    } catch (const std::exception& e) {
        std::cerr << "diac: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
