#pragma once

// Scheme comparison harness: builds the four designs of every benchmark,
// runs them over seeded trace ensembles and reduces the runs into tables.

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "diac/cluster.hpp"
#include "diac/codegen.hpp"
#include "diac/energy.hpp"
#include "diac/error.hpp"
#include "diac/io.hpp"
#include "diac/json_io.hpp"
#include "diac/placement.hpp"
#include "diac/policy.hpp"
#include "diac/sim.hpp"
#include "diac/trace.hpp"
#include "diac/workload.hpp"

namespace diac {

enum class Scheme { NvBased, NvClustering, Diac, OptDiac };

inline constexpr std::array<Scheme, 4> kAllSchemes{Scheme::NvBased, Scheme::NvClustering, Scheme::Diac,
                                                   Scheme::OptDiac};

[[nodiscard]] inline std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::NvBased: return "NV_BASED";
        case Scheme::NvClustering: return "NV_CLUSTERING";
        case Scheme::Diac: return "DIAC";
        case Scheme::OptDiac: return "OPT_DIAC";
    }
    return "?";
}

[[nodiscard]] inline Scheme scheme_from_string(std::string_view s) {
    for (auto k : kAllSchemes)
        if (s == to_string(k)) return k;
    throw Error("unknown scheme '" + std::string(s) + "'");
}

/// "all" or a comma separated list of scheme names.
[[nodiscard]] inline std::vector<Scheme> parse_schemes(std::string_view s) {
    if (s == "all") return {kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<Scheme> out;
    std::stringstream ss{std::string(s)};
    for (std::string tok; std::getline(ss, tok, ',');) {
        auto k = scheme_from_string(detail::trim(tok));
        if (std::find(out.begin(), out.end(), k) != out.end()) throw Error("scheme listed twice: " + tok);
        out.push_back(k);
    }
    if (out.empty()) throw Error("no schemes given");
    return out;
}

struct SchemeOptions {
    /// Fraction of register words an LE-FF design keeps in NVM.
    double clustering_ratio = 0.5;
    /// Energy of one netlist pass once the library costs are rescaled.
    double pass_energy_mJ = 0.25;
    /// Operand bounds as fractions of one pass.
    double upper_fraction = 0.25;
    double lower_fraction = 0.125;
    /// Checkpoint budget as a fraction of one pass.
    double budget_fraction = 0.5;
    /// Derating applied to the budget during placement.
    double safety = 0.9;
    PlacementWeights weights;
    /// Netlist passes per compute operation; 0 amplifies past the capacitor.
    std::size_t repeats = 0;

    void check() const {
        if (!(clustering_ratio > 0 && clustering_ratio <= 1)) throw Error("eval: clustering ratio must be in (0, 1]");
        if (!(pass_energy_mJ > 0)) throw Error("eval: pass energy must be positive");
        if (!(lower_fraction > 0 && lower_fraction < upper_fraction)) throw Error("eval: need 0 < lower < upper");
        if (!(budget_fraction > 0)) throw Error("eval: budget fraction must be positive");
        if (!(safety > 0 && safety <= 1)) throw Error("eval: safety must be in (0, 1]");
        weights.check();
    }

    [[nodiscard]] double budget_mJ() const { return budget_fraction * pass_energy_mJ; }
};

/// Annotates the circuit, rescales every gate so one pass costs
/// `pass_energy_mJ`, and resizes operands with the hybrid policy.
[[nodiscard]] inline ClusterGraph prepare_benchmark(const CircuitGraph& g, const GateLibrary& lib,
                                                    const SchemeOptions& opt) {
    opt.check();
    auto raw = annotate(g, lib);
    double total = operand_clusters(raw).total_power();
    if (!(total > 0)) throw Error("benchmark '" + g.name + "' has no energy under library '" + lib.name + "'");
    // Cluster energy is linear in the gate costs, so one factor scales the pass.
    double s = opt.pass_energy_mJ / total;
    auto costs = raw.costs;
    for (auto& c : costs) {
        c.active_mJ *= s;
        c.static_uW *= s;
    }
    auto scaled = annotate_with_costs(raw.graph, std::move(costs), raw.library_name);
    PolicyConfig pc;
    pc.policy = Policy::P3;
    pc.upper_mJ = opt.upper_fraction * opt.pass_energy_mJ;
    pc.lower_mJ = opt.lower_fraction * opt.pass_energy_mJ;
    return apply_policy(operand_clusters(std::move(scaled)), pc);
}

struct SchemeBuild {
    Scheme scheme = Scheme::Diac;
    NvNetlist netlist;
    Workload workload;
    EnergyConfig cfg;
    PlanCost plan_cost;
    std::size_t repeats = 1;
};

[[nodiscard]] inline SchemeBuild build_scheme(const ClusterGraph& cg, Scheme scheme, double budget,
                                              const NvmParams& nvm, const EnergyConfig& base,
                                              const SchemeOptions& opt = {}) {
    opt.check();
    base.check();
    const bool always_nv = scheme == Scheme::NvBased || scheme == Scheme::NvClustering;
    NvmPlan plan;
    if (always_nv) {
        plan = make_plan(cg, CutSet(cg.size(), true), budget, nvm);
    } else {
        PlaceOptions po;
        po.safety = opt.safety;
        plan = place(cg, budget, nvm, opt.weights, po);
    }
    SchemeBuild b;
    b.scheme = scheme;
    NvMetadata meta;
    meta.weights = opt.weights;
    meta.policy = {{"scheme", std::string(to_string(scheme))}};
    b.netlist = generate(cg, plan, std::move(meta));
    b.repeats = opt.repeats ? opt.repeats : amplify_workload(cg.total_power(), base.e_max());
    WorkloadOptions wo;
    wo.repeats = b.repeats;
    wo.commit_every_stage = always_nv;
    wo.word_ratio = scheme == Scheme::NvClustering ? opt.clustering_ratio : 1.0;
    wo.sample_words = std::max<std::size_t>(1, cg.base.graph.primary_inputs.size());
    b.workload = build_workload(staged_clusters(b.netlist), nvm, wo, cg.base.graph.name + "/" + std::string(to_string(scheme)));
    b.cfg = base;
    b.cfg.safe_zone_enabled = scheme == Scheme::OptDiac;
    b.plan_cost = plan_cost(plan, b.repeats);
    return b;
}

/// A named harvest trace family.
struct TraceFamily {
    std::string name;
    HarvestTrace trace;
};

/// Every `*.csv` in `dir`, sorted by file name.
[[nodiscard]] inline std::vector<TraceFamily> load_trace_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: '" + dir.string() + "'");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no .csv traces in '" + dir.string() + "'");
    std::vector<TraceFamily> out;
    for (const auto& f : files) out.push_back({f.stem().string(), load_trace(f.string())});
    return out;
}

/// Seeded variant of a trace: power scaled by a factor in [1 - jitter, 1 + jitter]
/// and, for cyclic traces, the start shifted to a random phase.
[[nodiscard]] inline HarvestTrace seeded_trace(const HarvestTrace& base, std::uint64_t seed, double jitter = 0.1) {
    base.check();
    using detail::splitmix64;
    auto unit = [](std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; };
    double scale = 1.0 + (2.0 * unit(splitmix64(seed ^ 0x5eedULL)) - 1.0) * jitter;
    HarvestTrace t = base;
    for (auto& s : t.segments) s.power_mW *= scale;
    if (!t.repeat) return t;
    double shift = unit(splitmix64(splitmix64(seed) ^ 0x9a5eULL)) * t.period_ms();
    std::vector<TraceSegment> rotated;
    double at = 0;
    std::size_t k = 0;
    for (; k < t.segments.size(); ++k) {
        if (at + t.segments[k].duration_ms > shift) break;
        at += t.segments[k].duration_ms;
    }
    double cut = shift - at;
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        auto s = t.segments[(k + i) % t.segments.size()];
        if (i == 0) s.duration_ms -= cut;
        if (s.duration_ms > 0) rotated.push_back(s);
    }
    if (cut > 0) rotated.push_back({cut, t.segments[k].power_mW});
    t.segments = std::move(rotated);
    return t;
}

/// Parses "a..b" (inclusive) or a comma separated list.
[[nodiscard]] inline std::vector<std::uint64_t> parse_seeds(std::string_view s) {
    std::vector<std::uint64_t> out;
    auto num = [&](std::string t) {
        t = detail::trim(std::move(t));
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (t.empty() || ec != std::errc() || p != t.data() + t.size()) throw Error("bad seed '" + t + "'");
        return v;
    };
    if (auto dots = s.find(".."); dots != std::string_view::npos) {
        auto a = num(std::string(s.substr(0, dots)));
        auto b = num(std::string(s.substr(dots + 2)));
        if (b < a) throw Error("seed range is empty");
        if (b - a >= 1'000'000) throw Error("seed range is too large");
        for (auto v = a; v <= b; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss{std::string(s)};
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(num(tok));
    if (out.empty()) throw Error("no seeds given");
    return out;
}

struct Benchmark {
    std::string name;
    ClusterGraph graph;
};

/// Every circuit file in `dir` (by extension), sorted by file name.
[[nodiscard]] inline std::vector<Benchmark> load_benchmark_dir(const std::filesystem::path& dir, const GateLibrary& lib,
                                                               const SchemeOptions& opt) {
    if (!std::filesystem::is_directory(dir)) throw Error("not a directory: '" + dir.string() + "'");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && circuit_format_of(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error("no circuit files in '" + dir.string() + "'");
    std::vector<Benchmark> out;
    for (const auto& f : files) out.push_back({f.stem().string(), prepare_benchmark(load_circuit(f), lib, opt)});
    return out;
}

struct EvalOptions {
    std::vector<Scheme> schemes{kAllSchemes.begin(), kAllSchemes.end()};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    NvmParams nvm = NvmParams::mram();
    EnergyConfig cfg;
    SchemeOptions scheme;
    RunLimits limits{120000.0, 5, false};
    /// 0 uses every hardware thread.
    unsigned threads = 0;
    Scheme base = Scheme::NvBased;
};

/// One simulation: a (benchmark, trace, seed, scheme) cell.
struct RunRecord {
    std::string benchmark;
    std::string trace;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::Diac;
    double pdp_mJ_ms = 0;
    double energy_mJ = 0;
    double makespan_ms = 0;
    std::size_t nvm_word_writes = 0;
    std::size_t completed_cycles = 0;
    std::size_t backups = 0;
    std::size_t restores = 0;
    std::size_t shutdowns = 0;
    std::size_t safe_zone_entries = 0;
    std::size_t safe_zone_recoveries = 0;
    double drift_mJ = 0;
};

struct SchemeStats {
    Scheme scheme = Scheme::Diac;
    /// Runs with at least one completed cycle; only these enter the means.
    std::size_t runs = 0;
    std::size_t excluded = 0;
    double pdp_mean = 0, pdp_std = 0;
    double energy_mean = 0, makespan_mean = 0, writes_mean = 0, cycles_mean = 0;
    double normalized_pdp = 0;
};

struct BenchResult {
    std::string benchmark;
    Scheme base = Scheme::NvBased;
    std::vector<SchemeStats> schemes;  ///< in EvalOptions::schemes order
};

struct EvalResult {
    std::vector<RunRecord> runs;  ///< benchmark, trace, seed, scheme order
    std::vector<BenchResult> benches;
    std::vector<std::string> notes;
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v), s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        for (std::size_t i; !failed && (i = next.fetch_add(1)) < n;) {
            try {
                f(i);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

[[nodiscard]] inline EvalResult evaluate(const std::vector<Benchmark>& benches, const std::vector<TraceFamily>& traces,
                                         const EvalOptions& opt) {
    if (benches.empty() || traces.empty() || opt.schemes.empty() || opt.seeds.empty())
        throw Error("evaluate: need at least one benchmark, trace, scheme and seed");
    EvalResult res;
    if (opt.seeds.size() < 10) res.notes.push_back("fewer than 10 seeds per cell");

    // Scheme builds are serial and deterministic; runs share them read-only.
    std::vector<std::vector<SchemeBuild>> builds;
    for (const auto& b : benches) {
        std::vector<SchemeBuild> row;
        for (auto s : opt.schemes) row.push_back(build_scheme(b.graph, s, opt.scheme.budget_mJ(), opt.nvm, opt.cfg, opt.scheme));
        builds.push_back(std::move(row));
    }
    std::vector<std::vector<HarvestTrace>> variants;
    for (const auto& t : traces) {
        std::vector<HarvestTrace> row;
        for (auto seed : opt.seeds) row.push_back(seeded_trace(t.trace, seed));
        variants.push_back(std::move(row));
    }

    const std::size_t ns = opt.schemes.size(), nseed = opt.seeds.size(), nt = traces.size();
    const std::size_t cells = benches.size() * nt * nseed * ns;
    res.runs.resize(cells);
    RunLimits lim = opt.limits;
    lim.record_log = false;
    detail::parallel_for(cells, opt.threads, [&](std::size_t i) {
        std::size_t k = i;
        auto si = k % ns;
        k /= ns;
        auto di = k % nseed;
        k /= nseed;
        auto ti = k % nt;
        auto bi = k / nt;
        const auto& b = builds[bi][si];
        auto r = run(variants[ti][di], b.cfg, b.workload, opt.seeds[di], lim);
        auto& rec = res.runs[i];
        rec.benchmark = benches[bi].name;
        rec.trace = traces[ti].name;
        rec.seed = opt.seeds[di];
        rec.scheme = opt.schemes[si];
        rec.pdp_mJ_ms = compute_pdp(r);
        rec.energy_mJ = r.energy.consumed();
        rec.makespan_ms = r.makespan_ms;
        rec.nvm_word_writes = r.nvm_word_writes;
        rec.completed_cycles = r.completed_cycles;
        rec.backups = r.backups;
        rec.restores = r.restores;
        rec.shutdowns = r.shutdowns;
        rec.safe_zone_entries = r.safe_zone_entries;
        rec.safe_zone_recoveries = r.safe_zone_recoveries;
        rec.drift_mJ = r.energy.drift();
    });

    // Ordered reduce over the run table.
    auto base = std::find(opt.schemes.begin(), opt.schemes.end(), opt.base) != opt.schemes.end() ? opt.base
                                                                                                  : opt.schemes.front();
    for (std::size_t bi = 0; bi < benches.size(); ++bi) {
        BenchResult br;
        br.benchmark = benches[bi].name;
        br.base = base;
        for (std::size_t si = 0; si < ns; ++si) {
            std::vector<double> pdp, energy, makespan, writes, cycles;
            SchemeStats st;
            st.scheme = opt.schemes[si];
            for (std::size_t ti = 0; ti < nt; ++ti)
                for (std::size_t di = 0; di < nseed; ++di) {
                    const auto& r = res.runs[((bi * nt + ti) * nseed + di) * ns + si];
                    if (!std::isfinite(r.pdp_mJ_ms)) {
                        ++st.excluded;
                        continue;
                    }
                    pdp.push_back(r.pdp_mJ_ms);
                    energy.push_back(r.energy_mJ);
                    makespan.push_back(r.makespan_ms);
                    writes.push_back(static_cast<double>(r.nvm_word_writes));
                    cycles.push_back(static_cast<double>(r.completed_cycles));
                }
            st.runs = pdp.size();
            st.pdp_mean = detail::mean_of(pdp);
            st.pdp_std = detail::stddev_of(pdp);
            st.energy_mean = detail::mean_of(energy);
            st.makespan_mean = detail::mean_of(makespan);
            st.writes_mean = detail::mean_of(writes);
            st.cycles_mean = detail::mean_of(cycles);
            if (st.excluded)
                res.notes.push_back(br.benchmark + "/" + std::string(to_string(st.scheme)) + ": " +
                                    std::to_string(st.excluded) + " run(s) without a completed cycle excluded");
            br.schemes.push_back(st);
        }
        double base_pdp = br.schemes[static_cast<std::size_t>(
                                         std::find(opt.schemes.begin(), opt.schemes.end(), base) - opt.schemes.begin())]
                              .pdp_mean;
        for (auto& st : br.schemes) st.normalized_pdp = st.pdp_mean / base_pdp;
        res.benches.push_back(std::move(br));
    }
    return res;
}

/// Looks up one scheme's statistics in a benchmark row.
[[nodiscard]] inline const SchemeStats* find_stats(const BenchResult& b, Scheme s) {
    for (const auto& st : b.schemes)
        if (st.scheme == s) return &st;
    return nullptr;
}

// ---------------------------------------------------------------- reports

namespace detail {

inline std::string num(double v) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}

}  // namespace detail

inline void write_results_csv(std::ostream& out, const EvalResult& r) {
    out << "benchmark,trace,seed,scheme,pdp_mJ_ms,energy_mJ,makespan_ms,nvm_word_writes,completed_cycles,"
           "backups,restores,shutdowns,safe_zone_entries,safe_zone_recoveries\n";
    for (const auto& x : r.runs)
        out << x.benchmark << ',' << x.trace << ',' << x.seed << ',' << to_string(x.scheme) << ','
            << detail::num(x.pdp_mJ_ms) << ',' << detail::num(x.energy_mJ) << ',' << detail::num(x.makespan_ms) << ','
            << x.nvm_word_writes << ',' << x.completed_cycles << ',' << x.backups << ',' << x.restores << ','
            << x.shutdowns << ',' << x.safe_zone_entries << ',' << x.safe_zone_recoveries << '\n';
}

inline void write_normalized_csv(std::ostream& out, const EvalResult& r) {
    out << "benchmark,scheme,base,runs,excluded,pdp_mean,pdp_std,normalized_pdp,energy_mean_mJ,makespan_mean_ms,"
           "writes_mean,cycles_mean\n";
    for (const auto& b : r.benches)
        for (const auto& s : b.schemes)
            out << b.benchmark << ',' << to_string(s.scheme) << ',' << to_string(b.base) << ',' << s.runs << ','
                << s.excluded << ',' << detail::num(s.pdp_mean) << ',' << detail::num(s.pdp_std) << ','
                << detail::num(s.normalized_pdp) << ',' << detail::num(s.energy_mean) << ','
                << detail::num(s.makespan_mean) << ',' << detail::num(s.writes_mean) << ','
                << detail::num(s.cycles_mean) << '\n';
}

/// Gnuplot clustered-histogram data: one row per benchmark, one column per scheme.
inline void write_pdp_dat(std::ostream& out, const EvalResult& r) {
    if (r.benches.empty()) return;
    out << "# normalized PDP (base " << to_string(r.benches.front().base) << ")\n# benchmark";
    for (const auto& s : r.benches.front().schemes) out << ' ' << to_string(s.scheme);
    out << '\n';
    for (const auto& b : r.benches) {
        out << b.benchmark;
        for (const auto& s : b.schemes) out << ' ' << detail::num(s.normalized_pdp);
        out << '\n';
    }
}

/// True if mean PDP is non-decreasing along the listed schemes on every benchmark.
[[nodiscard]] inline bool pdp_ordered(const EvalResult& r, const std::vector<Scheme>& order) {
    for (const auto& b : r.benches)
        for (std::size_t k = 1; k < order.size(); ++k) {
            auto lo = find_stats(b, order[k - 1]), hi = find_stats(b, order[k]);
            if (!lo || !hi || !(lo->pdp_mean <= hi->pdp_mean)) return false;
        }
    return true;
}

/// Runs in which scheme `a` wrote more NVM words than scheme `b` on the same cell.
[[nodiscard]] inline std::size_t write_order_violations(const EvalResult& r, Scheme a, Scheme b) {
    std::map<std::tuple<std::string, std::string, std::uint64_t>, std::pair<long long, long long>> cells;
    for (const auto& x : r.runs) {
        auto& c = cells.try_emplace({x.benchmark, x.trace, x.seed}, -1, -1).first->second;
        if (x.scheme == a) c.first = static_cast<long long>(x.nvm_word_writes);
        if (x.scheme == b) c.second = static_cast<long long>(x.nvm_word_writes);
    }
    std::size_t bad = 0;
    for (const auto& [k, v] : cells)
        if (v.first >= 0 && v.second >= 0 && v.first > v.second) ++bad;
    return bad;
}

[[nodiscard]] inline nlohmann::json summary_json(const EvalResult& r, const EvalOptions& opt) {
    using nlohmann::json;
    auto fin = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json doc;
    doc["tool_version"] = kToolVersion;
    doc["pdp_definition"] = "(consumed_mJ / completed_cycles) * (makespan_ms / completed_cycles)";
    doc["nvm"] = to_json(opt.nvm);
    doc["energy_config"] = to_json(opt.cfg);
    doc["seeds"] = opt.seeds;
    json so;
    so["clustering_ratio"] = opt.scheme.clustering_ratio;
    so["pass_energy_mJ"] = opt.scheme.pass_energy_mJ;
    so["upper_fraction"] = opt.scheme.upper_fraction;
    so["lower_fraction"] = opt.scheme.lower_fraction;
    so["budget_mJ"] = opt.scheme.budget_mJ();
    so["safety"] = opt.scheme.safety;
    doc["scheme_options"] = so;
    doc["limits"] = {{"max_duration_ms", opt.limits.max_duration_ms}, {"target_cycles", opt.limits.target_cycles}};
    json benches = json::array();
    for (const auto& b : r.benches) {
        json jb;
        jb["benchmark"] = b.benchmark;
        jb["base"] = std::string(to_string(b.base));
        for (const auto& s : b.schemes) {
            jb["schemes"][std::string(to_string(s.scheme))] = {
                {"runs", s.runs},          {"excluded", s.excluded},
                {"pdp_mean", fin(s.pdp_mean)}, {"pdp_std", fin(s.pdp_std)},
                {"normalized_pdp", fin(s.normalized_pdp)}, {"energy_mean_mJ", fin(s.energy_mean)},
                {"makespan_mean_ms", fin(s.makespan_mean)}, {"writes_mean", fin(s.writes_mean)},
                {"cycles_mean", fin(s.cycles_mean)}};
        }
        benches.push_back(std::move(jb));
    }
    doc["benchmarks"] = std::move(benches);
    std::vector<Scheme> order{Scheme::OptDiac, Scheme::Diac, Scheme::NvClustering, Scheme::NvBased};
    std::erase_if(order, [&](Scheme s) { return std::find(opt.schemes.begin(), opt.schemes.end(), s) == opt.schemes.end(); });
    doc["checks"]["pdp_ordering_holds"] = pdp_ordered(r, order);
    doc["checks"]["opt_diac_write_violations"] = write_order_violations(r, Scheme::OptDiac, Scheme::Diac);
    doc["notes"] = r.notes;
    return doc;
}

/// Writes results.csv, normalized.csv, summary.json and pdp.dat into `dir`.
inline void write_reports(const std::filesystem::path& dir, const EvalResult& r, const EvalOptions& opt) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write '" + (dir / name).string() + "'");
        return f;
    };
    {
        auto f = open("results.csv");
        write_results_csv(f, r);
    }
    {
        auto f = open("normalized.csv");
        write_normalized_csv(f, r);
    }
    {
        auto f = open("summary.json");
        f << summary_json(r, opt).dump(2) << '\n';
    }
    {
        auto f = open("pdp.dat");
        write_pdp_dat(f, r);
    }
}

}  // namespace diac
