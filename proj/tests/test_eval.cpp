#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "diac/eval.hpp"
#include "test_support.hpp"

using namespace diac;

namespace {

ClusterGraph chain3(std::size_t words) {
    return make_abstract_cluster_graph(
        {{"A", 0.08, words, 1}, {"B", 0.08, words, 1}, {"C", 0.08, words, 1}}, {{0, 1}, {1, 2}});
}

const GateLibrary& library() {
    static const GateLibrary lib = load_gate_library(data_path("lib/default45.json"));
    return lib;
}

const std::vector<Benchmark>& suite() {
    static const std::vector<Benchmark> b = load_benchmark_dir(data_path("bench"), library(), SchemeOptions{});
    return b;
}

const std::vector<TraceFamily>& families() {
    static const std::vector<TraceFamily> t = load_trace_dir(data_path("traces"));
    return t;
}

std::string csv_of(const EvalResult& r) {
    std::ostringstream a;
    write_results_csv(a, r);
    write_normalized_csv(a, r);
    return a.str();
}

}  // namespace

TEST(Schemes, NamesRoundTrip) {
    for (auto s : kAllSchemes) EXPECT_EQ(scheme_from_string(to_string(s)), s);
    EXPECT_THROW((void)scheme_from_string("nv_based"), Error);
}

TEST(Schemes, ParseListAndAll) {
    EXPECT_EQ(parse_schemes("all").size(), 4u);
    auto two = parse_schemes("DIAC, OPT_DIAC");
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0], Scheme::Diac);
    EXPECT_EQ(two[1], Scheme::OptDiac);
    EXPECT_THROW((void)parse_schemes("DIAC,DIAC"), Error);
    EXPECT_THROW((void)parse_schemes(""), Error);
}

TEST(Seeds, RangesAndLists) {
    auto r = parse_seeds("0..9");
    ASSERT_EQ(r.size(), 10u);
    EXPECT_EQ(r.front(), 0u);
    EXPECT_EQ(r.back(), 9u);
    EXPECT_EQ(parse_seeds("3,5"), (std::vector<std::uint64_t>{3, 5}));
    EXPECT_THROW((void)parse_seeds("5..3"), Error);
    EXPECT_THROW((void)parse_seeds("x"), Error);
}

TEST(BuildScheme, NvBasedCutsEveryCluster) {
    auto b = build_scheme(chain3(3), Scheme::NvBased, 0.2, NvmParams::mram(), EnergyConfig{});
    EXPECT_EQ(b.netlist.plan.cuts.size(), 3u);
    ASSERT_EQ(b.workload.stages.size() % 3, 0u);
    for (const auto& s : b.workload.stages) EXPECT_EQ(s.commit_words, 3u);
    EXPECT_FALSE(b.cfg.safe_zone_enabled);
}

TEST(BuildScheme, ClusteringHalvesBackedWordsRoundingUp) {
    auto base = build_scheme(chain3(3), Scheme::NvBased, 0.2, NvmParams::mram(), EnergyConfig{});
    auto half = build_scheme(chain3(3), Scheme::NvClustering, 0.2, NvmParams::mram(), EnergyConfig{});
    ASSERT_EQ(base.workload.stages.size(), half.workload.stages.size());
    for (std::size_t k = 0; k < base.workload.stages.size(); ++k) {
        EXPECT_EQ(half.workload.stages[k].commit_words, 2u);  // ceil(3 / 2)
        EXPECT_EQ(half.workload.stages[k].live_words, (base.workload.stages[k].live_words + 1) / 2);
    }
}

TEST(BuildScheme, OptDiacSharesThePlanButNotTheThresholds) {
    auto cg = chain3(2);
    auto d = build_scheme(cg, Scheme::Diac, 0.2, NvmParams::mram(), EnergyConfig{});
    auto o = build_scheme(cg, Scheme::OptDiac, 0.2, NvmParams::mram(), EnergyConfig{});
    ASSERT_EQ(d.netlist.plan.cuts.size(), o.netlist.plan.cuts.size());
    for (std::size_t k = 0; k < d.netlist.plan.cuts.size(); ++k)
        EXPECT_EQ(d.netlist.plan.cuts[k].cluster, o.netlist.plan.cuts[k].cluster);
    EXPECT_EQ(d.workload.stages.size(), o.workload.stages.size());
    auto td = derive_thresholds(d.cfg, d.workload), to = derive_thresholds(o.cfg, o.workload);
    EXPECT_DOUBLE_EQ(td.safe_zone, td.bk);
    EXPECT_DOUBLE_EQ(to.safe_zone, to.bk + 2.0);
    // Budget 0.2 over a 0.24 chain needs exactly one cut for the diac schemes.
    EXPECT_EQ(d.netlist.plan.cuts.size(), 1u);
}

TEST(BuildScheme, AmplifiesPastTheCapacitor) {
    auto b = build_scheme(chain3(1), Scheme::Diac, 0.2, NvmParams::mram(), EnergyConfig{});
    EXPECT_EQ(b.repeats, amplify_workload(0.24, 25.0));
    EXPECT_GT(b.workload.compute_mJ(b.cfg), 25.0);
}

TEST(Benchmarks, PreparedGraphsRespectTheUpperBound) {
    SchemeOptions so;
    ASSERT_EQ(suite().size(), 4u);
    for (const auto& b : suite()) {
        SCOPED_TRACE(b.name);
        EXPECT_NEAR(b.graph.total_power(), so.pass_energy_mJ, 0.2 * so.pass_energy_mJ);
        for (std::size_t c = 0; c < b.graph.size(); ++c)
            EXPECT_LE(b.graph.power(c), so.upper_fraction * so.pass_energy_mJ + 1e-12);
    }
}

TEST(Benchmarks, EveryBuildValidates) {
    SchemeOptions so;
    for (const auto& b : suite())
        for (auto s : kAllSchemes) {
            auto sb = build_scheme(b.graph, s, so.budget_mJ(), NvmParams::mram(), EnergyConfig{}, so);
            if (s == Scheme::Diac || s == Scheme::OptDiac) {
                auto v = validate(sb.netlist, so.budget_mJ());
                EXPECT_TRUE(v.ok()) << b.name << " " << to_string(s);
            }
        }
}

TEST(Traces, SeededVariantKeepsShapeAndIsDeterministic) {
    for (const auto& f : families()) {
        auto a = seeded_trace(f.trace, 7), b = seeded_trace(f.trace, 7), c = seeded_trace(f.trace, 8);
        EXPECT_NEAR(a.period_ms(), f.trace.period_ms(), 1e-9);
        double ratio = a.mean_power_mW() / f.trace.mean_power_mW();
        EXPECT_GE(ratio, 0.9 - 1e-12);
        EXPECT_LE(ratio, 1.1 + 1e-12);
        ASSERT_EQ(a.segments.size(), b.segments.size());
        for (std::size_t k = 0; k < a.segments.size(); ++k) {
            EXPECT_EQ(a.segments[k].duration_ms, b.segments[k].duration_ms);
            EXPECT_EQ(a.segments[k].power_mW, b.segments[k].power_mW);
        }
        EXPECT_NE(a.mean_power_mW(), c.mean_power_mW());
    }
}

TEST(Traces, RotationPreservesEnergyPerPeriod) {
    HarvestTrace t{{{300, 40}, {700, 0}}, true};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto v = seeded_trace(t, seed, 0.0);
        EXPECT_NEAR(v.period_ms(), 1000, 1e-9);
        EXPECT_NEAR(v.mean_power_mW(), 12, 1e-9);
    }
}

TEST(Evaluate, SingleBenchmarkSingleSchemeIsOneRow) {
    EvalOptions opt;
    opt.schemes = {Scheme::Diac};
    opt.seeds = {0};
    auto r = evaluate({suite().front()}, {families().front()}, opt);
    ASSERT_EQ(r.runs.size(), 1u);
    ASSERT_EQ(r.benches.size(), 1u);
    ASSERT_EQ(r.benches[0].schemes.size(), 1u);
    EXPECT_DOUBLE_EQ(r.benches[0].schemes[0].normalized_pdp, 1.0);
    EXPECT_FALSE(r.notes.empty());  // fewer than ten seeds is flagged
}

TEST(Evaluate, TablesAreByteStableAcrossThreadCounts) {
    EvalOptions opt;
    opt.seeds = {0, 1, 2};
    opt.threads = 1;
    auto a = evaluate(suite(), families(), opt);
    opt.threads = 4;
    auto b = evaluate(suite(), families(), opt);
    EXPECT_EQ(csv_of(a), csv_of(b));
    EXPECT_EQ(summary_json(a, opt).dump(), summary_json(b, opt).dump());
}

TEST(Evaluate, BaseColumnIsOneAndRunsConserveEnergy) {
    EvalOptions opt;
    opt.seeds = {0, 1, 2};
    auto r = evaluate(suite(), families(), opt);
    ASSERT_EQ(r.runs.size(), suite().size() * families().size() * 3 * 4);
    for (const auto& run : r.runs) EXPECT_LE(std::abs(run.drift_mJ), 1e-9);
    for (const auto& b : r.benches) {
        const auto* base = find_stats(b, Scheme::NvBased);
        ASSERT_NE(base, nullptr);
        EXPECT_DOUBLE_EQ(base->normalized_pdp, 1.0);
        for (const auto& s : b.schemes) EXPECT_DOUBLE_EQ(s.normalized_pdp, s.pdp_mean / base->pdp_mean);
    }
}

TEST(Evaluate, WriteOrderingHoldsOnEveryRun) {
    EvalOptions opt;
    auto r = evaluate(suite(), families(), opt);
    EXPECT_EQ(write_order_violations(r, Scheme::OptDiac, Scheme::Diac), 0u);
    EXPECT_EQ(write_order_violations(r, Scheme::Diac, Scheme::NvBased), 0u);
}

TEST(Evaluate, WritesAllReportFiles) {
    EvalOptions opt;
    opt.seeds = {0};
    opt.schemes = {Scheme::NvBased, Scheme::OptDiac};
    auto r = evaluate({suite().front()}, {families().front()}, opt);
    auto dir = std::filesystem::temp_directory_path() / "diac_eval_reports";
    std::filesystem::remove_all(dir);
    write_reports(dir, r, opt);
    for (const char* f : {"results.csv", "normalized.csv", "summary.json", "pdp.dat"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    auto summary = nlohmann::json::parse(slurp((dir / "summary.json").string()));
    EXPECT_EQ(summary["benchmarks"][0]["schemes"]["NV_BASED"]["normalized_pdp"].get<double>(), 1.0);
    auto dat = slurp((dir / "pdp.dat").string());
    EXPECT_NE(dat.find("NV_BASED OPT_DIAC"), std::string::npos);
    std::filesystem::remove_all(dir);
}
