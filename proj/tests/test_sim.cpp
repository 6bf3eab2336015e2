#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "diac/json_io.hpp"
#include "diac/sim.hpp"
#include "diac/trace.hpp"
#include "diac/workload.hpp"
#include "oracles/fsm_reference.hpp"
#include "test_support.hpp"

using namespace diac;

namespace {

void expect_conserved(const SimReport& r) {
    EXPECT_LE(std::abs(r.energy.drift()), 1e-9) << "energy drift " << r.energy.drift();
}

HarvestTrace constant(double mW, double ms) { return HarvestTrace{{{ms, mW}}, false}; }

Workload two_stage() {
    Workload w;
    w.stages = {{2.0, 1, 0}, {2.0, 1, 0}};
    return w;
}

/// Ticks until `pred` holds on the simulator state or `limit` ticks pass.
template <class Pred>
void step_until(Simulator& sim, double harvest_mW, Pred pred, int limit = 1000000) {
    for (int k = 0; k < limit && !pred(sim.state()); ++k) sim.step(harvest_mW);
}

}  // namespace

// ---------------------------------------------------------------- traces

TEST(Trace, ParsesHeaderCommentsAndRepeat) {
    auto t = parse_trace_string("# harvest\nduration_ms,power_mW,repeat=true\n10,5 # burst\n\n20,0\n");
    EXPECT_TRUE(t.repeat);
    ASSERT_EQ(t.segments.size(), 2u);
    EXPECT_DOUBLE_EQ(t.segments[0].duration_ms, 10);
    EXPECT_DOUBLE_EQ(t.segments[0].power_mW, 5);
    EXPECT_DOUBLE_EQ(t.period_ms(), 30);
}

TEST(Trace, HeaderIsOptional) {
    auto t = parse_trace_string("5,1\n5,3\n");
    EXPECT_FALSE(t.repeat);
    EXPECT_DOUBLE_EQ(t.mean_power_mW(), 2);
}

TEST(Trace, RejectsBadRows) {
    EXPECT_THROW((void)parse_trace_string("duration_ms,power_mW\n"), Error);
    EXPECT_THROW((void)parse_trace_string("0,5\n"), ParseError);
    EXPECT_THROW((void)parse_trace_string("5,-1\n"), ParseError);
    EXPECT_THROW((void)parse_trace_string("5,1\nfoo,bar\n"), ParseError);
    EXPECT_THROW((void)parse_trace_string("5,1,2\n"), ParseError);
}

TEST(Trace, CursorWrapsOnlyWhenCyclic) {
    HarvestTrace t{{{10, 1}, {10, 2}}, true};
    TraceCursor c(t);
    EXPECT_DOUBLE_EQ(c.power_at(0), 1);
    EXPECT_DOUBLE_EQ(c.power_at(15), 2);
    EXPECT_DOUBLE_EQ(c.power_at(25), 1);
    t.repeat = false;
    TraceCursor d(t);
    EXPECT_DOUBLE_EQ(d.power_at(19.9), 2);
    EXPECT_DOUBLE_EQ(d.power_at(20), 0);
}

TEST(Trace, WriteReadRoundTrip) {
    HarvestTrace t{{{1.5, 3}, {2, 0}}, true};
    std::ostringstream out;
    write_trace(out, t);
    auto back = parse_trace_string(out.str());
    EXPECT_TRUE(back.repeat);
    ASSERT_EQ(back.segments.size(), 2u);
    EXPECT_DOUBLE_EQ(back.segments[0].duration_ms, 1.5);
}

TEST(Trace, BundledTracesParse) {
    for (auto name : {"reference.csv", "constant.csv", "rfid_burst.csv"}) {
        auto t = load_trace(data_path(std::string("traces/") + name));
        EXPECT_NO_THROW(t.check()) << name;
    }
}

// ---------------------------------------------------------------- config

TEST(EnergyConfig, CapacitorHolds25mJ) {
    EnergyConfig c;
    EXPECT_LT(std::abs(c.e_max() - 25.0) / 25.0, 1e-9);
}

TEST(EnergyConfig, DerivedThresholdsAreOrdered) {
    EnergyConfig c;
    Workload w;
    auto t = derive_thresholds(c, w);
    EXPECT_DOUBLE_EQ(t.off, 0.5);
    EXPECT_DOUBLE_EQ(t.bk, 0.5 + 1.2 * 2 * 0.001);
    EXPECT_DOUBLE_EQ(t.safe_zone, t.bk + 2.0);
    EXPECT_DOUBLE_EQ(t.se, t.safe_zone + 1.1 * 2);
    EXPECT_DOUBLE_EQ(t.cp, t.safe_zone + 1.1 * 4);
    EXPECT_DOUBLE_EQ(t.tr, t.safe_zone + 1.1 * 9);
    EXPECT_LT(t.off, t.bk);
    EXPECT_LT(t.bk, t.safe_zone);
    EXPECT_LE(std::max({t.se, t.cp, t.tr}), c.e_max());
}

TEST(EnergyConfig, DisabledSafeZoneSitsOnBackupThreshold) {
    EnergyConfig c;
    c.safe_zone_enabled = false;
    auto t = derive_thresholds(c, Workload{});
    EXPECT_DOUBLE_EQ(t.safe_zone, t.bk);
}

TEST(EnergyConfig, StagedComputeUsesLargestStage) {
    auto t = derive_thresholds(EnergyConfig{}, two_stage());
    EXPECT_DOUBLE_EQ(t.cp, t.safe_zone + 1.1 * 2.0);
}

TEST(EnergyConfig, OverridesCascadeUpward) {
    EnergyConfig c;
    c.overrides.bk = 1.5;
    auto t = derive_thresholds(c, Workload{});
    EXPECT_DOUBLE_EQ(t.bk, 1.5);
    EXPECT_DOUBLE_EQ(t.safe_zone, 3.5);
    EXPECT_DOUBLE_EQ(t.tr, 3.5 + 9.9);
}

TEST(EnergyConfig, RejectsUnreachableThreshold) {
    EnergyConfig c;
    c.op_costs.transmit_mJ = 30;
    EXPECT_THROW((void)derive_thresholds(c, Workload{}), Error);
    EnergyConfig d;
    d.overrides.bk = 0.2;
    EXPECT_THROW((void)derive_thresholds(d, Workload{}), Error);
}

TEST(EnergyConfig, JsonReadsPartialDocuments) {
    auto c = energy_config_from_json(json::parse(slurp(data_path("config/reference.json"))));
    EXPECT_DOUBLE_EQ(c.leakage_mW, 0.5);
    EXPECT_DOUBLE_EQ(*c.overrides.bk, 1.5);
    EXPECT_DOUBLE_EQ(c.op_costs.transmit_mJ, 9.0);
    auto d = energy_config_from_json(json::parse(slurp(data_path("config/default.json"))));
    EXPECT_DOUBLE_EQ(d.e_max(), 25.0);
    EXPECT_THROW((void)energy_config_from_json(json{{"tick_ms", -1}}), Error);
    EXPECT_THROW((void)energy_config_from_json(json{{"tick_ms", "fast"}}), Error);
}

TEST(Uncertainty, DrawsStayInBandAndAreStable) {
    double lo = 2, hi = 0, sum = 0;
    for (std::uint64_t c = 0; c < 20000; ++c) {
        double f = uncertainty_factor(42, c, DrawOp::Compute, c % 7, 0.1);
        lo = std::min(lo, f);
        hi = std::max(hi, f);
        sum += f;
    }
    EXPECT_GE(lo, 0.9);
    EXPECT_LE(hi, 1.1);
    EXPECT_LT(lo, 0.901);
    EXPECT_GT(hi, 1.099);
    EXPECT_NEAR(sum / 20000, 1.0, 0.002);
    EXPECT_EQ(uncertainty_factor(1, 2, DrawOp::Sense, 0, 0.1), uncertainty_factor(1, 2, DrawOp::Sense, 0, 0.1));
    EXPECT_NE(uncertainty_factor(1, 2, DrawOp::Sense, 0, 0.1), uncertainty_factor(2, 2, DrawOp::Sense, 0, 0.1));
}

// ---------------------------------------------------------------- step

TEST(Step, SenseFromFullChargeCostsTwoMilliJoules) {
    EnergyConfig c;
    c.initial_energy_mJ = 25;
    Workload w;
    Simulator sim(c, w, 3);
    auto ev = sim.step(0);
    EXPECT_TRUE(ev & event::kTimer);
    EXPECT_TRUE(ev & event::kSense);
    EXPECT_EQ(sim.state().fsm, Fsm::Sp);
    EXPECT_EQ(sim.state().reg_flag, reg::kCompute);
    double leak = c.leakage_mW * c.tick_ms * 1e-3;
    EXPECT_NEAR(sim.state().energy, 23.0 - leak, 0.2 + 1e-12);
    EXPECT_DOUBLE_EQ(sim.state().energy, 25.0 - leak - 2.0 * uncertainty_factor(3, 1, DrawOp::Sense, 0, 0.1));
}

TEST(Step, ComputeDippingIntoSafeZoneSleepsWithoutWrites) {
    EnergyConfig c;
    auto w = two_stage();
    auto th = derive_thresholds(c, w);
    // Enough for the sense and the first compute slice, far from a full compute.
    c.initial_energy_mJ = th.se + 0.05;
    Simulator sim(c, w, 5);
    sim.step(0);  // timer + sense
    ASSERT_EQ(sim.state().reg_flag, reg::kCompute);
    // Recharge until compute starts just past Th_Cp, then starve.
    step_until(sim, 400, [](const SimState& s) { return s.fsm == Fsm::Cp; });
    ASSERT_EQ(sim.state().fsm, Fsm::Cp);
    step_until(sim, 0, [](const SimState& s) { return s.fsm != Fsm::Cp; });
    EXPECT_EQ(sim.state().fsm, Fsm::Sp);
    EXPECT_EQ(sim.state().reg_flag, reg::kCompute);
    // The last quantum may overshoot the safe zone by at most one slice.
    double slice = c.op_costs.compute_mJ / c.compute_duration_ms * c.tick_ms;
    EXPECT_LE(sim.state().energy, th.safe_zone);
    EXPECT_GT(sim.state().energy, th.safe_zone - slice - 1e-9);
    EXPECT_GT(sim.state().energy, th.bk);
    EXPECT_EQ(sim.report().safe_zone_entries, 1u);
    EXPECT_EQ(sim.report().nvm_word_writes, 0u);
}

TEST(Step, PowerInterruptPreemptsComputeAtBackupThreshold) {
    EnergyConfig c;
    c.safe_zone_enabled = false;
    auto w = two_stage();
    auto th = derive_thresholds(c, w);
    c.initial_energy_mJ = th.se + 0.05;
    Simulator sim(c, w, 5);
    sim.step(0);
    ASSERT_EQ(sim.state().reg_flag, reg::kCompute);
    step_until(sim, 400, [](const SimState& s) { return s.fsm == Fsm::Cp; });
    ASSERT_EQ(sim.state().fsm, Fsm::Cp);
    std::uint32_t ev = 0;
    for (int k = 0; k < 1000 && !(ev & event::kBackup); ++k) ev = sim.step(0);
    ASSERT_TRUE(ev & event::kBackup);
    // The quantum stops at Th_Bk, so only the backup itself is paid below it.
    EXPECT_FALSE(ev & event::kOff);
    EXPECT_EQ(sim.state().fsm, Fsm::Sp);
    EXPECT_EQ(sim.state().reg_flag, reg::kCompute);
    EXPECT_EQ(sim.report().nvm_word_writes, 2u);
    EXPECT_NEAR(sim.state().energy, th.bk - 2 * w.write_mJ_per_word, 1e-12);
    // Harvest returning before Th_Off resumes without a restore.
    step_until(sim, 50, [](const SimState& s) { return s.armed; });
    EXPECT_EQ(sim.report().backup_recoveries, 1u);
    EXPECT_EQ(sim.report().restores, 0u);
}

TEST(Step, SurplusHarvestClampsAtEmax) {
    EnergyConfig c;
    c.initial_energy_mJ = 25;
    c.overrides.se = 25;  // keep the node asleep
    Workload w;
    Simulator sim(c, w, 0);
    for (int k = 0; k < 100; ++k) {
        auto ev = sim.step(1000);
        EXPECT_TRUE(ev & event::kClamp);
        EXPECT_LE(sim.state().energy, 25.0);
    }
    EXPECT_NEAR(sim.state().energy, 25.0, 1e-5);
}

TEST(Timer, QueuesSenseOnlyWhenIdle) {
    EnergyConfig c;
    c.initial_energy_mJ = 1;  // below every dispatch threshold
    Workload w;
    Simulator sim(c, w, 0);
    sim.interrupt_timer();
    EXPECT_EQ(sim.state().reg_flag, reg::kSense);
    sim.interrupt_timer();
    EXPECT_EQ(sim.state().reg_flag, reg::kSense);
}

TEST(Timer, LeavesPendingComputeAlone) {
    EnergyConfig c;
    c.initial_energy_mJ = 25;
    Workload w;
    Simulator sim(c, w, 0);
    sim.step(0);
    ASSERT_EQ(sim.state().reg_flag, reg::kCompute);
    sim.interrupt_timer();
    EXPECT_EQ(sim.state().reg_flag, reg::kCompute);
}

TEST(Timer, IntervalStretchesWhenHarvestIsWeak) {
    EnergyConfig c;
    c.initial_energy_mJ = 1;
    Workload w;
    Simulator sim(c, w, 0);
    sim.step(0);  // first fire at t = 0 with no harvest seen: longest interval
    EXPECT_DOUBLE_EQ(sim.state().interval_ms, c.sampling_interval_ms * c.max_interval_factor);
    Simulator strong(c, w, 0);
    strong.step(0);
    for (int k = 0; k < 20000 && !(strong.step(50) & event::kTimer); ++k) {
    }
    EXPECT_DOUBLE_EQ(strong.state().interval_ms, c.sampling_interval_ms);
    Simulator weak(c, w, 0);
    weak.step(0);
    for (int k = 0; k < 20000 && !(weak.step(2.5) & event::kTimer); ++k) {
    }
    EXPECT_NEAR(weak.state().interval_ms, c.sampling_interval_ms * 2, 1e-9);
}

TEST(PowerInterrupt, BackupThenRecoveryNeedsNoRestore) {
    EnergyConfig c;
    c.leakage_mW = 5;
    Workload w;
    auto th = derive_thresholds(c, w);
    c.initial_energy_mJ = th.bk + 0.001;
    Simulator sim(c, w, 0);
    step_until(sim, 0, [&](const SimState&) { return sim.report().backups > 0; }, 100000);
    ASSERT_EQ(sim.report().backups, 1u);
    EXPECT_EQ(sim.state().fsm, Fsm::Sp);
    step_until(sim, 50, [&](const SimState& s) { return s.armed; }, 100000);
    EXPECT_EQ(sim.report().backup_recoveries, 1u);
    EXPECT_EQ(sim.report().restores, 0u);
    EXPECT_EQ(sim.report().shutdowns, 0u);
}

TEST(PowerInterrupt, NothingLiveWritesOnlyTheFlag) {
    EnergyConfig c;
    c.leakage_mW = 5;
    c.overrides.se = 24;
    Workload w;
    auto th = derive_thresholds(c, w);
    c.initial_energy_mJ = th.bk + 0.001;
    Simulator sim(c, w, 0);
    sim.step(0);
    ASSERT_EQ(sim.state().reg_flag, reg::kSense);
    step_until(sim, 0, [&](const SimState&) { return sim.report().backups > 0; }, 100000);
    EXPECT_EQ(sim.report().nvm_word_writes, 1u);
}

TEST(PowerInterrupt, OutageShutsDownAndRestoresFromNvm) {
    EnergyConfig c;
    c.leakage_mW = 5;
    Workload w;
    c.initial_energy_mJ = 0;
    Simulator cold(c, w, 0);
    EXPECT_EQ(cold.state().fsm, Fsm::Off);
    cold.step(100);  // cold boot needs no restore
    step_until(cold, 100, [](const SimState& s) { return s.fsm != Fsm::Off; }, 100000);
    EXPECT_EQ(cold.report().restores, 0u);

    EnergyConfig d;
    d.leakage_mW = 5;
    d.initial_energy_mJ = 25;
    Simulator s(d, w, 9);
    s.step(0);  // sense
    ASSERT_EQ(s.state().reg_flag, reg::kCompute);
    step_until(s, 0, [](const SimState& st) { return st.fsm == Fsm::Off; }, 10000000);
    ASSERT_EQ(s.state().fsm, Fsm::Off);
    EXPECT_EQ(s.report().backups, 1u);
    EXPECT_EQ(s.report().shutdowns, 1u);
    auto flag = s.state().shadow_flag;
    step_until(s, 100, [](const SimState& st) { return st.fsm != Fsm::Off; }, 100000);
    EXPECT_EQ(s.report().restores, 1u);
    EXPECT_EQ(s.state().reg_flag, flag);
}

// ---------------------------------------------------------------- run

TEST(Run, SurplusHarvestNeverBacksUp) {
    EnergyConfig c;
    auto r = run(constant(500, 5000), c, Workload{}, 1);
    EXPECT_GT(r.completed_cycles, 0u);
    EXPECT_EQ(r.backups, 0u);
    EXPECT_EQ(r.nvm_word_writes, 0u);
    expect_conserved(r);
}

TEST(Run, ZeroHarvestBacksUpOnceThenShutsDown) {
    EnergyConfig c;
    c.initial_energy_mJ = 10;
    auto r = run(constant(0, 300000), c, Workload{}, 1);
    EXPECT_EQ(r.completed_cycles, 0u);
    EXPECT_EQ(r.backups, 1u);
    EXPECT_EQ(r.shutdowns, 1u);
    EXPECT_EQ(r.restores, 0u);
    expect_conserved(r);
}

TEST(Run, RejectsUnboundedCyclicTrace) {
    HarvestTrace t{{{1, 1}}, true};
    EXPECT_THROW((void)run(t, EnergyConfig{}, Workload{}, 0), Error);
}

TEST(Run, StopsAtCycleTarget) {
    RunLimits lim;
    lim.target_cycles = 3;
    lim.max_duration_ms = 1e6;
    HarvestTrace t{{{1000, 200}}, true};
    auto r = run(t, EnergyConfig{}, Workload{}, 4, lim);
    EXPECT_EQ(r.completed_cycles, 3u);
    EXPECT_LE(r.makespan_ms, r.duration_ms + 1e-9);
    EXPECT_NEAR(r.makespan_ms, r.duration_ms, 1e-9);
    expect_conserved(r);
}

TEST(Run, DeterministicUnderSeed) {
    auto tr = load_trace(data_path("traces/reference.csv"));
    auto c = energy_config_from_json(json::parse(slurp(data_path("config/reference.json"))));
    RunLimits lim;
    lim.record_log = true;
    auto a = run(tr, c, two_stage(), 11, lim);
    auto b = run(tr, c, two_stage(), 11, lim);
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    std::ostringstream la, lb;
    write_tick_log(la, a);
    write_tick_log(lb, b);
    EXPECT_EQ(la.str(), lb.str());
    auto other = run(tr, c, two_stage(), 12, lim);
    EXPECT_NE(to_json(a).dump(), to_json(other).dump());
}

TEST(Run, ReferenceTraceReplaysScenario) {
    auto tr = load_trace(data_path("traces/reference.csv"));
    auto c = energy_config_from_json(json::parse(slurp(data_path("config/reference.json"))));
    RunLimits lim;
    lim.record_log = true;
    auto r = run(tr, c, two_stage(), 7, lim);
    expect_conserved(r);
    EXPECT_EQ(r.backups, 2u);
    EXPECT_EQ(r.shutdowns, 1u);
    EXPECT_EQ(r.restores, 1u);
    EXPECT_EQ(r.backup_recoveries, 1u);
    EXPECT_EQ(r.safe_zone_recoveries, 3u);
    // Leakage is drawn after the clamp, so the peak sits one tick of leakage below full.
    EXPECT_NEAR(r.max_energy, c.e_max(), c.leakage_mW * c.tick_ms * 1e-3 + 1e-12);
    EXPECT_GT(r.energy.spilled, 0.0);
}

// ---------------------------------------------------------------- properties

namespace {

struct RandomCase {
    HarvestTrace trace;
    EnergyConfig cfg;
    Workload work;
    std::uint64_t seed;
};

RandomCase random_case(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0, 1);
    RandomCase rc;
    int segs = 1 + static_cast<int>(rng() % 6);
    for (int k = 0; k < segs; ++k)
        rc.trace.segments.push_back({50 + 3000 * u(rng), u(rng) < 0.3 ? 0.0 : 60 * u(rng) * u(rng)});
    rc.trace.repeat = true;
    rc.cfg.initial_energy_mJ = 25 * u(rng);
    rc.cfg.leakage_mW = 2 * u(rng);
    rc.cfg.safe_zone_enabled = u(rng) < 0.7;
    rc.cfg.overrides.bk = 0.6 + 2 * u(rng);
    rc.cfg.transmit_required = u(rng) < 0.8;
    int stages = 1 + static_cast<int>(rng() % 5);
    for (int k = 0; k < stages; ++k)
        rc.work.stages.push_back({0.3 + 2 * u(rng), 1 + rng() % 4, u(rng) < 0.3 ? rng() % 3 : 0});
    rc.work.write_mJ_per_word = 0.001 + 0.01 * u(rng);
    rc.seed = rng();
    return rc;
}

bool allowed_transition(std::uint8_t from, std::uint8_t to, std::uint32_t ev) {
    if (from == to) return true;
    if (ev & (event::kRestore | event::kColdBoot)) return true;
    switch (from) {
        // Timer and sense can land in the same tick.
        case reg::kIdle: return to == reg::kSense || (to == reg::kCompute && (ev & event::kSense));
        case reg::kSense: return to == reg::kCompute;
        case reg::kCompute: return to == reg::kTransmit || to == reg::kIdle;
        case reg::kTransmit: return to == reg::kIdle;
    }
    return false;
}

}  // namespace

TEST(Properties, InvariantsHoldOnRandomRuns) {
    std::mt19937_64 rng(2024);
    std::size_t backups = 0, offs = 0, zones = 0, cycles = 0;
    for (int n = 0; n < 150; ++n) {
        auto rc = random_case(rng);
        RunLimits lim;
        lim.max_duration_ms = 30000;
        lim.record_log = true;
        auto r = run(rc.trace, rc.cfg, rc.work, rc.seed, lim);
        SCOPED_TRACE("case " + std::to_string(n));
        expect_conserved(r);
        const auto& th = r.thresholds;
        std::uint8_t prev_flag = r.log.empty() ? 0 : r.log.front().reg_flag;
        for (std::size_t k = 0; k < r.log.size(); ++k) {
            const auto& t = r.log[k];
            ASSERT_GE(t.energy, 0.0);
            ASSERT_LE(t.energy, rc.cfg.e_max());
            if (t.events & event::kSense) { ASSERT_GT(t.dispatch_energy, th.se); }
            if ((t.events & event::kDispatch) && t.fsm == Fsm::Cp) { ASSERT_GT(t.dispatch_energy, th.cp); }
            if ((t.events & event::kDispatch) && t.fsm == Fsm::Tr) { ASSERT_GT(t.dispatch_energy, th.tr); }
            if (t.events & event::kBackup) { ASSERT_LT(t.energy, th.bk); }
            if (t.events & event::kOff) { ASSERT_LT(t.energy, th.off); }
            ASSERT_TRUE(t.reg_flag == 0 || t.reg_flag == 1 || t.reg_flag == 2 || t.reg_flag == 4);
            ASSERT_TRUE(allowed_transition(prev_flag, t.reg_flag, t.events))
                << "flag " << int(prev_flag) << " -> " << int(t.reg_flag) << " at " << t.clock_ms;
            prev_flag = t.reg_flag;
        }
        EXPECT_EQ(r.nvm_word_writes - r.commit_word_writes == 0, r.backups == 0);
        EXPECT_LE(r.safe_zone_recoveries, r.safe_zone_entries);
        backups += r.backups;
        offs += r.shutdowns;
        zones += r.safe_zone_recoveries;
        cycles += r.completed_cycles;
    }
    // The generator must actually reach the interesting behaviour.
    EXPECT_GT(backups, 20u);
    EXPECT_GT(offs, 5u);
    EXPECT_GT(zones, 20u);
    EXPECT_GT(cycles, 100u);
}

TEST(Properties, SafeZoneRecoveriesWriteNothing) {
    std::mt19937_64 rng(77);
    for (int n = 0; n < 60; ++n) {
        auto rc = random_case(rng);
        rc.cfg.safe_zone_enabled = true;
        for (auto& s : rc.work.stages) s.commit_words = 0;
        RunLimits lim;
        lim.max_duration_ms = 20000;
        lim.record_log = true;
        auto r = run(rc.trace, rc.cfg, rc.work, rc.seed, lim);
        // Between a safe-zone entry and its recovery there is no backup.
        bool open = false;
        std::size_t writes_at_entry = 0, writes = 0;
        for (const auto& t : r.log) {
            if (t.events & event::kBackup) {
                ++writes;
                open = false;
            }
            if (t.events & event::kSafeZone) {
                open = true;
                writes_at_entry = writes;
            }
            if (t.events & event::kSafeZoneRecovered) {
                ASSERT_TRUE(open);
                ASSERT_EQ(writes, writes_at_entry);
                open = false;
            }
        }
    }
}

// ---------------------------------------------------------------- reference interpreter

namespace {

oracle::RefParams to_ref(const EnergyConfig& c, const Workload& w, const Thresholds& t, std::uint64_t seed) {
    oracle::RefParams p;
    p.e_max = c.e_max();
    p.e0 = c.initial_energy_mJ;
    p.leak_mW = c.leakage_mW;
    p.dt = c.tick_ms;
    p.sense = c.op_costs.sense_mJ;
    p.compute = c.op_costs.compute_mJ;
    p.transmit = c.op_costs.transmit_mJ;
    p.cp_ms = c.compute_duration_ms;
    p.tr_ms = c.transmit_duration_ms;
    p.frac = c.uncertainty;
    p.th_off = t.off;
    p.th_bk = t.bk;
    p.th_sz = t.safe_zone;
    p.th_se = t.se;
    p.th_cp = t.cp;
    p.th_tr = t.tr;
    p.base_interval = c.sampling_interval_ms;
    p.target_mW = c.target_harvest_mW;
    p.max_factor = c.max_interval_factor;
    p.write = w.write_mJ_per_word;
    p.read = w.read_mJ_per_word;
    p.sample_words = static_cast<int>(w.sample_words);
    p.result_words = static_cast<int>(w.result_words);
    p.seed = seed;
    return p;
}

int observable(Fsm f) {
    switch (f) {
        case Fsm::Sp: return 0;
        case Fsm::Cp: return 2;
        case Fsm::Tr: return 3;
        case Fsm::Off: return 5;
        default: return -1;
    }
}

}  // namespace

TEST(ReferenceInterpreter, MatchesSimulatorOnRandomTraces) {
    std::mt19937_64 rng(0xD1AC);
    std::uniform_real_distribution<double> u(0, 1);
    std::size_t seen_backup = 0, seen_off = 0, seen_restore = 0, seen_sense = 0, seen_cp = 0, seen_tr = 0;
    for (int n = 0; n < 1000; ++n) {
        EnergyConfig c;
        c.tick_ms = 0.5;
        c.initial_energy_mJ = 25 * u(rng);
        c.leakage_mW = 40 * u(rng);
        c.sampling_interval_ms = 5 + 40 * u(rng);
        c.overrides.bk = 0.6 + 3 * u(rng);
        c.safe_zone_enabled = u(rng) < 0.7;
        Workload w;
        w.write_mJ_per_word = 0.001 + 0.05 * u(rng);
        w.read_mJ_per_word = w.write_mJ_per_word / 4;
        std::uint64_t seed = rng();
        std::vector<double> harvest;
        while (harvest.size() < 500) {
            double p = u(rng) < 0.35 ? 0.0 : 600 * u(rng) * u(rng);
            auto len = 1 + rng() % 80;
            for (std::size_t k = 0; k < len && harvest.size() < 500; ++k) harvest.push_back(p);
        }
        Simulator sim(c, w, seed);
        auto ref = oracle::reference_run(to_ref(c, w, sim.thresholds(), seed), harvest);
        ASSERT_EQ(ref.size(), 500u);
        for (std::size_t k = 0; k < 500; ++k) {
            auto ev = sim.step(harvest[k]);
            oracle::RefTick got{observable(sim.state().fsm), sim.state().reg_flag, (ev & event::kSense) != 0,
                                (ev & event::kBackup) != 0, (ev & event::kOff) != 0, (ev & event::kRestore) != 0};
            ASSERT_EQ(got, ref[k]) << "trace " << n << " tick " << k;
            seen_backup += got.backed_up;
            seen_off += got.shut_down;
            seen_restore += got.restored;
            seen_sense += got.sensed;
            seen_cp += got.state == 2;
            seen_tr += got.state == 3;
        }
    }
    EXPECT_GT(seen_backup, 50u);
    EXPECT_GT(seen_off, 30u);
    EXPECT_GT(seen_restore, 20u);
    EXPECT_GT(seen_sense, 200u);
    EXPECT_GT(seen_cp, 200u);
    EXPECT_GT(seen_tr, 200u);
}

// ---------------------------------------------------------------- workload

namespace {

std::vector<StagedCluster> chain3(bool all_cut) {
    return {{"a", 0, all_cut, 1.0, 2, {1}}, {"b", all_cut ? 1 : 0, all_cut, 2.0, 1, {2}},
            {"c", all_cut ? 2 : 0, all_cut, 1.0, 3, {}}};
}

}  // namespace

TEST(Workload, EveryClusterCutGivesOneStageEach) {
    WorkloadOptions o;
    o.commit_every_stage = true;
    auto w = build_workload(chain3(true), NvmParams::mram(), o);
    ASSERT_EQ(w.stages.size(), 3u);
    EXPECT_EQ(w.stages[0].commit_words, 2u);
    EXPECT_EQ(w.stages[1].commit_words, 1u);
    EXPECT_EQ(w.stages[2].commit_words, 3u);
    EXPECT_EQ(w.stages[0].live_words, 2u);
    EXPECT_EQ(w.stages[1].live_words, 1u);
    EXPECT_EQ(w.stages[2].live_words, 3u);
    EXPECT_EQ(w.result_words, 3u);
}

TEST(Workload, WordRatioRoundsUp) {
    WorkloadOptions o;
    o.commit_every_stage = true;
    o.word_ratio = 0.5;
    auto w = build_workload(chain3(true), NvmParams::mram(), o);
    EXPECT_EQ(w.stages[0].commit_words, 1u);
    EXPECT_EQ(w.stages[1].commit_words, 1u);
    EXPECT_EQ(w.stages[2].commit_words, 2u);
    EXPECT_EQ(w.result_words, 2u);
}

TEST(Workload, UncutChainIsOneStage) {
    auto w = build_workload(chain3(false), NvmParams::mram(), WorkloadOptions{});
    ASSERT_EQ(w.stages.size(), 1u);
    EXPECT_DOUBLE_EQ(w.stages[0].energy_mJ, 4.0);
    EXPECT_EQ(w.stages[0].commit_words, 0u);
}

TEST(Workload, LiveWordsTrackAwaitedCuts) {
    // a (stage 0, cut) feeds d in stage 2; b (stage 1, cut) feeds c and d.
    std::vector<StagedCluster> cs = {{"a", 0, true, 1, 4, {3}},
                                     {"b", 1, true, 1, 2, {2, 3}},
                                     {"c", 2, false, 1, 1, {}},
                                     {"d", 2, false, 1, 1, {}}};
    auto w = build_workload(cs, NvmParams::mram(), WorkloadOptions{});
    ASSERT_EQ(w.stages.size(), 3u);
    EXPECT_EQ(w.stages[0].live_words, 4u);
    EXPECT_EQ(w.stages[1].live_words, 6u);
    EXPECT_EQ(w.stages[2].live_words, 2u);
}

TEST(Workload, PassNormalizationAndRepeats) {
    WorkloadOptions o;
    o.pass_energy_mJ = 0.25;
    o.repeats = 4;
    auto w = build_workload(chain3(true), NvmParams::reram(), o);
    ASSERT_EQ(w.stages.size(), 12u);
    EXPECT_NEAR(w.compute_mJ(EnergyConfig{}), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(w.write_mJ_per_word, NvmParams::reram().write_mJ_per_word);
}

TEST(Workload, AmplifyIsStrictCeiling) {
    EXPECT_EQ(amplify_workload(3, 25), 9u);
    EXPECT_EQ(amplify_workload(30, 25), 1u);
    EXPECT_EQ(amplify_workload(25, 25), 2u);
    EXPECT_EQ(amplify_workload(0.25, 25), 101u);
    EXPECT_THROW((void)amplify_workload(0, 25), Error);
}

TEST(Workload, NetlistJsonRoundTrip) {
    auto cg = make_abstract_cluster_graph({{"a", 2.0, 1, 1}, {"b", 2.0, 2, 1}}, {{0, 1}});
    auto plan = place(cg, 3.0, NvmParams::mram(), PlacementWeights{});
    auto nv = generate(cg, plan);
    auto direct = staged_clusters(nv);
    auto parsed = staged_clusters_from_json(to_json(nv));
    ASSERT_EQ(direct.size(), parsed.size());
    for (std::size_t k = 0; k < direct.size(); ++k) {
        EXPECT_EQ(direct[k].name, parsed[k].name);
        EXPECT_EQ(direct[k].stage, parsed[k].stage);
        EXPECT_EQ(direct[k].cut, parsed[k].cut);
        EXPECT_EQ(direct[k].succ, parsed[k].succ);
    }
    auto w = build_workload(parsed, NvmParams::mram(), WorkloadOptions{});
    EXPECT_EQ(w.stages.size(), 2u);
}

// ---------------------------------------------------------------- pdp

TEST(Pdp, PerTaskEnergyTimesPerTaskLatency) {
    SimReport r;
    r.completed_cycles = 10;
    r.energy.compute = 50;
    r.makespan_ms = 1000;
    EXPECT_DOUBLE_EQ(compute_pdp(r), 500.0);
    r.makespan_ms = 2000;
    EXPECT_DOUBLE_EQ(compute_pdp(r), 1000.0);
    r.completed_cycles = 0;
    EXPECT_TRUE(std::isnan(compute_pdp(r)));
}
