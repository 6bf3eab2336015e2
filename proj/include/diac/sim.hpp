#pragma once

// Discrete-time model of an energy-harvesting sensor node: a capacitor
// energy store driving the sleep/sense/compute/transmit/backup state machine.
//
// Units: energy mJ, power mW, time ms. One mW sustained for one ms is 1e-3 mJ.
//
// One tick, while powered:
//   1. timer interrupt if due
//   2. harvest (clamped at E_MAX), then leakage
//   3. re-arm the power interrupt once energy is back at Th_Bk or above
//   4. from Sp, dispatch on Reg_Flag and the state threshold; Se runs whole
//   5. Cp or Tr consume one quantum, never below Th_Safe_Zone; reaching it
//      returns to Sp
//   6. power interrupt below Th_Bk: back up the live words, return to Sp
//   7. below Th_Off: shut down, losing volatile state
// While Off the capacitor still charges and leaks; the node wakes once energy
// exceeds Th_Bk plus the restore cost and reloads the backed-up snapshot.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diac/error.hpp"
#include "diac/trace.hpp"

namespace diac {

inline constexpr double kMilliJoulePerMilliWattMillisecond = 1e-3;

enum class Fsm : std::uint8_t { Sp, Se, Cp, Tr, Bk, Off };

[[nodiscard]] constexpr std::string_view to_string(Fsm s) noexcept {
    switch (s) {
        case Fsm::Sp: return "Sp";
        case Fsm::Se: return "Se";
        case Fsm::Cp: return "Cp";
        case Fsm::Tr: return "Tr";
        case Fsm::Bk: return "Bk";
        case Fsm::Off: return "Off";
    }
    return "?";
}

/// Reg_Flag values: one-hot task marker, or zero when idle.
namespace reg {
inline constexpr std::uint8_t kIdle = 0b000;
inline constexpr std::uint8_t kSense = 0b100;
inline constexpr std::uint8_t kCompute = 0b010;
inline constexpr std::uint8_t kTransmit = 0b001;
}  // namespace reg

struct OpCosts {
    double sense_mJ = 2.0;
    double compute_mJ = 4.0;
    double transmit_mJ = 9.0;
};

struct Thresholds {
    double off = 0;
    double bk = 0;
    double safe_zone = 0;
    double se = 0;
    double cp = 0;
    double tr = 0;
};

struct ThresholdOverrides {
    std::optional<double> off, bk, safe_zone, se, cp, tr;
};

struct EnergyConfig {
    double capacitance_mF = 2.0;
    double voltage_V = 5.0;
    double leakage_mW = 0.05;
    OpCosts op_costs;
    double uncertainty = 0.1;
    double tick_ms = 0.1;
    double compute_duration_ms = 2.0;
    double transmit_duration_ms = 5.0;
    double sampling_interval_ms = 100.0;
    double target_harvest_mW = 5.0;
    double max_interval_factor = 10.0;
    double initial_energy_mJ = 0.0;
    bool safe_zone_enabled = true;
    double safe_margin_mJ = 2.0;
    double off_mJ = 0.5;
    double backup_headroom = 1.2;
    double dispatch_headroom = 1.1;
    bool transmit_required = true;
    ThresholdOverrides overrides;

    /// 1/2 C V^2 with C in mF gives mJ.
    [[nodiscard]] double e_max() const noexcept { return 0.5 * capacitance_mF * voltage_V * voltage_V; }

    void check() const {
        if (!(capacitance_mF > 0 && voltage_V > 0)) throw Error("config: capacitance and voltage must be positive");
        if (!(tick_ms > 0)) throw Error("config: tick must be positive");
        if (!(leakage_mW >= 0)) throw Error("config: leakage must be non-negative");
        if (!(op_costs.sense_mJ > 0 && op_costs.compute_mJ > 0 && op_costs.transmit_mJ > 0))
            throw Error("config: operation costs must be positive");
        if (!(uncertainty >= 0 && uncertainty < 1)) throw Error("config: uncertainty must be in [0, 1)");
        if (!(compute_duration_ms > 0 && transmit_duration_ms > 0)) throw Error("config: op durations must be positive");
        if (!(sampling_interval_ms > 0 && target_harvest_mW > 0 && max_interval_factor >= 1))
            throw Error("config: bad sampling interval settings");
        if (!(initial_energy_mJ >= 0 && initial_energy_mJ <= e_max()))
            throw Error("config: initial energy outside [0, E_MAX]");
        if (!(safe_margin_mJ >= 0 && off_mJ >= 0 && backup_headroom >= 1 && dispatch_headroom >= 1))
            throw Error("config: bad threshold margins");
    }
};

/// One compute stage: energy between two consistent NVM boundaries.
struct WorkloadStage {
    double energy_mJ = 0;
    /// Words a backup must hold once this stage has completed.
    std::size_t live_words = 0;
    /// Words written to NVM every time the stage completes (always-NV designs).
    std::size_t commit_words = 0;
};

/// What one sense/compute/transmit cycle costs on a given NVM-enhanced design.
struct Workload {
    std::string name = "nominal";
    /// Empty means a single stage of `op_costs.compute_mJ`.
    std::vector<WorkloadStage> stages;
    std::size_t sample_words = 1;
    std::size_t result_words = 1;
    double write_mJ_per_word = 0.001;
    double read_mJ_per_word = 0.0002;

    void check() const {
        for (const auto& s : stages)
            if (!(s.energy_mJ > 0)) throw Error("workload: stage energies must be positive");
        if (!(write_mJ_per_word >= 0 && read_mJ_per_word >= 0)) throw Error("workload: negative NVM cost");
    }

    [[nodiscard]] double compute_mJ(const EnergyConfig& cfg) const {
        if (stages.empty()) return cfg.op_costs.compute_mJ;
        double e = 0;
        for (const auto& s : stages) e += s.energy_mJ;
        return e;
    }

    [[nodiscard]] double max_stage_mJ(const EnergyConfig& cfg) const {
        if (stages.empty()) return cfg.op_costs.compute_mJ;
        double m = 0;
        for (const auto& s : stages) m = std::max(m, s.energy_mJ);
        return m;
    }

    /// Largest backup: the flag word plus the biggest live set.
    [[nodiscard]] std::size_t max_backup_words() const {
        std::size_t w = std::max(sample_words, result_words);
        for (const auto& s : stages) w = std::max(w, s.live_words);
        return 1 + w;
    }
};

/// Derives every threshold from the config and the workload, then applies overrides.
[[nodiscard]] inline Thresholds derive_thresholds(const EnergyConfig& cfg, const Workload& w) {
    cfg.check();
    w.check();
    // Each level derives from the one below, so an override shifts everything above it.
    const auto& o = cfg.overrides;
    Thresholds t;
    t.off = o.off.value_or(cfg.off_mJ);
    t.bk = o.bk.value_or(t.off + cfg.backup_headroom * static_cast<double>(w.max_backup_words()) *
                                     w.write_mJ_per_word);
    t.safe_zone = o.safe_zone.value_or(t.bk + (cfg.safe_zone_enabled ? cfg.safe_margin_mJ : 0.0));
    t.se = o.se.value_or(t.safe_zone + cfg.dispatch_headroom * cfg.op_costs.sense_mJ);
    t.cp = o.cp.value_or(t.safe_zone + cfg.dispatch_headroom * w.max_stage_mJ(cfg));
    t.tr = o.tr.value_or(t.safe_zone + cfg.dispatch_headroom * cfg.op_costs.transmit_mJ);
    if (!(t.off < t.bk)) throw Error("thresholds: need Th_Off < Th_Bk");
    if (cfg.safe_zone_enabled ? !(t.bk < t.safe_zone) : !(t.bk <= t.safe_zone))
        throw Error("thresholds: need Th_Bk below Th_Safe_Zone");
    if (!(t.safe_zone <= std::min({t.se, t.cp, t.tr}))) throw Error("thresholds: state thresholds below the safe zone");
    if (!(std::max({t.se, t.cp, t.tr}) <= cfg.e_max()))
        throw Error("thresholds: a state threshold exceeds E_MAX; the operation could never start");
    return t;
}

enum class DrawOp : std::uint64_t { Sense = 1, Compute = 2, Transmit = 3 };

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Cost multiplier in [1 - frac, 1 + frac]. Counter based, so every scheme
/// sees the same draw for the same (cycle, op, ordinal).
[[nodiscard]] constexpr double uncertainty_factor(std::uint64_t seed, std::uint64_t cycle, DrawOp op,
                                                  std::uint64_t ordinal, double frac) noexcept {
    using detail::splitmix64;
    std::uint64_t h = splitmix64(seed ^ splitmix64(cycle ^ splitmix64(static_cast<std::uint64_t>(op) ^
                                                                     splitmix64(ordinal))));
    double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    return 1.0 + (2.0 * unit - 1.0) * frac;
}

namespace event {
inline constexpr std::uint32_t kClamp = 1u << 0;
inline constexpr std::uint32_t kTimer = 1u << 1;
inline constexpr std::uint32_t kSense = 1u << 2;
inline constexpr std::uint32_t kDispatch = 1u << 3;
inline constexpr std::uint32_t kComputeDone = 1u << 4;
inline constexpr std::uint32_t kTransmitDone = 1u << 5;
inline constexpr std::uint32_t kSafeZone = 1u << 6;
inline constexpr std::uint32_t kSafeZoneRecovered = 1u << 7;
inline constexpr std::uint32_t kBackup = 1u << 8;
inline constexpr std::uint32_t kBackupRecovered = 1u << 9;
inline constexpr std::uint32_t kOff = 1u << 10;
inline constexpr std::uint32_t kRestore = 1u << 11;
inline constexpr std::uint32_t kColdBoot = 1u << 12;
inline constexpr std::uint32_t kCommit = 1u << 13;

inline constexpr std::pair<std::uint32_t, std::string_view> kNames[] = {
    {kClamp, "clamp"},       {kTimer, "timer"},
    {kSense, "sense"},       {kDispatch, "dispatch"},
    {kComputeDone, "compute_done"}, {kTransmitDone, "transmit_done"},
    {kSafeZone, "safe_zone"}, {kSafeZoneRecovered, "safe_zone_recovered"},
    {kBackup, "backup"},     {kBackupRecovered, "backup_recovered"},
    {kOff, "off"},           {kRestore, "restore"},
    {kColdBoot, "cold_boot"}, {kCommit, "commit"},
};

[[nodiscard]] inline std::string names(std::uint32_t mask) {
    std::string s;
    for (auto [bit, name] : kNames)
        if (mask & bit) {
            if (!s.empty()) s += '|';
            s += name;
        }
    return s;
}
}  // namespace event

struct SimState {
    Fsm fsm = Fsm::Sp;
    std::uint8_t reg_flag = reg::kIdle;
    double energy = 0;
    double clock_ms = 0;
    /// Completed stages of the in-flight compute.
    std::size_t stage = 0;
    /// Energy left in the in-flight stage or transmission; negative when not started.
    double stage_left = -1;
    double transmit_left = -1;
    std::uint64_t cycle = 0;
    bool armed = true;
    double next_timer_ms = 0;
    double interval_ms = 0;
    double window_harvest = 0;  ///< mW x ms since the last timer interrupt
    double window_time = 0;
    // NVM snapshot
    bool shadow_valid = false;
    std::uint8_t shadow_flag = reg::kIdle;
    std::size_t shadow_stage = 0;
    std::size_t shadow_words = 0;
    // pending recoveries
    bool safe_zone_pending = false;
    bool backup_pending = false;
};

struct EnergyLedger {
    double initial = 0;
    double harvested = 0;  ///< accepted into the capacitor
    double spilled = 0;    ///< lost to clamping at E_MAX
    double sense = 0;
    double compute = 0;
    double transmit = 0;
    double backup = 0;
    double restore = 0;
    double commit = 0;
    double leakage = 0;
    double final_energy = 0;

    [[nodiscard]] double consumed() const noexcept {
        return sense + compute + transmit + backup + restore + commit + leakage;
    }
    /// final - (initial + harvested - consumed)
    [[nodiscard]] double drift() const noexcept { return final_energy - (initial + harvested - consumed()); }
};

struct TickRecord {
    double clock_ms = 0;
    Fsm fsm = Fsm::Sp;
    std::uint8_t reg_flag = 0;
    double energy = 0;
    double harvest_mW = 0;
    std::uint32_t events = 0;
    /// Energy when Se, Cp or Tr was dispatched this tick; NaN otherwise.
    double dispatch_energy = std::numeric_limits<double>::quiet_NaN();
};

struct SimReport {
    std::size_t completed_cycles = 0;
    std::size_t nvm_word_writes = 0;
    std::size_t commit_word_writes = 0;
    std::size_t backups = 0;
    std::size_t restores = 0;
    std::size_t shutdowns = 0;
    std::size_t safe_zone_entries = 0;
    std::size_t safe_zone_recoveries = 0;
    std::size_t backup_recoveries = 0;
    EnergyLedger energy;
    double rollback_mJ = 0;  ///< compute and transmit energy redone after shutdowns
    double makespan_ms = 0;
    double duration_ms = 0;
    std::uint64_t ticks = 0;
    double min_energy = 0;
    double max_energy = 0;
    Thresholds thresholds;
    std::vector<TickRecord> log;
};

struct RunLimits {
    /// Simulated time cap; 0 means the trace length (required for cyclic traces).
    double max_duration_ms = 0;
    /// Stop after this many completed cycles; 0 runs for the whole duration.
    std::size_t target_cycles = 0;
    bool record_log = false;
};

class Simulator {
    enum Acc : std::size_t { Harvested, Spilled, Sense, Compute, Transmit, Backup, Restore, Commit, Leakage, Count };

public:
    Simulator(const EnergyConfig& cfg, const Workload& w, std::uint64_t seed)
        : cfg_(cfg), w_(w), th_(derive_thresholds(cfg, w)), seed_(seed) {
        s_.energy = cfg.initial_energy_mJ;
        s_.interval_ms = cfg.sampling_interval_ms;
        s_.fsm = s_.energy < th_.off ? Fsm::Off : Fsm::Sp;
        s_.armed = s_.energy >= th_.bk;
        r_.energy.initial = s_.energy;
        r_.thresholds = th_;
        r_.min_energy = r_.max_energy = s_.energy;
    }

    [[nodiscard]] const SimState& state() const noexcept { return s_; }
    [[nodiscard]] const SimReport& report() const noexcept { return r_; }
    [[nodiscard]] const Thresholds& thresholds() const noexcept { return th_; }

    /// Advances one tick with the given harvest power. Returns the tick's events.
    std::uint32_t step(double harvest_mW) {
        ev_ = 0;
        preempted_ = false;
        dispatch_energy_ = std::numeric_limits<double>::quiet_NaN();
        const double dt = cfg_.tick_ms;
        s_.clock_ms = static_cast<double>(tick_) * dt;
        s_.window_harvest += harvest_mW * dt;
        s_.window_time += dt;
        if (s_.fsm == Fsm::Off) {
            charge(harvest_mW, dt);
            wake_if_ready();
        } else {
            if (s_.clock_ms >= s_.next_timer_ms) interrupt_timer();
            charge(harvest_mW, dt);
            if (!s_.armed && s_.energy >= th_.bk) {
                s_.armed = true;
                if (s_.backup_pending) {
                    s_.backup_pending = false;
                    ++r_.backup_recoveries;
                    ev_ |= event::kBackupRecovered;
                }
            }
            if (s_.fsm == Fsm::Sp) dispatch();
            if (s_.fsm == Fsm::Cp) run_compute(dt);
            if (s_.fsm == Fsm::Tr) run_transmit(dt);
            if (s_.armed && (s_.energy < th_.bk || preempted_)) interrupt_power();
            if (s_.energy < th_.off) shut_down();
        }
        ++tick_;
        ++r_.ticks;
        r_.min_energy = std::min(r_.min_energy, s_.energy);
        r_.max_energy = std::max(r_.max_energy, s_.energy);
        if (log_) r_.log.push_back({s_.clock_ms, s_.fsm, s_.reg_flag, s_.energy, harvest_mW, ev_, dispatch_energy_});
        return ev_;
    }

    /// Sampling timer: queue a sense if idle and pick the next interval.
    void interrupt_timer() {
        ev_ |= event::kTimer;
        if (s_.reg_flag == reg::kIdle) s_.reg_flag = reg::kSense;
        double avg = s_.window_time > 0 ? s_.window_harvest / s_.window_time : 0.0;
        double factor = avg > 0 ? std::clamp(cfg_.target_harvest_mW / avg, 1.0, cfg_.max_interval_factor)
                                : cfg_.max_interval_factor;
        s_.interval_ms = cfg_.sampling_interval_ms * factor;
        s_.next_timer_ms = s_.clock_ms + s_.interval_ms;
        s_.window_harvest = 0;
        s_.window_time = 0;
    }

    /// Energy crossed below Th_Bk: save Reg_Flag and the live words.
    void interrupt_power() {
        s_.fsm = Fsm::Bk;
        std::size_t words = live_words();
        double cost = static_cast<double>(words) * w_.write_mJ_per_word;
        book(Acc::Backup, drain(cost));
        r_.nvm_word_writes += words;
        ++r_.backups;
        s_.shadow_valid = true;
        s_.shadow_flag = s_.reg_flag;
        s_.shadow_stage = s_.stage;
        s_.shadow_words = words;
        s_.armed = false;
        s_.backup_pending = true;
        s_.safe_zone_pending = false;
        ev_ |= event::kBackup;
        s_.fsm = Fsm::Sp;
    }

    void set_logging(bool on) { log_ = on; }

    /// Runs `n` ticks drawing harvest from the cursor; stops early at the cycle target.
    void run_ticks(TraceCursor& cur, std::uint64_t n, std::size_t target_cycles) {
        for (std::uint64_t k = 0; k < n; ++k) {
            double t = static_cast<double>(tick_) * cfg_.tick_ms;
            auto before = r_.completed_cycles;
            step(cur.power_at(t));
            if (r_.completed_cycles != before) r_.makespan_ms = t + cfg_.tick_ms;
            if (target_cycles && r_.completed_cycles >= target_cycles) return;
        }
    }

    [[nodiscard]] SimReport finish() {
        auto& e = r_.energy;
        e.harvested = acc_[Acc::Harvested].value();
        e.spilled = acc_[Acc::Spilled].value();
        e.sense = acc_[Acc::Sense].value();
        e.compute = acc_[Acc::Compute].value();
        e.transmit = acc_[Acc::Transmit].value();
        e.backup = acc_[Acc::Backup].value();
        e.restore = acc_[Acc::Restore].value();
        e.commit = acc_[Acc::Commit].value();
        e.leakage = acc_[Acc::Leakage].value();
        e.final_energy = s_.energy;
        r_.duration_ms = static_cast<double>(tick_) * cfg_.tick_ms;
        if (r_.completed_cycles == 0) r_.makespan_ms = r_.duration_ms;
        return std::move(r_);
    }

private:
    void charge(double harvest_mW, double dt) {
        double before = s_.energy;
        double raw = before + harvest_mW * dt * kMilliJoulePerMilliWattMillisecond;
        double emax = cfg_.e_max();
        if (raw > emax) {
            book(Acc::Spilled, raw - emax);
            s_.energy = emax;
            ev_ |= event::kClamp;
        } else {
            s_.energy = raw;
        }
        book(Acc::Harvested, s_.energy - before);
        double leak = std::min(s_.energy, cfg_.leakage_mW * dt * kMilliJoulePerMilliWattMillisecond);
        book(Acc::Leakage, drain(leak));
    }

    void dispatch() {
        dispatch_energy_ = s_.energy;
        if (s_.reg_flag == reg::kSense && s_.energy > th_.se) {
            s_.fsm = Fsm::Se;
            ++s_.cycle;
            double cost = cfg_.op_costs.sense_mJ *
                          uncertainty_factor(seed_, s_.cycle, DrawOp::Sense, 0, cfg_.uncertainty);
            book(Acc::Sense, drain(cost));
            s_.reg_flag = reg::kCompute;
            s_.stage = 0;
            s_.stage_left = -1;
            ev_ |= event::kSense;
            s_.fsm = Fsm::Sp;
        } else if (s_.reg_flag == reg::kCompute && s_.energy > th_.cp) {
            s_.fsm = Fsm::Cp;
            resume();
        } else if (s_.reg_flag == reg::kTransmit && s_.energy > th_.tr) {
            s_.fsm = Fsm::Tr;
            resume();
        } else {
            dispatch_energy_ = std::numeric_limits<double>::quiet_NaN();
        }
    }

    void resume() {
        ev_ |= event::kDispatch;
        if (s_.safe_zone_pending) {
            s_.safe_zone_pending = false;
            ++r_.safe_zone_recoveries;
            ev_ |= event::kSafeZoneRecovered;
        }
    }

    [[nodiscard]] std::size_t stage_count() const noexcept { return w_.stages.empty() ? 1 : w_.stages.size(); }

    [[nodiscard]] double stage_energy(std::size_t k) const noexcept {
        return w_.stages.empty() ? cfg_.op_costs.compute_mJ : w_.stages[k].energy_mJ;
    }

    /// Consumes up to `want`, books it under `cat` and returns the progress
    /// made. While armed, the power interrupt preempts the quantum the moment
    /// energy reaches Th_Bk.
    double take(double want, Acc cat) {
        double room = s_.armed ? std::max(0.0, s_.energy - th_.bk) : s_.energy;
        double q = std::min(want, room);
        if (q < want && s_.armed) preempted_ = true;
        book(cat, drain(q));
        return q;
    }

    /// Removes `amount` and returns the change actually applied.
    double drain(double amount) {
        double before = s_.energy;
        s_.energy = before - amount;
        return before - s_.energy;
    }

    void book(Acc cat, double mJ) { acc_[cat].add(mJ); }

    void enter_safe_zone() {
        s_.fsm = Fsm::Sp;
        if (cfg_.safe_zone_enabled && th_.safe_zone > th_.bk) {
            ++r_.safe_zone_entries;
            s_.safe_zone_pending = true;
            ev_ |= event::kSafeZone;
        }
    }

    // One quantum per tick while energy > Th_Safe_Zone; the quantum may dip
    // below it, which returns the node to Sp.
    void run_compute(double dt) {
        if (!(s_.energy > th_.safe_zone)) {
            enter_safe_zone();
            return;
        }
        double budget = cfg_.op_costs.compute_mJ / cfg_.compute_duration_ms * dt;
        const std::size_t n = stage_count();
        while (budget > 0 && s_.stage < n && s_.energy > 0 && !preempted_) {
            if (s_.stage_left < 0)
                s_.stage_left = stage_energy(s_.stage) *
                                uncertainty_factor(seed_, s_.cycle, DrawOp::Compute, s_.stage, cfg_.uncertainty);
            double q = take(std::min(budget, s_.stage_left), Acc::Compute);
            budget -= q;
            s_.stage_left -= q;
            if (s_.stage_left <= 1e-12) {
                commit_stage(s_.stage);
                ++s_.stage;
                s_.stage_left = -1;
            }
        }
        if (s_.stage == n) {
            s_.reg_flag = cfg_.transmit_required ? reg::kTransmit : reg::kIdle;
            s_.stage = 0;
            s_.transmit_left = -1;
            s_.fsm = Fsm::Sp;
            ev_ |= event::kComputeDone;
            if (!cfg_.transmit_required) complete_cycle();
        } else if (!(s_.energy > th_.safe_zone)) {
            enter_safe_zone();
        }
    }

    void commit_stage(std::size_t k) {
        if (w_.stages.empty() || w_.stages[k].commit_words == 0) return;
        auto words = w_.stages[k].commit_words;
        double cost = static_cast<double>(words) * w_.write_mJ_per_word;
        book(Acc::Commit, drain(std::min(cost, s_.energy)));
        r_.nvm_word_writes += words;
        r_.commit_word_writes += words;
        ev_ |= event::kCommit;
    }

    void run_transmit(double dt) {
        if (!(s_.energy > th_.safe_zone)) {
            enter_safe_zone();
            return;
        }
        if (s_.transmit_left < 0)
            s_.transmit_left = cfg_.op_costs.transmit_mJ *
                               uncertainty_factor(seed_, s_.cycle, DrawOp::Transmit, 0, cfg_.uncertainty);
        double budget = cfg_.op_costs.transmit_mJ / cfg_.transmit_duration_ms * dt;
        s_.transmit_left -= take(std::min(budget, s_.transmit_left), Acc::Transmit);
        if (s_.transmit_left <= 1e-12) {
            s_.transmit_left = -1;
            s_.reg_flag = reg::kIdle;
            s_.fsm = Fsm::Sp;
            ev_ |= event::kTransmitDone;
            complete_cycle();
        } else if (!(s_.energy > th_.safe_zone)) {
            enter_safe_zone();
        }
    }

    void complete_cycle() { ++r_.completed_cycles; }

    /// Flag word plus whatever the current Reg_Flag says is live.
    [[nodiscard]] std::size_t live_words() const {
        std::size_t w = 1;
        if (s_.reg_flag == reg::kCompute)
            w += s_.stage == 0 || w_.stages.empty() ? w_.sample_words : w_.stages[s_.stage - 1].live_words;
        else if (s_.reg_flag == reg::kTransmit)
            w += w_.result_words;
        return w;
    }

    void shut_down() {
        s_.fsm = Fsm::Off;
        ++r_.shutdowns;
        ev_ |= event::kOff;
        s_.backup_pending = false;
        s_.safe_zone_pending = false;
    }

    void wake_if_ready() {
        double restore = s_.shadow_valid ? static_cast<double>(s_.shadow_words) * w_.read_mJ_per_word : 0.0;
        if (!(s_.energy > th_.bk + restore)) return;
        double partial = 0;
        if (s_.stage_left >= 0)
            partial = stage_energy(s_.stage) *
                          uncertainty_factor(seed_, s_.cycle, DrawOp::Compute, s_.stage, cfg_.uncertainty) -
                      s_.stage_left;
        if (s_.transmit_left >= 0)
            partial += cfg_.op_costs.transmit_mJ *
                           uncertainty_factor(seed_, s_.cycle, DrawOp::Transmit, 0, cfg_.uncertainty) -
                       s_.transmit_left;
        std::size_t kept = s_.shadow_valid && s_.shadow_flag == reg::kCompute ? s_.shadow_stage : 0;
        for (std::size_t k = kept; k < s_.stage; ++k)
            partial += stage_energy(k) * uncertainty_factor(seed_, s_.cycle, DrawOp::Compute, k, cfg_.uncertainty);
        if (s_.shadow_valid) {
            book(Acc::Restore, drain(restore));
            s_.reg_flag = s_.shadow_flag;
            s_.stage = s_.shadow_stage;
            ++r_.restores;
            ev_ |= event::kRestore;
        } else {
            s_.reg_flag = reg::kIdle;
            s_.stage = 0;
            ev_ |= event::kColdBoot;
        }
        r_.rollback_mJ += partial;
        s_.stage_left = -1;
        s_.transmit_left = -1;
        s_.fsm = Fsm::Sp;
        s_.armed = true;
    }

    /// Neumaier-compensated running sum.
    struct Sum {
        double s = 0, c = 0;
        void add(double x) {
            double t = s + x;
            c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
            s = t;
        }
        [[nodiscard]] double value() const { return s + c; }
    };

    const EnergyConfig& cfg_;
    const Workload& w_;
    std::array<Sum, Acc::Count> acc_{};
    Thresholds th_;
    std::uint64_t seed_;
    SimState s_;
    SimReport r_;
    std::uint32_t ev_ = 0;
    double dispatch_energy_ = 0;
    bool log_ = false;
    bool preempted_ = false;
    std::uint64_t tick_ = 0;
};

/// Runs a whole trace. Deterministic for a fixed seed.
[[nodiscard]] inline SimReport run(const HarvestTrace& trace, const EnergyConfig& cfg, const Workload& w,
                                   std::uint64_t seed, const RunLimits& limits = {}) {
    trace.check();
    double duration = limits.max_duration_ms;
    if (duration <= 0) {
        if (trace.repeat) throw Error("run: a cyclic trace needs a duration limit");
        duration = trace.period_ms();
    } else if (!trace.repeat) {
        duration = std::min(duration, trace.period_ms());
    }
    Simulator sim(cfg, w, seed);
    sim.set_logging(limits.record_log);
    TraceCursor cur(trace);
    auto n = static_cast<std::uint64_t>(std::ceil(duration / cfg.tick_ms - 1e-9));
    sim.run_ticks(cur, n, limits.target_cycles);
    return sim.finish();
}

/// Per-task energy times per-task latency (mJ x ms). NaN without a completed cycle.
[[nodiscard]] inline double compute_pdp(const SimReport& r) {
    if (r.completed_cycles == 0) return std::numeric_limits<double>::quiet_NaN();
    double n = static_cast<double>(r.completed_cycles);
    return (r.energy.consumed() / n) * (r.makespan_ms / n);
}

inline void write_tick_log(std::ostream& out, const SimReport& r) {
    out << "clock_ms,fsm,reg_flag,energy_mJ,harvest_mW,events\n";
    for (const auto& t : r.log) {
        out << t.clock_ms << ',' << to_string(t.fsm) << ",0b" << ((t.reg_flag >> 2) & 1) << ((t.reg_flag >> 1) & 1)
            << (t.reg_flag & 1) << ',' << t.energy << ',' << t.harvest_mW << ',' << event::names(t.events) << '\n';
    }
}

}  // namespace diac
