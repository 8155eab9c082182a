// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "osiris/bconv_array.hpp"
#include "osiris/hadamard.hpp"
#include "osiris/matvec.hpp"
#include "osiris/mdc.hpp"
#include "osiris/perf.hpp"

namespace osiris {

// Full-chip geometry. The default multiplier inventory splits the 32256
// total: two 16-stage 512-lane I/NTT units with twiddle-generation
// and butterfly multipliers (16384), the 16x512 BConv array plus its
// prescale row (8704), and the remainder in the two Hadamard sides (7168).
struct ChipInventory {
    u64 mdc = 16384;
    u64 bconv = 8704;
    u64 hadamard = 7168;
    u64 total() const { return mdc + bconv + hadamard; }
};

struct ChipConfig {
    std::string name = "osiris";
    double clock_hz = 1e9;
    u64 p = 512;
    u64 word_bits = 40;
    u64 ring_degree = u64{1} << 16;
    MdcConfig mdc;
    u64 mdc_instances = 2;
    BconvArrayConfig bconv;
    HadamardConfig hadamard;
    u64 hadamard_instances = 2;
    u64 sram_bytes = u64{210} << 20;
    double dram_bw_bytes_per_s = 1e12;
    ChipInventory inventory;
    u64 n2_cap = 4;
    // Diagonal q0-limb streams share the key-load bandwidth by default; a
    // dedicated channel removes them from the contended budget.
    bool dedicated_diagonal_channel = false;

    u64 word_bytes() const { return word_bits / 8; }
};

struct PhaseRecord {
    std::string phase;
    u64 start_cycle = 0;
    u64 end_cycle = 0;
    std::string unit;
    u64 dram_bytes = 0;
};

struct CacheEntry {
    std::string name;
    u64 bytes = 0;
};

struct CacheLedger {
    std::vector<CacheEntry> resident;
    u64 total_bytes() const {
        u64 t = 0;
        for (const auto& e : resident) t += e.bytes;
        return t;
    }
};

struct ScheduleTimeline {
    std::vector<PhaseRecord> phases;
    u64 total_cycles = 0;
    u64 stall_cycles = 0;
    u64 dram_bytes = 0;
    u64 t_keyload_cycles = 0;  // per baby-step iteration
    u64 t_ofgen_cycles = 0;    // per baby-step iteration
    CacheLedger cache;
    u64 steady_limb_period = 0;

    double stall_fraction() const {
        return total_cycles == 0 ? 0.0
                                 : static_cast<double>(stall_cycles) /
                                       static_cast<double>(total_cycles);
    }
};

// Parameters of the scheduled problem; the scheduler is purely analytical
// and never touches polynomial data.
struct GscProblem {
    u64 n = 0;            // ring degree
    u64 level = 0;        // multiplicative level
    u64 alpha = 0;        // digit size
    u64 n1 = 0, n2 = 0;   // BSGS factorization
    u64 d = 0;            // nonzero diagonals
    DiagonalSource diag_source = DiagonalSource::OfLimb;
};

// One output limb every N/p cycles through the INTT -> BConv -> NTT
// macro-pipeline; the fill is charged once per phase.
inline u64 modchange_fill_cycles(const ChipConfig& chip, u64 n, u64 m) {
    MdcUnit unit(chip.mdc);
    return 2 * unit.fill_latency(n, m) + chip.bconv.height + chip.bconv.width - 1 +
           chip.bconv.smac_pipeline_depth;
}

inline u64 keyload_cycles(const ChipConfig& chip, u64 n, u64 level, u64 alpha) {
    u64 bytes = key_stream_bytes(n, level, alpha, chip.word_bits);
    double seconds = static_cast<double>(bytes) / chip.dram_bw_bytes_per_s;
    return static_cast<u64>(std::ceil(seconds * chip.clock_hz));
}

// Generating n2 diagonals of (level+1+alpha) limbs on the MDC units; both
// directions work when the reverse path is free.
inline u64 ofgen_cycles(const ChipConfig& chip, u64 n, u64 level, u64 alpha, u64 n2,
                        u64 directions) {
    return n2 * (level + 1 + alpha) * (n / chip.p) / directions;
}

// Throughput multiplier for OF-Limb: 2 when the INTT direction is idle, 1
// when a concurrent ModChange occupies it (the hazard is recorded).
inline u64 bidirectional_oflimb_directions(bool active, bool concurrent_modchange,
                                           bool* hazard = nullptr) {
    if (hazard) *hazard = active && concurrent_modchange;
    if (!active) return 1;
    return concurrent_modchange ? 1 : 2;
}

struct SramOverflow : std::runtime_error {
    u64 fitting_n2;
    SramOverflow(const std::string& msg, u64 n2) : std::runtime_error(msg), fitting_n2(n2) {}
};

inline CacheLedger gsc_cache_ledger(const ChipConfig& chip, const GscProblem& pb) {
    const u64 limbs_qp = pb.level + 1 + pb.alpha;
    const u64 dnum = (pb.level + 1 + pb.alpha - 1) / pb.alpha;
    const u64 wb = chip.word_bytes();
    CacheLedger ledger;
    ledger.resident.push_back({"hoisted_decompose", dnum * limbs_qp * pb.n * wb});
    ledger.resident.push_back({"partial_accumulators", pb.n2 * 2 * limbs_qp * pb.n * wb});
    ledger.resident.push_back(
        {"keys_current_and_prefetch", 2 * key_stream_bytes(pb.n, pb.level, pb.alpha, chip.word_bits)});
    ledger.resident.push_back({"diagonal_staging", 2 * limbs_qp * pb.n * wb});
    ledger.resident.push_back({"ciphertext", 2 * (pb.level + 1) * pb.n * wb});
    return ledger;
}

// The giant-step centric schedule: per baby step, the next rotation key
// streams from DRAM while the MDC units generate that baby's n2 diagonals;
// a stall is charged only when the load outlasts the generation. The
// epilogue (giant rotations and the deferred ModDowns) serializes on the
// ModChange macro-pipeline.
inline ScheduleTimeline schedule_matvec(const ChipConfig& chip, const GscProblem& pb) {
    if (pb.n1 == 0 || pb.n2 == 0) throw std::invalid_argument("schedule_matvec: empty plan");
    const u64 limbs_qp = pb.level + 1 + pb.alpha;
    const u64 dnum = (limbs_qp - pb.alpha + pb.alpha - 1) / pb.alpha;
    const u64 chunk = pb.n / chip.p;

    ScheduleTimeline tl;
    tl.cache = gsc_cache_ledger(chip, pb);
    if (tl.cache.total_bytes() > chip.sram_bytes) {
        // Largest n2 whose accumulators fit alongside the fixed residents.
        u64 fixed = 0;
        for (const auto& e : tl.cache.resident)
            if (e.name != "partial_accumulators") fixed += e.bytes;
        u64 per_acc = 2 * limbs_qp * pb.n * chip.word_bytes();
        u64 fit = (chip.sram_bytes > fixed) ? (chip.sram_bytes - fixed) / per_acc : 0;
        throw SramOverflow("schedule_matvec: cache exceeds SRAM; largest fitting n2 = " +
                               std::to_string(fit),
                           fit);
    }

    u64 cursor = 0;
    auto add_phase = [&](const std::string& name, const std::string& unit, u64 cycles,
                         u64 bytes) {
        tl.phases.push_back({name, cursor, cursor + cycles, unit, bytes});
        cursor += cycles;
        tl.dram_bytes += bytes;
    };

    // Prologue: hoisted Decompose/ModUp of the input ciphertext.
    u64 modup_cycles = modchange_fill_cycles(chip, pb.n, pb.alpha) + dnum * limbs_qp * chunk;
    add_phase("hoisted_modup", "modchange", modup_cycles, 0);

    // Baby-step loop.
    const u64 key_bytes = key_stream_bytes(pb.n, pb.level, pb.alpha, chip.word_bits);
    tl.t_keyload_cycles = keyload_cycles(chip, pb.n, pb.level, pb.alpha);
    u64 directions = bidirectional_oflimb_directions(
        pb.diag_source == DiagonalSource::OfLimb, false);
    tl.t_ofgen_cycles = pb.diag_source == DiagonalSource::OfLimb
                            ? ofgen_cycles(chip, pb.n, pb.level, pb.alpha, pb.n2, directions)
                            : 0;
    for (u64 i = 0; i < pb.n1; ++i) {
        bool prefetch = i + 1 < pb.n1;  // last iteration has no next key
        u64 load = prefetch ? tl.t_keyload_cycles : 0;
        u64 gen = std::max<u64>(tl.t_ofgen_cycles, 1);
        u64 span = std::max(load, gen);
        u64 stall = load > gen ? load - gen : 0;
        u64 diag_bytes = pb.diag_source == DiagonalSource::OfLimb
                             ? pb.n2 * pb.n * chip.word_bytes()
                             : pb.n2 * limbs_qp * pb.n * chip.word_bytes();
        if (chip.dedicated_diagonal_channel) diag_bytes = 0;
        add_phase("baby_step_" + std::to_string(i), "mdc+hadamard", span,
                  (prefetch ? key_bytes : 0) + diag_bytes);
        if (stall) {
            tl.phases.back().phase += "+stall";
            tl.stall_cycles += stall;
        }
    }

    // Epilogue: deferred ModDowns and giant-step rotations on the
    // ModChange macro-pipeline.
    u64 epi_fill = modchange_fill_cycles(chip, pb.n, pb.alpha);
    u64 moddown_cycles = epi_fill + 2 * (pb.alpha + pb.level + 1) * chunk;
    for (u64 j = 0; j < pb.n2; ++j) add_phase("giant_moddown_" + std::to_string(j), "modchange",
                                              moddown_cycles, 0);
    u64 ks_cycles = epi_fill + (dnum * limbs_qp + 2 * (pb.alpha + pb.level + 1)) * chunk;
    for (u64 j = 1; j < pb.n2; ++j)
        add_phase("giant_rotation_" + std::to_string(j), "modchange", ks_cycles, key_bytes);

    tl.total_cycles = cursor;
    tl.steady_limb_period = chunk;

    // The schedule can never beat the chip's multiplier or DRAM feeds.
    u64 floor_dram = static_cast<u64>(std::ceil(
        static_cast<double>(tl.dram_bytes) / chip.dram_bw_bytes_per_s * chip.clock_hz));
    if (tl.total_cycles < floor_dram) {
        tl.stall_cycles += floor_dram - tl.total_cycles;
        tl.phases.push_back({"dram_floor", cursor, floor_dram, "dram", 0});
        tl.total_cycles = floor_dram;
    }
    return tl;
}

// Standalone key switch: the ModChange macro-pipeline with a steady-state
// throughput of one output limb every N/p cycles.
inline ScheduleTimeline schedule_keyswitch(const ChipConfig& chip, u64 n, u64 level, u64 alpha) {
    ScheduleTimeline tl;
    const u64 limbs_qp = level + 1 + alpha;
    const u64 dnum = (level + 1 + alpha - 1) / alpha;
    const u64 chunk = n / chip.p;
    u64 cursor = 0;
    auto add_phase = [&](const std::string& name, u64 cycles, u64 bytes) {
        tl.phases.push_back({name, cursor, cursor + cycles, "modchange", bytes});
        cursor += cycles;
        tl.dram_bytes += bytes;
    };
    u64 fill = modchange_fill_cycles(chip, n, alpha);
    add_phase("modup", fill + dnum * limbs_qp * chunk, 0);
    add_phase("keymult", limbs_qp * chunk, key_stream_bytes(n, level, alpha, chip.word_bits));
    add_phase("moddown", fill + 2 * (alpha + level + 1) * chunk, 0);
    tl.total_cycles = cursor;
    tl.steady_limb_period = chunk;
    return tl;
}

// --- Functional execution of the GSC order ------------------------------------------
// Walks the exact phase order the scheduler charges (per baby step: generate
// the n2 diagonals, multiply, accumulate into the giant-step partials;
// epilogue: deferred ModDowns, giant rotations, reduction) on real data.
// The result must equal the unscheduled double-hoisted matvec bit-for-bit.
inline Ciphertext execute_gsc_matvec(const Ciphertext& ct, const BsgsPlan& plan, KeySet& keys,
                                     const ModulusChain& chain, double pt_scale) {
    const u64 n = ct.c0.degree();
    const u64 slots = slot_count(n);
    const u64 level = ct.level;
    Basis qp = chain.qp_basis(level);

    // Hoisted Decompose/ModUp.
    std::vector<LimbMatrix> hoisted;
    if (plan.n1 > 1)
        for (const auto& d : decompose(ct.c1, chain.alpha)) hoisted.push_back(mod_up(d, chain, level));

    // n2 on-chip accumulators over Q*P.
    std::vector<LimbMatrix> acc0(plan.n2), acc1(plan.n2);
    std::vector<bool> acc_set(plan.n2, false);

    for (u64 i = 0; i < plan.n1; ++i) {
        // Baby rotation (hoisted KeyMult; the trivial step lifts by P).
        LimbMatrix e0, e1;
        if (i == 0) {
            e0 = lift_by_p(ct.c0, chain, level);
            e1 = lift_by_p(ct.c1, chain, level);
        } else {
            std::vector<LimbMatrix> rotated;
            rotated.reserve(hoisted.size());
            for (const auto& d : hoisted) rotated.push_back(apply_automorphism(d, i));
            auto [k0, k1] = key_mult(rotated, keys.rot_key(chain, i), chain, level);
            e0 = detail::add_eval(k0, lift_by_p(apply_automorphism(ct.c0, i), chain, level));
            e1 = std::move(k1);
        }
        // While the next key would be streaming, generate this baby's n2
        // diagonals and fold them into the accumulators.
        for (u64 j = 0; j < plan.n2; ++j) {
            const auto& diag = plan.groups[j][i];
            if (!diag.has_value()) continue;
            LimbMatrix pt = ntt_reference(encode_over_basis(*diag, pt_scale, qp, n));
            LimbMatrix p0 = detail::mul_eval(e0, pt);
            LimbMatrix p1 = detail::mul_eval(e1, pt);
            counters().diagmult_mults += 2 * p0.limb_count() * p0.degree();
            if (!acc_set[j]) {
                acc0[j] = std::move(p0);
                acc1[j] = std::move(p1);
                acc_set[j] = true;
            } else {
                acc0[j] = detail::add_eval(acc0[j], p0);
                acc1[j] = detail::add_eval(acc1[j], p1);
            }
        }
    }

    // Epilogue: deferred ModDown per giant step, rotation, reduction.
    Ciphertext out;
    bool out_set = false;
    for (u64 j = 0; j < plan.n2; ++j) {
        Ciphertext partial;
        if (!acc_set[j]) {
            partial = detail::zero_like(ct, ct.scale * pt_scale);
        } else {
            partial.c0 = mod_down(acc0[j], chain, level);
            partial.c1 = mod_down(acc1[j], chain, level);
            partial.level = level;
            partial.scale = ct.scale * pt_scale;
        }
        Ciphertext aligned = h_rot(partial, (plan.n1 * j) % slots, keys, chain);
        out = out_set ? h_add(out, aligned) : aligned;
        out_set = true;
    }
    return out;
}

}  // namespace osiris
