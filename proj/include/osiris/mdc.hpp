// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <vector>

#include "osiris/poly.hpp"
#include "osiris/trace.hpp"

namespace osiris {

enum class MdcDirection { Fwd, Inv, Bidirectional };

// Geometry of one p-parallel radix-2 multi-delay-commutator I/NTT unit.
// Buffer slots per direction total (N - p) * m for ring degree N: temporal
// stage with butterfly distance d contributes d slots, and interleaving m
// limbs scales every delay line by m.
struct MdcConfig {
    u64 p = 512;
    u64 stages = 16;                    // log2 of the maximum ring degree
    u64 interleave_factor = 42;         // most limbs ever in flight
    u64 butterfly_pipeline_depth = 2;   // twiddle-generation multiply + butterfly multiply
    MdcDirection direction = MdcDirection::Bidirectional;
};

// On-the-fly twiddle decomposition: any psi^k is coarse[k / F] * fine[k % F]
// with fine of size F = 2^floor(log2(N)/2) and coarse of size N/F, i.e. two
// sqrt(N)-sized tables when log2(N) is even.
struct TwiddleTables {
    u64 n = 0;
    u64 fine_size = 0;
    std::vector<u64> coarse, fine;

    TwiddleTables(u64 N, const PrimeModulus& m) : n(N) {
        u64 log_n = log2_exact(N);
        fine_size = u64{1} << (log_n / 2);
        u64 coarse_size = N / fine_size;
        const auto& tb = detail::ntt_tables(N, m);
        coarse.resize(coarse_size);
        fine.resize(fine_size);
        for (u64 i = 0; i < fine_size; ++i) fine[i] = tb.psi_pow[i];
        for (u64 i = 0; i < coarse_size; ++i) coarse[i] = m.pow(tb.psi, i * fine_size);
    }
};

inline u64 twiddle_lookup(u64 k, const PrimeModulus& m, const TwiddleTables& t) {
    if (k >= t.n) throw std::out_of_range("twiddle_lookup: exponent out of range");
    return m.mul(t.coarse[k / t.fine_size], t.fine[k % t.fine_size]);
}

// Storage calculators, byte-exact forms used by the report layer.
inline u64 twiddle_full_bytes(u64 n, u64 n_moduli, u64 word_bits) {
    return n * n_moduli * word_bits / 8;
}

// table_sets: independent copies provisioned on the chip (one per I/NTT
// instance; the 16-lane groups inside an instance share a single set).
inline u64 twiddle_decomposed_bytes(u64 n, u64 n_moduli, u64 word_bits, u64 table_sets) {
    u64 root_half = u64{1} << (log2_exact(n) / 2);
    return 2 * root_half * n_moduli * (word_bits / 8) * table_sets;
}

inline u64 mdc_buffer_bytes(u64 n, u64 p, u64 interleave_factor, u64 word_bits) {
    return (n - p) * interleave_factor * word_bits / 8;
}

struct MdcRunResult {
    InterleavedStream out;
    u64 cycle_count = 0;
    u64 fill_latency = 0;
    u64 active_output_cycles = 0;
    u64 peak_buffer_values = 0;
    EventTrace trace;
};

// Effective stage count for a smaller-than-maximum ring: the leading
// stages are skipped.
inline u64 skip_stages(u64 n_actual, u64 configured_stages) {
    u64 eff = log2_exact(n_actual);
    if (eff > configured_stages)
        throw std::invalid_argument("skip_stages: ring degree exceeds the configured depth");
    return configured_stages - eff;
}

class MdcUnit {
public:
    explicit MdcUnit(const MdcConfig& cfg) : cfg_(cfg) {
        if (cfg_.p < 2 || !is_power_of_two(cfg_.p))
            throw std::invalid_argument("MdcUnit: p must be a power of two >= 2");
    }

    const MdcConfig& config() const { return cfg_; }

    MdcRunResult run_intt(const InterleavedStream& in, bool emit_events = false) const {
        if (in.rep != Rep::Eval || in.order != Order::Natural)
            throw std::invalid_argument("run_intt: stream must be Eval/Natural");
        return run(in, false, emit_events);
    }

    MdcRunResult run_ntt(const InterleavedStream& in, bool emit_events = false) const {
        if (in.rep != Rep::Coeff || in.order != Order::BitReversed)
            throw std::invalid_argument("run_ntt: stream must be Coeff/BitReversed");
        return run(in, true, emit_events);
    }

    // Cycle cost of streaming m limbs of degree n through one direction.
    u64 cycles_for(u64 n, u64 m) const {
        return fill_latency(n, m) + m * (n / cfg_.p);
    }

    u64 fill_latency(u64 n, u64 m) const {
        u64 s_eff = log2_exact(n);
        (void)skip_stages(n, cfg_.stages);
        return (n - cfg_.p) / cfg_.p * m + s_eff * cfg_.butterfly_pipeline_depth;
    }

private:
    MdcRunResult run(const InterleavedStream& in, bool forward, bool emit_events) const {
        const u64 n = in.n;
        const u64 m = in.limbs;
        const u64 p = cfg_.p;
        if (in.p != p) throw std::invalid_argument("MdcUnit: stream lane width mismatch");
        if (m > cfg_.interleave_factor)
            throw std::invalid_argument("MdcUnit: interleave factor exceeded");
        if (!in.check_schedule()) throw std::invalid_argument("MdcUnit: malformed stream");
        (void)skip_stages(n, cfg_.stages);

        // Functional payload: limb-wise reference transform.
        LimbMatrix poly = from_interleaved(in);
        LimbMatrix transformed = forward ? ntt_reference(poly) : intt_reference(poly);
        MdcRunResult res;
        res.out = to_interleaved(transformed, p);
        res.fill_latency = fill_latency(n, m);
        res.cycle_count = res.fill_latency + m * (n / p);
        res.active_output_cycles = m * (n / p);
        res.trace.enabled = emit_events;

        // Stage walk: butterfly distances N/2 .. 1; distances >= p live in
        // commutator delay lines of d*m/p cycles, smaller ones are spatial.
        const u64 s_eff = log2_exact(n);
        const u64 total_chunks = m * (n / p);
        std::vector<u64> stage_delay(s_eff);   // cycles spent before leaving each stage
        std::vector<u64> line_chunks(s_eff);   // delay-line capacity in chunks
        for (u64 j = 0; j < s_eff; ++j) {
            u64 dist = n >> (j + 1);
            if (dist >= p) {
                stage_delay[j] = dist * m / p;
                line_chunks[j] = dist * m / p;
            } else {
                stage_delay[j] = 0;
                line_chunks[j] = 0;
            }
        }
        // Peak occupancy: all delay lines full while input keeps arriving.
        u64 full_values = 0;
        for (u64 j = 0; j < s_eff; ++j) full_values += line_chunks[j] * p;
        u64 fill_chunks = (n - p) / p * m;
        res.peak_buffer_values = std::min(full_values, total_chunks * p);
        if (res.peak_buffer_values > (n - p) * m)
            throw std::logic_error("MdcUnit: buffer occupancy bound violated");
        (void)fill_chunks;

        if (emit_events) {
            for (u64 t = 0; t < total_chunks; ++t) {
                u64 cycle = t;
                for (u64 j = 0; j < s_eff; ++j) {
                    u64 stage = forward ? s_eff - 1 - j : j;  // reverse direction shares stages
                    for (u64 lane = 0; lane < p / 2; ++lane) {
                        res.trace.emit(cycle, static_cast<std::uint32_t>(stage),
                                       static_cast<std::uint32_t>(lane), "TwiddleGen");
                        res.trace.emit(cycle + 1, static_cast<std::uint32_t>(stage),
                                       static_cast<std::uint32_t>(lane), "Butterfly");
                    }
                    if (stage_delay[j] > 0)  // commutator occupies its own lane slot
                        res.trace.emit(cycle + cfg_.butterfly_pipeline_depth,
                                       static_cast<std::uint32_t>(stage),
                                       static_cast<std::uint32_t>(p), "Commute");
                    cycle += cfg_.butterfly_pipeline_depth + stage_delay[j];
                }
            }
        }
        return res;
    }

    MdcConfig cfg_;
};

}  // namespace osiris
