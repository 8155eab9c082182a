// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <vector>

#include "osiris/ckks.hpp"
#include "osiris/trace.hpp"

namespace osiris {

// Monolithic input-stationary 2D systolic array. Height bounds the largest
// digit (alpha), width matches the MDC lane count so interleaved blocks of
// alpha x p coefficients stream straight in.
struct BconvArrayConfig {
    u64 height = 16;
    u64 width = 512;
    u64 smac_pipeline_depth = 2;
};

// Streamed weight/modulus feed: row j's base-table constants arrive together
// with q'_j, skewed so they meet the resident stationary block.
struct WeightStream {
    struct Row {
        u64 dest_index = 0;      // j
        u64 dest_modulus = 0;    // q'_j
        std::vector<u64> weights;  // w[i][j] for i < alpha
    };
    std::vector<Row> rows;  // arrival order
};

inline WeightStream stream_weights(const BaseTable& table) {
    WeightStream ws;
    for (std::size_t j = 0; j < table.to.size(); ++j) {
        WeightStream::Row row;
        row.dest_index = j;
        row.dest_modulus = table.to[j].value;
        for (std::size_t i = 0; i < table.from.size(); ++i)
            row.weights.push_back(table.weights[i][j]);
        ws.rows.push_back(std::move(row));
    }
    return ws;
}

struct BconvRunResult {
    InterleavedStream out;
    u64 cycle_count = 0;
    u64 skew_fill = 0;
    u64 drain = 0;
    u64 block_period = 0;
    EventTrace trace;
};

class BconvArray {
public:
    explicit BconvArray(const BconvArrayConfig& cfg) : cfg_(cfg) {}

    const BconvArrayConfig& config() const { return cfg_; }

    // One conditional subtraction reduces a residue of q into [0, q'), valid
    // only for q < 2q'; the cell contract rejects anything wider.
    static u64 switch_modulus(u64 x, u64 q_src, u64 q_dst) {
        if (q_src >= 2 * q_dst)
            throw std::invalid_argument("SwitchModulus: source modulus too wide for q < 2q'");
        return x >= q_dst ? x - q_dst : x;
    }

    BconvRunResult run_bconv(const InterleavedStream& in, const BaseTable& table,
                             bool emit_events = false) const {
        return run(in, table, stream_weights(table), emit_events);
    }

    // Exposed so tests can inject a mis-skewed feed and watch correctness fail.
    BconvRunResult run(const InterleavedStream& in, const BaseTable& table,
                       const WeightStream& ws, bool emit_events = false) const {
        if (in.rep != Rep::Coeff)
            throw std::invalid_argument("BconvArray: stream must be in Coeff rep");
        const u64 alpha = in.limbs;
        const u64 beta = table.to.size();
        const u64 p = in.p;
        if (alpha > cfg_.height)
            throw std::invalid_argument("BconvArray: digit height exceeds array height");
        if (p != cfg_.width)
            throw std::invalid_argument("BconvArray: stream lane width must equal array width");
        if (in.basis.size() != table.from.size())
            throw std::invalid_argument("BconvArray: basis mismatch");
        for (std::size_t i = 0; i < in.basis.size(); ++i)
            if (in.basis[i].value != table.from[i].value)
                throw std::invalid_argument("BconvArray: basis mismatch");
        if (!in.check_schedule()) throw std::invalid_argument("BconvArray: malformed stream");

        const u64 n = in.n;
        const u64 n_blocks = n / p;
        const u64 period = std::max(alpha, beta);

        BconvRunResult res;
        res.skew_fill = alpha + cfg_.height;          // stationary load + psum descent
        res.drain = cfg_.width - 1 + cfg_.smac_pipeline_depth;  // unskew triangle
        res.block_period = period;
        res.cycle_count = res.skew_fill + n_blocks * period + res.drain;
        res.trace.enabled = emit_events;

        res.out.n = n;
        res.out.p = p;
        res.out.limbs = beta;
        res.out.rep = Rep::Coeff;
        res.out.order = in.order;
        res.out.basis = table.to;

        std::vector<std::vector<u64>> stationary(alpha, std::vector<u64>(p));
        for (u64 o = 0; o < n_blocks; ++o) {
            // Double-buffered preload of block o: its chunks arrive while the
            // previous block computes.
            for (u64 i = 0; i < alpha; ++i) {
                const auto& chunk = in.chunks[o * alpha + i];
                const auto& src = table.from[i];
                for (u64 lane = 0; lane < p; ++lane)
                    stationary[i][lane] = src.mul(chunk.values[lane], table.prescale[i]);
                res.trace.emit(o * period + i, static_cast<std::uint32_t>(i), 0, "Preload");
            }
            counters().bconv_prescale += alpha * p;

            for (u64 jr = 0; jr < ws.rows.size(); ++jr) {
                const auto& row = ws.rows[jr];
                const auto& dst = table.to[row.dest_index];
                StreamChunk outc;
                outc.limb_index = row.dest_index;
                outc.chunk_index = o;
                outc.values.resize(p);
                for (u64 lane = 0; lane < p; ++lane) {
                    u64 psum = 0;
                    for (u64 i = 0; i < alpha; ++i) {
                        u64 reduced = switch_modulus(stationary[i][lane],
                                                     table.from[i].value, dst.value);
                        psum = dst.add(psum, dst.mul(row.weights[i], reduced));
                    }
                    outc.values[lane] = psum;
                }
                res.out.chunks.push_back(std::move(outc));
                res.trace.emit(res.skew_fill + o * period + jr,
                               static_cast<std::uint32_t>(alpha > 0 ? alpha - 1 : 0),
                               static_cast<std::uint32_t>(cfg_.width), "Drain");
            }
            counters().bconv_smac += alpha * beta * p;
            counters().adds += alpha * beta * p;
        }
        // Reorder output chunks into the interleaved (chunk-major) schedule.
        std::vector<StreamChunk> sched(res.out.chunks.size());
        for (auto& c : res.out.chunks) sched[c.chunk_index * beta + c.limb_index] = std::move(c);
        res.out.chunks = std::move(sched);
        if (!res.out.check_schedule())
            throw std::logic_error("BconvArray: output stream lost the interleaved schedule");
        return res;
    }

private:
    BconvArrayConfig cfg_;
};

}  // namespace osiris
