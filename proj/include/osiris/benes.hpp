// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "osiris/poly.hpp"

namespace osiris {

// Rearrangeable Benes network of width p: an input column of 2x2 switches,
// two recursive half-size networks, and an output column, 2*log2(p)-1
// switch stages in total. Routing uses the classic looping algorithm.
struct BenesRouting {
    u64 size = 0;
    std::vector<std::uint8_t> in_sw;    // crossed flags, size p/2 (the only stage when p = 2)
    std::vector<std::uint8_t> out_sw;   // empty for p = 2
    std::unique_ptr<BenesRouting> upper, lower;

    u64 stage_count() const { return 2 * log2_exact(size) - 1; }
};

namespace detail {

inline void check_permutation(const std::vector<u64>& perm) {
    std::vector<bool> hit(perm.size(), false);
    for (u64 d : perm) {
        if (d >= perm.size() || hit[d])
            throw std::invalid_argument("route_benes: input is not a permutation");
        hit[d] = true;
    }
}

}  // namespace detail

inline std::unique_ptr<BenesRouting> route_benes(const std::vector<u64>& perm) {
    const u64 p = perm.size();
    if (p < 2 || !is_power_of_two(p))
        throw std::invalid_argument("route_benes: width must be a power of two >= 2");
    detail::check_permutation(perm);

    auto node = std::make_unique<BenesRouting>();
    node->size = p;
    if (p == 2) {
        node->in_sw = {static_cast<std::uint8_t>(perm[0] == 1)};
        return node;
    }

    std::vector<u64> inv(p);
    for (u64 i = 0; i < p; ++i) inv[perm[i]] = i;

    // Looping 2-coloring: each input switch and each output switch sends one
    // terminal through the upper half and one through the lower half.
    constexpr int kUnset = -1;
    std::vector<int> in_side(p, kUnset), out_side(p, kUnset);
    for (u64 seed = 0; seed < p; ++seed) {
        if (in_side[seed] != kUnset) continue;
        u64 i = seed;
        int side = 0;
        for (;;) {
            in_side[i] = side;
            u64 o = perm[i];
            out_side[o] = side;
            u64 o_partner = o ^ 1;
            u64 j = inv[o_partner];
            out_side[o_partner] = side ^ 1;
            in_side[j] = side ^ 1;
            u64 next = j ^ 1;
            if (in_side[next] != kUnset) break;
            i = next;
        }
    }

    std::vector<u64> up_perm(p / 2), low_perm(p / 2);
    node->in_sw.resize(p / 2);
    node->out_sw.resize(p / 2);
    for (u64 k = 0; k < p / 2; ++k) {
        u64 up_in = (in_side[2 * k] == 0) ? 2 * k : 2 * k + 1;
        u64 low_in = up_in ^ 1;
        node->in_sw[k] = static_cast<std::uint8_t>(in_side[2 * k] == 1);
        up_perm[k] = perm[up_in] / 2;
        low_perm[k] = perm[low_in] / 2;
    }
    for (u64 m = 0; m < p / 2; ++m)
        node->out_sw[m] = static_cast<std::uint8_t>(out_side[2 * m] == 1);

    node->upper = route_benes(up_perm);
    node->lower = route_benes(low_perm);
    return node;
}

// Walk values through the switch network; the oracle for every routing test.
template <typename T>
std::vector<T> simulate_benes(const BenesRouting& node, const std::vector<T>& in) {
    const u64 p = node.size;
    if (in.size() != p) throw std::invalid_argument("simulate_benes: width mismatch");
    if (p == 2) {
        return node.in_sw[0] ? std::vector<T>{in[1], in[0]} : std::vector<T>{in[0], in[1]};
    }
    std::vector<T> up_in(p / 2), low_in(p / 2);
    for (u64 k = 0; k < p / 2; ++k) {
        up_in[k] = node.in_sw[k] ? in[2 * k + 1] : in[2 * k];
        low_in[k] = node.in_sw[k] ? in[2 * k] : in[2 * k + 1];
    }
    auto up_out = simulate_benes(*node.upper, up_in);
    auto low_out = simulate_benes(*node.lower, low_in);
    std::vector<T> out(p);
    for (u64 m = 0; m < p / 2; ++m) {
        out[2 * m] = node.out_sw[m] ? low_out[m] : up_out[m];
        out[2 * m + 1] = node.out_sw[m] ? up_out[m] : low_out[m];
    }
    return out;
}

// Per-chunk realization of an automorphism: the p sources of every output
// chunk form a single input chunk's stride class, so the full permutation
// splits into a destination-chunk map plus one p-wide shuffle per chunk.
struct AutomorphismPlan {
    u64 r = 0;
    u64 n = 0;
    u64 p = 0;
    std::vector<u64> dest_chunk;                         // chunk o lands in dest_chunk[o]
    std::vector<std::unique_ptr<BenesRouting>> routing;  // intra-chunk shuffle per source chunk

    u64 network_depth() const { return 2 * log2_exact(p) - 1; }
};

inline AutomorphismPlan plan_automorphism(u64 r, u64 n, u64 p) {
    if (p < 2 || n % p != 0) throw std::invalid_argument("plan_automorphism: p must divide N");
    auto perm = automorphism_map(r, n);
    const u64 n_chunks = n / p;
    AutomorphismPlan plan;
    plan.r = r;
    plan.n = n;
    plan.p = p;
    plan.dest_chunk.resize(n_chunks);
    plan.routing.reserve(n_chunks);
    for (u64 o = 0; o < n_chunks; ++o) {
        std::vector<u64> shuffle(p);
        u64 dest = perm[o] % n_chunks;
        for (u64 k = 0; k < p; ++k) {
            u64 j = perm[o + k * n_chunks];
            if (j % n_chunks != dest)
                throw std::logic_error(
                    "plan_automorphism: chunk does not map onto a single stride class");
            shuffle[k] = j / n_chunks;
        }
        plan.dest_chunk[o] = dest;
        plan.routing.push_back(route_benes(shuffle));
    }
    return plan;
}

struct AutomorphismRunResult {
    InterleavedStream out;
    u64 cycle_count = 0;
};

// Stream the plan: every limb is permuted identically, chunk by chunk, and
// the inter-chunk move is a write-address schedule into the output buffer.
inline AutomorphismRunResult run_automorphism(const InterleavedStream& in,
                                              const AutomorphismPlan& plan) {
    if (in.rep != Rep::Eval || in.order != Order::Natural)
        throw std::invalid_argument("run_automorphism: stream must be Eval/Natural");
    if (in.n != plan.n || in.p != plan.p)
        throw std::invalid_argument("run_automorphism: plan/stream shape mismatch");
    if (!in.check_schedule()) throw std::invalid_argument("run_automorphism: malformed stream");
    const u64 n_chunks = in.n / in.p;
    AutomorphismRunResult res;
    res.out = in;
    for (const auto& c : in.chunks) {
        auto permuted = simulate_benes(*plan.routing[c.chunk_index], c.values);
        u64 dest = plan.dest_chunk[c.chunk_index];
        auto& slot = res.out.chunks[dest * in.limbs + c.limb_index];
        slot.limb_index = c.limb_index;
        slot.chunk_index = dest;
        slot.values = std::move(permuted);
    }
    res.cycle_count = in.limbs * n_chunks + plan.network_depth();
    return res;
}

}  // namespace osiris
