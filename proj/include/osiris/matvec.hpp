// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "osiris/ckks.hpp"

namespace osiris {

using CVec = std::vector<std::complex<double>>;
using CMat = std::vector<CVec>;

// Generalized diagonals: diag_k[i] = M[i][(i+k) mod w].
struct DiagonalizedMatrix {
    u64 width = 0;
    std::map<u64, CVec> diagonals;  // nonzero diagonals only

    u64 nonzero_count() const { return diagonals.size(); }
};

inline DiagonalizedMatrix extract_diagonals(const CMat& m) {
    DiagonalizedMatrix out;
    out.width = m.size();
    for (const auto& row : m)
        if (row.size() != out.width)
            throw std::invalid_argument("extract_diagonals: matrix must be square");
    for (u64 k = 0; k < out.width; ++k) {
        CVec diag(out.width);
        bool nonzero = false;
        for (u64 i = 0; i < out.width; ++i) {
            diag[i] = m[i][(i + k) % out.width];
            nonzero = nonzero || std::abs(diag[i]) != 0.0;
        }
        if (nonzero) out.diagonals.emplace(k, std::move(diag));
    }
    return out;
}

// --- Cleartext oracles ---------------------------------------------------------

inline CVec rotate_left(const CVec& v, u64 r) {
    CVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[(i + r) % v.size()];
    return out;
}

inline CVec matvec_oracle(const CMat& m, const CVec& x) {
    CVec y(m.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) y[i] += m[i][j] * x[j];
    return y;
}

// Replicate a width-w vector across all slots (w must divide the slot count).
inline CVec replicate(const CVec& v, u64 slots) {
    if (slots % v.size() != 0)
        throw std::invalid_argument("replicate: width must divide slot count");
    CVec out(slots);
    for (u64 i = 0; i < slots; ++i) out[i] = v[i % v.size()];
    return out;
}

// --- Operation counters ----------------------------------------------------------

struct MatvecStats {
    u64 rotations_total = 0;        // including trivial rotation by 0
    u64 rotations_keyswitched = 0;  // nontrivial only
    u64 decompose_calls = 0;
    u64 mod_up_calls = 0;           // per digit raised
    u64 mod_down_calls = 0;         // per polynomial lowered
    u64 key_mult_calls = 0;
    u64 modular_mults = 0;          // kernel counter delta over the whole call
};

enum class HoistingMode { NonHoisted, SingleHoisted, DoubleHoisted };

// Baby-step giant-step plan: n1*n2 must cover every nonzero diagonal index.
// Stored diagonal (j, i) is the cleartext pre-rotation Rot_{-n1*j} of
// diag_{n1*j+i}, replicated across the slot count.
struct BsgsPlan {
    u64 n1 = 0, n2 = 0;
    u64 width = 0;
    std::vector<std::vector<std::optional<CVec>>> groups;  // [j][i], absent = zero diagonal
};

inline BsgsPlan make_bsgs_plan(const DiagonalizedMatrix& m, u64 n1, u64 n2, u64 slots) {
    if (n1 == 0 || n2 == 0) throw std::invalid_argument("make_bsgs_plan: n1, n2 >= 1");
    for (const auto& [k, diag] : m.diagonals) {
        (void)diag;
        if (k >= n1 * n2)
            throw std::invalid_argument("make_bsgs_plan: diagonal index outside n1*n2 range");
    }
    if (n1 * n2 < m.nonzero_count())
        throw std::invalid_argument("make_bsgs_plan: n1*n2 below nonzero diagonal count");
    BsgsPlan plan;
    plan.n1 = n1;
    plan.n2 = n2;
    plan.width = m.width;
    plan.groups.assign(n2, std::vector<std::optional<CVec>>(n1));
    for (u64 j = 0; j < n2; ++j) {
        for (u64 i = 0; i < n1; ++i) {
            auto it = m.diagonals.find(n1 * j + i);
            if (it == m.diagonals.end()) continue;
            CVec rep = replicate(it->second, slots);
            // Rot_{-n1*j}: right rotation by n1*j
            CVec shifted(slots);
            for (u64 t = 0; t < slots; ++t) shifted[(t + n1 * j) % slots] = rep[t];
            plan.groups[j][i] = std::move(shifted);
        }
    }
    return plan;
}

// --- Diagonal method --------------------------------------------------------------

namespace detail {

inline Ciphertext zero_like(const Ciphertext& ct, double scale) {
    Ciphertext z;
    z.c0 = LimbMatrix(ct.c0.basis, ct.c0.degree(), Rep::Eval, Order::Natural);
    z.c1 = z.c0;
    z.level = ct.level;
    z.scale = scale;
    return z;
}

}  // namespace detail

inline Ciphertext matvec_diagonal(const Ciphertext& ct, const DiagonalizedMatrix& m,
                                  KeySet& keys, const ModulusChain& chain, double pt_scale,
                                  MatvecStats* stats = nullptr) {
    u64 slots = slot_count(ct.c0.degree());
    u64 mults_before = counters().total_mults();
    Ciphertext acc;
    bool first = true;
    MatvecStats st;
    for (const auto& [k, diag] : m.diagonals) {
        Ciphertext rot = h_rot(ct, k, keys, chain);
        st.rotations_total += 1;
        if (k % slots != 0) {
            st.rotations_keyswitched += 1;
            st.decompose_calls += 1;
            st.mod_up_calls += chain.dnum_at(ct.level);
            st.key_mult_calls += 1;
            st.mod_down_calls += 2;
        }
        LimbMatrix pt = ntt_reference(
            encode(replicate(diag, slots), pt_scale, chain, ct.level, ct.c0.degree()));
        Ciphertext prod = p_mult(rot, pt, pt_scale);
        acc = first ? prod : h_add(acc, prod);
        first = false;
    }
    if (first) acc = detail::zero_like(ct, ct.scale * pt_scale);  // zero matrix
    st.modular_mults = counters().total_mults() - mults_before;
    if (stats) *stats = st;
    return acc;
}

// --- BSGS with hoisting -------------------------------------------------------------

namespace detail {

// Extended ciphertext over Q*P: exact P-multiple pair produced by a hoisted
// key switch before its deferred ModDown.
struct ExtCiphertext {
    LimbMatrix e0, e1;
};

}  // namespace detail

inline Ciphertext matvec_bsgs(const Ciphertext& ct, const BsgsPlan& plan, HoistingMode mode,
                              KeySet& keys, const ModulusChain& chain, double pt_scale,
                              MatvecStats* stats = nullptr) {
    const u64 n = ct.c0.degree();
    const u64 slots = slot_count(n);
    const u64 level = ct.level;
    u64 mults_before = counters().total_mults();
    MatvecStats st;

    // Baby steps. ct_0 is the input itself; hoisted modes share one
    // Decompose/ModUp across all nontrivial baby rotations.
    std::vector<Ciphertext> baby(plan.n1);
    std::vector<detail::ExtCiphertext> baby_ext(plan.n1);
    const bool hoisted = mode != HoistingMode::NonHoisted;
    std::vector<LimbMatrix> hoisted_digits;
    if (hoisted && plan.n1 > 1) {
        auto digits = decompose(ct.c1, chain.alpha);
        st.decompose_calls += 1;
        for (const auto& d : digits) {
            hoisted_digits.push_back(mod_up(d, chain, level));
            st.mod_up_calls += 1;
        }
    }
    for (u64 i = 0; i < plan.n1; ++i) {
        if (i == 0) {
            baby[i] = ct;
            if (mode == HoistingMode::DoubleHoisted) {
                baby_ext[i].e0 = lift_by_p(ct.c0, chain, level);
                baby_ext[i].e1 = lift_by_p(ct.c1, chain, level);
            }
            st.rotations_total += 1;  // trivial rotation by 0
            continue;
        }
        st.rotations_total += 1;
        st.rotations_keyswitched += 1;
        if (mode == HoistingMode::NonHoisted) {
            baby[i] = h_rot(ct, i, keys, chain);
            st.decompose_calls += 1;
            st.mod_up_calls += chain.dnum_at(level);
            st.key_mult_calls += 1;
            st.mod_down_calls += 2;
            continue;
        }
        // Automorphism applied to the hoisted digits, then KeyMult.
        std::vector<LimbMatrix> rotated;
        rotated.reserve(hoisted_digits.size());
        for (const auto& d : hoisted_digits) rotated.push_back(apply_automorphism(d, i));
        auto [k0, k1] = key_mult(rotated, keys.rot_key(chain, i), chain, level);
        st.key_mult_calls += 1;
        LimbMatrix c0_rot = apply_automorphism(ct.c0, i);
        if (mode == HoistingMode::SingleHoisted) {
            Ciphertext b;
            b.c0 = detail::add_eval(mod_down(k0, chain, level), c0_rot);
            b.c1 = mod_down(k1, chain, level);
            b.level = level;
            b.scale = ct.scale;
            st.mod_down_calls += 2;
            baby[i] = std::move(b);
        } else {
            baby_ext[i].e0 = detail::add_eval(k0, lift_by_p(c0_rot, chain, level));
            baby_ext[i].e1 = k1;
        }
    }

    // Giant steps: accumulate the diagonal products, realign, reduce. Groups
    // with no surviving diagonal still run as zero partials, so the rotation
    // counters depend only on (n1, n2).
    Ciphertext out;
    bool out_set = false;
    for (u64 j = 0; j < plan.n2; ++j) {
        Ciphertext partial;
        detail::ExtCiphertext partial_ext;
        bool set = false;
        for (u64 i = 0; i < plan.n1; ++i) {
            const auto& diag = plan.groups[j][i];
            if (!diag.has_value()) continue;
            if (mode == HoistingMode::DoubleHoisted) {
                Basis qp = chain.qp_basis(level);
                LimbMatrix pt = ntt_reference(encode_over_basis(*diag, pt_scale, qp, n));
                LimbMatrix p0 = detail::mul_eval(baby_ext[i].e0, pt);
                LimbMatrix p1 = detail::mul_eval(baby_ext[i].e1, pt);
                counters().diagmult_mults += 2 * p0.limb_count() * p0.degree();
                if (!set) {
                    partial_ext.e0 = std::move(p0);
                    partial_ext.e1 = std::move(p1);
                } else {
                    partial_ext.e0 = detail::add_eval(partial_ext.e0, p0);
                    partial_ext.e1 = detail::add_eval(partial_ext.e1, p1);
                }
            } else {
                LimbMatrix pt =
                    ntt_reference(encode(*diag, pt_scale, chain, level, n));
                Ciphertext prod = p_mult(baby[i], pt, pt_scale);
                partial = set ? h_add(partial, prod) : prod;
            }
            set = true;
        }
        if (!set) {
            if (mode == HoistingMode::DoubleHoisted) {
                Basis qp = chain.qp_basis(level);
                partial_ext.e0 = LimbMatrix(qp, n, Rep::Eval, Order::Natural);
                partial_ext.e1 = partial_ext.e0;
            } else {
                partial = detail::zero_like(ct, ct.scale * pt_scale);
            }
        }
        if (mode == HoistingMode::DoubleHoisted) {
            // One deferred ModDown per giant-step output.
            partial.c0 = mod_down(partial_ext.e0, chain, level);
            partial.c1 = mod_down(partial_ext.e1, chain, level);
            partial.level = level;
            partial.scale = ct.scale * pt_scale;
            st.mod_down_calls += 2;
        }
        u64 rot_amount = (plan.n1 * j) % slots;
        Ciphertext aligned = h_rot(partial, rot_amount, keys, chain);
        st.rotations_total += 1;
        if (rot_amount != 0) {
            st.rotations_keyswitched += 1;
            st.decompose_calls += 1;
            st.mod_up_calls += chain.dnum_at(level);
            st.key_mult_calls += 1;
            st.mod_down_calls += 2;
        }
        out = out_set ? h_add(out, aligned) : aligned;
        out_set = true;
    }
    if (!out_set) out = detail::zero_like(ct, ct.scale * pt_scale);  // zero matrix
    st.modular_mults = counters().total_mults() - mults_before;
    if (stats) *stats = st;
    return out;
}

// --- On-the-fly limb extension -----------------------------------------------------

// Regenerate every limb of a plaintext diagonal from its single q0-limb
// coefficient form: centered-lift each coefficient out of q0, reduce into
// the target moduli, NTT per limb. Exact whenever the underlying integer
// coefficients lie within (-q0/2, q0/2] and within half of every target
// modulus; anything larger is an explicit failure, never a silent wrap.
inline LimbMatrix of_limb_extend(const LimbMatrix& diag_q0, const Basis& target, u64 n) {
    if (diag_q0.limb_count() != 1)
        throw std::invalid_argument("of_limb_extend: expected a single q0 limb");
    if (diag_q0.rep != Rep::Coeff)
        throw std::invalid_argument("of_limb_extend: expected Coeff rep");
    const u64 q0 = diag_q0.basis[0].value;
    u64 min_target = target[0].value;
    for (const auto& m : target) min_target = std::min(min_target, m.value);
    LimbMatrix coeff(target, n, Rep::Coeff, diag_q0.order);
    for (u64 c = 0; c < n; ++c) {
        u64 v = diag_q0.data[0][c];
        bool neg = v > q0 / 2;
        u64 mag = neg ? q0 - v : v;
        if (2 * mag >= min_target)
            throw std::overflow_error(
                "of_limb_extend: coefficient magnitude exceeds half a target modulus");
        for (std::size_t l = 0; l < target.size(); ++l) {
            u64 q = target[l].value;
            coeff.data[l][c] = neg ? (mag ? q - mag : 0) : mag;
        }
    }
    return ntt_reference(coeff);
}

}  // namespace osiris
