// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "osiris/poly.hpp"

namespace osiris {

// Noise-free CKKS: every error polynomial is zero, so homomorphic identities
// hold exactly and tests can assert bit equality. Security is out of scope.

struct Ciphertext {
    LimbMatrix c0, c1;   // Eval/Natural over q_0..q_level
    u64 level = 0;
    double scale = 1.0;
};

struct SecretKey {
    LimbMatrix s;        // Eval/Natural over the full Q*P basis
    u64 hamming_weight = 0;
};

enum class KeyKind : u64 { Relin = 0, Rot = 1 };

struct SwitchingKeyDigit {
    LimbMatrix b, a;     // Eval/Natural over the full Q*P basis
};

struct SwitchingKey {
    KeyKind kind = KeyKind::Relin;
    u64 rot_amount = 0;
    u64 seed = 0;        // every a_d regenerates from this alone
    std::vector<SwitchingKeyDigit> digits;
};

// Fast-basis-conversion table: per-source prescale (Qhat_i^-1 mod q_i) and
// the weight matrix w[i][j] = Qhat_i mod q'_j.
struct BaseTable {
    Basis from, to;
    std::vector<u64> prescale;
    std::vector<std::vector<u64>> weights;
};

inline BaseTable make_base_table(const Basis& from, const Basis& to) {
    BaseTable t;
    t.from = from;
    t.to = to;
    t.prescale.resize(from.size());
    t.weights.assign(from.size(), std::vector<u64>(to.size()));
    for (std::size_t i = 0; i < from.size(); ++i) {
        u64 qi = from[i].value;
        u64 qhat_mod_qi = 1;
        for (std::size_t k = 0; k < from.size(); ++k)
            if (k != i) qhat_mod_qi = mod_mul(qhat_mod_qi, from[k].value % qi, qi);
        t.prescale[i] = mod_inv(qhat_mod_qi, qi);
        for (std::size_t j = 0; j < to.size(); ++j) {
            u64 qj = to[j].value;
            u64 w = 1;
            for (std::size_t k = 0; k < from.size(); ++k)
                if (k != i) w = mod_mul(w, from[k].value % qj, qj);
            t.weights[i][j] = w;
        }
    }
    return t;
}

// Fast basis conversion in coefficient representation. Output coefficient
// is congruent to v + u*Q_from modulo every destination prime, for the CRT
// value v of the input and a single integer 0 <= u < alpha.
inline LimbMatrix bconv_reference(const LimbMatrix& x, const BaseTable& table) {
    if (x.rep != Rep::Coeff) throw std::invalid_argument("bconv: Coeff rep required");
    if (x.basis.size() != table.from.size())
        throw std::invalid_argument("bconv: basis mismatch");
    for (std::size_t i = 0; i < x.basis.size(); ++i)
        if (x.basis[i].value != table.from[i].value)
            throw std::invalid_argument("bconv: basis mismatch");
    const u64 n = x.degree();
    const std::size_t alpha = table.from.size();
    const std::size_t beta = table.to.size();
    LimbMatrix out(table.to, n, Rep::Coeff, x.order);
    std::vector<u64> scaled(alpha);
    for (u64 c = 0; c < n; ++c) {
        for (std::size_t i = 0; i < alpha; ++i)
            scaled[i] = table.from[i].mul(x.data[i][c], table.prescale[i]);
        for (std::size_t j = 0; j < beta; ++j) {
            const auto& qj = table.to[j];
            u64 acc = 0;
            for (std::size_t i = 0; i < alpha; ++i)
                acc = qj.add(acc, qj.mul(scaled[i], table.weights[i][j]));
            out.data[j][c] = acc;
        }
    }
    counters().bconv_prescale += n * alpha;
    counters().bconv_smac += n * alpha * beta;
    counters().adds += n * alpha * beta;
    return out;
}

// ModChange in evaluation representation: INTT per limb, convert, NTT per
// new limb.
inline LimbMatrix mod_change(const LimbMatrix& x, const BaseTable& table) {
    return ntt_reference(bconv_reference(intt_reference(x), table));
}

// Digit d holds limbs [d*alpha, min((d+1)*alpha, level+1)).
inline std::vector<LimbMatrix> decompose(const LimbMatrix& c1, u64 alpha) {
    const u64 limbs = c1.limb_count();
    const u64 dnum = (limbs + alpha - 1) / alpha;
    std::vector<LimbMatrix> digits;
    digits.reserve(dnum);
    for (u64 d = 0; d < dnum; ++d) {
        u64 lo = d * alpha;
        u64 hi = std::min<u64>(lo + alpha, limbs);
        LimbMatrix dig;
        dig.rep = c1.rep;
        dig.order = c1.order;
        dig.basis.assign(c1.basis.begin() + lo, c1.basis.begin() + hi);
        dig.data.assign(c1.data.begin() + lo, c1.data.begin() + hi);
        digits.push_back(std::move(dig));
    }
    return digits;
}

// Raise one digit to the full Q*P basis at `level`. Source limbs are copied
// verbatim; only missing limbs go through the INTT -> BConv -> NTT path.
inline LimbMatrix mod_up(const LimbMatrix& digit, const ModulusChain& chain, u64 level) {
    Basis qp = chain.qp_basis(level);
    Basis missing;
    std::vector<std::size_t> src_row(qp.size(), SIZE_MAX);
    std::vector<bool> is_copy(qp.size(), false);
    for (std::size_t j = 0; j < qp.size(); ++j) {
        for (std::size_t i = 0; i < digit.basis.size(); ++i) {
            if (qp[j].value == digit.basis[i].value) {
                src_row[j] = i;
                is_copy[j] = true;
                break;
            }
        }
        if (!is_copy[j]) missing.push_back(qp[j]);
    }
    LimbMatrix converted;
    if (!missing.empty()) {
        BaseTable t = make_base_table(digit.basis, missing);
        converted = mod_change(digit, t);
    }
    LimbMatrix out(qp, digit.degree(), Rep::Eval, Order::Natural);
    std::size_t conv_row = 0;
    for (std::size_t j = 0; j < qp.size(); ++j) {
        out.data[j] = is_copy[j] ? digit.data[src_row[j]] : converted.data[conv_row++];
    }
    return out;
}

namespace detail {

// Rows of a full-basis key matching q_0..q_level plus all p limbs.
inline std::vector<std::size_t> key_rows(const LimbMatrix& key_poly, const ModulusChain& chain,
                                         u64 level) {
    Basis qp = chain.qp_basis(level);
    std::vector<std::size_t> rows;
    rows.reserve(qp.size());
    for (const auto& m : qp) {
        bool found = false;
        for (std::size_t i = 0; i < key_poly.basis.size(); ++i) {
            if (key_poly.basis[i].value == m.value) {
                rows.push_back(i);
                found = true;
                break;
            }
        }
        if (!found) throw std::logic_error("key_rows: key does not cover basis");
    }
    return rows;
}

}  // namespace detail

// Inner product of raised digits with the key digits, over Q*P.
inline std::pair<LimbMatrix, LimbMatrix> key_mult(const std::vector<LimbMatrix>& digits_upped,
                                                  const SwitchingKey& swk,
                                                  const ModulusChain& chain, u64 level) {
    if (digits_upped.empty()) throw std::invalid_argument("key_mult: no digits");
    if (digits_upped.size() > swk.digits.size())
        throw std::invalid_argument("key_mult: digit count exceeds key digits");
    Basis qp = chain.qp_basis(level);
    const u64 n = digits_upped[0].degree();
    LimbMatrix acc0(qp, n, Rep::Eval, Order::Natural);
    LimbMatrix acc1(qp, n, Rep::Eval, Order::Natural);
    for (std::size_t d = 0; d < digits_upped.size(); ++d) {
        auto rows = detail::key_rows(swk.digits[d].b, chain, level);
        for (std::size_t j = 0; j < qp.size(); ++j) {
            const auto& m = qp[j];
            const auto& dig = digits_upped[d].data[j];
            const auto& brow = swk.digits[d].b.data[rows[j]];
            const auto& arow = swk.digits[d].a.data[rows[j]];
            for (u64 c = 0; c < n; ++c) {
                acc0.data[j][c] = m.add(acc0.data[j][c], m.mul(dig[c], brow[c]));
                acc1.data[j][c] = m.add(acc1.data[j][c], m.mul(dig[c], arow[c]));
            }
        }
        counters().keymult_mults += 2 * qp.size() * n;
        counters().adds += 2 * qp.size() * n;
    }
    return {std::move(acc0), std::move(acc1)};
}

// x' = (x - ModChange_{P->Q}([x]_P)) * P^-1 over q_0..q_level.
inline LimbMatrix mod_down(const LimbMatrix& x, const ModulusChain& chain, u64 level) {
    const u64 q_count = level + 1;
    const u64 alpha = chain.alpha;
    if (x.limb_count() != q_count + alpha)
        throw std::invalid_argument("mod_down: expected a Q*P operand");
    const u64 n = x.degree();
    LimbMatrix p_part;
    p_part.rep = x.rep;
    p_part.order = x.order;
    p_part.basis.assign(x.basis.begin() + q_count, x.basis.end());
    p_part.data.assign(x.data.begin() + q_count, x.data.end());

    Basis q_basis = chain.q_basis(level);
    BaseTable t = make_base_table(p_part.basis, q_basis);
    LimbMatrix conv = mod_change(p_part, t);

    LimbMatrix out(q_basis, n, Rep::Eval, Order::Natural);
    for (u64 j = 0; j < q_count; ++j) {
        const auto& m = q_basis[j];
        u64 p_mod = 1;
        for (const auto& p : chain.p_limbs) p_mod = mod_mul(p_mod, p.value % m.value, m.value);
        u64 p_inv = mod_inv(p_mod, m.value);
        for (u64 c = 0; c < n; ++c)
            out.data[j][c] = m.mul(m.sub(x.data[j][c], conv.data[j][c]), p_inv);
    }
    counters().rescale_mults += q_count * n;
    counters().adds += q_count * n;
    return out;
}

// Drop the top q-limb with exact division; the fused variant drops P and the
// top limb in a single conversion so the ModDown of a key-switch and the
// Rescale of an HMult share one pass.
namespace detail {

inline LimbMatrix drop_limbs(const LimbMatrix& x, const Basis& dropped, const Basis& kept,
                             const ModulusChain& /*chain*/) {
    const u64 n = x.degree();
    LimbMatrix drop_part;
    drop_part.rep = x.rep;
    drop_part.order = x.order;
    std::vector<std::size_t> kept_rows, drop_rows;
    for (std::size_t i = 0; i < x.basis.size(); ++i) {
        bool is_dropped = false;
        for (const auto& d : dropped)
            if (d.value == x.basis[i].value) { is_dropped = true; break; }
        (is_dropped ? drop_rows : kept_rows).push_back(i);
    }
    if (drop_rows.size() != dropped.size() || kept_rows.size() != kept.size())
        throw std::invalid_argument("drop_limbs: basis mismatch");
    for (std::size_t i = 0; i < drop_rows.size(); ++i) {
        drop_part.basis.push_back(x.basis[drop_rows[i]]);
        drop_part.data.push_back(x.data[drop_rows[i]]);
    }
    BaseTable t = make_base_table(drop_part.basis, kept);
    LimbMatrix conv = mod_change(drop_part, t);
    LimbMatrix out(kept, n, Rep::Eval, Order::Natural);
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const auto& m = kept[j];
        u64 factor = 1;
        for (const auto& d : dropped) factor = mod_mul(factor, d.value % m.value, m.value);
        u64 f_inv = mod_inv(factor, m.value);
        for (u64 c = 0; c < n; ++c)
            out.data[j][c] = m.mul(m.sub(x.data[kept_rows[j]][c], conv.data[j][c]), f_inv);
    }
    counters().rescale_mults += kept.size() * n;
    counters().adds += kept.size() * n;
    return out;
}

}  // namespace detail

inline Ciphertext rescale(const Ciphertext& ct, const ModulusChain& chain) {
    if (ct.level == 0) throw std::invalid_argument("rescale: already at level 0");
    Basis dropped{chain.q_limbs[ct.level]};
    Basis kept = chain.q_basis(ct.level - 1);
    Ciphertext out;
    out.c0 = detail::drop_limbs(ct.c0, dropped, kept, chain);
    out.c1 = detail::drop_limbs(ct.c1, dropped, kept, chain);
    out.level = ct.level - 1;
    out.scale = ct.scale / static_cast<double>(chain.q_limbs[ct.level].value);
    return out;
}

// From Q*P at `level` directly to q_0..q_{level-1}, in one pipeline pass.
// Computes z_i = (x_i - conv1_i - P*conv2_i) * (P*q_level)^-1 where conv1 is
// the P->Q correction and conv2 converts the intermediate top limb; this is
// the exact regrouping of rescale(mod_down(x)), so the two paths agree
// bit-for-bit while the fused form skips the intermediate NTT pass.
inline LimbMatrix fused_moddown_rescale(const LimbMatrix& x, const ModulusChain& chain,
                                        u64 level) {
    if (level == 0) throw std::invalid_argument("fused_moddown_rescale: level 0");
    const u64 q_count = level + 1;
    const u64 alpha = chain.alpha;
    if (x.limb_count() != q_count + alpha)
        throw std::invalid_argument("fused_moddown_rescale: expected a Q*P operand");
    const u64 n = x.degree();
    const auto& q_top = chain.q_limbs[level];

    // P rows and the top q row to coefficient domain.
    LimbMatrix p_part;
    p_part.rep = Rep::Eval;
    p_part.order = Order::Natural;
    p_part.basis.assign(x.basis.begin() + q_count, x.basis.end());
    p_part.data.assign(x.data.begin() + q_count, x.data.end());
    LimbMatrix p_coeff = intt_reference(p_part);
    std::vector<u64> top_coeff = intt_limb_reference(x.data[level], q_top);

    Basis kept = chain.q_basis(level - 1);
    Basis q_full = chain.q_basis(level);
    BaseTable t1 = make_base_table(p_part.basis, q_full);
    LimbMatrix conv1 = bconv_reference(p_coeff, t1);

    // Intermediate top limb t = (x_top - conv1_top) * P^-1 mod q_level.
    u64 p_mod_top = 1;
    for (const auto& p : chain.p_limbs)
        p_mod_top = mod_mul(p_mod_top, p.value % q_top.value, q_top.value);
    u64 p_inv_top = mod_inv(p_mod_top, q_top.value);
    LimbMatrix t_limb(Basis{q_top}, n, Rep::Coeff, conv1.order);
    for (u64 c = 0; c < n; ++c)
        t_limb.data[0][c] = q_top.mul(q_top.sub(top_coeff[c], conv1.data[level][c]), p_inv_top);
    counters().rescale_mults += n;

    BaseTable t2 = make_base_table(Basis{q_top}, kept);
    LimbMatrix conv2 = bconv_reference(t_limb, t2);

    LimbMatrix out(kept, n, Rep::Eval, Order::Natural);
    for (u64 j = 0; j < kept.size(); ++j) {
        const auto& m = kept[j];
        u64 p_mod = 1;
        for (const auto& p : chain.p_limbs) p_mod = mod_mul(p_mod, p.value % m.value, m.value);
        u64 factor_inv = mod_inv(mod_mul(p_mod, q_top.value % m.value, m.value), m.value);
        std::vector<u64> corr(n);
        for (u64 c = 0; c < n; ++c)
            corr[c] = m.add(conv1.data[j][c], m.mul(p_mod, conv2.data[j][c]));
        std::vector<u64> corr_eval = ntt_limb_reference(corr, m, conv1.order);
        for (u64 c = 0; c < n; ++c)
            out.data[j][c] = m.mul(m.sub(x.data[j][c], corr_eval[c]), factor_inv);
    }
    counters().rescale_mults += 2 * kept.size() * n;
    counters().adds += 2 * kept.size() * n;
    return out;
}

// --- Key generation -----------------------------------------------------------

namespace detail {

inline LimbMatrix random_eval_poly(const Basis& basis, u64 n, Rng& rng) {
    LimbMatrix x(basis, n, Rep::Eval, Order::Natural);
    for (std::size_t l = 0; l < basis.size(); ++l)
        for (u64 c = 0; c < n; ++c) x.data[l][c] = rng.uniform_below(basis[l].value);
    return x;
}

inline LimbMatrix mul_eval(const LimbMatrix& a, const LimbMatrix& b) {
    LimbMatrix out = a;
    for (std::size_t l = 0; l < a.limb_count(); ++l)
        for (u64 c = 0; c < a.degree(); ++c)
            out.data[l][c] = a.basis[l].mul(a.data[l][c], b.data[l][c]);
    return out;
}

inline LimbMatrix add_eval(const LimbMatrix& a, const LimbMatrix& b) {
    LimbMatrix out = a;
    for (std::size_t l = 0; l < a.limb_count(); ++l)
        for (u64 c = 0; c < a.degree(); ++c)
            out.data[l][c] = a.basis[l].add(a.data[l][c], b.data[l][c]);
    return out;
}

inline LimbMatrix sub_eval(const LimbMatrix& a, const LimbMatrix& b) {
    LimbMatrix out = a;
    for (std::size_t l = 0; l < a.limb_count(); ++l)
        for (u64 c = 0; c < a.degree(); ++c)
            out.data[l][c] = a.basis[l].sub(a.data[l][c], b.data[l][c]);
    return out;
}

// Restrict a full-basis polynomial to the first rows of `basis`.
inline LimbMatrix restrict_rows(const LimbMatrix& x, const Basis& basis) {
    LimbMatrix out;
    out.rep = x.rep;
    out.order = x.order;
    out.basis = basis;
    for (const auto& m : basis) {
        bool found = false;
        for (std::size_t i = 0; i < x.basis.size(); ++i) {
            if (x.basis[i].value == m.value) {
                out.data.push_back(x.data[i]);
                found = true;
                break;
            }
        }
        if (!found) throw std::logic_error("restrict_rows: missing modulus");
    }
    return out;
}

}  // namespace detail

inline SecretKey keygen_secret(const ModulusChain& chain, u64 n, u64 hamming_weight, u64 seed) {
    if (hamming_weight > n) throw std::invalid_argument("keygen: h exceeds ring degree");
    Rng rng(splitmix64(seed) ^ 0x731a9f3b2c64d5e1ull);
    std::vector<int> coeffs(n, 0);
    u64 placed = 0;
    while (placed < hamming_weight) {
        u64 pos = rng.uniform_below(n);
        if (coeffs[pos] != 0) continue;
        coeffs[pos] = (rng.next() & 1) ? 1 : -1;
        ++placed;
    }
    Basis qp = chain.qp_basis(chain.max_level());
    LimbMatrix s(qp, n, Rep::Coeff, Order::Natural);
    for (std::size_t l = 0; l < qp.size(); ++l) {
        u64 q = qp[l].value;
        for (u64 c = 0; c < n; ++c)
            s.data[l][c] = coeffs[c] == 0 ? 0 : (coeffs[c] == 1 ? 1 : q - 1);
    }
    SecretKey sk;
    sk.s = ntt_reference(s);
    sk.hamming_weight = hamming_weight;
    return sk;
}

// Switching key toward `s`, re-encrypting `s_from`. With zero error the
// invariant b_d + a_d*s = P*gamma_d*s_from (mod QP) holds exactly, where
// gamma_d is 1 modulo digit d's q-limbs and 0 modulo the others; P*gamma_d
// reduces to (P mod q_i) on digit rows and to 0 everywhere else.
inline SwitchingKey make_switching_key(const ModulusChain& chain, const SecretKey& sk,
                                       const LimbMatrix& s_from, KeyKind kind, u64 rot_amount,
                                       u64 seed) {
    Basis qp = chain.qp_basis(chain.max_level());
    const u64 n = sk.s.degree();
    const u64 dnum = chain.dnum_max();
    const u64 alpha = chain.alpha;
    const u64 q_count = chain.q_limbs.size();

    SwitchingKey swk;
    swk.kind = kind;
    swk.rot_amount = rot_amount;
    swk.seed = seed;
    for (u64 d = 0; d < dnum; ++d) {
        u64 digit_seed = splitmix64(seed ^ (static_cast<u64>(kind) << 32) ^
                                    (rot_amount * 0x9e3779b9ull) ^ (d + 1));
        Rng rng(digit_seed);
        SwitchingKeyDigit kd;
        kd.a = detail::random_eval_poly(qp, n, rng);
        // a_d is zero over the p-limbs: key-switch outputs are then exact
        // multiples of P and ModDown never rounds (noise-free mode).
        for (std::size_t j = q_count; j < qp.size(); ++j)
            std::fill(kd.a.data[j].begin(), kd.a.data[j].end(), 0);
        kd.b = LimbMatrix(qp, n, Rep::Eval, Order::Natural);
        for (std::size_t j = 0; j < qp.size(); ++j) {
            const auto& m = qp[j];
            bool in_digit = j < q_count && j / alpha == d;
            u64 pgamma = 0;
            if (in_digit) {
                pgamma = 1;
                for (const auto& p : chain.p_limbs)
                    pgamma = mod_mul(pgamma, p.value % m.value, m.value);
            }
            for (u64 c = 0; c < n; ++c) {
                u64 as = m.mul(kd.a.data[j][c], sk.s.data[j][c]);
                u64 target = pgamma ? m.mul(pgamma, s_from.data[j][c]) : 0;
                kd.b.data[j][c] = m.sub(target, as);
            }
        }
        swk.digits.push_back(std::move(kd));
    }
    return swk;
}

inline SwitchingKey make_relin_key(const ModulusChain& chain, const SecretKey& sk, u64 seed) {
    LimbMatrix s2 = detail::mul_eval(sk.s, sk.s);
    return make_switching_key(chain, sk, s2, KeyKind::Relin, 0, seed);
}

inline SwitchingKey make_rot_key(const ModulusChain& chain, const SecretKey& sk, u64 r,
                                 u64 seed) {
    LimbMatrix s_rot = apply_automorphism(sk.s, r);
    return make_switching_key(chain, sk, s_rot, KeyKind::Rot, r, seed);
}

// Regenerate the PRNG halves from the stored seed; must be bit-identical to
// the originals (DRAM traffic for keys is halved on this property).
inline std::vector<LimbMatrix> regenerate_key_a(const SwitchingKey& swk,
                                                const ModulusChain& chain, u64 n) {
    Basis qp = chain.qp_basis(chain.max_level());
    std::vector<LimbMatrix> out;
    for (u64 d = 0; d < swk.digits.size(); ++d) {
        u64 digit_seed = splitmix64(swk.seed ^ (static_cast<u64>(swk.kind) << 32) ^
                                    (swk.rot_amount * 0x9e3779b9ull) ^ (d + 1));
        Rng rng(digit_seed);
        LimbMatrix a = detail::random_eval_poly(qp, n, rng);
        for (std::size_t j = chain.q_limbs.size(); j < qp.size(); ++j)
            std::fill(a.data[j].begin(), a.data[j].end(), 0);
        out.push_back(std::move(a));
    }
    return out;
}

struct KeySet {
    SecretKey secret;
    SwitchingKey relin;
    std::map<u64, SwitchingKey> rot;
    u64 seed = 0;

    const SwitchingKey& rot_key(const ModulusChain& chain, u64 r) {
        u64 ord = slot_count(secret.s.degree());
        r %= ord;
        auto it = rot.find(r);
        if (it == rot.end()) {
            it = rot.emplace(r, make_rot_key(chain, secret, r, splitmix64(seed ^ (r + 17)))).first;
        }
        return it->second;
    }
};

inline KeySet keygen(const ModulusChain& chain, u64 n, u64 hamming_weight, u64 seed,
                     const std::vector<u64>& rotations = {}) {
    KeySet ks;
    ks.seed = seed;
    ks.secret = keygen_secret(chain, n, hamming_weight, seed);
    ks.relin = make_relin_key(chain, ks.secret, splitmix64(seed ^ 0xABCDull));
    for (u64 r : rotations) ks.rot_key(chain, r);
    return ks;
}

// --- Encrypt / decrypt ----------------------------------------------------------

inline Ciphertext encrypt(const LimbMatrix& plaintext_coeff, const SecretKey& sk,
                          const ModulusChain& chain, u64 level, double scale, u64 seed) {
    LimbMatrix pt = ntt_reference(plaintext_coeff);
    Basis q = chain.q_basis(level);
    Rng rng(splitmix64(seed ^ 0x7c7c7c7cull));
    Ciphertext ct;
    ct.c1 = detail::random_eval_poly(q, pt.degree(), rng);
    LimbMatrix s_q = detail::restrict_rows(sk.s, q);
    ct.c0 = detail::sub_eval(pt, detail::mul_eval(ct.c1, s_q));
    ct.level = level;
    ct.scale = scale;
    return ct;
}

inline LimbMatrix decrypt(const Ciphertext& ct, const SecretKey& sk, const ModulusChain& chain) {
    Basis q = chain.q_basis(ct.level);
    LimbMatrix s_q = detail::restrict_rows(sk.s, q);
    LimbMatrix m_eval = detail::add_eval(ct.c0, detail::mul_eval(ct.c1, s_q));
    return intt_reference(m_eval);
}

// --- Ciphertext operations ------------------------------------------------------

inline void require_aligned(const Ciphertext& a, const Ciphertext& b) {
    if (a.level != b.level) throw std::invalid_argument("ciphertext level mismatch");
    if (std::abs(a.scale - b.scale) > 1e-9 * a.scale)
        throw std::invalid_argument("ciphertext scale mismatch");
}

inline Ciphertext h_add(const Ciphertext& a, const Ciphertext& b) {
    require_aligned(a, b);
    Ciphertext out = a;
    out.c0 = detail::add_eval(a.c0, b.c0);
    out.c1 = detail::add_eval(a.c1, b.c1);
    return out;
}

inline Ciphertext h_neg(const Ciphertext& a) {
    Ciphertext out = a;
    for (auto* poly : {&out.c0, &out.c1})
        for (std::size_t l = 0; l < poly->limb_count(); ++l)
            for (auto& v : poly->data[l]) v = poly->basis[l].neg(v);
    return out;
}

inline Ciphertext p_add(const Ciphertext& ct, const LimbMatrix& pt_eval) {
    Ciphertext out = ct;
    out.c0 = detail::add_eval(ct.c0, pt_eval);
    return out;
}

// Pointwise plaintext multiply; never rescales on its own so callers can
// accumulate products and rescale once.
inline Ciphertext p_mult(const Ciphertext& ct, const LimbMatrix& pt_eval, double pt_scale) {
    Ciphertext out = ct;
    out.c0 = detail::mul_eval(ct.c0, pt_eval);
    out.c1 = detail::mul_eval(ct.c1, pt_eval);
    out.scale = ct.scale * pt_scale;
    counters().diagmult_mults += 2 * ct.c0.limb_count() * ct.c0.degree();
    return out;
}

// Lift a Q-level polynomial to Q*P by multiplying with P: q-rows scale by
// (P mod q_i), p-rows are exactly zero.
inline LimbMatrix lift_by_p(const LimbMatrix& x, const ModulusChain& chain, u64 level) {
    Basis qp = chain.qp_basis(level);
    LimbMatrix out(qp, x.degree(), Rep::Eval, Order::Natural);
    for (std::size_t j = 0; j <= level; ++j) {
        const auto& m = qp[j];
        u64 p_mod = 1;
        for (const auto& p : chain.p_limbs) p_mod = mod_mul(p_mod, p.value % m.value, m.value);
        for (u64 c = 0; c < x.degree(); ++c) out.data[j][c] = m.mul(x.data[j][c], p_mod);
    }
    counters().auto_adjacent += (level + 1) * x.degree();
    return out;
}

// Full key switch of a single polynomial: Decompose -> ModUp -> KeyMult ->
// ModDown. Returns the (c0, c1) correction pair over q_0..q_level.
inline std::pair<LimbMatrix, LimbMatrix> key_switch(const LimbMatrix& poly,
                                                    const SwitchingKey& swk,
                                                    const ModulusChain& chain, u64 level) {
    auto digits = decompose(poly, chain.alpha);
    std::vector<LimbMatrix> upped;
    upped.reserve(digits.size());
    for (const auto& d : digits) upped.push_back(mod_up(d, chain, level));
    auto [k0, k1] = key_mult(upped, swk, chain, level);
    return {mod_down(k0, chain, level), mod_down(k1, chain, level)};
}

inline Ciphertext h_rot(const Ciphertext& ct, u64 r, KeySet& keys, const ModulusChain& chain) {
    u64 ord = slot_count(ct.c0.degree());
    r %= ord;
    if (r == 0) return ct;  // trivial rotation: no key, no key switch
    Ciphertext out = ct;
    out.c0 = apply_automorphism(ct.c0, r);
    LimbMatrix c1_rot = apply_automorphism(ct.c1, r);
    auto [k0, k1] = key_switch(c1_rot, keys.rot_key(chain, r), chain, ct.level);
    out.c0 = detail::add_eval(out.c0, k0);
    out.c1 = std::move(k1);
    return out;
}

// HMult with the ModDown of the relinearization and the trailing Rescale
// fused into one basis drop. `fused=false` keeps the two-step path for the
// equality-of-paths checks.
inline Ciphertext h_mult(const Ciphertext& a, const Ciphertext& b, const SwitchingKey& relin,
                         const ModulusChain& chain, bool fused = true) {
    require_aligned(a, b);
    if (a.level == 0) throw std::invalid_argument("h_mult: no level left to rescale into");
    LimbMatrix d0 = detail::mul_eval(a.c0, b.c0);
    LimbMatrix d1 = detail::add_eval(detail::mul_eval(a.c0, b.c1), detail::mul_eval(a.c1, b.c0));
    LimbMatrix d2 = detail::mul_eval(a.c1, b.c1);
    counters().diagmult_mults += 4 * d0.limb_count() * d0.degree();

    auto digits = decompose(d2, chain.alpha);
    std::vector<LimbMatrix> upped;
    for (const auto& d : digits) upped.push_back(mod_up(d, chain, a.level));
    auto [k0, k1] = key_mult(upped, relin, chain, a.level);

    Ciphertext out;
    out.level = a.level - 1;
    out.scale = a.scale * b.scale / static_cast<double>(chain.q_limbs[a.level].value);
    if (fused) {
        LimbMatrix s0 = detail::add_eval(k0, lift_by_p(d0, chain, a.level));
        LimbMatrix s1 = detail::add_eval(k1, lift_by_p(d1, chain, a.level));
        out.c0 = fused_moddown_rescale(s0, chain, a.level);
        out.c1 = fused_moddown_rescale(s1, chain, a.level);
    } else {
        Ciphertext mid;
        mid.c0 = detail::add_eval(mod_down(k0, chain, a.level), d0);
        mid.c1 = detail::add_eval(mod_down(k1, chain, a.level), d1);
        mid.level = a.level;
        mid.scale = a.scale * b.scale;
        Ciphertext rs = rescale(mid, chain);
        out = rs;
    }
    return out;
}

}  // namespace osiris
