// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "osiris/modmath.hpp"

namespace osiris {

inline constexpr u64 kMaxPrimeBits = 40;

// One RNS prime together with its NTT material. `ntt_root` is a primitive
// 2*n_max-th root of unity; roots for smaller ring degrees are powers of it.
struct PrimeModulus {
    u64 value = 0;
    u64 ntt_root = 0;
    u64 bit_width = 0;
    BarrettReducer barrett;

    PrimeModulus() = default;
    PrimeModulus(u64 v, u64 root, u64 bits)
        : value(v), ntt_root(root), bit_width(bits), barrett(v) {}

    u64 mul(u64 a, u64 b) const { return barrett.mul(a, b); }
    u64 add(u64 a, u64 b) const { return mod_add(a, b, value); }
    u64 sub(u64 a, u64 b) const { return mod_sub(a, b, value); }
    u64 neg(u64 a) const { return mod_neg(a, value); }
    u64 pow(u64 b, u64 e) const { return mod_pow(b, e, value); }
    u64 inv(u64 a) const { return mod_inv(a, value); }

    bool operator==(const PrimeModulus& o) const { return value == o.value; }
};

using Basis = std::vector<PrimeModulus>;

// Residue vector of a single integer over a basis.
struct RnsInt {
    std::vector<u64> residues;
};

namespace detail {

// Smallest generator of Z_q^* found by trial; q-1 is factored by trial
// division (q < 2^40, so the largest prime factor check is cheap enough
// for one-time chain setup).
inline u64 primitive_root(u64 q) {
    u64 phi = q - 1;
    std::vector<u64> factors;
    u64 n = phi;
    for (u64 f = 2; f * f <= n; f += (f == 2 ? 1 : 2)) {
        if (n % f == 0) {
            factors.push_back(f);
            while (n % f == 0) n /= f;
        }
    }
    if (n > 1) factors.push_back(n);
    for (u64 g = 2; g < q; ++g) {
        bool ok = true;
        for (u64 f : factors) {
            if (mod_pow(g, phi / f, q) == 1) { ok = false; break; }
        }
        if (ok) return g;
    }
    throw std::runtime_error("primitive_root: none found (non-prime modulus?)");
}

}  // namespace detail

// Primitive 2n-th root of unity mod q; requires q = 1 (mod 2n).
inline u64 find_2n_root(u64 q, u64 two_n) {
    if ((q - 1) % two_n != 0)
        throw std::invalid_argument("find_2n_root: modulus not 1 mod 2N");
    u64 g = detail::primitive_root(q);
    u64 root = mod_pow(g, (q - 1) / two_n, q);
    if (mod_pow(root, two_n / 2, q) != q - 1)
        throw std::runtime_error("find_2n_root: candidate is not primitive");
    return root;
}

// RNS prime sets for one parameter point. q_limbs has length L+1, p_limbs
// has length alpha; every prime is NTT-friendly for ring degree n_max.
struct ModulusChain {
    u64 n_max = 0;
    u64 alpha = 0;
    u64 scale_bits = 0;
    Basis q_limbs;
    Basis p_limbs;

    u64 max_level() const { return q_limbs.size() - 1; }
    u64 dnum_max() const { return (q_limbs.size() + alpha - 1) / alpha; }
    u64 dnum_at(u64 level) const { return (level + 1 + alpha - 1) / alpha; }

    // q_0 .. q_level
    Basis q_basis(u64 level) const {
        if (level >= q_limbs.size())
            throw std::out_of_range("ModulusChain: level beyond chain");
        return Basis(q_limbs.begin(), q_limbs.begin() + level + 1);
    }

    // q_0 .. q_level, p_0 .. p_{alpha-1}
    Basis qp_basis(u64 level) const {
        Basis b = q_basis(level);
        b.insert(b.end(), p_limbs.begin(), p_limbs.end());
        return b;
    }

    BigUint product_q(u64 level) const {
        BigUint prod = BigUint::one();
        for (u64 i = 0; i <= level; ++i) prod.mul_small(q_limbs[i].value);
        return prod;
    }

    BigUint product_p() const {
        BigUint prod = BigUint::one();
        for (const auto& p : p_limbs) prod.mul_small(p.value);
        return prod;
    }

    u64 log_qp_bits() const {
        BigUint prod = product_q(max_level());
        for (const auto& p : p_limbs) prod.mul_small(p.value);
        return prod.bit_length();
    }
};

namespace detail {

// Descending search for distinct NTT-friendly primes of exactly `bits` bits.
// Deterministic: starts at the top of the bit range and walks down in steps
// of 2N, so regenerated chains are identical run to run.
inline std::vector<u64> find_primes_descending(u64 bits, u64 count, u64 two_n,
                                               std::set<u64>& used) {
    if (bits > kMaxPrimeBits)
        throw std::invalid_argument("prime search: requested width " + std::to_string(bits) +
                                    " exceeds the 40-bit cap");
    if (bits < log2_exact(two_n) + 2)
        throw std::invalid_argument("prime search: width " + std::to_string(bits) +
                                    " too small for 2N = " + std::to_string(two_n));
    std::vector<u64> out;
    u64 hi = (bits == 64) ? ~u64{0} : (u64{1} << bits) - 1;
    u64 lo = u64{1} << (bits - 1);
    // Largest candidate <= hi congruent to 1 mod 2N.
    u64 c = hi - ((hi - 1) % two_n);
    for (; c >= lo && out.size() < count; c -= two_n) {
        if (used.count(c)) continue;
        if (is_prime(c)) {
            out.push_back(c);
            used.insert(c);
        }
    }
    if (out.size() < count)
        throw std::runtime_error("prime search: not enough " + std::to_string(bits) +
                                 "-bit primes congruent 1 mod " + std::to_string(two_n));
    return out;
}

}  // namespace detail

// Chain construction from explicit per-prime widths. q0 may be split into
// several primes (Sets III/IV style), which is why q widths are a list.
inline ModulusChain generate_chain_widths(u64 n_max, const std::vector<u64>& q_bits,
                                          u64 alpha, u64 p_bits, u64 scale_bits) {
    if (!is_power_of_two(n_max))
        throw std::invalid_argument("generate_chain: ring degree must be a power of two");
    if (q_bits.empty()) throw std::invalid_argument("generate_chain: empty q width list");
    u64 two_n = 2 * n_max;
    std::set<u64> used;
    ModulusChain chain;
    chain.n_max = n_max;
    chain.alpha = alpha;
    chain.scale_bits = scale_bits;

    // Group widths so equal-width primes come from one descending walk.
    std::vector<u64> q_values(q_bits.size());
    std::vector<std::vector<std::size_t>> groups;
    std::vector<u64> group_bits;
    for (std::size_t i = 0; i < q_bits.size(); ++i) {
        bool found = false;
        for (std::size_t g = 0; g < group_bits.size(); ++g) {
            if (group_bits[g] == q_bits[i]) { groups[g].push_back(i); found = true; break; }
        }
        if (!found) {
            group_bits.push_back(q_bits[i]);
            groups.push_back({i});
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto primes = detail::find_primes_descending(group_bits[g], groups[g].size(), two_n, used);
        for (std::size_t j = 0; j < groups[g].size(); ++j) q_values[groups[g][j]] = primes[j];
    }
    for (std::size_t i = 0; i < q_values.size(); ++i) {
        chain.q_limbs.emplace_back(q_values[i], find_2n_root(q_values[i], two_n), q_bits[i]);
    }
    auto p_primes = detail::find_primes_descending(p_bits, alpha, two_n, used);
    for (u64 v : p_primes) {
        chain.p_limbs.emplace_back(v, find_2n_root(v, two_n), p_bits);
    }
    return chain;
}

// Convenience form: q0 plus `level_count` equal-width scale primes.
inline ModulusChain generate_chain(u64 n_max, u64 level_count, u64 alpha, u64 q0_bits,
                                   u64 qi_bits, u64 p_bits) {
    std::vector<u64> widths{q0_bits};
    for (u64 i = 0; i < level_count; ++i) widths.push_back(qi_bits);
    return generate_chain_widths(n_max, widths, alpha, p_bits, qi_bits);
}

// --- CRT oracle -------------------------------------------------------------
// Big-integer reconstruction used to verify every RNS operation in tests.

inline BigUint basis_product(const Basis& basis) {
    BigUint prod = BigUint::one();
    for (const auto& m : basis) prod.mul_small(m.value);
    return prod;
}

inline RnsInt crt_decompose(const BigUint& x, const Basis& basis) {
    RnsInt out;
    out.residues.reserve(basis.size());
    for (const auto& m : basis) out.residues.push_back(x.mod_small(m.value));
    return out;
}

inline BigUint crt_reconstruct(const RnsInt& x, const Basis& basis) {
    if (x.residues.size() != basis.size())
        throw std::invalid_argument("crt_reconstruct: residue/basis size mismatch");
    BigUint big_q = basis_product(basis);
    BigUint acc;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        u64 qi = basis[i].value;
        // qhat_i = Q / q_i
        BigUint qhat = BigUint::one();
        for (std::size_t j = 0; j < basis.size(); ++j) {
            if (j != i) qhat.mul_small(basis[j].value);
        }
        u64 qhat_mod = qhat.mod_small(qi);
        u64 coeff = mod_mul(x.residues[i], mod_inv(qhat_mod, qi), qi);
        qhat.mul_small(coeff);
        acc += qhat;
    }
    while (acc >= big_q) acc -= big_q;
    return acc;
}

}  // namespace osiris
