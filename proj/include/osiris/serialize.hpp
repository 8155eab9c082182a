// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "osiris/ckks.hpp"

namespace osiris {

// Binary polynomial dump: a 32-byte header of four little-endian u64 words
// (N, #limbs, rep, order) followed by the residue matrix row-major as
// 8-byte little-endian words. Moduli travel separately (chain JSON).

namespace detail {

inline void put_u64(std::ostream& os, u64 v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline u64 get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("poly load: truncated stream");
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
    return v;
}

}  // namespace detail

inline void dump_poly(std::ostream& os, const LimbMatrix& x) {
    detail::put_u64(os, x.degree());
    detail::put_u64(os, x.limb_count());
    detail::put_u64(os, x.rep == Rep::Coeff ? 0 : 1);
    detail::put_u64(os, x.order == Order::Natural ? 0 : 1);
    for (const auto& limb : x.data)
        for (u64 v : limb) detail::put_u64(os, v);
}

inline LimbMatrix load_poly(std::istream& is, const Basis& basis) {
    u64 n = detail::get_u64(is);
    u64 limbs = detail::get_u64(is);
    u64 rep = detail::get_u64(is);
    u64 order = detail::get_u64(is);
    if (limbs != basis.size()) throw std::runtime_error("poly load: limb count mismatch");
    LimbMatrix x(basis, n, rep == 0 ? Rep::Coeff : Rep::Eval,
                 order == 0 ? Order::Natural : Order::BitReversed);
    for (auto& limb : x.data)
        for (auto& v : limb) v = detail::get_u64(is);
    return x;
}

// Ciphertexts and keys reuse the polynomial format behind a kind tag.
enum class BlobKind : u64 { Ciphertext = 1, SwitchingKey = 2 };

inline void dump_ciphertext(std::ostream& os, const Ciphertext& ct) {
    detail::put_u64(os, static_cast<u64>(BlobKind::Ciphertext));
    detail::put_u64(os, ct.level);
    u64 scale_bits_raw;
    static_assert(sizeof(double) == 8);
    std::memcpy(&scale_bits_raw, &ct.scale, 8);
    detail::put_u64(os, scale_bits_raw);
    dump_poly(os, ct.c0);
    dump_poly(os, ct.c1);
}

inline Ciphertext load_ciphertext(std::istream& is, const ModulusChain& chain) {
    if (detail::get_u64(is) != static_cast<u64>(BlobKind::Ciphertext))
        throw std::runtime_error("ciphertext load: wrong kind tag");
    Ciphertext ct;
    ct.level = detail::get_u64(is);
    u64 raw = detail::get_u64(is);
    std::memcpy(&ct.scale, &raw, 8);
    Basis basis = chain.q_basis(ct.level);
    ct.c0 = load_poly(is, basis);
    ct.c1 = load_poly(is, basis);
    return ct;
}

// Switching keys stream as the kind tag, identity (kind/rotation/seed), and
// the b_d polynomials only; the a_d halves regenerate from the seed.
inline void dump_switching_key(std::ostream& os, const SwitchingKey& swk) {
    detail::put_u64(os, static_cast<u64>(BlobKind::SwitchingKey));
    detail::put_u64(os, static_cast<u64>(swk.kind));
    detail::put_u64(os, swk.rot_amount);
    detail::put_u64(os, swk.seed);
    detail::put_u64(os, swk.digits.size());
    for (const auto& d : swk.digits) dump_poly(os, d.b);
}

inline SwitchingKey load_switching_key(std::istream& is, const ModulusChain& chain) {
    if (detail::get_u64(is) != static_cast<u64>(BlobKind::SwitchingKey))
        throw std::runtime_error("switching key load: wrong kind tag");
    SwitchingKey swk;
    swk.kind = static_cast<KeyKind>(detail::get_u64(is));
    swk.rot_amount = detail::get_u64(is);
    swk.seed = detail::get_u64(is);
    u64 dnum = detail::get_u64(is);
    Basis qp = chain.qp_basis(chain.max_level());
    swk.digits.resize(dnum);
    for (auto& d : swk.digits) d.b = load_poly(is, qp);
    auto a_halves = regenerate_key_a(swk, chain, swk.digits[0].b.degree());
    for (u64 d = 0; d < dnum; ++d) swk.digits[d].a = std::move(a_halves[d]);
    return swk;
}

// --- Chain JSON -------------------------------------------------------------------
// The same parameter document feeds functional tests and the perf model.

inline nlohmann::json chain_to_json(const ModulusChain& chain) {
    nlohmann::json j;
    j["schema"] = 1;
    j["n_max"] = chain.n_max;
    j["alpha"] = chain.alpha;
    j["scale_bits"] = chain.scale_bits;
    auto limbs = [](const Basis& b) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& m : b)
            arr.push_back({{"value", m.value}, {"root", m.ntt_root}, {"bits", m.bit_width}});
        return arr;
    };
    j["q"] = limbs(chain.q_limbs);
    j["p"] = limbs(chain.p_limbs);
    return j;
}

inline ModulusChain chain_from_json(const nlohmann::json& j) {
    if (j.at("schema").get<int>() != 1) throw std::runtime_error("chain: unknown schema");
    ModulusChain chain;
    chain.n_max = j.at("n_max").get<u64>();
    chain.alpha = j.at("alpha").get<u64>();
    chain.scale_bits = j.at("scale_bits").get<u64>();
    auto limbs = [](const nlohmann::json& arr) {
        Basis b;
        for (const auto& e : arr)
            b.emplace_back(e.at("value").get<u64>(), e.at("root").get<u64>(),
                           e.at("bits").get<u64>());
        return b;
    };
    chain.q_limbs = limbs(j.at("q"));
    chain.p_limbs = limbs(j.at("p"));
    return chain;
}

}  // namespace osiris
