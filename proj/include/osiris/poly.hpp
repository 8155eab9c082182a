// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "osiris/counters.hpp"
#include "osiris/rns.hpp"

namespace osiris {

enum class Rep { Coeff, Eval };
enum class Order { Natural, BitReversed };

// A polynomial as a (#limbs x N) residue matrix. The rep/order flags travel
// with the data and are only changed by the transform operations below.
struct LimbMatrix {
    std::vector<std::vector<u64>> data;
    Basis basis;
    Rep rep = Rep::Coeff;
    Order order = Order::Natural;

    LimbMatrix() = default;
    LimbMatrix(const Basis& b, u64 n, Rep r = Rep::Coeff, Order o = Order::Natural)
        : data(b.size(), std::vector<u64>(n, 0)), basis(b), rep(r), order(o) {}

    u64 degree() const { return data.empty() ? 0 : data[0].size(); }
    u64 limb_count() const { return data.size(); }

    bool shape_equals(const LimbMatrix& o) const {
        if (basis.size() != o.basis.size() || degree() != o.degree()) return false;
        for (std::size_t i = 0; i < basis.size(); ++i)
            if (basis[i].value != o.basis[i].value) return false;
        return rep == o.rep && order == o.order;
    }
};

namespace detail {

// Evaluation-domain layout for ring degree N. Position p of an Eval/Natural
// limb holds the evaluation at psi^exponent[p], where psi is a primitive
// 2N-th root. Exponents are arranged so that multiplying a position index by
// 5^r (mod N) on odd positions is the Galois action X -> X^(25^-r): the odd
// positions carry the message slots and follow the hardware's index
// permutation exactly, and the layout extends that action to even positions
// as two 25-power cycles so the whole map stays a ring automorphism.
struct EvalLayout {
    u64 n = 0;
    u64 slot_count = 0;                // N/4
    std::vector<u64> exponent;         // E(p), odd residues mod 2N
    std::vector<u64> bin_of_pos;       // (E(p)-1)/2: DFT bin holding position p
    std::vector<u64> slot_pos;         // position of slot j: 5^-j mod N

    explicit EvalLayout(u64 N) : n(N) {
        if (!is_power_of_two(N) || N < 4)
            throw std::invalid_argument("EvalLayout: ring degree must be a power of two >= 4");
        u64 two_n = 2 * N;
        u64 ord = N / 4;
        slot_count = ord;
        exponent.assign(N, 0);
        u64 p5 = 1, p25 = 1;
        for (u64 k = 0; k < ord; ++k) {
            exponent[p5] = p25;
            exponent[N - p5] = two_n - p25;
            exponent[2 * k] = (3 * p25) % two_n;
            exponent[N / 2 + 2 * k] = two_n - (3 * p25) % two_n;
            p5 = (p5 * 5) % N;
            p25 = (p25 * 25) % two_n;
        }
        bin_of_pos.resize(N);
        for (u64 p = 0; p < N; ++p) {
            if (exponent[p] % 2 == 0) throw std::logic_error("EvalLayout: even exponent");
            bin_of_pos[p] = (exponent[p] - 1) / 2;
        }
        // slot j lives at 5^-j mod N; 5^-1 = 5^(ord-1) within the cycle
        slot_pos.resize(ord);
        u64 inv5 = 1;
        for (u64 k = 0; k + 1 < ord; ++k) inv5 = (inv5 * 5) % N;
        u64 pos = 1;
        for (u64 j = 0; j < ord; ++j) {
            slot_pos[j] = pos;
            pos = (pos * inv5) % N;
        }
    }

    u64 conj_pos(u64 p) const {
        if (p & 1) return n - p;
        return p < n / 2 ? p + n / 2 : p - n / 2;
    }
};

inline const EvalLayout& eval_layout(u64 n) {
    static std::mutex mu;
    static std::map<u64, std::unique_ptr<EvalLayout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<EvalLayout>(n)).first;
    return *it->second;
}

// Twiddle material for one (N, q) pair: powers of psi for the negacyclic
// twist and of omega = psi^2 for the cyclic stages, plus inverses.
struct NttTables {
    u64 n = 0;
    u64 psi = 0;
    std::vector<u64> psi_pow, psi_inv_pow;
    u64 n_inv = 0;

    NttTables(u64 N, const PrimeModulus& m) : n(N) {
        // m.ntt_root is a primitive 2*n_max-th root for the chain's maximum
        // ring degree; square down until it has order exactly 2N.
        u64 r = m.ntt_root;
        bool found = false;
        for (int guard = 0; guard < 64 && !found; ++guard) {
            if (m.pow(r, N) == m.value - 1) {
                psi = r;
                found = true;
            } else {
                r = m.mul(r, r);
            }
        }
        if (!found) throw std::invalid_argument("NttTables: modulus root incompatible with N");
        psi_pow.resize(N);
        psi_inv_pow.resize(N);
        u64 psi_inv = m.inv(psi);
        psi_pow[0] = psi_inv_pow[0] = 1;
        for (u64 i = 1; i < N; ++i) {
            psi_pow[i] = m.mul(psi_pow[i - 1], psi);
            psi_inv_pow[i] = m.mul(psi_inv_pow[i - 1], psi_inv);
        }
        n_inv = m.inv(N % m.value);
    }
};

inline const NttTables& ntt_tables(u64 n, const PrimeModulus& m) {
    static std::mutex mu;
    static std::map<std::pair<u64, u64>, std::unique_ptr<NttTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(n, m.value);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, std::make_unique<NttTables>(n, m)).first;
    return *it->second;
}

inline std::vector<u64> bitrev_permutation(u64 n) {
    u64 bits = log2_exact(n);
    std::vector<u64> perm(n);
    for (u64 i = 0; i < n; ++i) perm[i] = bit_reverse(i, bits);
    return perm;
}

}  // namespace detail

// --- Reference negacyclic NTT ------------------------------------------------
//
// Forward: Coeff/BitReversed -> Eval/Natural (decimation in time).
// Inverse: Eval/Natural -> Coeff/BitReversed (decimation in frequency).
// The pair is the bidirectional convention the pipelined unit follows: one
// direction's output order is the other's input order.

inline std::vector<u64> ntt_limb_reference(const std::vector<u64>& limb, const PrimeModulus& m,
                                           Order input_order = Order::BitReversed) {
    const u64 n = limb.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("ntt: N must be a power of two");
    const auto& tb = detail::ntt_tables(n, m);
    const auto& layout = detail::eval_layout(n);
    auto brv = detail::bitrev_permutation(n);

    // Stage 0: negacyclic twist b_k = a_k * psi^k, laid out bit-reversed.
    std::vector<u64> a(n);
    for (u64 pos = 0; pos < n; ++pos) {
        u64 k = brv[pos];
        u64 coeff = (input_order == Order::BitReversed) ? limb[pos] : limb[k];
        a[pos] = m.mul(coeff, tb.psi_pow[k]);
    }
    // Iterative DIT over omega = psi^2: bit-reversed in, natural bins out.
    u64 log_n = log2_exact(n);
    for (u64 s = 1; s <= log_n; ++s) {
        u64 len = u64{1} << s;
        u64 step = 2 * (n / len);  // exponent stride of psi^2 powers
        for (u64 i = 0; i < n; i += len) {
            u64 w_exp = 0;
            for (u64 j = 0; j < len / 2; ++j) {
                u64 u = a[i + j];
                u64 v = m.mul(a[i + j + len / 2], tb.psi_pow[w_exp]);
                a[i + j] = m.add(u, v);
                a[i + j + len / 2] = m.sub(u, v);
                w_exp = (w_exp + step) % (2 * n);
            }
        }
    }
    // Modeled cost: one multiply per butterfly (merged-twiddle form; the
    // separate twist above is a restructuring of the same multiplies).
    counters().ntt_mults += (n / 2) * log_n;
    counters().adds += n * log_n;

    // Bins -> evaluation layout.
    std::vector<u64> out(n);
    for (u64 p = 0; p < n; ++p) out[p] = a[layout.bin_of_pos[p]];
    return out;
}

inline std::vector<u64> intt_limb_reference(const std::vector<u64>& limb, const PrimeModulus& m) {
    const u64 n = limb.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("intt: N must be a power of two");
    const auto& tb = detail::ntt_tables(n, m);
    const auto& layout = detail::eval_layout(n);
    auto brv = detail::bitrev_permutation(n);

    // Evaluation layout -> natural bins.
    std::vector<u64> a(n);
    for (u64 p = 0; p < n; ++p) a[layout.bin_of_pos[p]] = limb[p];

    // DIF with omega^-1: natural bins in, bit-reversed out.
    u64 log_n = log2_exact(n);
    for (u64 s = log_n; s >= 1; --s) {
        u64 len = u64{1} << s;
        u64 step = 2 * (n / len);
        for (u64 i = 0; i < n; i += len) {
            u64 w_exp = 0;
            for (u64 j = 0; j < len / 2; ++j) {
                u64 u = a[i + j];
                u64 v = a[i + j + len / 2];
                a[i + j] = m.add(u, v);
                a[i + j + len / 2] = m.mul(m.sub(u, v), tb.psi_inv_pow[w_exp]);
                w_exp = (w_exp + step) % (2 * n);
            }
        }
    }
    // Untwist and scale: position pos holds coefficient brv(pos).
    std::vector<u64> out(n);
    u64 scale = tb.n_inv;
    for (u64 pos = 0; pos < n; ++pos) {
        u64 k = brv[pos];
        out[pos] = m.mul(m.mul(a[pos], tb.psi_inv_pow[k]), scale);
    }
    counters().intt_mults += (n / 2) * log_n;
    counters().adds += n * log_n;
    return out;
}

inline LimbMatrix ntt_reference(const LimbMatrix& x) {
    if (x.rep != Rep::Coeff) throw std::invalid_argument("ntt_reference: expects Coeff rep");
    LimbMatrix out = x;
    for (std::size_t l = 0; l < x.limb_count(); ++l)
        out.data[l] = ntt_limb_reference(x.data[l], x.basis[l], x.order);
    out.rep = Rep::Eval;
    out.order = Order::Natural;
    return out;
}

inline LimbMatrix intt_reference(const LimbMatrix& x) {
    if (x.rep != Rep::Eval || x.order != Order::Natural)
        throw std::invalid_argument("intt_reference: expects Eval/Natural");
    LimbMatrix out = x;
    for (std::size_t l = 0; l < x.limb_count(); ++l)
        out.data[l] = intt_limb_reference(x.data[l], x.basis[l]);
    out.rep = Rep::Coeff;
    out.order = Order::BitReversed;
    return out;
}

// Reorder a Coeff-rep matrix between Natural and BitReversed storage.
inline LimbMatrix to_coeff_order(const LimbMatrix& x, Order want) {
    if (x.rep != Rep::Coeff) throw std::invalid_argument("to_coeff_order: Coeff rep only");
    if (x.order == want) return x;
    LimbMatrix out = x;
    auto brv = detail::bitrev_permutation(x.degree());
    for (std::size_t l = 0; l < x.limb_count(); ++l)
        for (u64 i = 0; i < x.degree(); ++i) out.data[l][i] = x.data[l][brv[i]];
    out.order = want;
    return out;
}

// --- Streaming orders ---------------------------------------------------------

// One p-wide cross-section of a limb. In Natural order, chunk o carries the
// stride class {o + k*(N/p)}; in BitReversed storage the same stored stride
// class is the bit-reverse image of a contiguous block.
struct StreamChunk {
    u64 limb_index = 0;
    u64 chunk_index = 0;
    std::vector<u64> values;
};

struct InterleavedStream {
    u64 n = 0;           // ring degree
    u64 p = 0;           // lane width
    u64 limbs = 0;       // interleaved limb count m
    Rep rep = Rep::Eval;
    Order order = Order::Natural;
    Basis basis;
    std::vector<StreamChunk> chunks;

    // position t holds limb t % m, chunk t / m
    bool check_schedule() const {
        for (std::size_t t = 0; t < chunks.size(); ++t) {
            if (chunks[t].limb_index != t % limbs) return false;
            if (chunks[t].chunk_index != t / limbs) return false;
            if (chunks[t].values.size() != p) return false;
        }
        return chunks.size() == limbs * (n / p);
    }
};

inline InterleavedStream to_interleaved(const LimbMatrix& x, u64 p) {
    const u64 n = x.degree();
    if (p == 0 || n % p != 0) throw std::invalid_argument("to_interleaved: p must divide N");
    InterleavedStream s;
    s.n = n;
    s.p = p;
    s.limbs = x.limb_count();
    s.rep = x.rep;
    s.order = x.order;
    s.basis = x.basis;
    const u64 n_chunks = n / p;
    s.chunks.reserve(n_chunks * s.limbs);
    for (u64 o = 0; o < n_chunks; ++o) {
        for (u64 l = 0; l < s.limbs; ++l) {
            StreamChunk c;
            c.limb_index = l;
            c.chunk_index = o;
            c.values.resize(p);
            for (u64 k = 0; k < p; ++k) c.values[k] = x.data[l][o + k * n_chunks];
            s.chunks.push_back(std::move(c));
        }
    }
    return s;
}

inline LimbMatrix from_interleaved(const InterleavedStream& s) {
    if (!s.check_schedule()) throw std::invalid_argument("from_interleaved: malformed stream");
    LimbMatrix x(s.basis, s.n, s.rep, s.order);
    const u64 n_chunks = s.n / s.p;
    for (const auto& c : s.chunks) {
        for (u64 k = 0; k < s.p; ++k)
            x.data[c.limb_index][c.chunk_index + k * n_chunks] = c.values[k];
    }
    return x;
}

// --- Automorphisms -------------------------------------------------------------

// Index permutation of phi_r. Odd indices follow i -> i*5^r mod N exactly;
// even indices continue the same Galois element (X -> X^(25^-r)) as two
// shift-by-2r cycles, which keeps encode/decode consistent under rotation.
// The returned table maps source index to destination: out[perm[i]] = in[i].
inline std::vector<u64> automorphism_map(u64 r, u64 n) {
    const auto& layout = detail::eval_layout(n);
    const u64 ord = layout.slot_count;  // N/4
    r %= ord;
    std::vector<u64> perm(n);
    u64 five_r = 1;
    for (u64 i = 0; i < r; ++i) five_r = (five_r * 5) % n;
    for (u64 i = 0; i < n; ++i) {
        if (i & 1) {
            perm[i] = (i * five_r) % n;
        } else if (i < n / 2) {
            perm[i] = (i + 2 * r) % (n / 2);
        } else {
            perm[i] = n / 2 + (i - n / 2 + 2 * r) % (n / 2);
        }
    }
    std::vector<bool> hit(n, false);
    for (u64 d : perm) {
        if (hit[d]) throw std::logic_error("automorphism_map: not a permutation");
        hit[d] = true;
    }
    return perm;
}

inline LimbMatrix apply_automorphism(const LimbMatrix& x, u64 r) {
    if (x.rep != Rep::Eval || x.order != Order::Natural)
        throw std::invalid_argument("apply_automorphism: expects Eval/Natural");
    auto perm = automorphism_map(r, x.degree());
    LimbMatrix out = x;
    for (std::size_t l = 0; l < x.limb_count(); ++l)
        for (u64 i = 0; i < x.degree(); ++i) out.data[l][perm[i]] = x.data[l][i];
    return out;
}

// --- Encode / decode -----------------------------------------------------------
//
// Canonical embedding with the 5-power slot ordering. Messages occupy the
// N/4 slot positions (odd indices in the 5^-j cycle); their conjugates fill
// the mirrored odd positions and the remaining degrees of freedom are zero.
// With this packing, apply_automorphism(r) rotates the message left by r.

inline u64 slot_count(u64 n) { return detail::eval_layout(n).slot_count; }

inline LimbMatrix encode_over_basis(const std::vector<std::complex<double>>& message,
                                    double scale, const Basis& basis, u64 n) {
    const auto& layout = detail::eval_layout(n);
    const u64 slots = layout.slot_count;
    if (message.size() > slots)
        throw std::invalid_argument("encode: message exceeds " + std::to_string(slots) +
                                    " slots at N = " + std::to_string(n));
    std::vector<std::complex<double>> v(n, {0.0, 0.0});
    for (std::size_t j = 0; j < message.size(); ++j) {
        u64 p = layout.slot_pos[j];
        v[p] = message[j] * scale;
        v[n - p] = std::conj(message[j]) * scale;
    }
    // c_k = (1/N) sum_p v[p] * zeta^(-E(p) k), zeta = exp(i pi / N)
    const double pi = 3.14159265358979323846;
    std::vector<double> coeff(n);
    for (u64 k = 0; k < n; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (u64 p = 0; p < n; ++p) {
            if (v[p] == std::complex<double>{0.0, 0.0}) continue;
            double ang = -pi * static_cast<double>((layout.exponent[p] * k) % (2 * n)) /
                         static_cast<double>(n);
            acc += v[p] * std::complex<double>{std::cos(ang), std::sin(ang)};
        }
        coeff[k] = acc.real() / static_cast<double>(n);
    }
    // Round and bound-check against the basis' modulus budget.
    BigUint budget = basis_product(basis);
    LimbMatrix out(basis, n, Rep::Coeff, Order::Natural);
    for (u64 k = 0; k < n; ++k) {
        double rounded = std::round(coeff[k]);
        double abs_val = std::abs(rounded);
        if (abs_val * 2 >= std::pow(2.0, static_cast<double>(budget.bit_length() - 1)))
            throw std::overflow_error("encode: coefficient exceeds the modulus budget");
        bool neg = rounded < 0;
        u64 mag = static_cast<u64>(abs_val);
        for (std::size_t l = 0; l < out.basis.size(); ++l) {
            u64 q = out.basis[l].value;
            u64 r = mag % q;
            out.data[l][k] = neg ? mod_neg(r, q) : r;
        }
    }
    return out;
}

inline LimbMatrix encode(const std::vector<std::complex<double>>& message, double scale,
                         const ModulusChain& chain, u64 level, u64 n) {
    return encode_over_basis(message, scale, chain.q_basis(level), n);
}

inline LimbMatrix encode(const std::vector<double>& message, double scale,
                         const ModulusChain& chain, u64 level, u64 n) {
    std::vector<std::complex<double>> cm(message.size());
    for (std::size_t i = 0; i < message.size(); ++i) cm[i] = {message[i], 0.0};
    return encode(cm, scale, chain, level, n);
}

// Centered CRT lift of each coefficient, then evaluation at the slot roots.
inline std::vector<std::complex<double>> decode(const LimbMatrix& poly, double scale) {
    if (poly.rep != Rep::Coeff) throw std::invalid_argument("decode: Coeff rep only");
    LimbMatrix x = to_coeff_order(poly, Order::Natural);
    const u64 n = x.degree();
    const auto& layout = detail::eval_layout(n);
    BigUint big_q = basis_product(x.basis);
    std::vector<double> coeff(n);
    for (u64 k = 0; k < n; ++k) {
        RnsInt rv;
        for (std::size_t l = 0; l < x.basis.size(); ++l) rv.residues.push_back(x.data[l][k]);
        BigUint v = crt_reconstruct(rv, x.basis);
        BigUint doubled = v;
        doubled += v;
        bool negative = doubled >= big_q;  // v > Q/2 means a negative centered lift
        double mag = 0;
        BigUint lift = negative ? big_q - v : v;
        for (std::size_t i = lift.limb_count(); i-- > 0;)
            mag = mag * 18446744073709551616.0 + static_cast<double>(lift.limb(i));
        coeff[k] = negative ? -mag : mag;
    }
    const double pi = 3.14159265358979323846;
    std::vector<std::complex<double>> out(layout.slot_count);
    for (u64 j = 0; j < layout.slot_count; ++j) {
        u64 e = layout.exponent[layout.slot_pos[j]];
        std::complex<double> acc{0.0, 0.0};
        for (u64 k = 0; k < n; ++k) {
            double ang = pi * static_cast<double>((e * k) % (2 * n)) / static_cast<double>(n);
            acc += coeff[k] * std::complex<double>{std::cos(ang), std::sin(ang)};
        }
        out[j] = acc / scale;
    }
    return out;
}

}  // namespace osiris
