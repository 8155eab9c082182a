// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "osiris/counters.hpp"
#include "osiris/mdc.hpp"
#include "osiris/rns.hpp"

namespace osiris {

// --- Closed-form kernel counts ---------------------------------------------------
// Each form mirrors one functional kernel's loop structure exactly; the
// fidelity tests hold them equal to the instrumented counters.

struct KernelCosts {
    u64 ntt = 0, intt = 0, bconv_prescale = 0, bconv_smac = 0;
    u64 keymult = 0, diagmult = 0, rescale = 0, auto_adjacent = 0;

    u64 total() const {
        return ntt + intt + bconv_prescale + bconv_smac + keymult + diagmult + rescale +
               auto_adjacent;
    }
    KernelCosts& operator+=(const KernelCosts& o) {
        ntt += o.ntt;
        intt += o.intt;
        bconv_prescale += o.bconv_prescale;
        bconv_smac += o.bconv_smac;
        keymult += o.keymult;
        diagmult += o.diagmult;
        rescale += o.rescale;
        auto_adjacent += o.auto_adjacent;
        return *this;
    }
    friend KernelCosts operator*(u64 k, KernelCosts c) {
        c.ntt *= k;
        c.intt *= k;
        c.bconv_prescale *= k;
        c.bconv_smac *= k;
        c.keymult *= k;
        c.diagmult *= k;
        c.rescale *= k;
        c.auto_adjacent *= k;
        return c;
    }
};

inline u64 count_ntt_limb(u64 n) { return (n / 2) * log2_exact(n); }

inline KernelCosts count_bconv(u64 n, u64 alpha, u64 beta) {
    KernelCosts c;
    c.bconv_prescale = n * alpha;
    c.bconv_smac = n * alpha * beta;
    return c;
}

// Raise one digit of `digit_size` limbs to the full Q*P basis.
inline KernelCosts count_mod_up(u64 n, u64 digit_size, u64 level, u64 alpha) {
    u64 missing = (level + 1 + alpha) - digit_size;
    KernelCosts c = count_bconv(n, digit_size, missing);
    c.intt = digit_size * count_ntt_limb(n);
    c.ntt = missing * count_ntt_limb(n);
    return c;
}

inline KernelCosts count_decompose_modup(u64 n, u64 level, u64 alpha) {
    KernelCosts c;
    u64 limbs = level + 1;
    u64 dnum = (limbs + alpha - 1) / alpha;
    for (u64 d = 0; d < dnum; ++d) {
        u64 size = std::min(alpha, limbs - d * alpha);
        c += count_mod_up(n, size, level, alpha);
    }
    return c;
}

inline KernelCosts count_key_mult(u64 n, u64 dnum, u64 level, u64 alpha) {
    KernelCosts c;
    c.keymult = 2 * dnum * (level + 1 + alpha) * n;
    return c;
}

// One polynomial lowered from Q*P to Q.
inline KernelCosts count_mod_down(u64 n, u64 level, u64 alpha) {
    KernelCosts c = count_bconv(n, alpha, level + 1);
    c.intt = alpha * count_ntt_limb(n);
    c.ntt = (level + 1) * count_ntt_limb(n);
    c.rescale = (level + 1) * n;
    return c;
}

// One polynomial from Q*P at `level` to q_0..q_{level-1} in a single pass.
inline KernelCosts count_fused_moddown_rescale(u64 n, u64 level, u64 alpha) {
    KernelCosts c = count_bconv(n, alpha, level + 1);
    KernelCosts c2 = count_bconv(n, 1, level);
    c += c2;
    c.intt += (alpha + 1) * count_ntt_limb(n);
    c.ntt += level * count_ntt_limb(n);
    c.rescale += n * (1 + 2 * level);
    return c;
}

// One polynomial dropping the top q-limb.
inline KernelCosts count_rescale_poly(u64 n, u64 level) {
    KernelCosts c = count_bconv(n, 1, level);
    c.intt = count_ntt_limb(n);
    c.ntt = level * count_ntt_limb(n);
    c.rescale = level * n;
    return c;
}

inline KernelCosts count_diag_mult(u64 n, u64 limbs) {
    KernelCosts c;
    c.diagmult = 2 * limbs * n;
    return c;
}

// Full key switch of one polynomial at `level`.
inline KernelCosts count_key_switch(u64 n, u64 level, u64 alpha) {
    u64 dnum = (level + 1 + alpha - 1) / alpha;
    KernelCosts c = count_decompose_modup(n, level, alpha);
    c += count_key_mult(n, dnum, level, alpha);
    c += 2 * count_mod_down(n, level, alpha);
    return c;
}

// --- Workload-level counting -------------------------------------------------------

enum class DiagonalSource { OfLimb, Dram };

struct MatvecShape {
    u64 level = 0;
    u64 d = 0;  // nonzero diagonals
    u64 n1 = 0, n2 = 0;
    DiagonalSource diag_source = DiagonalSource::OfLimb;
};

struct DramBytes {
    u64 keys = 0;
    u64 diagonals_q0 = 0;
    u64 ct_io = 0;
    u64 total() const { return keys + diagonals_q0 + ct_io; }
};

struct OpCounts {
    KernelCosts mults;
    u64 twiddle_gen = 0;  // equals butterfly count when OF-Twiddle is active
    u64 adds = 0;
    DramBytes dram;

    u64 total_mults_with_twiddle() const { return mults.total() + twiddle_gen; }
};

// Switching-key stream size with the PRNG half regenerated on chip: only the
// b_d polynomials cross DRAM.
inline u64 key_stream_bytes(u64 n, u64 level, u64 alpha, u64 word_bits) {
    u64 dnum = (level + 1 + alpha - 1) / alpha;
    return dnum * (level + 1 + alpha) * n * (word_bits / 8);
}

// Modular-mult and DRAM accounting of one BSGS matvec, per hoisting mode.
// Mirrors matvec_algos: unconditional baby and giant rotations, zero-padded
// groups included, diagonal products at Q (NH/SH) or Q*P (DH).
inline OpCounts count_matvec(u64 n, u64 alpha, const MatvecShape& shape, int hoisting_mode,
                             u64 word_bits, bool of_twiddle = true) {
    const u64 level = shape.level;
    const u64 limbs_q = level + 1;
    const u64 limbs_qp = level + 1 + alpha;
    const u64 dnum = (limbs_q + alpha - 1) / alpha;
    OpCounts out;
    KernelCosts& c = out.mults;

    // Baby steps.
    if (hoisting_mode == 0) {
        c += (shape.n1 - 1) * count_key_switch(n, level, alpha);
    } else {
        c += count_decompose_modup(n, level, alpha);
        c += (shape.n1 - 1) * count_key_mult(n, dnum, level, alpha);
        if (hoisting_mode == 1) {
            c += (shape.n1 - 1) * (2 * count_mod_down(n, level, alpha));
        } else {
            KernelCosts lift;
            lift.auto_adjacent = limbs_q * n;
            c += (shape.n1 + 1) * lift;  // two lifts for the trivial baby, one per other
        }
    }
    // Diagonal generation and products.
    const u64 diag_limbs = (hoisting_mode == 2) ? limbs_qp : limbs_q;
    if (shape.diag_source == DiagonalSource::OfLimb) {
        KernelCosts gen;
        gen.ntt = diag_limbs * count_ntt_limb(n);
        c += shape.d * gen;
        out.dram.diagonals_q0 += shape.d * n * (word_bits / 8);
    } else {
        out.dram.diagonals_q0 += shape.d * diag_limbs * n * (word_bits / 8);
    }
    c += shape.d * count_diag_mult(n, diag_limbs);

    // Giant steps.
    if (hoisting_mode == 2) c += shape.n2 * (2 * count_mod_down(n, level, alpha));
    c += (shape.n2 - 1) * count_key_switch(n, level, alpha);

    // Key traffic: one key per nontrivial rotation.
    u64 rotations = (shape.n1 - 1) + (shape.n2 - 1);
    out.dram.keys = rotations * key_stream_bytes(n, level, alpha, word_bits);
    out.dram.ct_io = 2 * 2 * limbs_q * n * (word_bits / 8);  // ct in + result out

    if (of_twiddle) out.twiddle_gen = c.ntt + c.intt;  // one generation multiply per butterfly
    return out;
}

inline OpCounts count_keyswitch_op(u64 n, u64 level, u64 alpha, u64 word_bits,
                                   bool of_twiddle = true) {
    OpCounts out;
    out.mults = count_key_switch(n, level, alpha);
    out.dram.keys = key_stream_bytes(n, level, alpha, word_bits);
    out.dram.ct_io = 2 * 2 * (level + 1) * n * (word_bits / 8);
    if (of_twiddle) out.twiddle_gen = out.mults.ntt + out.mults.intt;
    return out;
}

inline OpCounts count_hmult_op(u64 n, u64 level, u64 alpha, u64 word_bits,
                               bool of_twiddle = true) {
    const u64 limbs_q = level + 1;
    const u64 dnum = (limbs_q + alpha - 1) / alpha;
    OpCounts out;
    KernelCosts& c = out.mults;
    c.diagmult = 4 * limbs_q * n;  // tensor products
    c += count_decompose_modup(n, level, alpha);
    c += count_key_mult(n, dnum, level, alpha);
    KernelCosts lift;
    lift.auto_adjacent = limbs_q * n;
    c += 2 * lift;
    c += 2 * count_fused_moddown_rescale(n, level, alpha);
    out.dram.keys = key_stream_bytes(n, level, alpha, word_bits);
    if (of_twiddle) out.twiddle_gen = c.ntt + c.intt;
    return out;
}

// --- Amortized metrics (exact rational arithmetic) ---------------------------------

struct Ratio {
    long long num = 0;
    long long den = 1;

    Ratio() = default;
    Ratio(long long n, long long d = 1) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("Ratio: zero denominator");
        normalize();
    }

    void normalize() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    friend Ratio operator+(Ratio a, Ratio b) {
        return Ratio(a.num * b.den + b.num * a.den, a.den * b.den);
    }
    friend Ratio operator*(Ratio a, Ratio b) { return Ratio(a.num * b.num, a.den * b.den); }
    friend Ratio operator/(Ratio a, Ratio b) {
        if (b.num == 0) throw std::domain_error("Ratio: division by zero");
        return Ratio(a.num * b.den, a.den * b.num);
    }
    double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Bootstrap-amortized per-slot cost of a level-spanning workload:
// (T_boot + sum_{l=0}^{L-L_boot} T(l)) / (L - L_boot) * 2/N.
// Inputs and result are rationals so the metric itself never accumulates
// floating-point error; times are in nanoseconds.
inline Ratio amortized_matvec_ns_per_slot(Ratio t_boot_ns, const std::vector<Ratio>& t_level_ns,
                                          u64 l_minus_lboot, u64 n) {
    if (l_minus_lboot == 0) throw std::invalid_argument("amortized metric: L - L_boot must be > 0");
    if (t_level_ns.size() != l_minus_lboot + 1)
        throw std::invalid_argument("amortized metric: expected L - L_boot + 1 level terms");
    Ratio sum = t_boot_ns;
    for (const auto& t : t_level_ns) sum = sum + t;
    return sum / Ratio(static_cast<long long>(l_minus_lboot)) *
           Ratio(2, static_cast<long long>(n));
}

// --- Storage report -------------------------------------------------------------

struct StorageReport {
    u64 twiddle_full_bytes = 0;
    u64 twiddle_decomposed_bytes = 0;
    u64 mdc_buffer_bytes_per_instance = 0;
    u64 mdc_buffer_bytes_total = 0;
    u64 key_working_set_bytes = 0;   // current + prefetched key
    u64 partial_accumulator_bytes = 0;
};

inline StorageReport storage_report(u64 n, u64 p, u64 interleave_factor, u64 word_bits,
                                    u64 n_moduli, u64 mdc_instances, u64 level, u64 alpha,
                                    u64 n2_cap) {
    StorageReport r;
    r.twiddle_full_bytes = twiddle_full_bytes(n, n_moduli, word_bits);
    r.twiddle_decomposed_bytes = twiddle_decomposed_bytes(n, n_moduli, word_bits, mdc_instances);
    r.mdc_buffer_bytes_per_instance = mdc_buffer_bytes(n, p, interleave_factor, word_bits);
    r.mdc_buffer_bytes_total = mdc_instances * r.mdc_buffer_bytes_per_instance;
    r.key_working_set_bytes = 2 * key_stream_bytes(n, level, alpha, word_bits);
    r.partial_accumulator_bytes = n2_cap * 2 * (level + 1 + alpha) * n * (word_bits / 8);
    return r;
}

// --- Roofline -------------------------------------------------------------------

struct RooflinePoint {
    double arithmetic_intensity = 0;  // modular mults per DRAM byte
    double achieved = 0;              // mults per second
    double peak = 0;                  // multiplier inventory * clock
    double bw_bound = 0;              // intensity * bandwidth
    double utilization = 0;           // achieved / peak
};

// `cycles` must already include compute and bandwidth floors; the invariant
// achieved <= min(peak, bw_bound) is checked, not silently repaired.
inline RooflinePoint roofline(u64 total_mults, u64 dram_bytes, u64 cycles, double clock_hz,
                              u64 multiplier_inventory, double bw_bytes_per_s) {
    if (cycles == 0 || dram_bytes == 0)
        throw std::invalid_argument("roofline: cycles and bytes must be positive");
    RooflinePoint pt;
    pt.arithmetic_intensity = static_cast<double>(total_mults) / static_cast<double>(dram_bytes);
    double seconds = static_cast<double>(cycles) / clock_hz;
    pt.achieved = static_cast<double>(total_mults) / seconds;
    pt.peak = static_cast<double>(multiplier_inventory) * clock_hz;
    pt.bw_bound = pt.arithmetic_intensity * bw_bytes_per_s;
    pt.utilization = pt.achieved / pt.peak;
    const double slack = 1.0 + 1e-9;
    if (pt.achieved > pt.peak * slack || pt.achieved > pt.bw_bound * slack)
        throw std::logic_error("roofline: achieved rate exceeds a hardware bound");
    if (pt.utilization <= 0.0 || pt.utilization > 1.0 + 1e-9)
        throw std::logic_error("roofline: utilization outside (0, 1]");
    return pt;
}

}  // namespace osiris
