// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace osiris {

// Modular-multiplication and addition tallies by kernel. Functional code
// increments these with the exact trip counts of its loops; the analytical
// model recomputes the same quantities from closed forms, and the two are
// required to agree bit-for-bit at desk scale.
struct KernelCounters {
    std::uint64_t ntt_mults = 0;        // forward butterfly multiplies
    std::uint64_t intt_mults = 0;       // inverse butterfly multiplies (incl. 1/N scaling)
    std::uint64_t bconv_prescale = 0;   // per-source-limb scaling multiplies
    std::uint64_t bconv_smac = 0;       // switch-modulus multiply-accumulates
    std::uint64_t keymult_mults = 0;
    std::uint64_t diagmult_mults = 0;
    std::uint64_t rescale_mults = 0;    // final inverse-factor multiplies of ModDown/Rescale
    std::uint64_t auto_adjacent = 0;    // P-lift and similar automorphism-side multiplies
    std::uint64_t adds = 0;

    std::uint64_t total_mults() const {
        return ntt_mults + intt_mults + bconv_prescale + bconv_smac + keymult_mults +
               diagmult_mults + rescale_mults + auto_adjacent;
    }

    KernelCounters& operator+=(const KernelCounters& o) {
        ntt_mults += o.ntt_mults;
        intt_mults += o.intt_mults;
        bconv_prescale += o.bconv_prescale;
        bconv_smac += o.bconv_smac;
        keymult_mults += o.keymult_mults;
        diagmult_mults += o.diagmult_mults;
        rescale_mults += o.rescale_mults;
        auto_adjacent += o.auto_adjacent;
        adds += o.adds;
        return *this;
    }

    void reset() { *this = KernelCounters{}; }
};

inline KernelCounters& counters() {
    thread_local KernelCounters c;
    return c;
}

}  // namespace osiris
