// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <vector>

#include "osiris/ckks.hpp"

namespace osiris {

// Pointwise-arithmetic unit: p independent 1D systolic columns of height
// dnum. Each cell holds four modular multipliers so a key-switch inner
// product and a diagonal multiply-accumulate can share a cycle.
struct HadamardConfig {
    u64 lanes = 512;
    u64 height = 4;
    u64 mults_per_cell = 4;
};

// Per-cell multiplier demand of one task.
enum class HadamardTask { KeyMult = 2, DiagMultAcc = 2 };

// True when the listed tasks fit the per-cell multiplier budget in a single
// cycle window; the scheduler treats a false return as a structural stall.
inline bool hadamard_fits(const HadamardConfig& cfg, const std::vector<HadamardTask>& tasks) {
    u64 demand = 0;
    for (auto t : tasks) demand += static_cast<u64>(t);
    return demand <= cfg.mults_per_cell;
}

struct HadamardRunResult {
    u64 cycle_count = 0;
};

class HadamardUnit {
public:
    explicit HadamardUnit(const HadamardConfig& cfg) : cfg_(cfg) {}

    const HadamardConfig& config() const { return cfg_; }

    // Key-switch inner product over the digit column; values delegate to the
    // reference key_mult, cycles cover one pass of the Q*P limbs plus the
    // column fill.
    std::pair<LimbMatrix, LimbMatrix> run_keymult(const std::vector<LimbMatrix>& digits_upped,
                                                  const SwitchingKey& swk,
                                                  const ModulusChain& chain, u64 level,
                                                  HadamardRunResult* perf = nullptr) const {
        if (digits_upped.size() > cfg_.height)
            throw std::invalid_argument("HadamardUnit: digit count exceeds column height");
        auto out = key_mult(digits_upped, swk, chain, level);
        if (perf) {
            u64 limbs = level + 1 + chain.alpha;
            u64 n = digits_upped[0].degree();
            perf->cycle_count = limbs * (n / cfg_.lanes) + digits_upped.size();
        }
        return out;
    }

    // accumulator += ct * diagonal, both polynomials, one pass.
    void run_diag_mult_acc(Ciphertext& accumulator, const Ciphertext& ct,
                           const LimbMatrix& diagonal_eval, double diagonal_scale,
                           HadamardRunResult* perf = nullptr) const {
        Ciphertext prod = p_mult(ct, diagonal_eval, diagonal_scale);
        if (accumulator.c0.data.empty()) {
            accumulator = prod;
        } else {
            accumulator = h_add(accumulator, prod);
        }
        if (perf) {
            u64 limbs = ct.c0.limb_count();
            u64 n = ct.c0.degree();
            perf->cycle_count = limbs * (n / cfg_.lanes) + 1;
        }
    }

private:
    HadamardConfig cfg_;
};

}  // namespace osiris
