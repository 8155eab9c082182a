// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osiris/matvec.hpp"
#include "osiris/perf.hpp"

using namespace osiris;

namespace {

ModulusChain small_chain(u64 n, u64 levels = 3, u64 alpha = 2) {
    return generate_chain(n, levels, alpha, 40, 32, 40);
}

LimbMatrix random_eval_poly(const Basis& basis, u64 n, Rng& rng) {
    LimbMatrix x(basis, n, Rep::Coeff, Order::Natural);
    for (std::size_t l = 0; l < basis.size(); ++l)
        for (auto& v : x.data[l]) v = rng.uniform_below(basis[l].value);
    x.rep = Rep::Eval;
    return x;
}

}  // namespace

TEST_CASE("closed-form counts equal instrumented counts per kernel") {
    const u64 n = 32;
    auto chain = small_chain(n, 4, 2);
    Rng rng(3);
    const u64 level = 4;

    SUBCASE("single NTT limb") {
        CHECK(count_ntt_limb(16) == 32);  // (N/2) log2 N
        counters().reset();
        std::vector<u64> limb(n);
        for (auto& v : limb) v = rng.uniform_below(chain.q_limbs[0].value);
        ntt_limb_reference(limb, chain.q_limbs[0], Order::Natural);
        CHECK(counters().ntt_mults == count_ntt_limb(n));
    }

    SUBCASE("decompose + modup across digits") {
        LimbMatrix c1 = random_eval_poly(chain.q_basis(level), n, rng);
        counters().reset();
        for (const auto& d : decompose(c1, chain.alpha)) mod_up(d, chain, level);
        KernelCosts want = count_decompose_modup(n, level, chain.alpha);
        CHECK(counters().intt_mults == want.intt);
        CHECK(counters().ntt_mults == want.ntt);
        CHECK(counters().bconv_prescale == want.bconv_prescale);
        CHECK(counters().bconv_smac == want.bconv_smac);
    }

    SUBCASE("key_mult") {
        KeySet keys = keygen(chain, n, 4, 5);
        LimbMatrix c1 = random_eval_poly(chain.q_basis(level), n, rng);
        std::vector<LimbMatrix> upped;
        for (const auto& d : decompose(c1, chain.alpha)) upped.push_back(mod_up(d, chain, level));
        counters().reset();
        key_mult(upped, keys.rot_key(chain, 1), chain, level);
        u64 dnum = chain.dnum_at(level);
        CHECK(counters().keymult_mults ==
              count_key_mult(n, dnum, level, chain.alpha).keymult);
    }

    SUBCASE("mod_down") {
        LimbMatrix x = random_eval_poly(chain.qp_basis(level), n, rng);
        counters().reset();
        mod_down(x, chain, level);
        KernelCosts want = count_mod_down(n, level, chain.alpha);
        CHECK(counters().intt_mults == want.intt);
        CHECK(counters().ntt_mults == want.ntt);
        CHECK(counters().bconv_prescale == want.bconv_prescale);
        CHECK(counters().bconv_smac == want.bconv_smac);
        CHECK(counters().rescale_mults == want.rescale);
    }

    SUBCASE("fused moddown + rescale") {
        LimbMatrix x = random_eval_poly(chain.qp_basis(level), n, rng);
        counters().reset();
        fused_moddown_rescale(x, chain, level);
        KernelCosts want = count_fused_moddown_rescale(n, level, chain.alpha);
        CHECK(counters().intt_mults == want.intt);
        CHECK(counters().ntt_mults == want.ntt);
        CHECK(counters().bconv_prescale == want.bconv_prescale);
        CHECK(counters().bconv_smac == want.bconv_smac);
        CHECK(counters().rescale_mults == want.rescale);
    }

    SUBCASE("diag mult") {
        KeySet keys = keygen(chain, n, 4, 7);
        auto msg = std::vector<double>(slot_count(n), 0.5);
        double scale = std::pow(2.0, 32);
        Ciphertext ct = encrypt(encode(msg, scale, chain, level, n), keys.secret, chain, level,
                                scale, 9);
        LimbMatrix pt = ntt_reference(encode(msg, scale, chain, level, n));
        counters().reset();
        p_mult(ct, pt, scale);
        CHECK(counters().diagmult_mults == count_diag_mult(n, level + 1).diagmult);
    }

    SUBCASE("full key switch composition") {
        KeySet keys = keygen(chain, n, 4, 11);
        LimbMatrix c1 = random_eval_poly(chain.q_basis(level), n, rng);
        counters().reset();
        key_switch(c1, keys.rot_key(chain, 2), chain, level);
        KernelCosts want = count_key_switch(n, level, chain.alpha);
        CHECK(counters().total_mults() == want.total());
    }
}

TEST_CASE("matvec count model equals the instrumented functional run") {
    const u64 n = 64;
    auto chain = small_chain(n, 3, 2);
    double scale = std::pow(2.0, 32);
    u64 slots = slot_count(n);
    Rng rng(13);
    KeySet keys = keygen(chain, n, 4, 15);
    const u64 level = 3;

    // dense 16-wide matrix so every (j, i) group is populated
    CMat m(16, CVec(16));
    for (auto& row : m)
        for (auto& v : row) v = {rng.uniform_real(), rng.uniform_real()};
    auto diags = extract_diagonals(m);
    REQUIRE(diags.nonzero_count() == 16);
    auto plan = make_bsgs_plan(diags, 8, 2, slots);

    CVec x(16);
    for (auto& v : x) v = {rng.uniform_real(), 0.0};
    Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                            chain, level, scale, 17);

    MatvecShape shape;
    shape.level = level;
    shape.d = 16;
    shape.n1 = 8;
    shape.n2 = 2;
    shape.diag_source = DiagonalSource::OfLimb;

    for (int mode = 0; mode < 3; ++mode) {
        MatvecStats st;
        matvec_bsgs(ct, plan, static_cast<HoistingMode>(mode), keys, chain, scale, &st);
        OpCounts model = count_matvec(n, chain.alpha, shape, mode, 40);
        CHECK(st.modular_mults == model.mults.total());
    }
}

TEST_CASE("amortized metric arithmetic") {
    SUBCASE("degenerate single level") {
        // T_boot = 0, one term of 1 s, N = 2: metric = 1 s exactly
        Ratio one_second(1000000000, 1);
        auto r = amortized_matvec_ns_per_slot(Ratio(0), {one_second, one_second}, 1, 2);
        // (0 + 1s + 1s) / 1 * 2/2 = 2 s; with L - L_boot = 1 and two level terms
        CHECK(r.num == 2000000000);
        CHECK(r.den == 1);
    }

    SUBCASE("hand-computed two-level sum") {
        // (100 + 10 + 20 + 30) / 2 * 2/8 = 160 / 8 = 20 ns
        auto r = amortized_matvec_ns_per_slot(Ratio(100), {Ratio(10), Ratio(20), Ratio(30)}, 2, 8);
        CHECK(r.num == 20);
        CHECK(r.den == 1);
    }

    SUBCASE("Set III figure reproduces from its own decomposition") {
        // T_boot = 2.70 ms and a level sum chosen to total 17.4 ns/slot at L - L_boot = 8, N = 2^16: the level terms must sum
        // to 17.4e-9 * 8 * 32768 - 2.70e-3 s = 1861305.6 ns.
        Ratio t_boot(2700000, 1);
        Ratio level_sum(18613056, 10);
        std::vector<Ratio> levels(9, level_sum / Ratio(9));
        auto r = amortized_matvec_ns_per_slot(t_boot, levels, 8, u64{1} << 16);
        CHECK(std::abs(r.to_double() - 17.4) < 1e-9);
    }
}

TEST_CASE("storage report carries the unit-level calculators") {
    auto r = storage_report(u64{1} << 16, 512, 42, 40, 42, 2, 27, 14, 4);
    const double mib = 1024.0 * 1024.0;
    CHECK(static_cast<double>(r.twiddle_full_bytes) / mib == doctest::Approx(13.0).epsilon(0.10));
    CHECK(static_cast<double>(r.twiddle_decomposed_bytes) / mib ==
          doctest::Approx(0.20).epsilon(0.10));
    CHECK(static_cast<double>(r.mdc_buffer_bytes_total) / mib ==
          doctest::Approx(26.0).epsilon(0.10));
    CHECK(r.partial_accumulator_bytes > 0);
    CHECK(r.key_working_set_bytes > 0);
}

TEST_CASE("roofline points respect the hardware bounds") {
    SUBCASE("compute-bound synthetic") {
        // High intensity: cycles set by the multiplier floor.
        u64 mults = 32256ull * 1000;
        u64 cycles = 2000;  // half utilization
        auto pt = roofline(mults, 1024, cycles, 1e9, 32256, 1e12);
        CHECK(pt.utilization == doctest::Approx(0.5));
        CHECK(pt.achieved <= pt.peak);
    }

    SUBCASE("bandwidth-bound synthetic") {
        // Intensity 0.001 mults/byte at 1 TB/s: bw bound = 1e9 mults/s.
        u64 bytes = 1000000;
        u64 mults = 1000;
        u64 cycles = 1000;  // exactly the DRAM streaming time at 1 GHz
        auto pt = roofline(mults, bytes, cycles, 1e9, 32256, 1e12);
        CHECK(pt.achieved == doctest::Approx(pt.bw_bound));
    }

    SUBCASE("overclaimed schedules are rejected") {
        CHECK_THROWS(roofline(32256ull * 10, 1024, 5, 1e9, 32256, 1e12));
    }
}

TEST_CASE("hoisting reduces counted mults at full scale") {
    // Set-III-like shape: 28 q-limbs at the top of the bootstrapping tower.
    const u64 n = u64{1} << 16;
    MatvecShape shape;
    shape.level = 27;
    shape.d = 64;
    shape.n1 = 32;
    shape.n2 = 2;
    shape.diag_source = DiagonalSource::Dram;
    OpCounts nh = count_matvec(n, 14, shape, 0, 40);
    OpCounts sh = count_matvec(n, 14, shape, 1, 40);
    OpCounts dh = count_matvec(n, 14, shape, 2, 40);
    CHECK(dh.mults.total() < sh.mults.total());
    CHECK(sh.mults.total() < nh.mults.total());
}
