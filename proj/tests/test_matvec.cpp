// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osiris/matvec.hpp"

using namespace osiris;

namespace {

ModulusChain small_chain(u64 n, u64 levels = 3, u64 alpha = 2) {
    return generate_chain(n, levels, alpha, 40, 32, 40);
}

CMat random_matrix(u64 w, u64 nonzero_diags, Rng& rng) {
    // Construct via diagonals so sparsity is controlled exactly.
    CMat m(w, CVec(w, {0.0, 0.0}));
    std::vector<u64> ks;
    for (u64 k = 0; k < w; ++k) ks.push_back(k);
    for (u64 i = w; i > 1; --i) std::swap(ks[i - 1], ks[rng.uniform_below(i)]);
    ks.resize(nonzero_diags);
    for (u64 k : ks)
        for (u64 i = 0; i < w; ++i)
            m[i][(i + k) % w] = {rng.uniform_real() * 2 - 1, rng.uniform_real() * 2 - 1};
    return m;
}

CVec random_vec(u64 w, Rng& rng) {
    CVec v(w);
    for (auto& x : v) x = {rng.uniform_real() * 2 - 1, rng.uniform_real() * 2 - 1};
    return v;
}

double max_err(const CVec& a, const CVec& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

}  // namespace

TEST_CASE("extract_diagonals") {
    SUBCASE("identity matrix has a single all-ones diagonal at k = 0") {
        CMat id(4, CVec(4, {0.0, 0.0}));
        for (int i = 0; i < 4; ++i) id[i][i] = {1.0, 0.0};
        auto d = extract_diagonals(id);
        REQUIRE(d.nonzero_count() == 1);
        REQUIRE(d.diagonals.count(0) == 1);
        for (const auto& v : d.diagonals.at(0)) CHECK(v == std::complex<double>{1.0, 0.0});
    }

    SUBCASE("six nonzero diagonals are reported as n = 6") {
        Rng rng(2);
        CMat m = random_matrix(8, 6, rng);
        auto d = extract_diagonals(m);
        CHECK(d.nonzero_count() == 6);
    }

    SUBCASE("random matrix satisfies the index formula") {
        Rng rng(3);
        CMat m = random_matrix(8, 8, rng);
        auto d = extract_diagonals(m);
        for (const auto& [k, diag] : d.diagonals)
            for (u64 i = 0; i < 8; ++i) CHECK(diag[i] == m[i][(i + k) % 8]);
    }
}

TEST_CASE("diagonal method matches the cleartext oracle") {
    const u64 n = 64;  // 16 slots
    auto chain = small_chain(n);
    double scale = std::pow(2.0, 32);
    u64 slots = slot_count(n);
    Rng rng(11);
    KeySet keys = keygen(chain, n, 4, 21);
    u64 level = 2;

    SUBCASE("identity matrix decrypts to the input") {
        CMat id(8, CVec(8, {0.0, 0.0}));
        for (int i = 0; i < 8; ++i) id[i][i] = {1.0, 0.0};
        CVec x = random_vec(8, rng);
        Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                                chain, level, scale, 31);
        MatvecStats st;
        Ciphertext out = matvec_diagonal(ct, extract_diagonals(id), keys, chain, scale, &st);
        auto back = decode(decrypt(out, keys.secret, chain), out.scale);
        CHECK(max_err(back, replicate(x, slots)) < 1e-5);
        CHECK(st.rotations_total == 1);
        CHECK(st.rotations_keyswitched == 0);
    }

    SUBCASE("zero matrix decrypts to zeros") {
        DiagonalizedMatrix zero;
        zero.width = 8;
        CVec x = random_vec(8, rng);
        Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                                chain, level, scale, 32);
        Ciphertext out = matvec_diagonal(ct, zero, keys, chain, scale);
        auto back = decode(decrypt(out, keys.secret, chain), out.scale);
        for (const auto& v : back) CHECK(std::abs(v) < 1e-9);
    }

    SUBCASE("random 8x8 with n = 6 diagonals") {
        CMat m = random_matrix(8, 6, rng);
        CVec x = random_vec(8, rng);
        Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                                chain, level, scale, 33);
        MatvecStats st;
        Ciphertext out = matvec_diagonal(ct, extract_diagonals(m), keys, chain, scale, &st);
        auto back = decode(decrypt(out, keys.secret, chain), out.scale);
        CVec want = replicate(matvec_oracle(m, x), slots);
        CHECK(max_err(back, want) < 1e-4);
        // n rotations including the trivial one; n-1 key switches when k=0 present
        u64 nz = extract_diagonals(m).nonzero_count();
        bool has_zero_diag = extract_diagonals(m).diagonals.count(0) > 0;
        CHECK(st.rotations_total == nz);
        CHECK(st.rotations_keyswitched == nz - (has_zero_diag ? 1 : 0));
    }
}

TEST_CASE("bsgs fig-1 shape: n=6, n1=3, n2=2 uses n1+n2 rotation slots") {
    const u64 n = 64;
    auto chain = small_chain(n);
    double scale = std::pow(2.0, 32);
    u64 slots = slot_count(n);
    Rng rng(17);
    KeySet keys = keygen(chain, n, 4, 22);
    u64 level = 2;

    // dense-in-[0,6) diagonal structure as in the running example
    CMat m(8, CVec(8, {0.0, 0.0}));
    for (u64 k = 0; k < 6; ++k)
        for (u64 i = 0; i < 8; ++i) m[i][(i + k) % 8] = {rng.uniform_real(), rng.uniform_real()};
    auto diags = extract_diagonals(m);
    REQUIRE(diags.nonzero_count() == 6);
    auto plan = make_bsgs_plan(diags, 3, 2, slots);

    CVec x = random_vec(8, rng);
    Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                            chain, level, scale, 41);
    MatvecStats st;
    Ciphertext out = matvec_bsgs(ct, plan, HoistingMode::DoubleHoisted, keys, chain, scale, &st);
    auto back = decode(decrypt(out, keys.secret, chain), out.scale);
    CHECK(max_err(back, replicate(matvec_oracle(m, x), slots)) < 1e-4);
    CHECK(st.rotations_total == 3 + 2);            // n1 + n2 slots, trivial ones included
    CHECK(st.rotations_keyswitched == 3 + 2 - 2);  // (n1-1) + (n2-1)
}

TEST_CASE("three modes decrypt bit-identically and match the oracle") {
    const u64 n = 64;
    auto chain = small_chain(n);
    double scale = std::pow(2.0, 32);
    u64 slots = slot_count(n);
    Rng rng(29);
    KeySet keys = keygen(chain, n, 4, 23);
    u64 level = 3;

    for (int trial = 0; trial < 4; ++trial) {
        u64 w = 16;
        u64 nz = 4 + rng.uniform_below(12);
        CMat m = random_matrix(w, nz, rng);
        CVec x = random_vec(w, rng);
        Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n),
                                keys.secret, chain, level, scale, 100 + trial);
        auto diags = extract_diagonals(m);
        // ratio n1/n2 = 4: double hoisting operates where it pays for itself
        auto plan = make_bsgs_plan(diags, 8, 2, slots);

        MatvecStats nh, sh, dh;
        Ciphertext out_nh = matvec_bsgs(ct, plan, HoistingMode::NonHoisted, keys, chain, scale, &nh);
        Ciphertext out_sh = matvec_bsgs(ct, plan, HoistingMode::SingleHoisted, keys, chain, scale, &sh);
        Ciphertext out_dh = matvec_bsgs(ct, plan, HoistingMode::DoubleHoisted, keys, chain, scale, &dh);

        // decrypted polynomials agree exactly across modes
        LimbMatrix d_nh = decrypt(out_nh, keys.secret, chain);
        LimbMatrix d_sh = decrypt(out_sh, keys.secret, chain);
        LimbMatrix d_dh = decrypt(out_dh, keys.secret, chain);
        CHECK(d_nh.data == d_sh.data);
        CHECK(d_sh.data == d_dh.data);

        CVec want = replicate(matvec_oracle(m, x), slots);
        CHECK(max_err(decode(d_dh, out_dh.scale), want) < 1e-4);

        // hoisting only removes work
        CHECK(dh.modular_mults <= sh.modular_mults);
        CHECK(sh.modular_mults <= nh.modular_mults);

        // one hoisted Decompose serves every baby step
        CHECK(sh.decompose_calls == 1 + (plan.n2 - 1));
        CHECK(dh.mod_down_calls == 2 * plan.n2 + 2 * (plan.n2 - 1));
    }
}

TEST_CASE("degenerate plans reduce to diagonal-method behaviour") {
    const u64 n = 64;
    auto chain = small_chain(n);
    double scale = std::pow(2.0, 32);
    u64 slots = slot_count(n);
    Rng rng(37);
    KeySet keys = keygen(chain, n, 4, 24);
    u64 level = 2;

    CMat m = random_matrix(8, 5, rng);
    CVec x = random_vec(8, rng);
    auto diags = extract_diagonals(m);
    Ciphertext ct = encrypt(encode(replicate(x, slots), scale, chain, level, n), keys.secret,
                            chain, level, scale, 51);
    CVec want = replicate(matvec_oracle(m, x), slots);

    SUBCASE("n2 = 1: no giant rotations") {
        auto plan = make_bsgs_plan(diags, 8, 1, slots);
        MatvecStats st;
        Ciphertext out = matvec_bsgs(ct, plan, HoistingMode::SingleHoisted, keys, chain, scale, &st);
        CHECK(max_err(decode(decrypt(out, keys.secret, chain), out.scale), want) < 1e-4);
        CHECK(st.rotations_keyswitched == plan.n1 - 1);
    }

    SUBCASE("n1 = 1: every diagonal is a giant step") {
        auto plan = make_bsgs_plan(diags, 1, 8, slots);
        MatvecStats st;
        Ciphertext out = matvec_bsgs(ct, plan, HoistingMode::NonHoisted, keys, chain, scale, &st);
        CHECK(max_err(decode(decrypt(out, keys.secret, chain), out.scale), want) < 1e-4);
        CHECK(st.rotations_keyswitched == plan.n2 - 1);
    }
}

TEST_CASE("bsgs plan validation") {
    Rng rng(41);
    CMat m = random_matrix(8, 8, rng);
    auto diags = extract_diagonals(m);
    CHECK_THROWS(make_bsgs_plan(diags, 2, 2, 16));  // 4 < 8 diagonals
    auto plan = make_bsgs_plan(diags, 4, 2, 16);
    CHECK(plan.n1 * plan.n2 >= diags.nonzero_count());
}

TEST_CASE("of_limb_extend") {
    const u64 n = 64;
    auto chain = small_chain(n);
    u64 slots = slot_count(n);
    Rng rng(47);
    double scale = std::pow(2.0, 20);  // keeps coefficients far below q0/2

    SUBCASE("zero diagonal extends to zeros") {
        LimbMatrix z(Basis{chain.q_limbs[0]}, n, Rep::Coeff, Order::Natural);
        LimbMatrix ext = of_limb_extend(z, chain.q_basis(2), n);
        for (const auto& limb : ext.data)
            for (u64 v : limb) CHECK(v == 0);
    }

    SUBCASE("extension equals the direct multi-limb encode exactly") {
        CVec diag = random_vec(slots, rng);
        LimbMatrix full = encode(diag, scale, chain, 2, n);
        LimbMatrix q0_only;
        q0_only.basis = Basis{chain.q_limbs[0]};
        q0_only.data = {full.data[0]};
        q0_only.rep = Rep::Coeff;
        q0_only.order = Order::Natural;
        LimbMatrix ext = of_limb_extend(q0_only, chain.q_basis(2), n);
        LimbMatrix want = ntt_reference(full);
        CHECK(ext.data == want.data);
    }

    SUBCASE("constant-one diagonal roundtrips") {
        CVec ones(slots, {1.0, 0.0});
        LimbMatrix full = encode(ones, scale, chain, 1, n);
        LimbMatrix q0_only;
        q0_only.basis = Basis{chain.q_limbs[0]};
        q0_only.data = {full.data[0]};
        q0_only.rep = Rep::Coeff;
        q0_only.order = Order::Natural;
        LimbMatrix ext = of_limb_extend(q0_only, chain.qp_basis(1), n);
        CHECK(ext.limb_count() == chain.qp_basis(1).size());
        CHECK(ext.data == ntt_reference(encode_over_basis(ones, scale, chain.qp_basis(1), n)).data);
    }

    SUBCASE("coefficient magnitude beyond the bound is an explicit failure") {
        // 9-bit target modulus cannot host 2^20-scaled coefficients.
        auto tiny = generate_chain(n, 1, 1, 12, 12, 12);
        CVec diag = random_vec(slots, rng);
        LimbMatrix full = encode(diag, scale, chain, 0, n);
        LimbMatrix q0_only;
        q0_only.basis = Basis{chain.q_limbs[0]};
        q0_only.data = {full.data[0]};
        q0_only.rep = Rep::Coeff;
        q0_only.order = Order::Natural;
        CHECK_THROWS_AS(of_limb_extend(q0_only, tiny.q_basis(1), n), std::overflow_error);
    }
}
