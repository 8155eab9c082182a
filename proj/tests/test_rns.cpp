// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "osiris/rns.hpp"

using namespace osiris;

TEST_CASE("modular arithmetic basics") {
    CHECK(mod_mul(3, 5, 17) == 15);
    CHECK(mod_add(16, 5, 17) == 4);
    CHECK(mod_sub(3, 5, 17) == 15);
    CHECK(mod_pow(2, 10, 1000) == 24);
    CHECK(mod_inv(3, 17) == 6);  // 3*6 = 18 = 1 mod 17
    CHECK_THROWS_AS(mod_inv(6, 12), std::domain_error);

    // identity element
    for (u64 a : {0ull, 1ull, 9ull, 16ull}) CHECK(mod_mul(a, 1, 17) == a);
}

TEST_CASE("barrett reduction matches wide-integer oracle") {
    Rng rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        u64 m = 0;
        while (!is_prime(m)) m = (u64{1} << 39) + rng.uniform_below(u64{1} << 39);
        BarrettReducer red(m);
        for (int i = 0; i < 50; ++i) {
            u64 a = rng.uniform_below(m);
            u64 b = rng.uniform_below(m);
            u64 expect = static_cast<u64>(static_cast<u128>(a) * b % m);
            CHECK(red.mul(a, b) == expect);
        }
    }
}

TEST_CASE("deterministic primality") {
    CHECK(is_prime(2));
    CHECK(is_prime(65537));
    CHECK(is_prime((u64{1} << 40) - 87));  // 2^40 - 87 is prime
    CHECK_FALSE(is_prime(1));
    CHECK_FALSE(is_prime((u64{1} << 40)));
    CHECK_FALSE(is_prime(3215031751ull));  // strong pseudoprime to bases 2,3,5,7
}

TEST_CASE("big integer arithmetic") {
    BigUint a(~u64{0});
    a += BigUint(1);
    CHECK(a.limb_count() == 2);
    CHECK(a.limb(0) == 0);
    CHECK(a.limb(1) == 1);
    a -= BigUint(1);
    CHECK(a.limb_count() == 1);
    CHECK(a.mod_small(10) == 5);  // 2^64 - 1 = ...615, mod 10 = 5

    BigUint b(123456789);
    b.mul_small(987654321);
    CHECK(b.mod_small(1000000007) == (123456789ull * 987654321ull) % 1000000007ull);
}

TEST_CASE("chain generation: tiny chain for desk-scale tests") {
    // N=16, one level, alpha=1, minimal widths. Only one prime = 1 mod 32
    // exists below 8 bits (97), so 9-bit is the narrowest width that yields
    // the three distinct primes this chain needs.
    auto chain = generate_chain(16, 1, 1, 9, 9, 9);
    CHECK(chain.q_limbs.size() == 2);
    CHECK(chain.p_limbs.size() == 1);
    for (const auto& m : chain.q_limbs) CHECK(m.value % 32 == 1);
    for (const auto& m : chain.p_limbs) CHECK(m.value % 32 == 1);
    CHECK_THROWS(generate_chain(16, 1, 1, 5, 5, 5));  // no 5-bit prime = 1 mod 32 exists
}

TEST_CASE("chain generation: Set I shape") {
    // 2^14 ring, L_eff=5 levels at 32 bits, q0 40 bits, alpha=2 with 40-bit ps.
    auto chain = generate_chain(u64{1} << 14, 5, 2, 40, 32, 40);
    CHECK(chain.q_limbs.size() == 6);
    CHECK(chain.dnum_max() == 3);
    u64 two_n = u64{1} << 15;
    std::set<u64> seen;
    for (const auto& m : chain.q_limbs) {
        CHECK(is_prime(m.value));
        CHECK(m.value % two_n == 1);
        CHECK(seen.insert(m.value).second);  // pairwise distinct
        // root is a primitive 2N-th root: root^N = -1
        CHECK(m.pow(m.ntt_root, u64{1} << 14) == m.value - 1);
    }
    for (const auto& m : chain.p_limbs) {
        CHECK(is_prime(m.value));
        CHECK(seen.insert(m.value).second);
    }
}

TEST_CASE("chain generation: Set IV shape stays under the log QP budget") {
    // q0 split into two 24-bit primes, 9 residual levels at 36 bits, the rest
    // of the bootstrapping tower at 40 bits, alpha=14.
    std::vector<u64> widths{24, 24};
    for (int i = 0; i < 9; ++i) widths.push_back(36);
    for (int i = 0; i < 17; ++i) widths.push_back(40);
    auto chain = generate_chain_widths(u64{1} << 16, widths, 14, 40, 36);
    CHECK(chain.q_limbs.size() == 28);
    CHECK(chain.dnum_max() == 2);
    CHECK(chain.log_qp_bits() <= 1630);
}

TEST_CASE("chain generation failure names the width") {
    // 6-bit primes congruent to 1 mod 64: only 1 candidate window, cannot find 4.
    try {
        generate_chain(32, 3, 1, 6, 6, 6);
        FAIL("expected failure");
    } catch (const std::exception& e) {
        std::string msg = e.what();
        CHECK(msg.find("6") != std::string::npos);
    }
}

TEST_CASE("crt roundtrip identities") {
    auto chain = generate_chain(16, 3, 2, 30, 28, 30);
    Basis basis = chain.qp_basis(3);

    SUBCASE("zero maps to zero") {
        RnsInt z = crt_decompose(BigUint(), basis);
        for (u64 r : z.residues) CHECK(r == 0);
        CHECK(crt_reconstruct(z, basis).is_zero());
    }

    SUBCASE("direct small example") {
        Basis small;
        small.emplace_back(17, 0, 5);
        small.emplace_back(97, 0, 7);
        RnsInt x = crt_decompose(BigUint(100), small);
        CHECK(x.residues[0] == 15);
        CHECK(x.residues[1] == 3);
        BigUint back = crt_reconstruct(x, small);
        CHECK(back.mod_small(17 * 97) == 100);
    }

    SUBCASE("bijection on random values") {
        Rng rng(7);
        BigUint q = basis_product(basis);
        for (int i = 0; i < 1000; ++i) {
            // random value below Q via random residues
            RnsInt x;
            for (const auto& m : basis) x.residues.push_back(rng.uniform_below(m.value));
            BigUint v = crt_reconstruct(x, basis);
            CHECK(v < q);
            RnsInt x2 = crt_decompose(v, basis);
            CHECK(x.residues == x2.residues);
        }
    }
}

TEST_CASE("crt roundtrip on 512-bit-scale values") {
    // Set III sized basis: enough 36/40-bit primes to pass 512 bits.
    std::vector<u64> widths;
    for (int i = 0; i < 14; ++i) widths.push_back(38);
    auto chain = generate_chain_widths(256, widths, 1, 38, 36);
    Basis basis = chain.q_basis(chain.max_level());
    CHECK(basis_product(basis).bit_length() > 512);
    Rng rng(99);
    for (int i = 0; i < 50; ++i) {
        RnsInt x;
        for (const auto& m : basis) x.residues.push_back(rng.uniform_below(m.value));
        BigUint v = crt_reconstruct(x, basis);
        RnsInt x2 = crt_decompose(v, basis);
        CHECK(x.residues == x2.residues);
    }
}
