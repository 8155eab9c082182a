// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "osiris/benes.hpp"

using namespace osiris;

namespace {

std::vector<u64> random_permutation(u64 p, Rng& rng) {
    std::vector<u64> perm(p);
    std::iota(perm.begin(), perm.end(), 0);
    for (u64 i = p; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_below(i)]);
    return perm;
}

LimbMatrix random_eval_poly(const Basis& basis, u64 n, Rng& rng) {
    LimbMatrix x(basis, n, Rep::Eval, Order::Natural);
    for (std::size_t l = 0; l < basis.size(); ++l)
        for (auto& v : x.data[l]) v = rng.uniform_below(basis[l].value);
    return x;
}

}  // namespace

TEST_CASE("identity routes to all-through switches") {
    std::vector<u64> id{0, 1, 2, 3, 4, 5, 6, 7};
    auto routing = route_benes(id);
    CHECK(routing->stage_count() == 5);
    std::vector<int> in(8);
    std::iota(in.begin(), in.end(), 0);
    auto out = simulate_benes(*routing, in);
    CHECK(out == in);
    // root stage of an identity is fully through
    for (auto s : routing->in_sw) CHECK(s == 0);
    for (auto s : routing->out_sw) CHECK(s == 0);
}

TEST_CASE("single transposition routes correctly") {
    std::vector<u64> perm{1, 0, 2, 3};
    auto routing = route_benes(perm);
    std::vector<int> in{10, 20, 30, 40};
    auto out = simulate_benes(*routing, in);
    CHECK(out == std::vector<int>{20, 10, 30, 40});
}

TEST_CASE("500 random permutations route correctly at p in {8, 64}") {
    Rng rng(2024);
    for (u64 p : {8ull, 64ull}) {
        for (int trial = 0; trial < 500; ++trial) {
            auto perm = random_permutation(p, rng);
            auto routing = route_benes(perm);
            std::vector<u64> in(p);
            std::iota(in.begin(), in.end(), 1000);
            auto out = simulate_benes(*routing, in);
            bool ok = true;
            for (u64 i = 0; i < p; ++i) ok = ok && out[perm[i]] == in[i];
            CHECK(ok);
        }
    }
}

TEST_CASE("non-permutation input is rejected") {
    CHECK_THROWS(route_benes({0, 0, 1, 2}));
    CHECK_THROWS(route_benes({0, 1, 2}));  // not a power of two
}

TEST_CASE("plan covers all chunks and matches apply_automorphism") {
    Rng rng(91);
    for (u64 n : {16ull, 64ull}) {
        auto chain = generate_chain(n, 2, 1, 30, 28, 30);
        Basis basis = chain.q_basis(2);
        for (u64 p : {4ull, 8ull}) {
            if (p > n) continue;
            for (u64 r : {0ull, 1ull, 3ull, 7ull}) {
                auto plan = plan_automorphism(r, n, p);
                CHECK(plan.routing.size() == n / p);
                LimbMatrix x = random_eval_poly(basis, n, rng);
                auto res = run_automorphism(to_interleaved(x, p), plan);
                LimbMatrix got = from_interleaved(res.out);
                LimbMatrix want = apply_automorphism(x, r);
                CHECK(got.data == want.data);
                CHECK(res.cycle_count == basis.size() * (n / p) + 2 * log2_exact(p) - 1);
            }
        }
    }
}

TEST_CASE("r = 0 plan is the identity routing") {
    auto plan = plan_automorphism(0, 16, 4);
    for (u64 o = 0; o < 4; ++o) CHECK(plan.dest_chunk[o] == o);
    std::vector<int> in{1, 2, 3, 4};
    for (const auto& routing : plan.routing) CHECK(simulate_benes(*routing, in) == in);
}

TEST_CASE("fig-7 anchor through the streamed unit: N=16, r=1, index 3 to 15") {
    u64 n = 16, p = 4;
    auto chain = generate_chain(n, 0, 1, 30, 28, 30);
    Basis basis = chain.q_basis(0);
    LimbMatrix x(basis, n, Rep::Eval, Order::Natural);
    x.data[0][3] = 42;  // marker at index 3
    auto plan = plan_automorphism(1, n, p);
    auto res = run_automorphism(to_interleaved(x, p), plan);
    LimbMatrix got = from_interleaved(res.out);
    CHECK(got.data[0][15] == 42);
}

TEST_CASE("plan composition equals the summed rotation") {
    Rng rng(97);
    u64 n = 64, p = 8;
    auto chain = generate_chain(n, 1, 1, 30, 28, 30);
    Basis basis = chain.q_basis(1);
    LimbMatrix x = random_eval_poly(basis, n, rng);
    for (u64 r1 : {1ull, 5ull}) {
        for (u64 r2 : {2ull, 9ull}) {
            auto s1 = run_automorphism(to_interleaved(x, p), plan_automorphism(r1, n, p));
            auto s2 = run_automorphism(s1.out, plan_automorphism(r2, n, p));
            auto once = run_automorphism(to_interleaved(x, p), plan_automorphism(r1 + r2, n, p));
            CHECK(from_interleaved(s2.out).data == from_interleaved(once.out).data);
        }
    }
}

TEST_CASE("interleaving is preserved: all limbs permuted identically") {
    Rng rng(101);
    u64 n = 32, p = 4;
    auto chain = generate_chain(n, 3, 1, 30, 28, 30);
    Basis basis = chain.q_basis(3);
    LimbMatrix x = random_eval_poly(basis, n, rng);
    auto plan = plan_automorphism(3, n, p);
    auto res = run_automorphism(to_interleaved(x, p), plan);
    CHECK(res.out.check_schedule());
    LimbMatrix got = from_interleaved(res.out);
    auto perm = automorphism_map(3, n);
    for (std::size_t l = 0; l < basis.size(); ++l)
        for (u64 i = 0; i < n; ++i) CHECK(got.data[l][perm[i]] == x.data[l][i]);
}
