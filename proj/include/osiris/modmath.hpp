// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace osiris {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

// Modular arithmetic over primes below 2^40. Residues are stored in 64-bit
// words; the 40-bit cap is enforced where chains are constructed, not here.

inline u64 mod_add(u64 a, u64 b, u64 m) {
    u64 s = a + b;
    return s >= m ? s - m : s;
}

inline u64 mod_sub(u64 a, u64 b, u64 m) {
    return a >= b ? a - b : a + m - b;
}

inline u64 mod_neg(u64 a, u64 m) {
    return a == 0 ? 0 : m - a;
}

// Barrett reducer with per-modulus precomputed constant. For x < m^2,
// `reduce` returns x mod m after at most two correction subtractions.
// Valid for moduli up to 62 bits; chains only ever use <= 40.
struct BarrettReducer {
    u64 modulus = 0;
    u64 k = 0;       // bit length of modulus
    u128 mu = 0;     // floor(2^(2k) / m)

    BarrettReducer() = default;

    explicit BarrettReducer(u64 m) : modulus(m) {
        if (m < 3) throw std::invalid_argument("BarrettReducer: modulus must be >= 3");
        k = 64 - static_cast<u64>(__builtin_clzll(m));
        if (2 * k >= 128) throw std::invalid_argument("BarrettReducer: modulus too large");
        mu = (u128{1} << (2 * k)) / m;
    }

    u64 reduce(u128 x) const {
        u128 q = ((x >> (k - 1)) * mu) >> (k + 1);
        u128 r = x - q * modulus;
        // quotient estimate is short by at most 2 for x < m^2
        if (r >= modulus) r -= modulus;
        if (r >= modulus) r -= modulus;
        if (r >= modulus) r %= modulus;  // out-of-contract input
        return static_cast<u64>(r);
    }

    u64 mul(u64 a, u64 b) const { return reduce(static_cast<u128>(a) * b); }
};

inline u64 mod_mul(u64 a, u64 b, u64 m) {
    return static_cast<u64>(static_cast<u128>(a) * b % m);
}

inline u64 mod_pow(u64 base, u64 exp, u64 m) {
    u64 r = 1 % m;
    base %= m;
    while (exp) {
        if (exp & 1) r = mod_mul(r, base, m);
        base = mod_mul(base, base, m);
        exp >>= 1;
    }
    return r;
}

// Extended gcd based inverse; throws on non-invertible input.
inline u64 mod_inv(u64 a, u64 m) {
    std::int64_t t = 0, new_t = 1;
    std::int64_t r = static_cast<std::int64_t>(m), new_r = static_cast<std::int64_t>(a % m);
    while (new_r != 0) {
        std::int64_t q = r / new_r;
        std::int64_t tmp = t - q * new_t;
        t = new_t;
        new_t = tmp;
        tmp = r - q * new_r;
        r = new_r;
        new_r = tmp;
    }
    if (r != 1)
        throw std::domain_error("mod_inv: element " + std::to_string(a) +
                                " is not invertible mod " + std::to_string(m));
    if (t < 0) t += static_cast<std::int64_t>(m);
    return static_cast<u64>(t);
}

// Deterministic Miller-Rabin, valid for all inputs below 3.3 * 10^24.
inline bool is_prime(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    u64 d = n - 1, s = 0;
    while ((d & 1) == 0) { d >>= 1; ++s; }
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        u64 x = mod_pow(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (u64 i = 1; i < s; ++i) {
            x = mod_mul(x, x, n);
            if (x == n - 1) { composite = false; break; }
        }
        if (composite) return false;
    }
    return true;
}

inline bool is_power_of_two(u64 n) { return n != 0 && (n & (n - 1)) == 0; }

inline u64 log2_exact(u64 n) {
    if (!is_power_of_two(n)) throw std::invalid_argument("log2_exact: not a power of two");
    return static_cast<u64>(__builtin_ctzll(n));
}

// Bit-reversal of the low `bits` bits.
inline u64 bit_reverse(u64 x, u64 bits) {
    u64 r = 0;
    for (u64 i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
    return r;
}

// Unsigned big integer, little-endian 64-bit limbs. Only what the CRT oracle
// and chain bookkeeping need: this is test/verification machinery, not a
// performance path.
class BigUint {
public:
    BigUint() = default;
    BigUint(u64 v) { if (v) limbs_.push_back(v); }  // NOLINT: implicit by design

    static BigUint one() { return BigUint(1); }

    bool is_zero() const { return limbs_.empty(); }
    std::size_t limb_count() const { return limbs_.size(); }
    u64 limb(std::size_t i) const { return i < limbs_.size() ? limbs_[i] : 0; }

    int compare(const BigUint& o) const {
        if (limbs_.size() != o.limbs_.size())
            return limbs_.size() < o.limbs_.size() ? -1 : 1;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i] ? -1 : 1;
        }
        return 0;
    }
    bool operator<(const BigUint& o) const { return compare(o) < 0; }
    bool operator>=(const BigUint& o) const { return compare(o) >= 0; }
    bool operator==(const BigUint& o) const { return compare(o) == 0; }

    BigUint& operator+=(const BigUint& o) {
        if (limbs_.size() < o.limbs_.size()) limbs_.resize(o.limbs_.size(), 0);
        u128 carry = 0;
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            u128 s = carry + limbs_[i] + (i < o.limbs_.size() ? o.limbs_[i] : 0);
            limbs_[i] = static_cast<u64>(s);
            carry = s >> 64;
        }
        if (carry) limbs_.push_back(static_cast<u64>(carry));
        return *this;
    }

    // Requires *this >= o.
    BigUint& operator-=(const BigUint& o) {
        if (compare(o) < 0) throw std::underflow_error("BigUint: negative subtraction");
        u64 borrow = 0;
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            u128 lhs = limbs_[i];
            u128 rhs = static_cast<u128>(i < o.limbs_.size() ? o.limbs_[i] : 0) + borrow;
            if (lhs >= rhs) {
                limbs_[i] = static_cast<u64>(lhs - rhs);
                borrow = 0;
            } else {
                limbs_[i] = static_cast<u64>((u128{1} << 64) + lhs - rhs);
                borrow = 1;
            }
        }
        trim();
        return *this;
    }

    BigUint& mul_small(u64 v) {
        if (v == 0 || is_zero()) { limbs_.clear(); return *this; }
        u128 carry = 0;
        for (auto& l : limbs_) {
            u128 p = static_cast<u128>(l) * v + carry;
            l = static_cast<u64>(p);
            carry = p >> 64;
        }
        if (carry) limbs_.push_back(static_cast<u64>(carry));
        return *this;
    }

    u64 mod_small(u64 m) const {
        u128 r = 0;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            r = ((r << 64) | limbs_[i]) % m;
        }
        return static_cast<u64>(r);
    }

    // Number of significant bits.
    u64 bit_length() const {
        if (is_zero()) return 0;
        return 64 * (limbs_.size() - 1) + (64 - __builtin_clzll(limbs_.back()));
    }

    friend BigUint operator+(BigUint a, const BigUint& b) { return a += b; }
    friend BigUint operator-(BigUint a, const BigUint& b) { return a -= b; }

private:
    void trim() {
        while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
    }
    std::vector<u64> limbs_;
};

// Deterministic splitmix64, used to derive per-object seeds.
inline u64 splitmix64(u64 x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// xoshiro-free self-contained generator so streams are identical across
// platforms and standard libraries.
class Rng {
public:
    explicit Rng(u64 seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dull)) {}

    u64 next() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Uniform in [0, bound) by rejection.
    u64 uniform_below(u64 bound) {
        if (bound == 0) throw std::invalid_argument("uniform_below: zero bound");
        u64 threshold = (0 - bound) % bound;
        for (;;) {
            u64 r = next();
            if (r >= threshold) return r % bound;
        }
    }

    double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    u64 state_;
};

}  // namespace osiris
