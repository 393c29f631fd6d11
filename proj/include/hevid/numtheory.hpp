// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hevid/common.hpp"

namespace hevid::num {

inline u64 add_mod(u64 a, u64 b, u64 m) {
  // a, b < m < 2^63, so the sum does not wrap.
  u64 s = a + b;
  return s >= m ? s - m : s;
}

inline u64 sub_mod(u64 a, u64 b, u64 m) { return a >= b ? a - b : a + m - b; }

inline u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

inline u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 r = 1 % m;
  base %= m;
  while (exp) {
    if (exp & 1) r = mul_mod(r, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return r;
}

// Modular inverse for prime modulus.
inline u64 inv_mod(u64 a, u64 p) {
  require(a % p != 0, ErrorKind::internal, "inverse of zero");
  return pow_mod(a % p, p - 2, p);
}

// Deterministic Miller-Rabin, valid for all n < 2^64 with this witness set.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull,
                29ull, 31ull, 37ull}) {
    u64 x = pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

// Largest prime p < 2^bits with p = 1 (mod step).  Throws if none exists.
inline u64 largest_prime_below(int bits, u64 step) {
  u64 top = (bits >= 64) ? ~0ull : ((1ull << bits) - 1);
  u64 p = top - ((top - 1) % step);  // largest value = 1 (mod step) <= top
  for (; p > step; p -= step) {
    if (is_prime(p)) return p;
  }
  fail(ErrorKind::params, "no prime = 1 mod step below 2^bits");
}

// Descending list of `count` distinct primes = 1 (mod step) starting below
// 2^bits, skipping any prime in `exclude`.
inline std::vector<u64> primes_below(int bits, u64 step, size_t count,
                                     const std::vector<u64>& exclude = {}) {
  std::vector<u64> out;
  u64 top = (bits >= 64) ? ~0ull : ((1ull << bits) - 1);
  u64 p = top - ((top - 1) % step);
  for (; p > step && out.size() < count; p -= step) {
    if (!is_prime(p)) continue;
    bool skip = false;
    for (u64 e : exclude) skip |= (e == p);
    if (!skip) out.push_back(p);
  }
  require(out.size() == count, ErrorKind::params, "prime search exhausted");
  return out;
}

// Smallest generator of the multiplicative group of Z_p (p prime).
inline u64 primitive_root(u64 p) {
  u64 phi = p - 1;
  // Factor phi by trial division; moduli here are < 2^63 so this is cheap
  // relative to context construction.
  std::vector<u64> factors;
  u64 n = phi;
  for (u64 d = 2; d * d <= n; ++d) {
    if (n % d == 0) {
      factors.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) factors.push_back(n);
  for (u64 g = 2; g < p; ++g) {
    bool ok = true;
    for (u64 f : factors) {
      if (pow_mod(g, phi / f, p) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
  fail(ErrorKind::internal, "no primitive root found");
}

// Primitive m-th root of unity mod p; requires m | p-1.
inline u64 root_of_unity(u64 m, u64 p) {
  require((p - 1) % m == 0, ErrorKind::params, "m does not divide p-1");
  u64 g = primitive_root(p);
  u64 w = pow_mod(g, (p - 1) / m, p);
  // w has order exactly m because g is a generator.
  return w;
}

inline u32 bit_reverse(u32 x, int bits) {
  u32 r = 0;
  for (int i = 0; i < bits; ++i) {
    r = (r << 1) | (x & 1);
    x >>= 1;
  }
  return r;
}

inline u64 isqrt(u64 n) {
  if (n == 0) return 0;
  u64 r = static_cast<u64>(std::sqrt(static_cast<double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace hevid::num
