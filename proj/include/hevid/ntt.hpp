// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hevid/common.hpp"
#include "hevid/numtheory.hpp"

namespace hevid::num {

// Negacyclic number-theoretic transform over Z_p[x]/(x^n + 1) for a power of
// two n and prime p = 1 (mod 2n), p < 2^62.  Pointwise products in the
// transformed domain realize negacyclic convolution.  Twiddles are stored in
// bit-reversed order with Shoup companions so the butterflies need a single
// mulhi each (Longa-Naehrig style, strict reduction).
class NttTables {
 public:
  NttTables() = default;

  NttTables(size_t n, u64 p) : n_(n), p_(p) {
    require(n >= 2 && (n & (n - 1)) == 0, ErrorKind::params,
            "ntt size must be a power of two");
    require(p < (1ull << 62), ErrorKind::params, "ntt prime too large");
    require((p - 1) % (2 * n) == 0, ErrorKind::params,
            "prime not 1 mod 2n; negacyclic ntt unavailable");
    int logn = 0;
    while ((1ull << logn) < n) ++logn;
    u64 psi = root_of_unity(2 * n, p);
    u64 psi_inv = inv_mod(psi, p);
    psi_brv_.resize(n);
    psi_inv_brv_.resize(n);
    u64 w = 1, wi = 1;
    for (size_t i = 0; i < n; ++i) {
      size_t r = bit_reverse(static_cast<u32>(i), logn);
      psi_brv_[r] = shoup_pair(w);
      psi_inv_brv_[r] = shoup_pair(wi);
      w = mul_mod(w, psi, p);
      wi = mul_mod(wi, psi_inv, p);
    }
    n_inv_ = shoup_pair(inv_mod(static_cast<u64>(n) % p, p));
  }

  size_t size() const { return n_; }
  u64 modulus() const { return p_; }

  // In-place forward transform; input and output coefficients in [0, p).
  void forward(u64* a) const {
    size_t t = n_;
    for (size_t m = 1; m < n_; m <<= 1) {
      t >>= 1;
      for (size_t i = 0; i < m; ++i) {
        const Pair w = psi_brv_[m + i];
        u64* x = a + 2 * i * t;
        u64* y = x + t;
        for (size_t j = 0; j < t; ++j) {
          u64 u = x[j];
          u64 v = mul_shoup(y[j], w);
          x[j] = add_mod(u, v, p_);
          y[j] = sub_mod(u, v, p_);
        }
      }
    }
  }

  // In-place inverse transform (Gentleman-Sande), includes the 1/n scaling.
  void inverse(u64* a) const {
    size_t t = 1;
    for (size_t m = n_; m > 1; m >>= 1) {
      size_t h = m >> 1;
      size_t j1 = 0;
      for (size_t i = 0; i < h; ++i) {
        const Pair w = psi_inv_brv_[h + i];
        u64* x = a + j1;
        u64* y = x + t;
        for (size_t j = 0; j < t; ++j) {
          u64 u = x[j];
          u64 v = y[j];
          x[j] = add_mod(u, v, p_);
          y[j] = mul_shoup(sub_mod(u, v, p_), w);
        }
        j1 += 2 * t;
      }
      t <<= 1;
    }
    for (size_t j = 0; j < n_; ++j) a[j] = mul_shoup(a[j], n_inv_);
  }

  void forward(std::vector<u64>& a) const { forward(a.data()); }
  void inverse(std::vector<u64>& a) const { inverse(a.data()); }

 private:
  struct Pair {
    u64 w = 0;
    u64 w_shoup = 0;
  };

  Pair shoup_pair(u64 w) const {
    return {w, static_cast<u64>((static_cast<u128>(w) << 64) / p_)};
  }

  // x * w mod p with precomputed w_shoup = floor(w * 2^64 / p); x in [0, p).
  u64 mul_shoup(u64 x, Pair w) const {
    u64 q = static_cast<u64>((static_cast<u128>(x) * w.w_shoup) >> 64);
    u64 r = x * w.w - q * p_;  // wraps mod 2^64; true value < 2p
    return r >= p_ ? r - p_ : r;
  }

  size_t n_ = 0;
  u64 p_ = 0;
  std::vector<Pair> psi_brv_;
  std::vector<Pair> psi_inv_brv_;
  Pair n_inv_;
};

}  // namespace hevid::num
