// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <gmp.h>
#include <gmpxx.h>

#include <array>
#include <bit>
#include <cstring>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "hevid/capabilities.hpp"
#include "hevid/chacha_rng.hpp"
#include "hevid/common.hpp"
#include "hevid/he/counters.hpp"
#include "hevid/ntt.hpp"
#include "hevid/numtheory.hpp"
#include "hevid/params.hpp"
#include "hevid/slots.hpp"

namespace hevid::bfv {

namespace {
const caps::Tag cap_encrypt_tag{"he-encrypt"};
const caps::Tag cap_evaluate_tag{"he-evaluate"};
}  // namespace

// Shoup pair for a fixed multiplicand w modulo p: one mulhi per product.
struct MulConst {
  u64 w = 0;
  u64 w_shoup = 0;
  static MulConst make(u64 w, u64 p) {
    return {w % p, static_cast<u64>((static_cast<u128>(w % p) << 64) / p)};
  }
};

inline u64 mul_const(u64 x, MulConst c, u64 p) {
  u64 hi = static_cast<u64>((static_cast<u128>(x) * c.w_shoup) >> 64);
  u64 r = x * c.w - hi * p;
  return r >= p ? r - p : r;
}

// Polynomial in RNS representation: rows[i][j] is coefficient j modulo the
// i-th basis prime.  Whether rows hold coefficients or NTT values is tracked
// by the caller (ciphertexts are kept in coefficient form at rest).
struct RnsPoly {
  std::vector<std::vector<u64>> rows;

  size_t prime_count() const { return rows.size(); }
  size_t coeff_count() const { return rows.empty() ? 0 : rows[0].size(); }
};

struct Ciphertext {
  std::vector<RnsPoly> c;  // always two components at rest
};

struct PublicKey {
  RnsPoly p0, p1;  // NTT form
  u32 fp = 0;
};

// Key-switching key: one (k0, k1) pair per decomposition digit, NTT form.
struct KSwitchKey {
  std::vector<std::array<RnsPoly, 2>> digits;
};

struct RelinKeys {
  KSwitchKey key;
  u32 fp = 0;
};

struct GaloisKeys {
  std::map<u32, KSwitchKey> elems;  // galois element -> key
  u32 fp = 0;
};

// Secret key data.  The type lives here so key containers can name it, but
// every operation that uses it (key generation, decryption, noise
// measurement, secret-key I/O) is defined in he/secret.hpp, which service
// binaries without decryption capability must not include.
struct SecretKey {
  std::vector<signed char> coeffs;  // ternary, in {-1, 0, 1}
  RnsPoly ntt_rows;                 // lifted to the ciphertext basis, NTT form
  u32 fp = 0;
};

// Plaintext prepared for repeated use: the encoded polynomial itself, its
// per-prime NTT image (for multiplication) and its delta-scaled image (for
// addition into the message slot of a ciphertext).
struct EncodedPlain {
  std::vector<u64> coeffs_t;
  RnsPoly ntt_q;
  RnsPoly delta_q;
};

class Context {
 public:
  explicit Context(const HeParams& hp) : params(hp) {
    validate(params);
    n = params.degree;
    half_slots = n / 2;
    t = params.plain_modulus;
    q = params.coeff_modulus;
    k = q.size();
    all = q;
    all.insert(all.end(), params.aux_modulus.begin(), params.aux_modulus.end());
    m = all.size() - k;
    fp = params.fingerprint("bfv");

    for (u64 p : all) ntt.emplace_back(n, p);
    ntt_t = num::NttTables(n, t);
    build_slot_map();

    // GMP constants.
    q_prod = 1;
    for (u64 p : q) q_prod *= mpz_class(to_mpz(p));
    all_prod = 1;
    for (u64 p : all) all_prod *= mpz_class(to_mpz(p));
    half_q = q_prod >> 1;
    half_all = all_prod >> 1;
    // Tensor coefficients of two ciphertexts lie in (-N*q^2, N*q^2): the
    // extended basis must cover that window so they are recovered exactly.
    require(all_prod > 2 * mpz_class(n) * q_prod * q_prod, ErrorKind::params,
            "extension basis too small for exact multiplication");
    crt_all.resize(all.size());
    for (size_t i = 0; i < all.size(); ++i) {
      mpz_class hat = all_prod / to_mpz(all[i]);
      mpz_class inv;
      mpz_invert(inv.get_mpz_t(), hat.get_mpz_t(), to_mpz(all[i]).get_mpz_t());
      crt_all[i] = hat * inv;  // = 1 mod p_i, 0 mod p_j
    }
    crt_q.resize(k);
    for (size_t i = 0; i < k; ++i) {
      mpz_class hat = q_prod / to_mpz(q[i]);
      mpz_class inv;
      mpz_invert(inv.get_mpz_t(), hat.get_mpz_t(), to_mpz(q[i]).get_mpz_t());
      crt_q[i] = hat * inv;
    }
    // Message scaling uses round(q*m/t) rather than floor(q/t)*m: the floor
    // form leaves a (q mod t)*m error term that dominates fresh noise, while
    // rounding keeps the scaling error below t/2 regardless of the message.
    // With q = qdivt*t + rho, round(q*m/t) = qdivt*m + floor((rho*m + t/2)/t),
    // which stays in 64-bit arithmetic because rho, m < t < 2^22.
    mpz_class qdivt = q_prod / t;
    rho_t = mpz_fdiv_ui(q_prod.get_mpz_t(), t);
    qdivt_mod_q.resize(k);
    for (size_t i = 0; i < k; ++i)
      qdivt_mod_q[i] = MulConst::make(mpz_fdiv_ui(qdivt.get_mpz_t(), q[i]), q[i]);

    // Mixed-radix digits of floor(q/2) in the Garner basis (q0, q1, ...), and
    // q mod b for each extension prime: together they let the lift to the
    // extended basis center values into (-q/2, q/2].
    halfq_digits.resize(k);
    {
      mpz_class h = half_q;
      for (size_t i = 0; i < k; ++i) {
        halfq_digits[i] = mpz_fdiv_ui(h.get_mpz_t(), q[i]);
        mpz_fdiv_q_ui(h.get_mpz_t(), h.get_mpz_t(), q[i]);
      }
    }
    q_mod_aux.resize(m);
    for (size_t bi = 0; bi < m; ++bi)
      q_mod_aux[bi] = mpz_fdiv_ui(q_prod.get_mpz_t(), all[k + bi]);

    // Garner constants for lifting RNS residues over Q to the full basis.
    garner_inv.resize(k);
    for (size_t i = 0; i < k; ++i) {
      garner_inv[i].resize(i);
      for (size_t j = 0; j < i; ++j)
        garner_inv[i][j] = MulConst::make(num::inv_mod(q[j] % q[i], q[i]), q[i]);
    }
    aux_fold.resize(m);
    for (size_t bi = 0; bi < m; ++bi) {
      u64 b = all[k + bi];
      aux_fold[bi].resize(k);
      for (size_t i = 0; i < k; ++i) aux_fold[bi][i] = MulConst::make(q[i] % b, b);
      require(b > *std::max_element(q.begin(), q.end()), ErrorKind::params,
              "aux primes must dominate ciphertext primes");
    }

    // Decomposition widths: three sub-digits per ciphertext prime keeps the
    // key-switching error far below the multiplication noise floor while the
    // ciphertext modulus stays fully usable.
    w_bits.resize(k);
    for (size_t i = 0; i < k; ++i) {
      int bits = 64 - std::countl_zero(q[i]);
      w_bits[i] = (bits + kSubDigits - 1) / kSubDigits;
    }
  }

  static mpz_class to_mpz(u64 v) {
    mpz_class z;
    mpz_import(z.get_mpz_t(), 1, 1, sizeof v, 0, 0, &v);
    return z;
  }

  // ---- polynomial helpers over the ciphertext basis ----

  RnsPoly zero_poly() const {
    RnsPoly p;
    p.rows.assign(k, std::vector<u64>(n, 0));
    return p;
  }

  void add_inplace(RnsPoly& a, const RnsPoly& b) const {
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j)
        a.rows[i][j] = num::add_mod(a.rows[i][j], b.rows[i][j], q[i]);
  }

  void sub_inplace(RnsPoly& a, const RnsPoly& b) const {
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j)
        a.rows[i][j] = num::sub_mod(a.rows[i][j], b.rows[i][j], q[i]);
  }

  void negate_inplace(RnsPoly& a) const {
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j)
        a.rows[i][j] = a.rows[i][j] ? q[i] - a.rows[i][j] : 0;
  }

  void ntt_forward_q(RnsPoly& a) const {
    for (size_t i = 0; i < k; ++i) ntt[i].forward(a.rows[i]);
  }
  void ntt_inverse_q(RnsPoly& a) const {
    for (size_t i = 0; i < k; ++i) ntt[i].inverse(a.rows[i]);
  }

  // a += x (*) y, all rows in NTT form over Q.
  void mul_acc_ntt(const RnsPoly& x, const RnsPoly& y, RnsPoly& a) const {
    for (size_t i = 0; i < k; ++i) {
      const u64 p = q[i];
      const u64* xr = x.rows[i].data();
      const u64* yr = y.rows[i].data();
      u64* ar = a.rows[i].data();
      for (size_t j = 0; j < n; ++j) {
        u64 prod = num::mul_mod(xr[j], yr[j], p);
        ar[j] = num::add_mod(ar[j], prod, p);
      }
    }
  }

  void mul_pointwise_ntt(RnsPoly& x, const RnsPoly& y) const {
    for (size_t i = 0; i < k; ++i) {
      const u64 p = q[i];
      u64* xr = x.rows[i].data();
      const u64* yr = y.rows[i].data();
      for (size_t j = 0; j < n; ++j) xr[j] = num::mul_mod(xr[j], yr[j], p);
    }
  }

  // Galois automorphism x -> x^gelt on a coefficient-form residue row.
  void automorphism_row(const u64* in, u64* out, u32 gelt, u64 p) const {
    const u64 mask = 2 * n - 1;
    for (size_t i = 0; i < n; ++i) {
      u64 j = (i * gelt) & mask;
      if (j < n)
        out[j] = in[i];
      else
        out[j - n] = in[i] ? p - in[i] : 0;
    }
  }

  RnsPoly automorphism(const RnsPoly& a, u32 gelt) const {
    RnsPoly out = zero_poly();
    for (size_t i = 0; i < k; ++i)
      automorphism_row(a.rows[i].data(), out.rows[i].data(), gelt, q[i]);
    return out;
  }

  // ---- batching ----

  std::vector<u64> encode_t(const SlotVector& sv) const {
    require(sv.size() == half_slots, ErrorKind::encoding,
            "slot vector length must equal degree/2");
    std::vector<u64> a(n, 0);
    for (size_t c = 0; c < half_slots; ++c) a[slot_pos[c]] = sv[c] % t;
    ntt_t.inverse(a);
    return a;
  }

  SlotVector decode_t(std::vector<u64> a) const {
    ntt_t.forward(a);
    SlotVector sv(half_slots);
    for (size_t c = 0; c < half_slots; ++c) sv[c] = a[slot_pos[c]];
    return sv;
  }

  // round(q*m/t) mod q_i for a plaintext residue m in [0, t).
  u64 scale_to_delta(u64 msg, size_t i) const {
    u64 quot = (rho_t * msg + (t >> 1)) / t;  // < t, so already reduced
    return num::add_mod(mul_const(msg, qdivt_mod_q[i], q[i]), quot, q[i]);
  }

  // Encodes the constant v on every slot of BOTH batching rows.  With the
  // second row zeroed (as every encode_plain/encrypt in this layout leaves
  // it), the slot pattern (v, ..., v, 0, ..., 0) is not a constant
  // polynomial and multiplying by it costs ~log2(t) bits of noise; the
  // two-row constant really is the polynomial v, whose products are free.
  // Ciphertext rows stay zero under it, so computed messages are unchanged.
  EncodedPlain encode_plain_const(u64 v) const {
    v %= t;
    EncodedPlain ep;
    ep.coeffs_t.assign(n, 0);
    ep.coeffs_t[0] = v;
    ep.ntt_q.rows.resize(k);
    for (size_t i = 0; i < k; ++i) {
      u64 c = v > t / 2 ? q[i] - (t - v) : v;
      ep.ntt_q.rows[i].assign(n, c);  // NTT of a constant is that constant
    }
    ep.delta_q.rows.assign(k, std::vector<u64>(n, 0));
    for (size_t i = 0; i < k; ++i) ep.delta_q.rows[i][0] = scale_to_delta(v, i);
    return ep;
  }

  EncodedPlain encode_plain(const SlotVector& sv) const {
    EncodedPlain ep;
    ep.coeffs_t = encode_t(sv);
    // The multiplication image uses the centered representative of each
    // coefficient: a multiplier's noise contribution scales with its lifted
    // magnitude, and centering halves it (and maps an all-(t-1) constant to
    // the cheap constant -1).
    ep.ntt_q.rows.assign(k, std::vector<u64>(n));
    for (size_t i = 0; i < k; ++i) {
      auto& row = ep.ntt_q.rows[i];
      for (size_t j = 0; j < n; ++j) {
        u64 cj = ep.coeffs_t[j];
        row[j] = cj > t / 2 ? q[i] - (t - cj) : cj;
      }
      ntt[i].forward(row);
    }
    ep.delta_q.rows.assign(k, std::vector<u64>(n));
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j)
        ep.delta_q.rows[i][j] = scale_to_delta(ep.coeffs_t[j], i);
    return ep;
  }

  // ---- sampling ----

  std::vector<signed char> sample_ternary(ChaChaRng& rng) const {
    std::vector<signed char> s(n);
    for (size_t j = 0; j < n; ++j)
      s[j] = static_cast<signed char>(static_cast<i64>(rng.below(3)) - 1);
    return s;
  }

  // Centered binomial with 21 coin pairs (sigma ~ 3.24).
  std::vector<int> sample_cbd(ChaChaRng& rng) const {
    std::vector<int> e(n);
    const u64 mask21 = (1ull << 21) - 1;
    for (size_t j = 0; j < n; ++j) {
      u64 x = rng.next_u64();
      e[j] = std::popcount(x & mask21) - std::popcount((x >> 21) & mask21);
    }
    return e;
  }

  template <class Small>
  RnsPoly lift_small(const std::vector<Small>& vals) const {
    RnsPoly p;
    p.rows.assign(k, std::vector<u64>(n));
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j) {
        i64 v = vals[j];
        p.rows[i][j] = v >= 0 ? static_cast<u64>(v) : q[i] - static_cast<u64>(-v);
      }
    return p;
  }

  RnsPoly sample_uniform_ntt(ChaChaRng& rng) const {
    RnsPoly p;
    p.rows.assign(k, std::vector<u64>(n));
    for (size_t i = 0; i < k; ++i)
      for (size_t j = 0; j < n; ++j) p.rows[i][j] = rng.below(q[i]);
    return p;
  }

  // ---- key switching ----

  size_t digit_count() const { return kSubDigits * k; }

  // Switches the coefficient-form polynomial x (over Q) using ksk, returning
  // the (r0, r1) contribution in coefficient form.
  std::pair<RnsPoly, RnsPoly> keyswitch(const RnsPoly& x,
                                        const KSwitchKey& ksk) const {
    require(ksk.digits.size() == digit_count(), ErrorKind::key,
            "key-switching key has wrong digit count");
    RnsPoly acc0 = zero_poly();
    RnsPoly acc1 = zero_poly();
    std::vector<u64> dvals(n), tmp(n);
    for (size_t i = 0; i < k; ++i) {
      const int w = w_bits[i];
      const u64 mask = (1ull << w) - 1;
      for (int l = 0; l < kSubDigits; ++l) {
        const auto& xr = x.rows[i];
        for (size_t j = 0; j < n; ++j)
          dvals[j] = (xr[j] >> (l * w)) & mask;
        const auto& pair = ksk.digits[kSubDigits * i + l];
        for (size_t jj = 0; jj < k; ++jj) {
          tmp = dvals;  // digit values are below every prime
          ntt[jj].forward(tmp);
          const u64 p = q[jj];
          const u64* k0 = pair[0].rows[jj].data();
          const u64* k1 = pair[1].rows[jj].data();
          u64* a0 = acc0.rows[jj].data();
          u64* a1 = acc1.rows[jj].data();
          for (size_t j = 0; j < n; ++j) {
            a0[j] = num::add_mod(a0[j], num::mul_mod(tmp[j], k0[j], p), p);
            a1[j] = num::add_mod(a1[j], num::mul_mod(tmp[j], k1[j], p), p);
          }
        }
      }
    }
    ntt_inverse_q(acc0);
    ntt_inverse_q(acc1);
    return {std::move(acc0), std::move(acc1)};
  }

  // ---- exact multiplication machinery ----

  // Extend a coefficient-form polynomial over Q to the full basis Q u B via
  // Garner mixed-radix reconstruction, using the centered representative in
  // (-q/2, q/2]: multiplication noise scales with operand magnitude, so the
  // centered lift is two bits cheaper per product than the positive one.
  std::vector<std::vector<u64>> lift_to_all(const RnsPoly& x) const {
    std::vector<std::vector<u64>> out(all.size());
    for (size_t i = 0; i < k; ++i) out[i] = x.rows[i];
    for (size_t bi = 0; bi < m; ++bi) out[k + bi].resize(n);
    std::vector<u64> v(k);
    for (size_t j = 0; j < n; ++j) {
      for (size_t i = 0; i < k; ++i) {
        u64 u = x.rows[i][j];
        for (size_t jj = 0; jj < i; ++jj)
          u = mul_const(num::sub_mod(u, v[jj] % q[i], q[i]), garner_inv[i][jj],
                        q[i]);
        v[i] = u;
      }
      // Lexicographic compare of the mixed-radix digits, most significant
      // first, decides whether the positive representative exceeds q/2.
      bool wraps = false;
      for (size_t i = k; i-- > 0;) {
        if (v[i] != halfq_digits[i]) {
          wraps = v[i] > halfq_digits[i];
          break;
        }
      }
      for (size_t bi = 0; bi < m; ++bi) {
        const u64 b = all[k + bi];
        u64 acc = v[k - 1];
        for (size_t i = k - 1; i-- > 0;)
          acc = num::add_mod(mul_const(acc, aux_fold[bi][i], b), v[i] % b, b);
        // Subtracting q leaves the residues over Q unchanged and only the
        // extension rows need adjusting.
        out[k + bi][j] = wraps ? num::sub_mod(acc, q_mod_aux[bi], b) : acc;
      }
    }
    return out;
  }

  // Per-coefficient round(t * X / q) reduced into the ciphertext basis.  X is
  // given exactly over the full basis and interpreted centered: negacyclic
  // convolution makes tensor coefficients signed, so the representative in
  // (-QB/2, QB/2] is the true integer value.
  RnsPoly scale_round(const std::vector<std::vector<u64>>& rows) const {
    RnsPoly out = zero_poly();
    thread_local mpz_class X, Y;
    for (size_t j = 0; j < n; ++j) {
      mpz_set_ui(X.get_mpz_t(), 0);
      for (size_t i = 0; i < all.size(); ++i)
        mpz_addmul_ui(X.get_mpz_t(), crt_all[i].get_mpz_t(), rows[i][j]);
      mpz_mod(X.get_mpz_t(), X.get_mpz_t(), all_prod.get_mpz_t());
      if (mpz_cmp(X.get_mpz_t(), half_all.get_mpz_t()) > 0)
        mpz_sub(X.get_mpz_t(), X.get_mpz_t(), all_prod.get_mpz_t());
      mpz_mul_ui(Y.get_mpz_t(), X.get_mpz_t(), t);
      mpz_add(Y.get_mpz_t(), Y.get_mpz_t(), half_q.get_mpz_t());
      mpz_fdiv_q(Y.get_mpz_t(), Y.get_mpz_t(), q_prod.get_mpz_t());
      for (size_t i = 0; i < k; ++i)
        out.rows[i][j] = mpz_fdiv_ui(Y.get_mpz_t(), q[i]);
    }
    return out;
  }

  static constexpr int kSubDigits = 3;  // key-switching digits per prime

  HeParams params;
  size_t n = 0, half_slots = 0, k = 0, m = 0;
  u64 t = 0;
  std::vector<u64> q;    // ciphertext primes
  std::vector<u64> all;  // ciphertext + extension primes
  std::vector<num::NttTables> ntt;
  num::NttTables ntt_t;
  std::vector<u32> slot_pos;
  u64 rho_t = 0;                        // q mod t
  std::vector<MulConst> qdivt_mod_q;    // floor(q/t) mod q_i
  std::vector<u64> halfq_digits;        // mixed-radix digits of floor(q/2)
  std::vector<u64> q_mod_aux;           // q mod b for each extension prime
  std::vector<std::vector<MulConst>> garner_inv;
  std::vector<std::vector<MulConst>> aux_fold;
  std::vector<int> w_bits;
  mpz_class q_prod, all_prod, half_q, half_all;
  std::vector<mpz_class> crt_all, crt_q;
  u32 fp = 0;

 private:
  void build_slot_map() {
    // Identify which transform position evaluates which odd power of psi by
    // transforming the monomial x and reading discrete logs; then place the
    // two batching rows on the +/- orbits of 3.
    std::unordered_map<u64, u32> dlog;
    dlog.reserve(n);
    const u64 psi = num::root_of_unity(2 * n, t);
    const u64 psi2 = num::mul_mod(psi, psi, t);
    u64 w = psi;
    for (u64 e = 1; e < 2 * n; e += 2) {
      dlog.emplace(w, static_cast<u32>(e));
      w = num::mul_mod(w, psi2, t);
    }
    std::vector<u64> probe(n, 0);
    probe[1] = 1;
    ntt_t.forward(probe);
    std::vector<u32> pos_of_exp(2 * n, ~0u);
    for (size_t i = 0; i < n; ++i) {
      auto it = dlog.find(probe[i]);
      require(it != dlog.end(), ErrorKind::internal, "slot map derivation failed");
      pos_of_exp[it->second] = static_cast<u32>(i);
    }
    slot_pos.resize(n);
    const u64 mask = 2 * n - 1;
    u64 ge = 1;
    for (size_t c = 0; c < half_slots; ++c) {
      slot_pos[c] = pos_of_exp[ge];
      slot_pos[half_slots + c] = pos_of_exp[(2 * n - ge) & mask];
      ge = (ge * 3) & mask;
    }
  }
};

// Galois elements for the standard rotation key set: every power-of-two step
// in both directions plus the layout's field offsets.
inline std::vector<u32> standard_rotation_steps() {
  return {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048};
}

inline u32 galois_elt_left(size_t step, size_t n) {
  const u64 mask = 2 * n - 1;
  u64 g = 1;
  for (size_t i = 0; i < step % (n / 2); ++i) g = (g * 3) & mask;
  return static_cast<u32>(g);
}

inline u32 galois_elt_right(size_t step, size_t n) {
  return galois_elt_left((n / 2 - step % (n / 2)) % (n / 2), n);
}

inline std::vector<u32> standard_galois_elements(size_t n) {
  std::vector<u32> elems;
  auto push = [&](u32 e) {
    for (u32 x : elems)
      if (x == e) return;
    elems.push_back(e);
  };
  for (size_t s : standard_rotation_steps()) {
    push(galois_elt_left(s, n));
    push(galois_elt_right(s, n));
  }
  for (size_t s : {400, 408, 456, 560, 800, 1200}) push(galois_elt_left(s, n));
  push(galois_elt_right(400, n));
  return elems;
}

class Backend {
 public:
  using Payload = Ciphertext;
  using PublicKeyT = PublicKey;
  using SecretKeyT = SecretKey;
  using RelinKeysT = RelinKeys;
  using GaloisKeysT = GaloisKeys;
  using EncodedPlainT = EncodedPlain;

  static constexpr const char* name() { return "bfv"; }

  explicit Backend(const HeParams& params)
      : ctx_(std::make_shared<const Context>(params)) {}
  explicit Backend(std::shared_ptr<const Context> ctx) : ctx_(std::move(ctx)) {}

  const Context& ctx() const { return *ctx_; }
  std::shared_ptr<const Context> ctx_ptr() const { return ctx_; }
  const HeParams& params() const { return ctx_->params; }
  size_t slot_count() const { return ctx_->half_slots; }
  u64 plain_modulus() const { return ctx_->t; }
  u32 fingerprint() const { return ctx_->fp; }

  void set_relin_keys(RelinKeys rk) {
    require(rk.fp == ctx_->fp, ErrorKind::params,
            "relinearization keys from different parameters");
    relin_ = std::move(rk);
  }
  void set_galois_keys(GaloisKeys gk) {
    require(gk.fp == ctx_->fp, ErrorKind::params,
            "galois keys from different parameters");
    galois_ = std::move(gk);
  }
  bool has_relin_keys() const { return relin_.has_value(); }
  bool has_galois_keys() const { return galois_.has_value(); }

  EncodedPlain encode_plain(const SlotVector& sv) const {
    return ctx_->encode_plain(sv);
  }
  EncodedPlain encode_plain_const(u64 v) const {
    return ctx_->encode_plain_const(v);
  }

  Ciphertext encrypt_payload(const SlotVector& sv, const PublicKey& pk,
                             ChaChaRng& rng) const {
    require(pk.fp == ctx_->fp, ErrorKind::params,
            "public key from different parameters");
    const Context& c = *ctx_;
    std::vector<u64> msg = c.encode_t(sv);
    RnsPoly u = c.lift_small(c.sample_ternary(rng));
    c.ntt_forward_q(u);
    Ciphertext out;
    out.c.resize(2);
    // c0 = p0*u + e0 + round(q*m/t) ; c1 = p1*u + e1
    RnsPoly c0 = u;
    c.mul_pointwise_ntt(c0, pk.p0);
    c.ntt_inverse_q(c0);
    RnsPoly c1 = std::move(u);
    c.mul_pointwise_ntt(c1, pk.p1);
    c.ntt_inverse_q(c1);
    RnsPoly e0 = c.lift_small(c.sample_cbd(rng));
    RnsPoly e1 = c.lift_small(c.sample_cbd(rng));
    c.add_inplace(c0, e0);
    c.add_inplace(c1, e1);
    for (size_t i = 0; i < c.k; ++i)
      for (size_t j = 0; j < c.n; ++j)
        c0.rows[i][j] =
            num::add_mod(c0.rows[i][j], c.scale_to_delta(msg[j], i), c.q[i]);
    out.c[0] = std::move(c0);
    out.c[1] = std::move(c1);
    return out;
  }

  Ciphertext payload_add(const Ciphertext& a, const Ciphertext& b) const {
    Ciphertext out = a;
    ctx_->add_inplace(out.c[0], b.c[0]);
    ctx_->add_inplace(out.c[1], b.c[1]);
    return out;
  }

  Ciphertext payload_sub(const Ciphertext& a, const Ciphertext& b) const {
    Ciphertext out = a;
    ctx_->sub_inplace(out.c[0], b.c[0]);
    ctx_->sub_inplace(out.c[1], b.c[1]);
    return out;
  }

  Ciphertext payload_negate(const Ciphertext& a) const {
    Ciphertext out = a;
    ctx_->negate_inplace(out.c[0]);
    ctx_->negate_inplace(out.c[1]);
    return out;
  }

  // Ciphertext multiplication with eager relinearization.
  Ciphertext payload_mul(const Ciphertext& a, const Ciphertext& b) const {
    require(relin_.has_value(), ErrorKind::key,
            "ciphertext multiply requires relinearization keys");
    const Context& c = *ctx_;
    auto ea0 = c.lift_to_all(a.c[0]);
    auto ea1 = c.lift_to_all(a.c[1]);
    auto eb0 = c.lift_to_all(b.c[0]);
    auto eb1 = c.lift_to_all(b.c[1]);
    const size_t np = c.all.size();
    for (size_t i = 0; i < np; ++i) {
      c.ntt[i].forward(ea0[i]);
      c.ntt[i].forward(ea1[i]);
      c.ntt[i].forward(eb0[i]);
      c.ntt[i].forward(eb1[i]);
    }
    std::vector<std::vector<u64>> d0(np), d1(np), d2(np);
    for (size_t i = 0; i < np; ++i) {
      const u64 p = c.all[i];
      d0[i].resize(c.n);
      d1[i].resize(c.n);
      d2[i].resize(c.n);
      const u64 *x0 = ea0[i].data(), *x1 = ea1[i].data();
      const u64 *y0 = eb0[i].data(), *y1 = eb1[i].data();
      for (size_t j = 0; j < c.n; ++j) {
        d0[i][j] = num::mul_mod(x0[j], y0[j], p);
        d1[i][j] = num::add_mod(num::mul_mod(x0[j], y1[j], p),
                                num::mul_mod(x1[j], y0[j], p), p);
        d2[i][j] = num::mul_mod(x1[j], y1[j], p);
      }
      c.ntt[i].inverse(d0[i]);
      c.ntt[i].inverse(d1[i]);
      c.ntt[i].inverse(d2[i]);
    }
    Ciphertext out;
    out.c.resize(2);
    out.c[0] = c.scale_round(d0);
    out.c[1] = c.scale_round(d1);
    RnsPoly c2 = c.scale_round(d2);
    auto [r0, r1] = c.keyswitch(c2, relin_->key);
    c.add_inplace(out.c[0], r0);
    c.add_inplace(out.c[1], r1);
    return out;
  }

  Ciphertext payload_mul_plain(const Ciphertext& a, const EncodedPlain& ep) const {
    const Context& c = *ctx_;
    Ciphertext out = a;
    for (auto& comp : out.c) {
      c.ntt_forward_q(comp);
      c.mul_pointwise_ntt(comp, ep.ntt_q);
      c.ntt_inverse_q(comp);
    }
    return out;
  }

  Ciphertext payload_add_plain(const Ciphertext& a, const EncodedPlain& ep) const {
    Ciphertext out = a;
    ctx_->add_inplace(out.c[0], ep.delta_q);
    return out;
  }

  Ciphertext payload_sub_plain(const Ciphertext& a, const EncodedPlain& ep) const {
    Ciphertext out = a;
    ctx_->sub_inplace(out.c[0], ep.delta_q);
    return out;
  }

  Ciphertext payload_rotate_left(const Ciphertext& a, size_t step) const {
    return rotate_steps(a, step, /*left=*/true);
  }

  Ciphertext payload_rotate_right(const Ciphertext& a, size_t step) const {
    return rotate_steps(a, step, /*left=*/false);
  }

  bytes serialize_payload(const Ciphertext& ct) const {
    bytes out;
    out.push_back(static_cast<u8>(ct.c.size()));
    for (const auto& comp : ct.c)
      for (const auto& row : comp.rows)
        for (u64 v : row) put_u64(out, v);
    return out;
  }

  Ciphertext deserialize_payload(ByteReader& r) const {
    const Context& c = *ctx_;
    u8 ncomp = r.get_u8();
    require(ncomp == 2, ErrorKind::codec, "ciphertext must have 2 components");
    Ciphertext ct;
    ct.c.resize(ncomp);
    for (auto& comp : ct.c) {
      comp.rows.assign(c.k, std::vector<u64>(c.n));
      for (auto& row : comp.rows)
        for (auto& v : row) {
          v = r.get_u64();
          require(v < (1ull << 62), ErrorKind::codec, "residue out of range");
        }
      for (size_t i = 0; i < c.k; ++i)
        for (u64 v : comp.rows[i])
          require(v < c.q[i], ErrorKind::codec, "residue exceeds modulus");
    }
    return ct;
  }

  mutable he::OpCounters counters;

 private:
  Ciphertext apply_galois(const Ciphertext& a, u32 gelt) const {
    require(galois_.has_value(), ErrorKind::key, "rotation requires galois keys");
    auto it = galois_->elems.find(gelt);
    require(it != galois_->elems.end(), ErrorKind::key,
            "no galois key for requested rotation step");
    const Context& c = *ctx_;
    RnsPoly c0p = c.automorphism(a.c[0], gelt);
    RnsPoly c1p = c.automorphism(a.c[1], gelt);
    auto [r0, r1] = c.keyswitch(c1p, it->second);
    Ciphertext out;
    out.c.resize(2);
    c.add_inplace(c0p, r0);
    out.c[0] = std::move(c0p);
    out.c[1] = std::move(r1);
    return out;
  }

  bool has_galois_elt(u32 gelt) const {
    return galois_ && galois_->elems.count(gelt) != 0;
  }

  Ciphertext rotate_steps(const Ciphertext& a, size_t step, bool left) const {
    const size_t half = ctx_->half_slots;
    step %= half;
    if (step == 0) return a;
    const size_t n = ctx_->n;
    u32 direct = left ? galois_elt_left(step, n) : galois_elt_right(step, n);
    if (has_galois_elt(direct)) return apply_galois(a, direct);
    // Compose from power-of-two steps.
    Ciphertext cur = a;
    size_t remaining = step;
    for (size_t bit = 0; remaining; ++bit) {
      if (remaining & (1ull << bit)) {
        u32 g = left ? galois_elt_left(1ull << bit, n)
                     : galois_elt_right(1ull << bit, n);
        require(has_galois_elt(g), ErrorKind::key,
                "no composable galois key path for rotation step");
        cur = apply_galois(cur, g);
        remaining &= ~(1ull << bit);
      }
    }
    return cur;
  }

  std::shared_ptr<const Context> ctx_;
  std::optional<RelinKeys> relin_;
  std::optional<GaloisKeys> galois_;
};

// ---- public key material serialization ----

inline void serialize_rns_poly(bytes& out, const RnsPoly& p) {
  put_u32(out, static_cast<u32>(p.rows.size()));
  for (const auto& row : p.rows) {
    put_u32(out, static_cast<u32>(row.size()));
    for (u64 v : row) put_u64(out, v);
  }
}

inline RnsPoly deserialize_rns_poly(ByteReader& r) {
  RnsPoly p;
  u32 nr = r.get_u32();
  require(nr <= 64, ErrorKind::codec, "implausible rns row count");
  p.rows.resize(nr);
  for (auto& row : p.rows) {
    u32 nc = r.get_u32();
    require(nc <= (1u << 20), ErrorKind::codec, "implausible coeff count");
    row.resize(nc);
    for (auto& v : row) v = r.get_u64();
  }
  return p;
}

inline bytes serialize_public_key(const PublicKey& pk) {
  bytes out;
  serialize_rns_poly(out, pk.p0);
  serialize_rns_poly(out, pk.p1);
  return out;
}

inline PublicKey deserialize_public_key(ByteReader& r, u32 fp) {
  PublicKey pk;
  pk.p0 = deserialize_rns_poly(r);
  pk.p1 = deserialize_rns_poly(r);
  pk.fp = fp;
  return pk;
}

inline bytes serialize_kswitch(const KSwitchKey& ksk) {
  bytes out;
  put_u32(out, static_cast<u32>(ksk.digits.size()));
  for (const auto& d : ksk.digits) {
    serialize_rns_poly(out, d[0]);
    serialize_rns_poly(out, d[1]);
  }
  return out;
}

inline KSwitchKey deserialize_kswitch(ByteReader& r) {
  KSwitchKey k;
  u32 nd = r.get_u32();
  require(nd <= 256, ErrorKind::codec, "implausible digit count");
  k.digits.resize(nd);
  for (auto& d : k.digits) {
    d[0] = deserialize_rns_poly(r);
    d[1] = deserialize_rns_poly(r);
  }
  return k;
}

inline bytes serialize_relin_keys(const RelinKeys& rk) {
  return serialize_kswitch(rk.key);
}

inline RelinKeys deserialize_relin_keys(ByteReader& r, u32 fp) {
  return RelinKeys{deserialize_kswitch(r), fp};
}

inline bytes serialize_galois_keys(const GaloisKeys& gk) {
  bytes out;
  put_u32(out, static_cast<u32>(gk.elems.size()));
  for (const auto& [elt, key] : gk.elems) {
    put_u32(out, elt);
    bytes kb = serialize_kswitch(key);
    put_u32(out, static_cast<u32>(kb.size()));
    out.insert(out.end(), kb.begin(), kb.end());
  }
  return out;
}

inline GaloisKeys deserialize_galois_keys(ByteReader& r, u32 fp) {
  GaloisKeys gk;
  gk.fp = fp;
  u32 ne = r.get_u32();
  require(ne <= 4096, ErrorKind::codec, "implausible galois element count");
  for (u32 i = 0; i < ne; ++i) {
    u32 elt = r.get_u32();
    u32 len = r.get_u32();
    bytes kb = r.get_bytes(len);
    ByteReader kr(kb);
    gk.elems.emplace(elt, deserialize_kswitch(kr));
  }
  return gk;
}

}  // namespace hevid::bfv
