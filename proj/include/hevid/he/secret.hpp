// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Secret-key operations: key generation, decryption, noise measurement and
// secret-key file I/O.  This header is included ONLY by the credential
// service and by tests/benchmarks.  Service binaries that must not be able
// to decrypt (token-provider service, service-provider client) do not
// include it, and the capability registry below makes that checkable from
// the outside: every binary reports the capabilities its linked code
// registered, and "he-decrypt" / "secret-key-io" / "keygen" appear only via
// this header.

#include <climits>
#include <functional>
#include <string>

#include "hevid/capabilities.hpp"
#include "hevid/chacha_rng.hpp"
#include "hevid/common.hpp"
#include "hevid/he/ops.hpp"

namespace hevid::he {

namespace {
const caps::Tag cap_keygen_tag{"keygen"};
const caps::Tag cap_decrypt_tag{"he-decrypt"};
const caps::Tag cap_skio_tag{"secret-key-io"};
}  // namespace

inline constexpr char kSecretKeyMagic[4] = {'H', 'S', 'K', '1'};

// Public, secret, relinearization and rotation keys for one parameter set.
template <class B>
struct KeyMaterial {
  typename B::PublicKeyT pk;
  typename B::SecretKeyT sk;
  typename B::RelinKeysT relin;
  typename B::GaloisKeysT galois;
};

// ---- real backend ----

namespace detail {

// One key-switching key encrypting `target_ntt` (a polynomial in NTT form
// over the ciphertext basis) under s, one entry per decomposition digit.
inline bfv::KSwitchKey make_kswitch_key(const bfv::Context& c,
                                        const bfv::RnsPoly& s_ntt,
                                        const bfv::RnsPoly& target_ntt,
                                        ChaChaRng& rng) {
  bfv::KSwitchKey ksk;
  ksk.digits.resize(c.digit_count());
  for (size_t i = 0; i < c.k; ++i) {
    for (int l = 0; l < bfv::Context::kSubDigits; ++l) {
      bfv::RnsPoly a = c.sample_uniform_ntt(rng);
      bfv::RnsPoly e = c.lift_small(c.sample_cbd(rng));
      c.ntt_forward_q(e);
      // k0 = -(a*s + e) + gadget * target, where the gadget element is
      // 2^(l*w_i) at prime i and zero at every other prime.
      bfv::RnsPoly k0 = a;
      c.mul_pointwise_ntt(k0, s_ntt);
      c.add_inplace(k0, e);
      c.negate_inplace(k0);
      const u64 qi = c.q[i];
      const u64 factor = (1ull << (static_cast<u64>(l) * c.w_bits[i])) % qi;
      for (size_t j = 0; j < c.n; ++j)
        k0.rows[i][j] = num::add_mod(
            k0.rows[i][j], num::mul_mod(factor, target_ntt.rows[i][j], qi), qi);
      ksk.digits[bfv::Context::kSubDigits * i + l] = {std::move(k0),
                                                      std::move(a)};
    }
  }
  return ksk;
}

}  // namespace detail

inline KeyMaterial<bfv::Backend> keygen(const bfv::Backend& b, ChaChaRng& rng) {
  const bfv::Context& c = b.ctx();
  KeyMaterial<bfv::Backend> km;

  km.sk.coeffs = c.sample_ternary(rng);
  km.sk.ntt_rows = c.lift_small(km.sk.coeffs);
  c.ntt_forward_q(km.sk.ntt_rows);
  km.sk.fp = c.fp;

  // pk = (-(a*s + e), a), NTT form.
  bfv::RnsPoly a = c.sample_uniform_ntt(rng);
  bfv::RnsPoly e = c.lift_small(c.sample_cbd(rng));
  c.ntt_forward_q(e);
  bfv::RnsPoly p0 = a;
  c.mul_pointwise_ntt(p0, km.sk.ntt_rows);
  c.add_inplace(p0, e);
  c.negate_inplace(p0);
  km.pk = bfv::PublicKey{std::move(p0), std::move(a), c.fp};

  // Relinearization keys encrypt s^2.
  bfv::RnsPoly s2 = km.sk.ntt_rows;
  c.mul_pointwise_ntt(s2, km.sk.ntt_rows);
  km.relin.key = detail::make_kswitch_key(c, km.sk.ntt_rows, s2, rng);
  km.relin.fp = c.fp;

  // Rotation keys encrypt tau_g(s) for the standard galois element set.
  km.galois.fp = c.fp;
  for (u32 g : bfv::standard_galois_elements(c.n)) {
    std::vector<signed char> sg(c.n);
    const u64 mask = 2 * c.n - 1;
    for (size_t i = 0; i < c.n; ++i) {
      u64 j = (i * g) & mask;
      if (j < c.n)
        sg[j] = km.sk.coeffs[i];
      else
        sg[j - c.n] = static_cast<signed char>(-km.sk.coeffs[i]);
    }
    bfv::RnsPoly sg_ntt = c.lift_small(sg);
    c.ntt_forward_q(sg_ntt);
    km.galois.elems.emplace(
        g, detail::make_kswitch_key(c, km.sk.ntt_rows, sg_ntt, rng));
  }
  return km;
}

namespace detail {

// Shared decrypt/noise core.  Reconstructs the phase c0 + c1*s, rounds each
// coefficient to the nearest multiple of q/t, and reports the remaining
// invariant-noise budget in bits (0 = exhausted, decryption unsafe).
inline int phase_decode(const bfv::Context& c, const bfv::Ciphertext& ct,
                        const bfv::SecretKey& sk, std::vector<u64>* msg_out) {
  require(sk.fp == c.fp, ErrorKind::params,
          "secret key from different parameters");
  require(ct.c.size() == 2, ErrorKind::internal, "ciphertext must be size 2");
  bfv::RnsPoly phase = ct.c[1];
  c.ntt_forward_q(phase);
  c.mul_pointwise_ntt(phase, sk.ntt_rows);
  c.ntt_inverse_q(phase);
  c.add_inplace(phase, ct.c[0]);

  if (msg_out) msg_out->assign(c.n, 0);
  thread_local mpz_class X, W, Y, maxw;
  mpz_set_ui(maxw.get_mpz_t(), 0);
  for (size_t j = 0; j < c.n; ++j) {
    mpz_set_ui(X.get_mpz_t(), 0);
    for (size_t i = 0; i < c.k; ++i)
      mpz_addmul_ui(X.get_mpz_t(), c.crt_q[i].get_mpz_t(), phase.rows[i][j]);
    mpz_mod(X.get_mpz_t(), X.get_mpz_t(), c.q_prod.get_mpz_t());
    // W = t*X mod q, centered: the scaled invariant noise.
    mpz_mul_ui(W.get_mpz_t(), X.get_mpz_t(), c.t);
    if (msg_out) {
      mpz_add(Y.get_mpz_t(), W.get_mpz_t(), c.half_q.get_mpz_t());
      mpz_tdiv_q(Y.get_mpz_t(), Y.get_mpz_t(), c.q_prod.get_mpz_t());
      (*msg_out)[j] = mpz_fdiv_ui(Y.get_mpz_t(), c.t);
    }
    mpz_mod(W.get_mpz_t(), W.get_mpz_t(), c.q_prod.get_mpz_t());
    if (mpz_cmp(W.get_mpz_t(), c.half_q.get_mpz_t()) > 0)
      mpz_sub(W.get_mpz_t(), c.q_prod.get_mpz_t(), W.get_mpz_t());
    if (mpz_cmp(W.get_mpz_t(), maxw.get_mpz_t()) > 0)
      mpz_set(maxw.get_mpz_t(), W.get_mpz_t());
  }
  const size_t qbits = mpz_sizeinbase(c.q_prod.get_mpz_t(), 2);
  const size_t wbits =
      mpz_sgn(maxw.get_mpz_t()) == 0 ? 0 : mpz_sizeinbase(maxw.get_mpz_t(), 2);
  const long budget = static_cast<long>(qbits) - 1 - static_cast<long>(wbits);
  return budget > 0 ? static_cast<int>(budget) : 0;
}

}  // namespace detail

inline SlotVector decrypt(const bfv::Backend& b,
                          const HomomorphicVector<bfv::Backend>& x,
                          const bfv::SecretKey& sk) {
  std::vector<u64> msg;
  int budget = detail::phase_decode(b.ctx(), x.payload, sk, &msg);
  require(budget > 0, ErrorKind::integrity,
          "noise budget exhausted; decryption result would be unreliable");
  return b.ctx().decode_t(std::move(msg));
}

inline int noise_budget(const bfv::Backend& b,
                        const HomomorphicVector<bfv::Backend>& x,
                        const bfv::SecretKey& sk) {
  return detail::phase_decode(b.ctx(), x.payload, sk, nullptr);
}

// ---- reference backend ----

inline KeyMaterial<ref::Backend> keygen(const ref::Backend& b, ChaChaRng& rng) {
  // Key material is an opaque token; consume randomness so call sites remain
  // behaviourally identical across backends.
  rng.next_u64();
  KeyMaterial<ref::Backend> km;
  km.pk.fp = b.fingerprint();
  km.sk.fp = b.fingerprint();
  km.relin.fp = b.fingerprint();
  km.galois.fp = b.fingerprint();
  return km;
}

inline SlotVector decrypt(const ref::Backend& b,
                          const HomomorphicVector<ref::Backend>& x,
                          const ref::RefSecretKey& sk) {
  require(sk.fp == b.fingerprint(), ErrorKind::params,
          "secret key from different parameters");
  return x.payload.slots;
}

// The reference backend has no noise; reports the "infinite" sentinel.
inline int noise_budget(const ref::Backend& b,
                        const HomomorphicVector<ref::Backend>&,
                        const ref::RefSecretKey& sk) {
  require(sk.fp == b.fingerprint(), ErrorKind::params,
          "secret key from different parameters");
  return INT_MAX;
}

// ---- secret key file I/O (audit-logged) ----

using AuditSink = std::function<void(const std::string&)>;

inline bytes secret_key_payload(const bfv::SecretKey& sk) {
  bytes out;
  out.reserve(sk.coeffs.size());
  for (signed char v : sk.coeffs) out.push_back(static_cast<u8>(v + 1));
  return out;
}

inline bytes secret_key_payload(const ref::RefSecretKey& sk) {
  bytes out;
  put_u32(out, sk.fp);
  return out;
}

// Secret keys leave the process only through this call, which records the
// export in the provided audit sink (mandatory, by construction).
template <class B>
void save_secret_key(const B& b, const typename B::SecretKeyT& sk,
                     const std::string& path, const AuditSink& audit) {
  require(static_cast<bool>(audit), ErrorKind::config,
          "secret key export requires an audit sink");
  write_file(path,
             wrap_blob(kSecretKeyMagic, b.fingerprint(), secret_key_payload(sk)));
  audit("secret-key-export path=" + path);
}

template <class B>
typename B::SecretKeyT load_secret_key(const B& b, const std::string& path,
                                       const AuditSink& audit) {
  require(static_cast<bool>(audit), ErrorKind::config,
          "secret key access requires an audit sink");
  bytes file = read_file(path);
  auto u = unwrap_blob(kSecretKeyMagic, "secret key", file);
  require(u.fp == b.fingerprint(), ErrorKind::codec,
          "secret key was produced under different parameters or backend");
  ByteReader r(u.data, u.len);
  typename B::SecretKeyT sk;
  if constexpr (std::is_same_v<B, bfv::Backend>) {
    const bfv::Context& c = b.ctx();
    require(u.len == c.n, ErrorKind::codec, "secret key payload length");
    sk.coeffs.resize(c.n);
    for (size_t i = 0; i < c.n; ++i) {
      u8 v = r.get_u8();
      require(v <= 2, ErrorKind::codec, "secret key coefficient out of range");
      sk.coeffs[i] = static_cast<signed char>(static_cast<int>(v) - 1);
    }
    sk.ntt_rows = c.lift_small(sk.coeffs);
    c.ntt_forward_q(sk.ntt_rows);
    sk.fp = c.fp;
  } else {
    u32 stored = r.get_u32();
    require(stored == b.fingerprint(), ErrorKind::codec,
            "secret key fingerprint mismatch");
    sk.fp = stored;
  }
  audit("secret-key-load path=" + path);
  return sk;
}

}  // namespace hevid::he
