// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <type_traits>

#include "hevid/capabilities.hpp"
#include "hevid/chacha_rng.hpp"
#include "hevid/common.hpp"
#include "hevid/he/bfv.hpp"
#include "hevid/he/ref.hpp"
#include "hevid/slots.hpp"

namespace hevid::he {

// Every binary built with the generic operation layer can encrypt and
// evaluate; decryption/keygen/secret-key-I/O tags come only from the
// secret-key header, so a service's --capabilities output distinguishes the
// roles.
namespace {
const caps::Tag cap_evaluate_tag{"he-evaluate"};
}  // namespace

// The unit every algorithm manipulates: an opaque ciphertext over the 4096
// logical slots together with its multiplicative-depth ledger.  Depth is
// tracked here, in one place, for both backends: every multiplication
// (ciphertext-ciphertext and ciphertext-plaintext alike) adds one, additions
// and rotations keep the maximum of their inputs.
template <class B>
struct HomomorphicVector {
  typename B::Payload payload;
  u32 mult_depth = 0;
};

template <class B>
HomomorphicVector<B> encrypt(const B& b, const typename B::PublicKeyT& pk,
                             const SlotVector& s, ChaChaRng& rng) {
  b.counters.encryptions.fetch_add(1, std::memory_order_relaxed);
  return {b.encrypt_payload(s, pk, rng), 0};
}

template <class B>
HomomorphicVector<B> add(const B& b, const HomomorphicVector<B>& x,
                         const HomomorphicVector<B>& y) {
  b.counters.additions.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_add(x.payload, y.payload),
          std::max(x.mult_depth, y.mult_depth)};
}

template <class B>
HomomorphicVector<B> sub(const B& b, const HomomorphicVector<B>& x,
                         const HomomorphicVector<B>& y) {
  b.counters.additions.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_sub(x.payload, y.payload),
          std::max(x.mult_depth, y.mult_depth)};
}

template <class B>
HomomorphicVector<B> negate(const B& b, const HomomorphicVector<B>& x) {
  b.counters.additions.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_negate(x.payload), x.mult_depth};
}

template <class B>
HomomorphicVector<B> mul(const B& b, const HomomorphicVector<B>& x,
                         const HomomorphicVector<B>& y) {
  b.counters.ct_mults.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_mul(x.payload, y.payload),
          std::max(x.mult_depth, y.mult_depth) + 1};
}

template <class B>
HomomorphicVector<B> mul_plain(const B& b, const HomomorphicVector<B>& x,
                               const typename B::EncodedPlainT& p) {
  b.counters.plain_mults.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_mul_plain(x.payload, p), x.mult_depth + 1};
}

template <class B>
HomomorphicVector<B> add_plain(const B& b, const HomomorphicVector<B>& x,
                               const typename B::EncodedPlainT& p) {
  b.counters.additions.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_add_plain(x.payload, p), x.mult_depth};
}

template <class B>
HomomorphicVector<B> sub_plain(const B& b, const HomomorphicVector<B>& x,
                               const typename B::EncodedPlainT& p) {
  b.counters.additions.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_sub_plain(x.payload, p), x.mult_depth};
}

template <class B>
HomomorphicVector<B> rotate_left(const B& b, const HomomorphicVector<B>& x,
                                 size_t step) {
  b.counters.rotations.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_rotate_left(x.payload, step), x.mult_depth};
}

template <class B>
HomomorphicVector<B> rotate_right(const B& b, const HomomorphicVector<B>& x,
                                  size_t step) {
  b.counters.rotations.fetch_add(1, std::memory_order_relaxed);
  return {b.payload_rotate_right(x.payload, step), x.mult_depth};
}

// ---- canonical ciphertext byte format ----
// "HEV1" | params fingerprint | payload length | payload, where the payload
// is the depth ledger followed by the backend's native serialization.

inline constexpr char kCiphertextMagic[4] = {'H', 'E', 'V', '1'};

template <class B>
bytes serialize(const B& b, const HomomorphicVector<B>& x) {
  bytes payload;
  put_u32(payload, x.mult_depth);
  bytes native = b.serialize_payload(x.payload);
  payload.insert(payload.end(), native.begin(), native.end());
  return wrap_blob(kCiphertextMagic, b.fingerprint(), payload);
}

template <class B>
HomomorphicVector<B> deserialize(const B& b, const u8* data, size_t len) {
  auto u = unwrap_blob(kCiphertextMagic, "ciphertext", data, len);
  require(u.fp == b.fingerprint(), ErrorKind::codec,
          "ciphertext was produced under different parameters or backend");
  ByteReader r(u.data, u.len);
  HomomorphicVector<B> out;
  out.mult_depth = r.get_u32();
  require(out.mult_depth <= 64, ErrorKind::codec, "implausible depth ledger");
  out.payload = b.deserialize_payload(r);
  return out;
}

template <class B>
HomomorphicVector<B> deserialize(const B& b, const bytes& blob) {
  return deserialize(b, blob.data(), blob.size());
}

// ---- public / evaluation key files ----
// Same envelope as ciphertexts with magics HPK1 / HRK1 / HGK1.  Secret-key
// files (HSK1) are handled exclusively in he/secret.hpp.

inline constexpr char kPublicKeyMagic[4] = {'H', 'P', 'K', '1'};
inline constexpr char kRelinKeyMagic[4] = {'H', 'R', 'K', '1'};
inline constexpr char kGaloisKeyMagic[4] = {'H', 'G', 'K', '1'};

template <class B>
void save_public_key(const B& b, const typename B::PublicKeyT& pk,
                     const std::string& path) {
  write_file(path, wrap_blob(kPublicKeyMagic, b.fingerprint(),
                             serialize_public_key(pk)));
}

template <class B>
typename B::PublicKeyT load_public_key(const B& b, const std::string& path) {
  bytes file = read_file(path);
  auto u = unwrap_blob(kPublicKeyMagic, "public key", file);
  require(u.fp == b.fingerprint(), ErrorKind::codec,
          "public key was produced under different parameters or backend");
  ByteReader r(u.data, u.len);
  if constexpr (std::is_same_v<B, bfv::Backend>)
    return bfv::deserialize_public_key(r, u.fp);
  else
    return ref::deserialize_public_key(r, u.fp);
}

template <class B>
void save_relin_keys(const B& b, const typename B::RelinKeysT& rk,
                     const std::string& path) {
  write_file(path, wrap_blob(kRelinKeyMagic, b.fingerprint(),
                             serialize_relin_keys(rk)));
}

template <class B>
typename B::RelinKeysT load_relin_keys(const B& b, const std::string& path) {
  bytes file = read_file(path);
  auto u = unwrap_blob(kRelinKeyMagic, "relinearization keys", file);
  require(u.fp == b.fingerprint(), ErrorKind::codec,
          "relinearization keys were produced under different parameters");
  ByteReader r(u.data, u.len);
  if constexpr (std::is_same_v<B, bfv::Backend>)
    return bfv::deserialize_relin_keys(r, u.fp);
  else
    return ref::deserialize_relin_keys(r, u.fp);
}

template <class B>
void save_galois_keys(const B& b, const typename B::GaloisKeysT& gk,
                      const std::string& path) {
  write_file(path, wrap_blob(kGaloisKeyMagic, b.fingerprint(),
                             serialize_galois_keys(gk)));
}

template <class B>
typename B::GaloisKeysT load_galois_keys(const B& b, const std::string& path) {
  bytes file = read_file(path);
  auto u = unwrap_blob(kGaloisKeyMagic, "galois keys", file);
  require(u.fp == b.fingerprint(), ErrorKind::codec,
          "galois keys were produced under different parameters");
  ByteReader r(u.data, u.len);
  if constexpr (std::is_same_v<B, bfv::Backend>)
    return bfv::deserialize_galois_keys(r, u.fp);
  else
    return ref::deserialize_galois_keys(r, u.fp);
}

// Loads the evaluation keys a TPS-style evaluator needs and installs them on
// the backend.  No secret material is touched.
template <class B>
void load_evaluation_keys(B& b, const std::string& relin_path,
                          const std::string& galois_path) {
  b.set_relin_keys(load_relin_keys(b, relin_path));
  b.set_galois_keys(load_galois_keys(b, galois_path));
}

}  // namespace hevid::he
