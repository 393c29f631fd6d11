// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hevid/chacha_rng.hpp"
#include "hevid/common.hpp"
#include "hevid/he/counters.hpp"
#include "hevid/params.hpp"
#include "hevid/slots.hpp"

namespace hevid::ref {

// Plaintext reference backend.  Payloads hold the slot values directly and
// every operation is the exact mod-t slot semantics of the encrypted
// backend, so circuit outputs agree bit for bit.  Key material is opaque
// tokens; operations still demand the same keys the encrypted backend would,
// so key-confinement behaviour is identical across backends.
struct RefPayload {
  SlotVector slots{0};
};

struct RefPublicKey {
  u32 fp = 0;
};
struct RefSecretKey {
  u32 fp = 0;
};
struct RefRelinKeys {
  u32 fp = 0;
};
struct RefGaloisKeys {
  u32 fp = 0;
};

class Backend {
 public:
  using Payload = RefPayload;
  using PublicKeyT = RefPublicKey;
  using SecretKeyT = RefSecretKey;
  using RelinKeysT = RefRelinKeys;
  using GaloisKeysT = RefGaloisKeys;
  using EncodedPlainT = SlotVector;

  static constexpr const char* name() { return "ref"; }

  explicit Backend(const HeParams& params)
      : params_(params),
        slots_(params.slot_count()),
        t_(params.plain_modulus),
        fp_(params.fingerprint("ref")) {
    validate(params_);
  }

  const HeParams& params() const { return params_; }
  size_t slot_count() const { return slots_; }
  u64 plain_modulus() const { return t_; }
  u32 fingerprint() const { return fp_; }

  void set_relin_keys(RefRelinKeys rk) {
    require(rk.fp == fp_, ErrorKind::params,
            "relinearization keys from different parameters");
    relin_ = rk;
  }
  void set_galois_keys(RefGaloisKeys gk) {
    require(gk.fp == fp_, ErrorKind::params,
            "galois keys from different parameters");
    galois_ = gk;
  }
  bool has_relin_keys() const { return relin_.has_value(); }
  bool has_galois_keys() const { return galois_.has_value(); }

  SlotVector encode_plain(const SlotVector& sv) const {
    require(sv.size() == slots_, ErrorKind::encoding,
            "slot vector length must equal slot count");
    SlotVector out = sv;
    for (size_t i = 0; i < slots_; ++i) out[i] %= t_;
    return out;
  }

  SlotVector encode_plain_const(u64 v) const {
    return SlotVector::constant(slots_, v % t_);
  }

  RefPayload encrypt_payload(const SlotVector& sv, const RefPublicKey& pk,
                             ChaChaRng&) const {
    require(pk.fp == fp_, ErrorKind::params,
            "public key from different parameters");
    return RefPayload{encode_plain(sv)};
  }

  RefPayload payload_add(const RefPayload& a, const RefPayload& b) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = (out.slots[i] + b.slots[i]) % t_;
    return out;
  }

  RefPayload payload_sub(const RefPayload& a, const RefPayload& b) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = (out.slots[i] + t_ - b.slots[i]) % t_;
    return out;
  }

  RefPayload payload_negate(const RefPayload& a) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = out.slots[i] ? t_ - out.slots[i] : 0;
    return out;
  }

  RefPayload payload_mul(const RefPayload& a, const RefPayload& b) const {
    require(relin_.has_value(), ErrorKind::key,
            "ciphertext multiply requires relinearization keys");
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] =
          static_cast<u64>(static_cast<u128>(out.slots[i]) * b.slots[i] % t_);
    return out;
  }

  RefPayload payload_mul_plain(const RefPayload& a, const SlotVector& ep) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] =
          static_cast<u64>(static_cast<u128>(out.slots[i]) * (ep[i] % t_) % t_);
    return out;
  }

  RefPayload payload_add_plain(const RefPayload& a, const SlotVector& ep) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = (out.slots[i] + ep[i] % t_) % t_;
    return out;
  }

  RefPayload payload_sub_plain(const RefPayload& a, const SlotVector& ep) const {
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = (out.slots[i] + t_ - ep[i] % t_) % t_;
    return out;
  }

  RefPayload payload_rotate_left(const RefPayload& a, size_t step) const {
    require(galois_.has_value(), ErrorKind::key, "rotation requires galois keys");
    step %= slots_;
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[i] = a.slots[(i + step) % slots_];
    return out;
  }

  RefPayload payload_rotate_right(const RefPayload& a, size_t step) const {
    require(galois_.has_value(), ErrorKind::key, "rotation requires galois keys");
    step %= slots_;
    RefPayload out = a;
    for (size_t i = 0; i < slots_; ++i)
      out.slots[(i + step) % slots_] = a.slots[i];
    return out;
  }

  bytes serialize_payload(const RefPayload& p) const {
    bytes out;
    out.push_back(1);  // component count placeholder, mirrors wire shape
    put_u32(out, static_cast<u32>(p.slots.size()));
    for (size_t i = 0; i < p.slots.size(); ++i) put_u64(out, p.slots[i]);
    return out;
  }

  RefPayload deserialize_payload(ByteReader& r) const {
    u8 ncomp = r.get_u8();
    require(ncomp == 1, ErrorKind::codec, "reference payload has one component");
    u32 count = r.get_u32();
    require(count == slots_, ErrorKind::codec, "slot count mismatch");
    RefPayload p{SlotVector(count)};
    for (u32 i = 0; i < count; ++i) {
      p.slots[i] = r.get_u64();
      require(p.slots[i] < t_, ErrorKind::codec, "slot value exceeds modulus");
    }
    return p;
  }

  mutable he::OpCounters counters;

 private:
  HeParams params_;
  size_t slots_;
  u64 t_;
  u32 fp_;
  std::optional<RefRelinKeys> relin_;
  std::optional<RefGaloisKeys> galois_;
};

// Reference key material serialization: fingerprint-bearing tokens.
inline bytes serialize_public_key(const RefPublicKey& pk) {
  bytes out;
  put_u32(out, pk.fp);
  return out;
}
inline RefPublicKey deserialize_public_key(ByteReader& r, u32 fp) {
  u32 stored = r.get_u32();
  require(stored == fp, ErrorKind::codec, "reference key fingerprint mismatch");
  return RefPublicKey{fp};
}
inline bytes serialize_relin_keys(const RefRelinKeys& rk) {
  bytes out;
  put_u32(out, rk.fp);
  return out;
}
inline RefRelinKeys deserialize_relin_keys(ByteReader& r, u32 fp) {
  u32 stored = r.get_u32();
  require(stored == fp, ErrorKind::codec, "reference key fingerprint mismatch");
  return RefRelinKeys{fp};
}
inline bytes serialize_galois_keys(const RefGaloisKeys& gk) {
  bytes out;
  put_u32(out, gk.fp);
  return out;
}
inline RefGaloisKeys deserialize_galois_keys(ByteReader& r, u32 fp) {
  u32 stored = r.get_u32();
  require(stored == fp, ErrorKind::codec, "reference key fingerprint mismatch");
  return RefGaloisKeys{fp};
}

}  // namespace hevid::ref
