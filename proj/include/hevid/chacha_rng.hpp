// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstring>
#include <random>

#include "hevid/common.hpp"

namespace hevid {

// ChaCha20 keystream generator (RFC 8439 block function) used as the
// project's random source: cryptographic-quality draws for key/noise
// sampling, and deterministic when constructed from an explicit seed, which
// the tests rely on.
class ChaChaRng {
 public:
  // Deterministic stream from a 32-byte key and 12-byte nonce.
  ChaChaRng(const std::array<u8, 32>& key, const std::array<u8, 12>& nonce,
            u32 counter = 0) {
    static const char sigma[17] = "expand 32-byte k";
    for (int i = 0; i < 4; ++i) state_[i] = load32(reinterpret_cast<const u8*>(sigma) + 4 * i);
    for (int i = 0; i < 8; ++i) state_[4 + i] = load32(key.data() + 4 * i);
    state_[12] = counter;
    for (int i = 0; i < 3; ++i) state_[13 + i] = load32(nonce.data() + 4 * i);
    pos_ = sizeof buf_;  // force refill on first draw
  }

  // Convenience: expand two 64-bit words into a deterministic stream.
  static ChaChaRng from_seed(u64 s0, u64 s1 = 0) {
    std::array<u8, 32> key{};
    std::array<u8, 12> nonce{};
    std::memcpy(key.data(), &s0, 8);
    std::memcpy(key.data() + 8, &s1, 8);
    return ChaChaRng(key, nonce);
  }

  // Non-deterministic stream keyed from the OS entropy source.
  static ChaChaRng system() {
    std::random_device rd;
    std::array<u8, 32> key;
    for (size_t i = 0; i < key.size(); i += 4) {
      u32 w = rd();
      std::memcpy(key.data() + i, &w, 4);
    }
    std::array<u8, 12> nonce{};
    u32 w = rd();
    std::memcpy(nonce.data(), &w, 4);
    return ChaChaRng(key, nonce);
  }

  void fill(u8* out, size_t n) {
    while (n) {
      if (pos_ == sizeof buf_) refill();
      size_t take = std::min(n, sizeof buf_ - pos_);
      std::memcpy(out, buf_ + pos_, take);
      pos_ += take;
      out += take;
      n -= take;
    }
  }

  u64 next_u64() {
    u64 v;
    fill(reinterpret_cast<u8*>(&v), 8);
    return v;
  }

  u32 next_u32() {
    u32 v;
    fill(reinterpret_cast<u8*>(&v), 4);
    return v;
  }

  // Uniform draw in [0, bound) by rejection.
  u64 below(u64 bound) {
    require(bound != 0, ErrorKind::internal, "below(0)");
    u64 limit = ~0ull - (~0ull % bound);
    for (;;) {
      u64 v = next_u64();
      if (v < limit) return v % bound;
    }
  }

 private:
  static u32 load32(const u8* p) {
    return static_cast<u32>(p[0]) | static_cast<u32>(p[1]) << 8 |
           static_cast<u32>(p[2]) << 16 | static_cast<u32>(p[3]) << 24;
  }

  static u32 rotl(u32 v, int c) { return (v << c) | (v >> (32 - c)); }

  static void quarter(u32& a, u32& b, u32& c, u32& d) {
    a += b; d ^= a; d = rotl(d, 16);
    c += d; b ^= c; b = rotl(b, 12);
    a += b; d ^= a; d = rotl(d, 8);
    c += d; b ^= c; b = rotl(b, 7);
  }

  void refill() {
    u32 x[16];
    std::memcpy(x, state_, sizeof x);
    for (int round = 0; round < 10; ++round) {
      quarter(x[0], x[4], x[8], x[12]);
      quarter(x[1], x[5], x[9], x[13]);
      quarter(x[2], x[6], x[10], x[14]);
      quarter(x[3], x[7], x[11], x[15]);
      quarter(x[0], x[5], x[10], x[15]);
      quarter(x[1], x[6], x[11], x[12]);
      quarter(x[2], x[7], x[8], x[13]);
      quarter(x[3], x[4], x[9], x[14]);
    }
    for (int i = 0; i < 16; ++i) {
      u32 w = x[i] + state_[i];
      buf_[4 * i + 0] = static_cast<u8>(w);
      buf_[4 * i + 1] = static_cast<u8>(w >> 8);
      buf_[4 * i + 2] = static_cast<u8>(w >> 16);
      buf_[4 * i + 3] = static_cast<u8>(w >> 24);
    }
    ++state_[12];
    require(state_[12] != 0, ErrorKind::internal, "chacha counter wrapped");
    pos_ = 0;
  }

  u32 state_[16];
  u8 buf_[64];
  size_t pos_;
};

}  // namespace hevid
