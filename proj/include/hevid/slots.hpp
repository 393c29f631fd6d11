// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "hevid/common.hpp"

namespace hevid {

// Dense row of plaintext slots.  Values are residues mod the plaintext
// modulus T of the active parameter set; the encoders are responsible for
// reduction.  The logical row is the first batching row of the underlying
// scheme; its length is degree/2.
class SlotVector {
 public:
  SlotVector() = default;
  explicit SlotVector(size_t n, u64 fill = 0) : v_(n, fill) {}

  static SlotVector constant(size_t n, u64 value) { return SlotVector(n, value); }

  // 1s on [begin, end), 0 elsewhere.
  static SlotVector window(size_t n, size_t begin, size_t end, u64 value = 1) {
    SlotVector s(n);
    for (size_t i = begin; i < end && i < n; ++i) s.v_[i] = value;
    return s;
  }

  size_t size() const { return v_.size(); }
  u64& operator[](size_t i) { return v_[i]; }
  u64 operator[](size_t i) const { return v_[i]; }
  const std::vector<u64>& data() const { return v_; }
  std::vector<u64>& data() { return v_; }

  friend bool operator==(const SlotVector&, const SlotVector&) = default;

 private:
  std::vector<u64> v_;
};

}  // namespace hevid
