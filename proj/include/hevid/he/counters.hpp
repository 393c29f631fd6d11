// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>

#include "hevid/common.hpp"

namespace hevid::he {

// Operation tally kept by each backend instance.  The generic operation
// layer increments these; the benchmark reads them to report per-query
// circuit shapes (multiplies, rotations, additions) alongside timings.
struct OpCounters {
  std::atomic<u64> ct_mults{0};
  std::atomic<u64> plain_mults{0};
  std::atomic<u64> additions{0};  // ct+ct, ct-ct and plaintext add/sub
  std::atomic<u64> rotations{0};
  std::atomic<u64> encryptions{0};

  void reset() {
    ct_mults = 0;
    plain_mults = 0;
    additions = 0;
    rotations = 0;
    encryptions = 0;
  }

  struct Snapshot {
    u64 ct_mults = 0, plain_mults = 0, additions = 0, rotations = 0,
        encryptions = 0;
    friend bool operator==(const Snapshot&, const Snapshot&) = default;
  };

  Snapshot snapshot() const {
    return {ct_mults.load(), plain_mults.load(), additions.load(),
            rotations.load(), encryptions.load()};
  }
};

}  // namespace hevid::he
