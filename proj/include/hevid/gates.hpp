// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Homomorphic Boolean gates over binary slot vectors.  Inputs are expected
// to hold only 0/1 values; the arithmetic is well-defined regardless, but
// the Boolean reading applies only to binary inputs.  NOT is the affine map
// 1 - v realized as (T-1)*v + 1 with both constants applied as plaintexts,
// AND is the slotwise product, OR and XOR are composed from those two:
//   OR  = NOT(NOT a AND NOT b)            (adds up to 3 to mult_depth)
//   XOR = (a OR b) AND NOT(a AND b)       (adds up to 4 to mult_depth)

#include "hevid/he/ops.hpp"
#include "hevid/slots.hpp"

namespace hevid::gates {

// Caches the two plaintext constants every gate needs.
template <class B>
struct GateCtx {
  explicit GateCtx(const B& b)
      : ones(b.encode_plain_const(1)),
        minus_ones(b.encode_plain_const(b.plain_modulus() - 1)) {}

  typename B::EncodedPlainT ones;        // all 1
  typename B::EncodedPlainT minus_ones;  // all T-1 (= -1 mod T)
};

template <class B>
he::HomomorphicVector<B> gate_not(const B& b, const GateCtx<B>& g,
                                  const he::HomomorphicVector<B>& v) {
  return he::add_plain(b, he::mul_plain(b, v, g.minus_ones), g.ones);
}

template <class B>
he::HomomorphicVector<B> gate_and(const B& b, const GateCtx<B>&,
                                  const he::HomomorphicVector<B>& a,
                                  const he::HomomorphicVector<B>& x) {
  return he::mul(b, a, x);
}

template <class B>
he::HomomorphicVector<B> gate_or(const B& b, const GateCtx<B>& g,
                                 const he::HomomorphicVector<B>& a,
                                 const he::HomomorphicVector<B>& x) {
  return gate_not(b, g, he::mul(b, gate_not(b, g, a), gate_not(b, g, x)));
}

template <class B>
he::HomomorphicVector<B> gate_xor(const B& b, const GateCtx<B>& g,
                                  const he::HomomorphicVector<B>& a,
                                  const he::HomomorphicVector<B>& x) {
  return he::mul(b, gate_or(b, g, a, x),
                 gate_not(b, g, he::mul(b, a, x)));
}

}  // namespace hevid::gates
