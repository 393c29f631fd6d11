// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "hevid/common.hpp"
#include "hevid/numtheory.hpp"

namespace hevid {

enum class SecurityLevel { bits128 = 128, bits192 = 192, bits256 = 256 };

inline SecurityLevel security_from_int(int bits) {
  switch (bits) {
    case 128: return SecurityLevel::bits128;
    case 192: return SecurityLevel::bits192;
    case 256: return SecurityLevel::bits256;
    default: fail(ErrorKind::config, "security level must be 128, 192 or 256");
  }
}

// Scheme parameters shared by both backend implementations.  The plaintext
// space is Z_T batched into two rows of degree/2 slots; the library works in
// the first row and keeps the second one zero.
struct HeParams {
  size_t degree = 0;          // ring degree N (power of two)
  u64 plain_modulus = 0;      // T, prime, T = 1 (mod 2N)
  SecurityLevel security = SecurityLevel::bits128;
  std::vector<u64> coeff_modulus;  // ciphertext primes q_i, each = 1 (mod 2N)
  std::vector<u64> aux_modulus;    // extension primes for multiplication

  size_t slot_count() const { return degree / 2; }

  std::string canonical_string(std::string_view backend_tag) const {
    std::string s = "hevid/v1;backend=";
    s += backend_tag;
    s += ";n=" + std::to_string(degree);
    s += ";t=" + std::to_string(plain_modulus);
    s += ";sec=" + std::to_string(static_cast<int>(security));
    s += ";q=";
    for (u64 p : coeff_modulus) s += std::to_string(p) + ",";
    return s;
  }

  // 32-bit fingerprint stamped into every serialized artifact so blobs from
  // different parameter sets or backends cannot be mixed up silently.
  u32 fingerprint(std::string_view backend_tag) const {
    return fnv1a32(canonical_string(backend_tag));
  }
};

inline void validate(const HeParams& p) {
  require(p.degree >= 16 && (p.degree & (p.degree - 1)) == 0,
          ErrorKind::params, "degree must be a power of two >= 16");
  u64 step = 2 * p.degree;
  require(num::is_prime(p.plain_modulus) && p.plain_modulus % step == 1,
          ErrorKind::params, "plain modulus must be prime and 1 mod 2N");
  require(!p.coeff_modulus.empty(), ErrorKind::params, "empty coeff modulus");
  std::vector<u64> all = p.coeff_modulus;
  all.insert(all.end(), p.aux_modulus.begin(), p.aux_modulus.end());
  for (size_t i = 0; i < all.size(); ++i) {
    require(num::is_prime(all[i]) && all[i] % step == 1 && all[i] < (1ull << 62),
            ErrorKind::params, "coeff/aux primes must be ntt primes < 2^62");
    for (size_t j = i + 1; j < all.size(); ++j)
      require(all[i] != all[j], ErrorKind::params, "duplicate modulus prime");
    require(all[i] != p.plain_modulus, ErrorKind::params,
            "modulus prime equal to plain modulus");
  }
}

// Standard parameter sets at ring degree 8192.  The ciphertext modulus stays
// within the homomorphic-encryption standard's bound for a ternary secret at
// the requested classical security level (218 / 152 / 118 bits).
inline HeParams select_params(SecurityLevel sec) {
  const size_t degree = 8192;
  const u64 step = 2 * degree;

  HeParams p;
  p.degree = degree;
  p.security = sec;
  // Largest 22-bit prime supporting batching at this degree.
  p.plain_modulus = num::largest_prime_below(22, step);

  std::vector<int> bits;
  switch (sec) {
    case SecurityLevel::bits128: bits = {55, 55, 54, 54}; break;  // 218
    case SecurityLevel::bits192: bits = {51, 51, 50}; break;      // 152
    case SecurityLevel::bits256: bits = {40, 39, 39}; break;      // 118
  }
  std::map<int, size_t> want;
  for (int b : bits) ++want[b];
  std::map<int, std::vector<u64>> found;
  for (auto& [b, count] : want) found[b] = num::primes_below(b, step, count);
  for (int b : bits) {
    p.coeff_modulus.push_back(found[b].front());
    found[b].erase(found[b].begin());
  }

  // Extension basis for the multiply: product(aux) must exceed N * q / 2 so
  // the integer tensor of two centered ciphertexts is represented exactly.
  int qbits = 0;
  for (int b : bits) qbits += b;
  size_t aux_count = static_cast<size_t>((qbits + 13 + 58) / 59);
  p.aux_modulus = num::primes_below(59, step, aux_count);

  validate(p);
  return p;
}

}  // namespace hevid
