#include <cstdio>
#include <vector>

#include "hevid/ntt.hpp"
#include "hevid/numtheory.hpp"
#include "hevid/chacha_rng.hpp"

using namespace hevid;

// Naive negacyclic multiply mod p.
static std::vector<u64> naive_mul(const std::vector<u64>& a,
                                  const std::vector<u64>& b, u64 p) {
  size_t n = a.size();
  std::vector<u64> c(n, 0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) {
      u64 prod = num::mul_mod(a[i], b[j], p);
      size_t k = i + j;
      if (k < n)
        c[k] = num::add_mod(c[k], prod, p);
      else
        c[k - n] = num::sub_mod(c[k - n], prod, p);
    }
  return c;
}

int main() {
  // Small case, hand-checkable field.
  {
    u64 p = 97;  // 97 = 1 mod 32, supports n=16? need p ≡ 1 mod 2n → n=16: 32 | 96 ✓
    size_t n = 16;
    num::NttTables t(n, p);
    ChaChaRng rng = ChaChaRng::from_seed(7);
    std::vector<u64> a(n), b(n);
    for (auto& v : a) v = rng.below(p);
    for (auto& v : b) v = rng.below(p);
    auto a2 = a;
    t.forward(a2);
    t.inverse(a2);
    std::printf("small fwd/inv roundtrip: %s\n", a2 == a ? "OK" : "FAIL");

    auto fa = a, fb = b;
    t.forward(fa);
    t.forward(fb);
    std::vector<u64> fc(n);
    for (size_t i = 0; i < n; ++i) fc[i] = num::mul_mod(fa[i], fb[i], p);
    t.inverse(fc);
    auto ref = naive_mul(a, b, p);
    std::printf("small negacyclic mult: %s\n", fc == ref ? "OK" : "FAIL");
  }
  // Large prime, n = 8192 roundtrip.
  {
    u64 p = num::largest_prime_below(55, 16384);
    size_t n = 8192;
    num::NttTables t(n, p);
    ChaChaRng rng = ChaChaRng::from_seed(9);
    std::vector<u64> a(n);
    for (auto& v : a) v = rng.below(p);
    auto a2 = a;
    t.forward(a2);
    t.inverse(a2);
    std::printf("8192 fwd/inv roundtrip: %s\n", a2 == a ? "OK" : "FAIL");
  }
  // Batching-size test over T with tiny n? T = 1 mod 16384 supports n ≤ 8192.
  {
    u64 T = num::largest_prime_below(22, 16384);
    size_t n = 8192;
    num::NttTables t(n, T);
    ChaChaRng rng = ChaChaRng::from_seed(11);
    std::vector<u64> a(n);
    for (auto& v : a) v = rng.below(T);
    auto a2 = a;
    t.forward(a2);
    t.inverse(a2);
    std::printf("8192/T fwd/inv roundtrip: %s\n", a2 == a ? "OK" : "FAIL");
  }
  return 0;
}
