#include <chrono>
#include <cstdio>

#include "hevid/he/secret.hpp"

using namespace hevid;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

int main() {
  auto t0 = Clock::now();
  HeParams hp = select_params(SecurityLevel::bits128);
  std::printf("T = %llu\n", (unsigned long long)hp.plain_modulus);
  std::printf("coeff primes:");
  for (u64 p : hp.coeff_modulus) std::printf(" %llu", (unsigned long long)p);
  std::printf("\naux primes:");
  for (u64 p : hp.aux_modulus) std::printf(" %llu", (unsigned long long)p);
  std::printf("\n");

  bfv::Backend b(hp);
  std::printf("context built: %.1f ms\n", ms_since(t0));

  ChaChaRng rng = ChaChaRng::from_seed(42);
  t0 = Clock::now();
  auto km = he::keygen(b, rng);
  std::printf("keygen: %.1f ms\n", ms_since(t0));
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);

  SlotVector s(b.slot_count());
  for (size_t i = 0; i < s.size(); ++i) s[i] = (i * 7 + 1) % hp.plain_modulus;

  t0 = Clock::now();
  auto ct = he::encrypt(b, km.pk, s, rng);
  std::printf("encrypt: %.1f ms\n", ms_since(t0));

  t0 = Clock::now();
  SlotVector back = he::decrypt(b, ct, km.sk);
  std::printf("decrypt: %.1f ms\n", ms_since(t0));
  std::printf("roundtrip %s\n", back == s ? "OK" : "MISMATCH");
  std::printf("fresh budget = %d\n", he::noise_budget(b, ct, km.sk));

  SlotVector s2(b.slot_count());
  for (size_t i = 0; i < s2.size(); ++i) s2[i] = (i + 3) % hp.plain_modulus;
  auto ct2 = he::encrypt(b, km.pk, s2, rng);

  t0 = Clock::now();
  auto prod = he::mul(b, ct, ct2);
  std::printf("mul: %.1f ms\n", ms_since(t0));
  SlotVector pd = he::decrypt(b, prod, km.sk);
  bool ok = true;
  for (size_t i = 0; i < pd.size(); ++i) {
    u64 want = (u64)((u128)s[i] * s2[i] % hp.plain_modulus);
    if (pd[i] != want) { ok = false; std::printf("slot %zu: got %llu want %llu\n", i, (unsigned long long)pd[i], (unsigned long long)want); break; }
  }
  std::printf("mul %s, budget = %d, depth = %u\n", ok ? "OK" : "MISMATCH",
              he::noise_budget(b, prod, km.sk), prod.mult_depth);

  t0 = Clock::now();
  auto rot = he::rotate_left(b, ct, 400);
  std::printf("rotate(400): %.1f ms\n", ms_since(t0));
  SlotVector rd = he::decrypt(b, rot, km.sk);
  ok = true;
  for (size_t i = 0; i < rd.size() && ok; ++i)
    if (rd[i] != s[(i + 400) % s.size()]) ok = false;
  std::printf("rotate %s, budget = %d\n", ok ? "OK" : "MISMATCH",
              he::noise_budget(b, rot, km.sk));

  auto blob = he::serialize(b, prod);
  std::printf("ct size = %zu bytes\n", blob.size());
  auto rt = he::deserialize(b, blob);
  std::printf("serialize roundtrip %s\n",
              he::decrypt(b, rt, km.sk) == pd ? "OK" : "MISMATCH");
  return 0;
}
