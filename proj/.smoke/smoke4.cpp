#include <cstdio>

#include "hevid/he/secret.hpp"
#include "hevid/queries.hpp"

using namespace hevid;

int main() {
  HeParams hp = select_params(SecurityLevel::bits128);
  bfv::Backend b(hp);
  ChaChaRng rng = ChaChaRng::from_seed(7);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);
  gates::GateCtx<bfv::Backend> g(b);

  const size_t n = b.slot_count();
  const u64 t = b.plain_modulus();
  SlotVector unary(n, 0);
  for (size_t i = 0; i < 117; ++i) unary[i] = 1;
  auto ct = he::encrypt(b, km.pk, unary, rng);

  auto NB = [&](const char* name, const he::HomomorphicVector<bfv::Backend>& v) {
    std::printf("%-24s budget=%d\n", name, he::noise_budget(b, v, km.sk));
  };
  NB("fresh", ct);
  NB("mul_plain(minus_ones)", he::mul_plain(b, ct, g.minus_ones));
  NB("mul_plain(ones)", he::mul_plain(b, ct, g.ones));
  NB("add_plain(ones)", he::add_plain(b, ct, g.ones));
  NB("gate_not", gates::gate_not(b, g, ct));

  // encode of the all-(T-1) vector: check it really is the constant poly.
  auto ep = b.encode_plain(SlotVector(n, t - 1));
  size_t nonzero = 0;
  for (size_t j = 0; j < ep.coeffs_t.size(); ++j)
    if (ep.coeffs_t[j] != 0) ++nonzero;
  std::printf("minus_ones coeffs nonzero=%zu coeff0=%llu (t-1=%llu)\n", nonzero,
              (unsigned long long)ep.coeffs_t[0], (unsigned long long)(t - 1));
  auto ep1 = b.encode_plain(SlotVector(n, 1));
  nonzero = 0;
  for (size_t j = 0; j < ep1.coeffs_t.size(); ++j)
    if (ep1.coeffs_t[j] != 0) ++nonzero;
  std::printf("ones coeffs nonzero=%zu coeff0=%llu\n", nonzero,
              (unsigned long long)ep1.coeffs_t[0]);
  return 0;
}
