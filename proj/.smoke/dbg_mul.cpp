#include <cstdio>

#include "hevid/he/secret.hpp"

using namespace hevid;

int main() {
  HeParams hp = select_params(SecurityLevel::bits128);
  bfv::Backend b(hp);
  const bfv::Context& c = b.ctx();
  ChaChaRng rng = ChaChaRng::from_seed(42);
  auto km = he::keygen(b, rng);

  // Stage 1: lift_to_all exactness on random polys.
  {
    bfv::RnsPoly x = c.zero_poly();
    gmp_randstate_t st;
    gmp_randinit_default(st);
    gmp_randseed_ui(st, 1234);
    std::vector<mpz_class> vals(8);
    for (size_t j = 0; j < 8; ++j) {
      mpz_urandomm(vals[j].get_mpz_t(), st, c.q_prod.get_mpz_t());
      for (size_t i = 0; i < c.k; ++i)
        x.rows[i][j] = mpz_fdiv_ui(vals[j].get_mpz_t(), c.q[i]);
    }
    auto ext = c.lift_to_all(x);
    bool ok = true;
    for (size_t j = 0; j < 8 && ok; ++j)
      for (size_t bi = 0; bi < c.m && ok; ++bi)
        if (ext[c.k + bi][j] != mpz_fdiv_ui(vals[j].get_mpz_t(), c.all[c.k + bi]))
          ok = false;
    std::printf("stage1 lift_to_all: %s\n", ok ? "OK" : "FAIL");
    gmp_randclear(st);
  }

  // Stage 2: scale_round of a lifted poly vs direct GMP computation.
  {
    bfv::RnsPoly x = c.zero_poly();
    gmp_randstate_t st;
    gmp_randinit_default(st);
    gmp_randseed_ui(st, 77);
    std::vector<mpz_class> vals(c.n);
    for (size_t j = 0; j < c.n; ++j) {
      mpz_urandomm(vals[j].get_mpz_t(), st, c.q_prod.get_mpz_t());
      for (size_t i = 0; i < c.k; ++i)
        x.rows[i][j] = mpz_fdiv_ui(vals[j].get_mpz_t(), c.q[i]);
    }
    auto ext = c.lift_to_all(x);
    bfv::RnsPoly out = c.scale_round(ext);
    bool ok = true;
    mpz_class y;
    for (size_t j = 0; j < c.n && ok; ++j) {
      y = vals[j] * static_cast<unsigned long>(c.t);
      y += c.half_q;
      y /= c.q_prod;
      for (size_t i = 0; i < c.k; ++i)
        if (out.rows[i][j] != mpz_fdiv_ui(y.get_mpz_t(), c.q[i])) ok = false;
    }
    std::printf("stage2 scale_round: %s\n", ok ? "OK" : "FAIL");
    gmp_randclear(st);
  }

  // Stage 3: tensor without relinearization; decrypt 3-component phase.
  SlotVector s1(c.half_slots), s2(c.half_slots);
  for (size_t i = 0; i < s1.size(); ++i) {
    s1[i] = (i * 7 + 1) % c.t;
    s2[i] = (i + 3) % c.t;
  }
  auto ct1 = b.encrypt_payload(s1, km.pk, rng);
  auto ct2 = b.encrypt_payload(s2, km.pk, rng);
  bfv::RnsPoly sr0, sr1, sr2;
  {
    auto ea0 = c.lift_to_all(ct1.c[0]);
    auto ea1 = c.lift_to_all(ct1.c[1]);
    auto eb0 = c.lift_to_all(ct2.c[0]);
    auto eb1 = c.lift_to_all(ct2.c[1]);
    const size_t np = c.all.size();
    for (size_t i = 0; i < np; ++i) {
      c.ntt[i].forward(ea0[i]);
      c.ntt[i].forward(ea1[i]);
      c.ntt[i].forward(eb0[i]);
      c.ntt[i].forward(eb1[i]);
    }
    std::vector<std::vector<u64>> d0(np), d1(np), d2(np);
    for (size_t i = 0; i < np; ++i) {
      const u64 p = c.all[i];
      d0[i].resize(c.n);
      d1[i].resize(c.n);
      d2[i].resize(c.n);
      for (size_t j = 0; j < c.n; ++j) {
        d0[i][j] = num::mul_mod(ea0[i][j], eb0[i][j], p);
        d1[i][j] = num::add_mod(num::mul_mod(ea0[i][j], eb1[i][j], p),
                                num::mul_mod(ea1[i][j], eb0[i][j], p), p);
        d2[i][j] = num::mul_mod(ea1[i][j], eb1[i][j], p);
      }
      c.ntt[i].inverse(d0[i]);
      c.ntt[i].inverse(d1[i]);
      c.ntt[i].inverse(d2[i]);
    }
    sr0 = c.scale_round(d0);
    sr1 = c.scale_round(d1);
    sr2 = c.scale_round(d2);
  }
  {
    // phase = sr0 + sr1*s + sr2*s^2
    bfv::RnsPoly s2n = km.sk.ntt_rows;
    c.mul_pointwise_ntt(s2n, km.sk.ntt_rows);
    bfv::RnsPoly p1 = sr1;
    c.ntt_forward_q(p1);
    c.mul_pointwise_ntt(p1, km.sk.ntt_rows);
    c.ntt_inverse_q(p1);
    bfv::RnsPoly p2 = sr2;
    c.ntt_forward_q(p2);
    c.mul_pointwise_ntt(p2, s2n);
    c.ntt_inverse_q(p2);
    bfv::RnsPoly phase = sr0;
    c.add_inplace(phase, p1);
    c.add_inplace(phase, p2);
    bfv::Ciphertext fake;
    fake.c.resize(2);
    fake.c[0] = phase;
    fake.c[1] = c.zero_poly();
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, fake, km.sk, &out);
    SlotVector dec = c.decode_t(out);
    bool ok = true;
    for (size_t i = 0; i < dec.size() && ok; ++i)
      if (dec[i] != (u64)((u128)s1[i] * s2[i] % c.t)) ok = false;
    std::printf("stage3 tensor (no relin): budget=%d decode=%s\n", budget,
                ok ? "OK" : "FAIL");
  }

  // Stage 4: relinearize sr2 via keyswitch and decrypt 2-component result.
  {
    auto [r0, r1] = c.keyswitch(sr2, km.relin.key);
    bfv::Ciphertext ct;
    ct.c.resize(2);
    ct.c[0] = sr0;
    c.add_inplace(ct.c[0], r0);
    ct.c[1] = sr1;
    c.add_inplace(ct.c[1], r1);
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, ct, km.sk, &out);
    SlotVector dec = c.decode_t(out);
    bool ok = true;
    for (size_t i = 0; i < dec.size() && ok; ++i)
      if (dec[i] != (u64)((u128)s1[i] * s2[i] % c.t)) ok = false;
    std::printf("stage4 relin: budget=%d decode=%s\n", budget, ok ? "OK" : "FAIL");
  }
  return 0;
}
