#include <cstdio>

#include "hevid/he/secret.hpp"

using namespace hevid;

int main() {
  HeParams hp = select_params(SecurityLevel::bits128);
  bfv::Backend b(hp);
  const bfv::Context& c = b.ctx();
  ChaChaRng rng = ChaChaRng::from_seed(42);
  auto km = he::keygen(b, rng);

  SlotVector s(c.half_slots);
  for (size_t i = 0; i < s.size(); ++i) s[i] = (i * 7 + 1) % c.t;
  std::vector<u64> msg = c.encode_t(s);

  // Stage 0: encode/decode roundtrip over T.
  {
    SlotVector back = c.decode_t(msg);
    std::printf("stage0 encode/decode: %s\n", back == s ? "OK" : "FAIL");
  }

  // Stage A: trivial ciphertext (delta*m, 0).
  {
    bfv::Ciphertext ct;
    ct.c.resize(2);
    ct.c[0] = c.zero_poly();
    ct.c[1] = c.zero_poly();
    for (size_t i = 0; i < c.k; ++i)
      for (size_t j = 0; j < c.n; ++j)
        ct.c[0].rows[i][j] = bfv::mul_const(msg[j], c.delta_mod_q[i], c.q[i]);
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, ct, km.sk, &out);
    std::printf("stageA trivial ct: budget=%d decode=%s\n", budget,
                c.decode_t(out) == s ? "OK" : "FAIL");
  }

  // Stage B: symmetric noiseless ciphertext (delta*m - a*s, a).
  {
    bfv::RnsPoly a = c.sample_uniform_ntt(rng);  // NTT form
    bfv::RnsPoly as = a;
    c.mul_pointwise_ntt(as, km.sk.ntt_rows);
    c.ntt_inverse_q(as);
    bfv::RnsPoly a_coeff = a;
    c.ntt_inverse_q(a_coeff);
    bfv::Ciphertext ct;
    ct.c.resize(2);
    ct.c[0] = c.zero_poly();
    for (size_t i = 0; i < c.k; ++i)
      for (size_t j = 0; j < c.n; ++j)
        ct.c[0].rows[i][j] = num::sub_mod(
            bfv::mul_const(msg[j], c.delta_mod_q[i], c.q[i]), as.rows[i][j],
            c.q[i]);
    ct.c[1] = a_coeff;
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, ct, km.sk, &out);
    std::printf("stageB symmetric ct: budget=%d decode=%s\n", budget,
                c.decode_t(out) == s ? "OK" : "FAIL");
  }

  // Stage C: public key consistency: phase of (p0, p1) should be -e (small).
  {
    bfv::Ciphertext ct;
    ct.c.resize(2);
    bfv::RnsPoly p0 = km.pk.p0;
    c.ntt_inverse_q(p0);
    bfv::RnsPoly p1 = km.pk.p1;
    c.ntt_inverse_q(p1);
    ct.c[0] = p0;
    ct.c[1] = p1;
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, ct, km.sk, &out);
    bool zero = true;
    for (u64 v : out)
      if (v != 0) zero = false;
    std::printf("stageC pk phase: budget=%d msg_zero=%s\n", budget,
                zero ? "OK" : "FAIL");
  }

  // Stage D: full public-key encryption.
  {
    auto ct = b.encrypt_payload(s, km.pk, rng);
    std::vector<u64> out;
    int budget = he::detail::phase_decode(c, ct, km.sk, &out);
    std::printf("stageD pk encrypt: budget=%d decode=%s\n", budget,
                c.decode_t(out) == s ? "OK" : "FAIL");
  }
  return 0;
}
