#include <cstdio>

#include "hevid/he/secret.hpp"
#include "hevid/queries.hpp"

using namespace hevid;

int main(int argc, char** argv) {
  SecurityLevel lvl = argc > 1 && argv[1][0] == '9'
                          ? SecurityLevel::bits192
                          : SecurityLevel::bits128;
  HeParams hp = select_params(lvl);
  bfv::Backend b(hp);
  ChaChaRng rng = ChaChaRng::from_seed(2024);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);
  qry::QueryConfig cfg;
  qry::EvalCache<bfv::Backend> cache(b, cfg);
  const auto& g = cache.gate_ctx;

  enc::UserRecord rec;
  rec.name = "A";
  rec.gender = "F";
  rec.pincode = "560100";
  rec.phone = "1";
  rec.email = "a@b.c";
  rec.dob = cal::Date{1999, 4, 6};
  rec.fingercode.assign(640, 1.0);

  auto demo = he::encrypt(b, km.pk, enc::encode_demographic(rec, hp.plain_modulus), rng);
  auto qv = enc::encode_dob_query(cal::Date{2017, 4, 6}, 0);
  auto yp = he::encrypt(b, km.pk, qv.y_prime, rng);
  auto dp = he::encrypt(b, km.pk, qv.d_prime, rng);

  auto NB = [&](const char* name, const he::HomomorphicVector<bfv::Backend>& v) {
    std::printf("%-12s depth=%u budget=%d\n", name, v.mult_depth,
                he::noise_budget(b, v, km.sk));
  };

  NB("demo", demo);
  auto y = he::rotate_left(b, he::mul_plain(b, demo, cache.year_mask),
                           enc::kYearRegionStart);
  NB("y", y);
  auto d = he::rotate_left(b, he::mul_plain(b, demo, cache.day_mask),
                           enc::kDayRegionStart);
  auto ny = he::add_plain(
      b,
      he::rotate_left(b, he::mul_plain(b, demo, cache.minus_year_mask),
                      enc::kYearRegionStart),
      g.ones);
  NB("ny", ny);
  auto nyp = gates::gate_not(b, g, yp);
  NB("ny'", nyp);
  auto nor2 = he::mul(b, ny, nyp);
  NB("nor2", nor2);
  auto either = gates::gate_not(b, g, nor2);
  NB("either", either);
  auto both = he::mul(b, y, yp);
  auto nboth = gates::gate_not(b, g, both);
  NB("nboth", nboth);
  auto xr = he::mul(b, either, nboth);
  NB("xor", xr);
  auto temp1 = he::mul(b, y, xr);
  NB("temp1", temp1);
  auto z = he::mul(b, xr, yp);
  NB("z", z);
  auto nz = gates::gate_not(b, g, z);
  NB("nz", nz);
  auto delta = he::sub(b, dp, d);
  NB("delta", delta);
  auto temp2 = he::mul(b, delta, nz);
  NB("temp2", temp2);
  auto out = he::add(b, temp1, he::rotate_right(b, temp2, 400));
  auto fin = he::add_plain(b, out, cache.dob_tail_ones);
  NB("out", fin);

  // Verify correctness of the verdict itself.
  auto verdict = qry::cs_extended_decrypt(b, fin, km.sk, cfg);
  std::printf("verdict=%s (expect pass)\n",
              verdict == qry::Verdict::pass ? "pass" : "fail");
  return 0;
}
