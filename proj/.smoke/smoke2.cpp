#include <chrono>
#include <cstdio>

#include "hevid/he/secret.hpp"
#include "hevid/queries.hpp"

using namespace hevid;
using Clock = std::chrono::steady_clock;
static double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

static enc::UserRecord sample_record() {
  enc::UserRecord r;
  for (int i = 0; i < 16; ++i) r.user_id[i] = static_cast<u8>(i);
  r.name = "Asha Rao";
  r.gender = "F";
  r.pincode = "560100";
  r.phone = "+919812345678";
  r.email = "asha@example.org";
  r.dob = cal::Date{1999, 4, 6};
  r.fingercode.assign(640, 0.0);
  for (size_t i = 0; i < 640; ++i) r.fingercode[i] = double((i * 37) % 256);
  return r;
}

template <class B>
void run(const char* tag) {
  HeParams hp = select_params(SecurityLevel::bits128);
  B b(hp);
  ChaChaRng rng = ChaChaRng::from_seed(2024);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);

  qry::QueryConfig cfg;
  qry::EvalCache<B> cache(b, cfg);
  enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(hp.plain_modulus, cfg.beta);

  enc::UserRecord rec = sample_record();
  auto demo = he::encrypt(b, km.pk, enc::encode_demographic(rec, hp.plain_modulus), rng);
  auto bio = he::encrypt(b, km.pk, enc::encode_fingercode(rec.fingercode, qc), rng);

  std::printf("== %s backend ==\n", tag);

  // Demographic: match and near-miss.
  for (auto [value, expect] :
       {std::pair<const char*, qry::Verdict>{"560100", qry::Verdict::pass},
        {"560101", qry::Verdict::fail}}) {
    auto u = he::encrypt(b, km.pk,
                         enc::encode_field_query(enc::Field::pincode, value), rng);
    auto t0 = Clock::now();
    auto out = qry::tps_demographic_match(b, cache, demo, enc::Field::pincode, u);
    double ms = ms_since(t0);
    auto v = qry::cs_extended_decrypt(b, out, km.sk, cfg);
    std::printf("pincode %-7s -> %s (expect %s) depth=%u budget=%d  %.1f ms\n",
                value, v == qry::Verdict::pass ? "PASS" : "FAIL",
                expect == qry::Verdict::pass ? "PASS" : "FAIL", out.mult_depth,
                he::noise_budget(b, out, km.sk), ms);
  }

  // DoB: the four cases + equality.
  struct DobCase { cal::Date q; int off; const char* label; };
  for (auto dc : {DobCase{{1998, 1, 1}, 0, "case1 y'<y"},
                  DobCase{{1999, 3, 1}, 0, "case2 d'<d"},
                  DobCase{{1999, 4, 6}, 0, "case3 equal"},
                  DobCase{{1999, 11, 30}, 0, "case3 d'>d"},
                  DobCase{{2017, 4, 6}, 0, "case4 y'>y"},
                  DobCase{{2017, 4, 6}, 18, "offset 18y"}}) {
    auto qv = enc::encode_dob_query(dc.q, dc.off);
    auto ype = he::encrypt(b, km.pk, qv.y_prime, rng);
    auto dpe = he::encrypt(b, km.pk, qv.d_prime, rng);
    auto t0 = Clock::now();
    auto out = qry::tps_dob_compare(b, cache, demo, ype, dpe);
    double ms = ms_since(t0);
    auto v = qry::cs_extended_decrypt(b, out, km.sk, cfg);
    auto expect = qry::oracle_dob_after(rec, dc.q, dc.off);
    std::printf("dob %-12s -> %s (expect %s) depth=%u budget=%d  %.1f ms\n",
                dc.label, v == qry::Verdict::pass ? "PASS" : "FAIL",
                expect == qry::Verdict::pass ? "PASS" : "FAIL", out.mult_depth,
                he::noise_budget(b, out, km.sk), ms);
  }

  // Biometric: identical, slightly off, far off.
  {
    auto fc2 = rec.fingercode;
    for (auto [label, tweak] : {std::pair<const char*, double>{"identical", 0.0},
                                {"nearby", 10.0},
                                {"far", 200.0}}) {
      auto q = rec.fingercode;
      for (size_t i = 0; i < 64; ++i)
        q[i] = std::min(255.0, q[i] + tweak);
      auto u = he::encrypt(b, km.pk, enc::encode_fingercode(q, qc), rng);
      auto t0 = Clock::now();
      auto out = qry::tps_biometric_match(b, cache, u, bio);
      double ms = ms_since(t0);
      auto v = qry::cs_extended_decrypt(b, out, km.sk, cfg);
      auto expect = qry::oracle_biometric(rec, q, qc, cfg);
      std::printf("bio %-10s -> %s (expect %s) depth=%u budget=%d  %.1f ms\n",
                  label, v == qry::Verdict::pass ? "PASS" : "FAIL",
                  expect == qry::Verdict::pass ? "PASS" : "FAIL",
                  out.mult_depth, he::noise_budget(b, out, km.sk), ms);
    }
  }
}

int main() {
  run<ref::Backend>("ref");
  run<bfv::Backend>("bfv");
  return 0;
}
