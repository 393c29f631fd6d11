#include <cstdio>

#include "hevid/proto/records.hpp"
#include "hevid/proto/verdict_service.hpp"

using namespace hevid;

int main() {
  auto params = select_params(SecurityLevel::bits128);
  ref::Backend b(params);
  ChaChaRng rng = ChaChaRng::from_seed(1);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);

  proto::ServiceConfig cfg;
  qry::QueryConfig qc = cfg.query_config();
  AuditLog audit;
  proto::TpsStore store("/tmp/hevid-smoke-store", &audit);
  proto::TpsService<ref::Backend> svc(b, qc, store, audit);
  proto::VerdictService<ref::Backend> vs(b, km.sk, qc, audit);
  proto::VerdictRouter router(audit);

  enc::UserRecord r;
  r.user_id = proto::user_from_hex("000102030405060708090a0b0c0d0e0f");
  r.name = "Alice";
  r.gender = "F";
  r.pincode = "560100";
  r.phone = "5551234";
  r.email = "a@b.c";
  r.dob = cal::Date{1999, 4, 6};
  r.fingercode.assign(enc::kFingercodeLen, 10.0);

  auto quant = enc::QuantizationConfig::derive(b.plain_modulus(), cfg.beta);
  bytes demo = he::serialize(
      b, he::encrypt(b, km.pk, enc::encode_demographic(r, b.plain_modulus()), rng));
  bytes bio = he::serialize(
      b, he::encrypt(b, km.pk, enc::encode_fingercode(r.fingercode, quant), rng));
  auto enroll_out = svc.handle(proto::make_enroll(r.user_id, demo, bio));
  auto st = proto::parse_status(enroll_out.reply);
  std::printf("enroll status=%d msg=%s\n", st.code, st.message.c_str());
  if (st.code != 0) return 2;

  int fails = 0;
  auto try_kind = [&](proto::QuerySpec qs, bool expect_pass) {
    auto payloads = proto::build_query_payloads(b, km.pk, qs, cfg.beta, rng);
    auto qout =
        svc.handle(proto::make_query(rng.next_u64(), qs.user_id, qs.kind, payloads));
    if (proto::parse_status(qout.reply).code != 0 || !qout.forward) {
      std::printf("kind %s: query rejected: %s\n", qry::kind_label(qs.kind),
                  proto::parse_status(qout.reply).message.c_str());
      ++fails;
      return;
    }
    auto vi = proto::parse_verdict(vs.to_verdict(*qout.forward));
    std::printf("kind %s: pass=%d expect=%d\n", qry::kind_label(qs.kind),
                (int)vi.pass, (int)expect_pass);
    if (vi.pass != expect_pass) ++fails;
  };

  proto::QuerySpec qs;
  qs.user_id = r.user_id;
  qs.kind = qry::QueryKind::name_match;
  qs.value = "Alice";
  try_kind(qs, true);
  qs.value = "Alicf";
  try_kind(qs, false);
  qs.kind = qry::QueryKind::dob_after;
  qs.value.clear();
  qs.date = cal::Date{2005, 1, 1};
  try_kind(qs, true);
  qs.date = cal::Date{1990, 1, 1};
  try_kind(qs, false);
  qs.kind = qry::QueryKind::biometric_match;
  qs.fingercode = r.fingercode;
  try_kind(qs, true);
  qs.fingercode.assign(enc::kFingercodeLen, 200.0);
  try_kind(qs, false);

  // not-enrolled path
  proto::QuerySpec miss = qs;
  miss.user_id = proto::user_from_hex("ffffffffffffffffffffffffffffffff");
  auto payloads = proto::build_query_payloads(b, km.pk, miss, cfg.beta, rng);
  auto qout = svc.handle(proto::make_query(99, miss.user_id, miss.kind, payloads));
  if (!qout.forward || !qout.forward->payloads.empty()) {
    std::printf("not-found path wrong\n");
    ++fails;
  } else {
    auto vi = proto::parse_verdict(vs.to_verdict(*qout.forward));
    std::printf("not-found: pass=%d reason=%d\n", (int)vi.pass, (int)vi.reason);
    if (vi.pass || vi.reason != proto::Reason::user_not_found) ++fails;
  }

  // records JSONL roundtrip
  proto::write_records_jsonl("/tmp/hevid-smoke-records.jsonl", {r});
  auto back = proto::parse_records_jsonl("/tmp/hevid-smoke-records.jsonl");
  if (back.size() != 1 || back[0].name != r.name || !(back[0].dob == r.dob) ||
      back[0].fingercode != r.fingercode) {
    std::printf("records roundtrip wrong\n");
    ++fails;
  }

  std::printf("fails=%d\n", fails);
  return fails == 0 ? 0 : 9;
}
