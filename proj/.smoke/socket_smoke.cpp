#include <cstdio>

#include "hevid/proto/records.hpp"
#include "hevid/proto/verdict_service.hpp"

using namespace hevid;

int main() {
  auto params = select_params(SecurityLevel::bits128);
  ref::Backend b(params);
  ChaChaRng rng = ChaChaRng::from_seed(42);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);

  proto::ServiceConfig cfg;
  cfg.timeout_ms = 10000;
  qry::QueryConfig qc = cfg.query_config();
  AuditLog tps_audit, cs_audit;
  proto::TpsStore store("/tmp/hevid-smoke-store2", &tps_audit);
  proto::TpsService<ref::Backend> tps_svc(b, qc, store, tps_audit);
  proto::VerdictService<ref::Backend> cs_svc(b, km.sk, qc, cs_audit);
  proto::VerdictRouter router(cs_audit);

  // Ephemeral ports: bind to port 0, read back.
  proto::StreamServer cs_server(
      proto::net::Addr{"127.0.0.1", 0},
      proto::cs_conn_handler(cs_svc, router, cs_audit, cfg.timeout_ms,
                             std::chrono::milliseconds(8000)));
  cfg.cs_address = "127.0.0.1:" + std::to_string(cs_server.port());
  proto::StreamServer tps_server(
      proto::net::Addr{"127.0.0.1", 0},
      proto::tps_conn_handler(tps_svc, proto::net::parse_address(cfg.cs_address),
                              cfg.timeout_ms, tps_audit));
  cfg.tps_address = "127.0.0.1:" + std::to_string(tps_server.port());
  std::printf("tps on %s, cs on %s\n", cfg.tps_address.c_str(),
              cfg.cs_address.c_str());

  enc::UserRecord r;
  r.user_id = proto::user_from_hex("000102030405060708090a0b0c0d0e0f");
  r.name = "Alice";
  r.gender = "F";
  r.pincode = "560100";
  r.phone = "5551234";
  r.email = "a@b.c";
  r.dob = cal::Date{1999, 4, 6};
  r.fingercode.assign(enc::kFingercodeLen, 10.0);

  proto::enroll_records(b, km.pk, cfg, {r}, rng);
  std::printf("enrolled, store count=%zu\n", store.count());

  int fails = 0;
  auto ask = [&](proto::QuerySpec qs, bool expect_pass) {
    auto res = proto::run_query(b, km.pk, cfg, qs, rng);
    bool pass = res.verdict == qry::Verdict::pass;
    std::printf("kind %s: pass=%d expect=%d reason=%d\n",
                qry::kind_label(qs.kind), (int)pass, (int)expect_pass,
                (int)res.reason);
    if (pass != expect_pass) ++fails;
    return res;
  };

  proto::QuerySpec qs;
  qs.user_id = r.user_id;
  qs.kind = qry::QueryKind::name_match;
  qs.value = "Alice";
  ask(qs, true);
  qs.kind = qry::QueryKind::pincode_match;
  qs.value = "560101";
  ask(qs, false);
  qs.kind = qry::QueryKind::dob_after;
  qs.value.clear();
  qs.date = cal::Date{2005, 6, 15};
  ask(qs, true);
  qs.kind = qry::QueryKind::biometric_match;
  qs.fingercode = r.fingercode;
  ask(qs, true);

  // not-enrolled
  proto::QuerySpec miss = qs;
  miss.user_id = proto::user_from_hex("ffffffffffffffffffffffffffffffff");
  auto res = ask(miss, false);
  if (res.reason != proto::Reason::user_not_found) {
    std::printf("expected user_not_found reason\n");
    ++fails;
  }

  tps_server.stop();
  cs_server.stop();
  std::printf("fails=%d\n", fails);
  return fails == 0 ? 0 : 9;
}
