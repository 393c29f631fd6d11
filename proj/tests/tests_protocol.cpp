// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
//
// Protocol suite: wire format, durable ciphertext store, verdict routing,
// the token-service and verdict-service frame handlers, the socket layer,
// and complete in-process three-party flows (reference backend for speed,
// plus one encrypted-backend flow over real sockets).

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hevid/audit.hpp"
#include "hevid/he/secret.hpp"
#include "hevid/params.hpp"
#include "hevid/proto/net.hpp"
#include "hevid/proto/records.hpp"
#include "hevid/proto/service.hpp"
#include "hevid/proto/store.hpp"
#include "hevid/proto/verdict_service.hpp"
#include "hevid/proto/wire.hpp"
#include "hevid/queries.hpp"

using namespace hevid;
using namespace hevid::proto;
namespace fs = std::filesystem;

namespace {

template <class F>
std::optional<ErrorKind> error_kind(F&& f) {
  try {
    std::forward<F>(f)();
    return std::nullopt;
  } catch (const Error& e) {
    return e.kind();
  }
}

UserId uid_of(u8 tag) {
  UserId u{};
  for (size_t i = 0; i < u.size(); ++i) u[i] = static_cast<u8>(tag + i);
  return u;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hevid-proto-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

enc::UserRecord make_record(u8 tag) {
  enc::UserRecord r;
  r.user_id = uid_of(tag);
  r.name = "Person " + std::to_string(tag);
  r.gender = (tag % 2) ? "M" : "F";
  r.pincode = std::to_string(100000 + tag * 137);
  r.phone = "+9155500" + std::to_string(10000 + tag);
  r.email = "p" + std::to_string(tag) + "@example.org";
  r.dob = cal::Date{1980 + tag % 30, 1 + tag % 12, 1 + tag % 28};
  r.fingercode.resize(enc::kFingercodeLen);
  for (size_t i = 0; i < r.fingercode.size(); ++i)
    r.fingercode[i] = static_cast<double>((i * 31 + tag * 7) % 256);
  return r;
}

struct RefFixture {
  RefFixture()
      : b(select_params(SecurityLevel::bits128)),
        rng(ChaChaRng::from_seed(0x9f07)) {
    km = he::keygen(b, rng);
    b.set_relin_keys(km.relin);
    b.set_galois_keys(km.galois);
  }
  ref::Backend b;
  ChaChaRng rng;
  he::KeyMaterial<ref::Backend> km;
};

RefFixture& lab() {
  static RefFixture f;
  return f;
}

bytes enroll_blob_demo(const enc::UserRecord& r) {
  auto& f = lab();
  return he::serialize(
      f.b, he::encrypt(f.b, f.km.pk,
                       enc::encode_demographic(r, f.b.plain_modulus()), f.rng));
}

bytes enroll_blob_bio(const enc::UserRecord& r, u64 beta) {
  auto& f = lab();
  const enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(f.b.plain_modulus(), beta);
  return he::serialize(
      f.b, he::encrypt(f.b, f.km.pk, enc::encode_fingercode(r.fingercode, qc),
                       f.rng));
}

bool starts_with_ciphertext_magic(const bytes& p) {
  return p.size() >= 4 && p[0] == 'H' && p[1] == 'E' && p[2] == 'V' &&
         p[3] == '1';
}

}  // namespace

// ---------------------------------------------------------------------------
// wire format
// ---------------------------------------------------------------------------

TEST_CASE("frames of every type roundtrip through the wire format") {
  const UserId uid = uid_of(7);
  std::vector<Frame> frames = {
      make_enroll(uid, bytes{1, 2, 3}, bytes{4, 5}),
      make_query(42, uid, qry::QueryKind::dob_after, {bytes{9}, bytes{8, 7}}),
      make_registration(43, uid, qry::QueryKind::name_match),
      make_tps_result(44, uid, 6, bytes{0xde, 0xad}),
      make_tps_not_found(45, uid, 2),
      make_verdict(46, uid, 7, true, Reason::none),
      make_verdict(47, uid, 1, false, Reason::user_not_found),
      make_status(48, 0, "OK"),
      make_status(49, 2, "unexpected message type"),
  };
  for (const Frame& f : frames) {
    const bytes wire = encode_frame(f);
    const Frame back = decode_frame(wire);
    REQUIRE(back.type == f.type);
    REQUIRE(back.query_id == f.query_id);
    REQUIRE(back.user_id == f.user_id);
    REQUIRE(back.query_kind == f.query_kind);
    REQUIRE(back.payloads == f.payloads);
  }

  // Zero-payload conventions are distinguishable.
  REQUIRE(decode_frame(encode_frame(frames[2])).payloads.empty());
  REQUIRE(decode_frame(encode_frame(frames[4])).payloads.empty());

  const VerdictInfo vi = parse_verdict(frames[6]);
  REQUIRE_FALSE(vi.pass);
  REQUIRE(vi.reason == Reason::user_not_found);
  const StatusInfo si = parse_status(frames[8]);
  REQUIRE(si.code == 2);
  REQUIRE(si.message == "unexpected message type");
}

TEST_CASE("malformed frames are rejected with protocol errors") {
  const bytes good = encode_frame(
      make_query(7, uid_of(1), qry::QueryKind::gender_match, {bytes{1, 2}}));

  // Every strict prefix fails to decode.
  for (size_t len = 0; len < good.size(); ++len) {
    REQUIRE(error_kind([&] { decode_frame(good.data(), len); }).has_value());
  }

  bytes bad = good;
  bad[0] = 'X';  // magic
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::codec);

  bad = good;
  bad[4] = 9;  // version
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::protocol);

  bad = good;
  bad[5] = 0;  // message type below range
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::protocol);
  bad[5] = 6;  // above range
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::protocol);

  bad = good;
  bad.push_back(0);  // trailing byte
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::protocol);

  // Payload count beyond the frame cap.
  bad = good;
  bad[31] = 0xff;  // payload_count low byte (magic4+ver1+type1+qid8+uid16+kind1)
  REQUIRE(error_kind([&] { decode_frame(bad); }) == ErrorKind::protocol);

  // Encoding more payloads than the cap is refused outright.
  Frame many;
  many.type = MsgType::query;
  many.payloads.assign(kMaxPayloadsPerFrame + 1, bytes{1});
  REQUIRE(error_kind([&] { encode_frame(many); }) == ErrorKind::protocol);

  // Verdict/status parsers insist on their shapes.
  Frame v = make_verdict(1, uid_of(2), 1, true, Reason::none);
  v.payloads[0].push_back(0);
  REQUIRE(error_kind([&] { parse_verdict(v); }) == ErrorKind::protocol);
  v = make_verdict(1, uid_of(2), 1, true, Reason::none);
  v.payloads[0][0] = 3;  // status byte out of range
  REQUIRE(error_kind([&] { parse_verdict(v); }) == ErrorKind::protocol);
  REQUIRE(error_kind([&] {
            parse_verdict(make_status(1, 0, "not a verdict"));
          }) == ErrorKind::protocol);
  Frame s = make_status(1, 0, "x");
  s.payloads.clear();
  REQUIRE(error_kind([&] { parse_status(s); }) == ErrorKind::protocol);
}

TEST_CASE("user ids roundtrip through hex") {
  const UserId u = uid_of(0xa0);
  REQUIRE(user_from_hex(user_hex(u)) == u);
  REQUIRE(user_hex(u).size() == 32);
  REQUIRE(error_kind([&] { user_from_hex("abcd"); }) == ErrorKind::encoding);
  REQUIRE(error_kind([&] { user_from_hex(std::string(31, 'a') + "g"); })
              .has_value());
}

// ---------------------------------------------------------------------------
// durable store
// ---------------------------------------------------------------------------

TEST_CASE("the ciphertext store is durable and validates its contents") {
  const fs::path dir = fresh_dir("store");
  AuditLog audit;
  const enc::UserRecord r = make_record(3);
  const bytes demo = enroll_blob_demo(r);
  const bytes bio = enroll_blob_bio(r, 3000);

  {
    TpsStore store(dir.string(), &audit);
    REQUIRE(store.count() == 0);
    REQUIRE_FALSE(store.get(r.user_id).has_value());
    REQUIRE_FALSE(store.put(r.user_id, demo, bio));  // fresh enrollment
    REQUIRE(store.count() == 1);
    const auto got = store.get(r.user_id);
    REQUIRE(got.has_value());
    REQUIRE(got->demo_ct == demo);
    REQUIRE(got->bio_ct == bio);
    REQUIRE(audit.contains("enroll user="));

    // Overwrite is reported and audited distinctly.
    REQUIRE(store.put(r.user_id, demo, bio));
    REQUIRE(store.count() == 1);
    REQUIRE(audit.contains("enroll-overwrite user="));

    // Garbage blobs never reach the disk.
    REQUIRE(error_kind([&] {
              store.put(uid_of(9), bytes{1, 2, 3}, bio);
            }) == ErrorKind::codec);
    REQUIRE(store.count() == 1);

    // Leftover temp files are not counted as enrollments.
    write_file((dir / ".tmp-deadbeef").string(), bytes{0});
    REQUIRE(store.count() == 1);
  }

  // A fresh instance over the same directory sees the record (durability
  // across restart).
  TpsStore store2(dir.string());
  REQUIRE(store2.count() == 1);
  const auto got = store2.get(r.user_id);
  REQUIRE(got.has_value());
  REQUIRE(got->demo_ct == demo);
  REQUIRE(got->bio_ct == bio);

  // Corrupted records are flagged, not silently served.
  write_file((dir / user_hex(r.user_id)).string(), bytes{9, 9, 9, 9});
  REQUIRE(error_kind([&] { store2.get(r.user_id); }) == ErrorKind::codec);
  // A record missing its biometric half is flagged.
  write_file((dir / user_hex(r.user_id)).string(), demo);
  REQUIRE(error_kind([&] { store2.get(r.user_id); }) == ErrorKind::codec);
  // Trailing bytes after the biometric half are flagged.
  bytes padded;
  padded.insert(padded.end(), demo.begin(), demo.end());
  padded.insert(padded.end(), bio.begin(), bio.end());
  padded.push_back(0);
  write_file((dir / user_hex(r.user_id)).string(), padded);
  REQUIRE(error_kind([&] { store2.get(r.user_id); }) == ErrorKind::codec);

  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// verdict routing
// ---------------------------------------------------------------------------

TEST_CASE("the verdict router matches results to waiters exactly once") {
  AuditLog audit;
  VerdictRouter router(audit, std::chrono::milliseconds(5000));
  const UserId uid = uid_of(1);

  // Result first, waiter second: parked then delivered.
  REQUIRE(router.offer(10, make_verdict(10, uid, 1, true, Reason::none)) ==
          VerdictRouter::Offer::parked);
  auto got = router.await(10, std::chrono::milliseconds(100));
  REQUIRE(got.has_value());
  REQUIRE(parse_verdict(*got).pass);

  // Waiter first, result second.
  std::optional<Frame> async_got;
  std::thread waiter([&] {
    async_got = router.await(11, std::chrono::milliseconds(2000));
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  REQUIRE(router.offer(11, make_verdict(11, uid, 1, false,
                                        Reason::user_not_found)) ==
          VerdictRouter::Offer::delivered);
  waiter.join();
  REQUIRE(async_got.has_value());
  REQUIRE_FALSE(parse_verdict(*async_got).pass);

  // Replays of consumed ids are dropped and audited.
  REQUIRE(router.offer(10, make_verdict(10, uid, 1, true, Reason::none)) ==
          VerdictRouter::Offer::replay_dropped);
  REQUIRE(audit.contains("result-replay-dropped query=10"));
  // Awaiting a consumed id yields nothing (no double delivery).
  REQUIRE_FALSE(router.await(10, std::chrono::milliseconds(10)).has_value());

  // A second result for a parked (not yet consumed) id is also a replay.
  REQUIRE(router.offer(12, make_verdict(12, uid, 1, true, Reason::none)) ==
          VerdictRouter::Offer::parked);
  REQUIRE(router.offer(12, make_verdict(12, uid, 1, false, Reason::none)) ==
          VerdictRouter::Offer::replay_dropped);

  // Timeout with no result.
  REQUIRE_FALSE(router.await(99, std::chrono::milliseconds(30)).has_value());

  // Concurrent waiters on distinct ids each get their own verdict.
  std::optional<Frame> got_a, got_b;
  std::thread ta([&] { got_a = router.await(20, std::chrono::milliseconds(2000)); });
  std::thread tb([&] { got_b = router.await(21, std::chrono::milliseconds(2000)); });
  std::this_thread::sleep_for(std::chrono::milliseconds(30));
  router.offer(21, make_verdict(21, uid, 2, false, Reason::none));
  router.offer(20, make_verdict(20, uid, 2, true, Reason::none));
  ta.join();
  tb.join();
  REQUIRE(got_a.has_value());
  REQUIRE(got_b.has_value());
  REQUIRE(parse_verdict(*got_a).pass);
  REQUIRE_FALSE(parse_verdict(*got_b).pass);
}

TEST_CASE("unclaimed results are pruned after the grace period") {
  AuditLog audit;
  VerdictRouter router(audit, std::chrono::milliseconds(50));
  router.offer(5, make_verdict(5, uid_of(1), 1, true, Reason::none));
  REQUIRE(router.parked_count() == 1);
  std::this_thread::sleep_for(std::chrono::milliseconds(120));
  REQUIRE(router.parked_count() == 0);
  REQUIRE(audit.contains("stale-result-dropped query=5"));
}

// ---------------------------------------------------------------------------
// token-service frame handler
// ---------------------------------------------------------------------------

namespace {

struct TpsHarness {
  TpsHarness()
      : dir(fresh_dir("tps-svc")),
        store(dir.string(), &audit),
        svc(lab().b, qcfg, store, audit) {}
  ~TpsHarness() { fs::remove_all(dir); }

  qry::QueryConfig qcfg;
  AuditLog audit;
  fs::path dir;
  TpsStore store;
  TpsService<ref::Backend> svc;
};

Frame query_frame(u64 qid, const QuerySpec& spec, u64 beta) {
  auto& f = lab();
  return make_query(qid, spec.user_id, spec.kind,
                    build_query_payloads(f.b, f.km.pk, spec, beta, f.rng));
}

qry::Verdict decrypt_result(const Frame& result, const qry::QueryConfig& qcfg) {
  auto& f = lab();
  REQUIRE(result.type == MsgType::tps_result);
  REQUIRE(result.payloads.size() == 1);
  const auto out = he::deserialize(f.b, result.payloads[0]);
  return qry::cs_extended_decrypt(f.b, out, f.km.sk, qcfg);
}

}  // namespace

TEST_CASE("the token service evaluates every query kind against the oracle") {
  TpsHarness h;
  const enc::UserRecord r = make_record(11);
  const enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(lab().b.plain_modulus(), h.qcfg.beta);

  // Enroll.
  Frame ef = make_enroll(r.user_id, enroll_blob_demo(r),
                         enroll_blob_bio(r, h.qcfg.beta));
  auto out = h.svc.handle(ef);
  REQUIRE_FALSE(out.forward.has_value());
  REQUIRE(parse_status(out.reply).code == 0);
  REQUIRE(h.store.count() == 1);

  struct Probe {
    QuerySpec spec;
    qry::OracleQuery oq;
  };
  std::vector<Probe> probes;
  // Matching and mismatching probe per demographic kind.
  for (auto kind : {qry::QueryKind::name_match, qry::QueryKind::gender_match,
                    qry::QueryKind::pincode_match, qry::QueryKind::phone_match,
                    qry::QueryKind::email_match}) {
    const std::string good = enc::field_value(r, qry::field_of(kind));
    std::string bad = good;
    bad[0] = bad[0] == 'Z' ? 'Y' : static_cast<char>(bad[0] + 1);
    for (const std::string& v : {good, bad}) {
      Probe p;
      p.spec.kind = kind;
      p.spec.user_id = r.user_id;
      p.spec.value = v;
      p.oq.kind = kind;
      p.oq.text = v;
      probes.push_back(p);
    }
  }
  // Date comparisons bracketing the recorded date.
  for (int year : {r.dob.year - 1, r.dob.year, r.dob.year + 1, r.dob.year + 30}) {
    Probe p;
    p.spec.kind = qry::QueryKind::dob_after;
    p.spec.user_id = r.user_id;
    p.spec.date = cal::Date{year, r.dob.month, r.dob.day};
    p.spec.offset_years = year > r.dob.year + 10 ? 18 : 0;
    p.oq.kind = p.spec.kind;
    p.oq.date = p.spec.date;
    p.oq.offset_years = p.spec.offset_years;
    probes.push_back(p);
  }
  // Identical and perturbed fingercodes.
  for (bool perturb : {false, true}) {
    Probe p;
    p.spec.kind = qry::QueryKind::biometric_match;
    p.spec.user_id = r.user_id;
    p.spec.fingercode = r.fingercode;
    if (perturb) {
      for (size_t i = 0; i < 8; ++i)
        p.spec.fingercode[i] =
            p.spec.fingercode[i] < 128 ? p.spec.fingercode[i] + 90
                                       : p.spec.fingercode[i] - 90;
    }
    p.oq.kind = p.spec.kind;
    p.oq.fingercode = p.spec.fingercode;
    probes.push_back(p);
  }

  u64 qid = 1000;
  for (const Probe& p : probes) {
    auto o = h.svc.handle(query_frame(++qid, p.spec, h.qcfg.beta));
    REQUIRE(parse_status(o.reply).code == 0);
    REQUIRE(o.forward.has_value());
    REQUIRE(o.forward->type == MsgType::tps_result);
    REQUIRE(o.forward->query_id == qid);
    REQUIRE(decrypt_result(*o.forward, h.qcfg) ==
            qry::plaintext_oracle(r, p.oq, qc, h.qcfg));
  }
  REQUIRE(h.audit.contains("query-evaluated"));
}

TEST_CASE("the token service rejects malformed traffic without crashing") {
  TpsHarness h;
  const enc::UserRecord r = make_record(12);
  const UserId stranger = uid_of(0x77);

  // Queries for a user who never enrolled forward an empty result.
  QuerySpec spec;
  spec.kind = qry::QueryKind::gender_match;
  spec.user_id = stranger;
  spec.value = "F";
  auto o = h.svc.handle(query_frame(1, spec, h.qcfg.beta));
  REQUIRE(parse_status(o.reply).code == 0);
  REQUIRE(o.forward.has_value());
  REQUIRE(o.forward->type == MsgType::tps_result);
  REQUIRE(o.forward->payloads.empty());
  REQUIRE(h.audit.contains("query-user-missing"));

  // Enrollment arity.
  Frame bad_enroll = make_enroll(r.user_id, enroll_blob_demo(r),
                                 enroll_blob_bio(r, h.qcfg.beta));
  bad_enroll.payloads.pop_back();
  o = h.svc.handle(bad_enroll);
  REQUIRE(parse_status(o.reply).code == 1);
  REQUIRE_FALSE(o.forward.has_value());

  // Enrollment with a non-ciphertext payload.
  o = h.svc.handle(make_enroll(r.user_id, bytes{1, 2, 3, 4},
                               enroll_blob_bio(r, h.qcfg.beta)));
  REQUIRE(parse_status(o.reply).code == 1);
  REQUIRE(h.audit.contains("enroll-failed"));
  REQUIRE(h.store.count() == 0);

  // Proper enrollment, then malformed queries.
  h.svc.handle(make_enroll(r.user_id, enroll_blob_demo(r),
                           enroll_blob_bio(r, h.qcfg.beta)));

  // Unknown query kind.
  Frame f = make_query(2, r.user_id, qry::QueryKind::gender_match,
                       {bytes{1}});
  f.query_kind = 9;
  o = h.svc.handle(f);
  REQUIRE(parse_status(o.reply).code == 1);
  REQUIRE_FALSE(o.forward.has_value());

  // Wrong payload arity for the kind (date comparison needs two).
  spec.kind = qry::QueryKind::dob_after;
  spec.user_id = r.user_id;
  spec.date = cal::Date{2000, 1, 1};
  Frame dq = query_frame(3, spec, h.qcfg.beta);
  dq.payloads.pop_back();
  o = h.svc.handle(dq);
  REQUIRE(parse_status(o.reply).code == 1);
  REQUIRE(parse_status(o.reply).message.find("needs") != std::string::npos);

  // Garbage ciphertext payload.
  f = make_query(4, r.user_id, qry::QueryKind::gender_match,
                 {bytes{0xff, 0xfe, 0xfd}});
  o = h.svc.handle(f);
  REQUIRE(parse_status(o.reply).code == 1);
  REQUIRE(h.audit.contains("query-failed"));

  // Frames that do not belong at the token service draw a type error and
  // never a verdict.
  for (Frame odd : {make_tps_result(5, r.user_id, 1, bytes{1}),
                    make_verdict(6, r.user_id, 1, true, Reason::none),
                    make_status(7, 0, "hello")}) {
    o = h.svc.handle(odd);
    REQUIRE(o.reply.type == MsgType::error);
    REQUIRE(parse_status(o.reply).code == 2);
    REQUIRE_FALSE(o.forward.has_value());
  }
  REQUIRE(h.audit.contains("rejected-frame"));
}

// ---------------------------------------------------------------------------
// verdict-service handler
// ---------------------------------------------------------------------------

TEST_CASE("the verdict service decrypts results and maps failures to reasons") {
  auto& f = lab();
  qry::QueryConfig qcfg;
  AuditLog audit;
  VerdictService<ref::Backend> svc(f.b, f.km.sk, qcfg, audit);

  // A passing evaluated result (exact gender match evaluated in-process).
  const enc::UserRecord r = make_record(21);
  const qry::EvalCache<ref::Backend> cache(f.b, qcfg);
  auto demo = he::encrypt(f.b, f.km.pk,
                          enc::encode_demographic(r, f.b.plain_modulus()),
                          f.rng);
  auto q = he::encrypt(f.b, f.km.pk,
                       enc::encode_field_query(enc::Field::gender, r.gender),
                       f.rng);
  auto out = qry::tps_demographic_match(f.b, cache, demo, enc::Field::gender, q);
  Frame vf = svc.to_verdict(
      make_tps_result(70, r.user_id, 2, he::serialize(f.b, out)));
  REQUIRE(vf.type == MsgType::verdict);
  VerdictInfo vi = parse_verdict(vf);
  REQUIRE(vi.pass);
  REQUIRE(vi.reason == Reason::none);
  REQUIRE(audit.contains("verdict query=70"));
  REQUIRE(audit.contains("status=PASS"));

  // A mismatching result fails with no special reason.
  auto q2 = he::encrypt(
      f.b, f.km.pk,
      enc::encode_field_query(enc::Field::gender, r.gender == "M" ? "F" : "M"),
      f.rng);
  auto out2 =
      qry::tps_demographic_match(f.b, cache, demo, enc::Field::gender, q2);
  vi = parse_verdict(svc.to_verdict(
      make_tps_result(71, r.user_id, 2, he::serialize(f.b, out2))));
  REQUIRE_FALSE(vi.pass);
  REQUIRE(vi.reason == Reason::none);

  // Empty payloads mean the user was never enrolled.
  vi = parse_verdict(svc.to_verdict(make_tps_not_found(72, r.user_id, 2)));
  REQUIRE_FALSE(vi.pass);
  REQUIRE(vi.reason == Reason::user_not_found);

  // Undecryptable payloads fail closed with an audited reason.
  vi = parse_verdict(svc.to_verdict(
      make_tps_result(73, r.user_id, 2, bytes{1, 2, 3, 4, 5})));
  REQUIRE_FALSE(vi.pass);
  REQUIRE(vi.reason == Reason::evaluation_failed);
  REQUIRE(audit.contains("decrypt-check-failed query=73"));
}

// ---------------------------------------------------------------------------
// socket layer
// ---------------------------------------------------------------------------

TEST_CASE("length-framed messages survive the socket layer") {
  net::Listener listener = net::Listener::open(net::Addr{"127.0.0.1", 0});
  REQUIRE(listener.port() != 0);
  const net::Addr addr{"127.0.0.1", listener.port()};

  std::thread server([&] {
    auto s = listener.accept_for(5000);
    REQUIRE(s.has_value());
    s->set_recv_timeout(5000);
    // Echo until the peer closes.
    for (;;) {
      auto msg = net::recv_message(*s);
      if (!msg) break;
      net::send_message(*s, *msg);
    }
  });

  {
    net::Socket c = net::dial(addr, 5000);
    ChaChaRng rng = ChaChaRng::from_seed(55);
    bytes big(1 << 20);
    for (auto& x : big) x = static_cast<u8>(rng.below(256));
    net::send_message(c, big);
    auto back = net::recv_message(c);
    REQUIRE(back.has_value());
    REQUIRE(*back == big);

    // Empty messages are legal.
    net::send_message(c, bytes{});
    back = net::recv_message(c);
    REQUIRE(back.has_value());
    REQUIRE(back->empty());
  }  // socket closes: server sees clean EOF and exits
  server.join();

  // Address parsing.
  const net::Addr a = net::parse_address("10.1.2.3:8080");
  REQUIRE(a.host == "10.1.2.3");
  REQUIRE(a.port == 8080);
  for (const char* bad : {"nohost", ":80", "host:", "host:0", "host:65536",
                          "host:12ab"}) {
    REQUIRE(error_kind([&] { net::parse_address(bad); }) == ErrorKind::config);
  }
}

TEST_CASE("the socket layer rejects oversize and stalled peers") {
  net::Listener listener = net::Listener::open(net::Addr{"127.0.0.1", 0});
  const net::Addr addr{"127.0.0.1", listener.port()};

  // Stalled peer: the receive times out as a transport error.
  {
    net::Socket c = net::dial(addr, 5000);
    auto s = listener.accept_for(5000);
    REQUIRE(s.has_value());
    s->set_recv_timeout(100);
    REQUIRE(error_kind([&] { net::recv_message(*s); }) == ErrorKind::transport);
  }

  // Oversize header: rejected before any allocation.
  {
    net::Socket c = net::dial(addr, 5000);
    auto s = listener.accept_for(5000);
    REQUIRE(s.has_value());
    s->set_recv_timeout(5000);
    bytes header;
    put_u32(header, (80u << 20) + 1);
    c.send_all(header.data(), header.size());
    REQUIRE(error_kind([&] { net::recv_message(*s); }) == ErrorKind::transport);
  }

  // Peer that closes mid-message.
  {
    net::Socket c = net::dial(addr, 5000);
    auto s = listener.accept_for(5000);
    REQUIRE(s.has_value());
    s->set_recv_timeout(5000);
    bytes header;
    put_u32(header, 100);
    c.send_all(header.data(), header.size());
    c.close();
    REQUIRE(error_kind([&] { net::recv_message(*s); }) == ErrorKind::transport);
  }

  // Oversize outgoing message is refused on the send side.
  {
    net::Socket c = net::dial(addr, 5000);
    bytes body((80u << 20) + 1);
    REQUIRE(error_kind([&] { net::send_message(c, body); }) ==
            ErrorKind::transport);
  }
}

// ---------------------------------------------------------------------------
// in-process three-party flows
// ---------------------------------------------------------------------------

namespace {

struct Transcript {
  std::mutex mu;
  std::vector<std::pair<Frame, bool>> entries;  // frame, inbound

  FrameTrace tracer() {
    return [this](const Frame& f, bool inbound) {
      std::lock_guard<std::mutex> lk(mu);
      entries.push_back({f, inbound});
    };
  }
};

// Everything one verdict-service process owns: declared in dependency order
// so the server (which references the rest) is destroyed first.
struct CsParty {
  explicit CsParty(const qry::QueryConfig& qcfg)
      : svc(lab().b, lab().km.sk, qcfg, audit),
        router(audit),
        server(net::Addr{"127.0.0.1", 0},
               cs_conn_handler(svc, router, audit, 5000,
                               std::chrono::milliseconds(5000))) {}
  net::Addr addr() const { return {"127.0.0.1", server.port()}; }

  AuditLog audit;
  VerdictService<ref::Backend> svc;
  VerdictRouter router;
  StreamServer server;
};

struct TpsParty {
  TpsParty(const qry::QueryConfig& qcfg, const std::string& store_dir,
           const net::Addr& cs_addr, Transcript& trace)
      : store(store_dir, &audit),
        svc(lab().b, qcfg, store, audit),
        server(net::Addr{"127.0.0.1", 0},
               tps_conn_handler(svc, cs_addr, 5000, audit, trace.tracer())) {}
  net::Addr addr() const { return {"127.0.0.1", server.port()}; }

  AuditLog audit;
  TpsStore store;
  TpsService<ref::Backend> svc;
  StreamServer server;
};

ServiceConfig cluster_config(const net::Addr& tps, const net::Addr& cs) {
  ServiceConfig cfg;
  cfg.backend = "ref";
  cfg.tps_address = tps.host + ":" + std::to_string(tps.port);
  cfg.cs_address = cs.host + ":" + std::to_string(cs.port);
  cfg.timeout_ms = 5000;
  return cfg;
}

}  // namespace

TEST_CASE("three parties run every query kind end to end in process") {
  auto& f = lab();
  qry::QueryConfig qcfg;
  const enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(f.b.plain_modulus(), qcfg.beta);
  const fs::path store_dir = fresh_dir("flow-store");
  Transcript trace;

  CsParty cs(qcfg);
  TpsParty tps(qcfg, store_dir.string(), cs.addr(), trace);
  ServiceConfig cfg = cluster_config(tps.addr(), cs.addr());

  std::vector<enc::UserRecord> users = {make_record(31), make_record(32),
                                        make_record(33)};
  enroll_records(f.b, f.km.pk, cfg, users, f.rng);
  REQUIRE(tps.store.count() == 3);

  // One passing and one failing probe of every kind, verdicts checked
  // against the plaintext oracle.
  u64 captured_qid = 0;
  bytes captured_result;
  for (const enc::UserRecord& r : users) {
    for (u8 k = 1; k <= 7; ++k) {
      const auto kind = static_cast<qry::QueryKind>(k);
      for (bool matching : {true, false}) {
        QuerySpec spec;
        spec.kind = kind;
        spec.user_id = r.user_id;
        qry::OracleQuery oq;
        oq.kind = kind;
        if (qry::is_demographic(kind)) {
          spec.value = enc::field_value(r, qry::field_of(kind));
          if (!matching) spec.value[0] ^= 1;
          oq.text = spec.value;
        } else if (kind == qry::QueryKind::dob_after) {
          spec.date = cal::Date{matching ? r.dob.year + 1 : r.dob.year - 1,
                                r.dob.month, r.dob.day};
          oq.date = spec.date;
        } else {
          spec.fingercode = r.fingercode;
          if (!matching)
            for (size_t i = 0; i < 12; ++i)
              spec.fingercode[i] = spec.fingercode[i] < 128
                                       ? spec.fingercode[i] + 95
                                       : spec.fingercode[i] - 95;
          oq.fingercode = spec.fingercode;
        }
        const QueryResult res = run_query(f.b, f.km.pk, cfg, spec, f.rng);
        REQUIRE(res.verdict == qry::plaintext_oracle(r, oq, qc, qcfg));
        REQUIRE(res.reason == Reason::none);
        if (captured_qid == 0 && matching) {
          // Remember one evaluated result for the replay probe below.
          std::lock_guard<std::mutex> lk(trace.mu);
          for (const auto& [frame, inbound] : trace.entries) {
            if (!inbound && frame.type == MsgType::tps_result &&
                frame.query_id == res.query_id) {
              captured_qid = frame.query_id;
              captured_result = encode_frame(frame);
            }
          }
        }
      }
    }
  }

  // Unenrolled user: the verdict carries the reason to the querying party.
  QuerySpec ghost;
  ghost.kind = qry::QueryKind::gender_match;
  ghost.user_id = uid_of(0xEE);
  ghost.value = "F";
  const QueryResult res = run_query(f.b, f.km.pk, cfg, ghost, f.rng);
  REQUIRE(res.verdict == qry::Verdict::fail);
  REQUIRE(res.reason == Reason::user_not_found);

  // Replaying a captured result is refused and audited.
  REQUIRE(captured_qid != 0);
  {
    net::Socket c = net::dial(cs.addr(), 5000);
    net::send_message(c, captured_result);
    auto reply = net::recv_message(c);
    REQUIRE(reply.has_value());
    const StatusInfo st = parse_status(decode_frame(*reply));
    REQUIRE(st.code == 1);
    REQUIRE(st.message.find("duplicate") != std::string::npos);
  }
  REQUIRE(cs.audit.contains("result-replay-dropped query=" +
                            std::to_string(captured_qid)));

  // Transcript discipline at the token service: only enrollments and
  // queries arrive, only results and status frames leave, never a verdict,
  // and every data payload is a ciphertext envelope.
  {
    std::lock_guard<std::mutex> lk(trace.mu);
    REQUIRE_FALSE(trace.entries.empty());
    for (const auto& [frame, inbound] : trace.entries) {
      if (inbound) {
        REQUIRE((frame.type == MsgType::enroll ||
                 frame.type == MsgType::query));
        for (const bytes& p : frame.payloads)
          REQUIRE(starts_with_ciphertext_magic(p));
      } else {
        REQUIRE((frame.type == MsgType::tps_result ||
                 frame.type == MsgType::error));
        if (frame.type == MsgType::tps_result)
          for (const bytes& p : frame.payloads)
            REQUIRE(starts_with_ciphertext_magic(p));
      }
      REQUIRE(frame.type != MsgType::verdict);
    }
  }

  fs::remove_all(store_dir);
}

TEST_CASE("the token service survives a restart over the same store") {
  auto& f = lab();
  qry::QueryConfig qcfg;
  const fs::path store_dir = fresh_dir("restart-store");
  Transcript trace;
  CsParty cs(qcfg);

  const enc::UserRecord r = make_record(41);
  QuerySpec spec;
  spec.kind = qry::QueryKind::pincode_match;
  spec.user_id = r.user_id;
  spec.value = r.pincode;

  {
    TpsParty tps(qcfg, store_dir.string(), cs.addr(), trace);
    ServiceConfig cfg = cluster_config(tps.addr(), cs.addr());
    enroll_records(f.b, f.km.pk, cfg, {r}, f.rng);
    REQUIRE(run_query(f.b, f.km.pk, cfg, spec, f.rng).verdict ==
            qry::Verdict::pass);
  }  // token service torn down

  {
    TpsParty tps(qcfg, store_dir.string(), cs.addr(), trace);
    ServiceConfig cfg = cluster_config(tps.addr(), cs.addr());
    REQUIRE(tps.store.count() == 1);
    REQUIRE(run_query(f.b, f.km.pk, cfg, spec, f.rng).verdict ==
            qry::Verdict::pass);
    spec.value = "999999";
    REQUIRE(run_query(f.b, f.km.pk, cfg, spec, f.rng).verdict ==
            qry::Verdict::fail);
  }

  fs::remove_all(store_dir);
}

TEST_CASE("the encrypted backend completes a socket enroll-and-query flow") {
  bfv::Backend b(select_params(SecurityLevel::bits128));
  ChaChaRng rng = ChaChaRng::from_seed(0x50c7);
  auto km = he::keygen(b, rng);
  b.set_relin_keys(km.relin);
  b.set_galois_keys(km.galois);

  qry::QueryConfig qcfg;
  const fs::path store_dir = fresh_dir("bfv-store");
  AuditLog cs_audit, tps_audit;
  VerdictService<bfv::Backend> vsvc(b, km.sk, qcfg, cs_audit);
  VerdictRouter router(cs_audit);
  StreamServer cs_server(net::Addr{"127.0.0.1", 0},
                         cs_conn_handler(vsvc, router, cs_audit, 30000,
                                         std::chrono::milliseconds(30000)));
  TpsStore store(store_dir.string(), &tps_audit);
  TpsService<bfv::Backend> tsvc(b, qcfg, store, tps_audit);
  StreamServer tps_server(
      net::Addr{"127.0.0.1", 0},
      tps_conn_handler(tsvc, net::Addr{"127.0.0.1", cs_server.port()}, 30000,
                       tps_audit));

  ServiceConfig cfg;
  cfg.backend = "bfv";
  cfg.tps_address = "127.0.0.1:" + std::to_string(tps_server.port());
  cfg.cs_address = "127.0.0.1:" + std::to_string(cs_server.port());
  cfg.timeout_ms = 30000;

  const enc::UserRecord r = make_record(51);
  enroll_records(b, km.pk, cfg, {r}, rng);

  QuerySpec spec;
  spec.kind = qry::QueryKind::dob_after;
  spec.user_id = r.user_id;
  spec.date = cal::Date{r.dob.year + 5, r.dob.month, r.dob.day};
  REQUIRE(run_query(b, km.pk, cfg, spec, rng).verdict == qry::Verdict::pass);

  spec.kind = qry::QueryKind::email_match;
  spec.value = "wrong@example.org";
  REQUIRE(run_query(b, km.pk, cfg, spec, rng).verdict == qry::Verdict::fail);

  fs::remove_all(store_dir);
}

// ---------------------------------------------------------------------------
// plaintext record files
// ---------------------------------------------------------------------------

TEST_CASE("record files roundtrip and report the failing line") {
  const fs::path dir = fresh_dir("records");
  const std::string path = (dir / "users.jsonl").string();

  std::vector<enc::UserRecord> users = {make_record(61), make_record(62)};
  write_records_jsonl(path, users);
  const auto back = parse_records_jsonl(path);
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < users.size(); ++i) {
    REQUIRE(back[i].user_id == users[i].user_id);
    REQUIRE(back[i].name == users[i].name);
    REQUIRE(back[i].gender == users[i].gender);
    REQUIRE(back[i].pincode == users[i].pincode);
    REQUIRE(back[i].phone == users[i].phone);
    REQUIRE(back[i].email == users[i].email);
    REQUIRE(cal::compare(back[i].dob, users[i].dob) == 0);
    REQUIRE(back[i].fingercode == users[i].fingercode);
  }

  // Blank lines are skipped.
  {
    const bytes raw = read_file(path);
    std::string text(raw.begin(), raw.end());
    text = "\n  \n" + text + "\n\n";
    write_file(path, text);
    REQUIRE(parse_records_jsonl(path).size() == 2);
  }

  auto expect_error_at = [&](const std::string& line2,
                             const std::string& needle) {
    const std::string p2 = (dir / "bad.jsonl").string();
    write_file(p2, record_to_json(make_record(63)).dump() + "\n" + line2 +
                       "\n");
    try {
      parse_records_jsonl(p2);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      REQUIRE(std::string(e.what()).find(":2:") != std::string::npos);
      REQUIRE(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_error_at("{not json", "invalid JSON");
  expect_error_at("{\"user_id\": \"abc\"}", "");  // short id / missing keys
  {
    nlohmann::json j = record_to_json(make_record(64));
    j["fingercode"] = std::vector<double>{1.0, 2.0};
    expect_error_at(j.dump(), "fingercode");
  }
  {
    nlohmann::json j = record_to_json(make_record(65));
    j["dob"] = "1994/11/23";
    expect_error_at(j.dump(), "");
  }
  {
    nlohmann::json j = record_to_json(make_record(66));
    j.erase("email");
    expect_error_at(j.dump(), "bad record JSON");
  }

  fs::remove_all(dir);
}
