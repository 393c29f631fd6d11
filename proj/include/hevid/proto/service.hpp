// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Service-side building blocks for the three-party protocol:
//
//   * ServiceConfig   — shared configuration (addresses, dirs, parameters).
//   * TpsService      — the token-processing service's frame handler: stores
//                       enrollments, evaluates queries homomorphically, and
//                       forwards encrypted results to the verdict service.
//   * VerdictRouter   — matches asynchronous TPS results to the querying
//                       party waiting for a verdict, with replay protection.
//   * StreamServer    — accept loop + per-connection worker threads.
//   * run_query /     — client-side helpers used by the querying party.
//     enroll_records
//
// This header deliberately never includes the secret-key header: everything
// here operates on public keys and ciphertexts only, so binaries built from
// it cannot decrypt even in principle.  Verdict-side logic (which needs the
// secret key) lives in verdict_service.hpp.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hevid/audit.hpp"
#include "hevid/common.hpp"
#include "hevid/encoding.hpp"
#include "hevid/he/ops.hpp"
#include "hevid/params.hpp"
#include "hevid/proto/net.hpp"
#include "hevid/proto/store.hpp"
#include "hevid/proto/wire.hpp"
#include "hevid/queries.hpp"

namespace hevid::proto {

struct ServiceConfig {
  int security = 128;
  std::string backend = "bfv";
  u64 beta = 3000;
  std::string tps_address = "127.0.0.1:7841";
  std::string cs_address = "127.0.0.1:7842";
  std::string store_dir = "tps-store";
  std::string key_dir = "keys";
  std::string audit_log;  // empty: in-memory audit only
  int timeout_ms = 30000;
  bool backup = false;
  std::string backup_dir = "cs-backup";

  std::string public_key_path() const { return key_dir + "/public_key.bin"; }
  std::string secret_key_path() const { return key_dir + "/secret_key.bin"; }
  std::string relin_keys_path() const { return key_dir + "/relin_keys.bin"; }
  std::string galois_keys_path() const { return key_dir + "/galois_keys.bin"; }

  HeParams params() const { return select_params(security_from_int(security)); }

  qry::QueryConfig query_config() const {
    qry::QueryConfig qc;
    qc.beta = beta;
    qc.validate();
    return qc;
  }
};

// ---- Token-processing service -------------------------------------------

// Handles one decoded frame and says what to send back on the same
// connection (reply) and what, if anything, to forward to the verdict
// service (forward).
template <class B>
class TpsService {
 public:
  struct Outcome {
    Frame reply;
    std::optional<Frame> forward;
  };

  TpsService(const B& b, const qry::QueryConfig& qcfg, TpsStore& store,
             AuditLog& audit)
      : b_(b), cache_(b, qcfg), store_(store), audit_(audit) {}

  Outcome handle(const Frame& f) {
    switch (f.type) {
      case MsgType::enroll:
        return do_enroll(f);
      case MsgType::query:
        return do_query(f);
      default:
        audit_.log("rejected-frame type=" +
                   std::to_string(static_cast<int>(f.type)));
        return {make_status(f.query_id, 2,
                            "unexpected message type at the token service"),
                std::nullopt};
    }
  }

 private:
  Outcome do_enroll(const Frame& f) {
    try {
      require(f.payloads.size() == 2, ErrorKind::protocol,
              "enrollment needs exactly two ciphertexts (demographic, "
              "biometric)");
      for (const bytes& p : f.payloads) {
        const UnwrappedBlob u =
            unwrap_blob(he::kCiphertextMagic, "enrollment ciphertext", p);
        require(u.fp == b_.fingerprint(), ErrorKind::codec,
                "enrollment ciphertext was produced under different "
                "parameters");
      }
      const bool existed = store_.put(f.user_id, f.payloads[0], f.payloads[1]);
      return {make_status(f.query_id, 0,
                          existed ? "OK (re-enrollment)" : "OK"),
              std::nullopt};
    } catch (const Error& e) {
      audit_.log(std::string("enroll-failed user=") + user_hex(f.user_id) +
                 " error=" + e.what());
      return {make_status(f.query_id, 1, e.what()), std::nullopt};
    }
  }

  Outcome do_query(const Frame& f) {
    // Zero payloads would be a verdict registration, which belongs at the
    // verdict service, not here.
    try {
      require(f.query_kind >= 1 && f.query_kind <= 7, ErrorKind::protocol,
              "unknown query kind " + std::to_string(f.query_kind));
      const auto kind = static_cast<qry::QueryKind>(f.query_kind);
      require(f.payloads.size() == qry::payload_count(kind),
              ErrorKind::protocol,
              std::string("query kind '") + qry::kind_label(kind) +
                  "' needs " + std::to_string(qry::payload_count(kind)) +
                  " payload(s), got " + std::to_string(f.payloads.size()));
      const std::optional<StoredUser> rec = store_.get(f.user_id);
      if (!rec) {
        audit_.log("query-user-missing user=" + user_hex(f.user_id) +
                   " query=" + std::to_string(f.query_id));
        return {make_status(f.query_id, 0, "forwarded"),
                make_tps_not_found(f.query_id, f.user_id, f.query_kind)};
      }
      he::HomomorphicVector<B> out = evaluate(kind, *rec, f.payloads);
      audit_.log("query-evaluated user=" + user_hex(f.user_id) +
                 " kind=" + qry::kind_label(kind) +
                 " query=" + std::to_string(f.query_id));
      return {make_status(f.query_id, 0, "forwarded"),
              make_tps_result(f.query_id, f.user_id, f.query_kind,
                              he::serialize(b_, out))};
    } catch (const Error& e) {
      audit_.log("query-failed user=" + user_hex(f.user_id) +
                 " query=" + std::to_string(f.query_id) + " error=" +
                 e.what());
      return {make_status(f.query_id, 1, e.what()), std::nullopt};
    }
  }

  he::HomomorphicVector<B> evaluate(qry::QueryKind kind, const StoredUser& rec,
                                    const std::vector<bytes>& payloads) {
    if (qry::is_demographic(kind)) {
      auto demo = he::deserialize(b_, rec.demo_ct);
      auto u = he::deserialize(b_, payloads[0]);
      return qry::tps_demographic_match(b_, cache_, demo, qry::field_of(kind),
                                        u);
    }
    if (kind == qry::QueryKind::dob_after) {
      auto demo = he::deserialize(b_, rec.demo_ct);
      auto y_prime = he::deserialize(b_, payloads[0]);
      auto d_prime = he::deserialize(b_, payloads[1]);
      return qry::tps_dob_compare(b_, cache_, demo, y_prime, d_prime);
    }
    auto bio = he::deserialize(b_, rec.bio_ct);
    auto u = he::deserialize(b_, payloads[0]);
    return qry::tps_biometric_match(b_, cache_, u, bio);
  }

  const B& b_;
  qry::EvalCache<B> cache_;
  TpsStore& store_;
  AuditLog& audit_;
};

// ---- Verdict routing ------------------------------------------------------

// Matches a TPS result arriving on one connection to the querying party
// waiting on another.  Each query id is single-use: once its verdict has
// been delivered, later results for the same id are dropped and audited
// (replay protection).  Results that arrive before the waiter registers are
// parked for a short grace period.
class VerdictRouter {
 public:
  enum class Offer { delivered, parked, replay_dropped };

  explicit VerdictRouter(AuditLog& audit,
                         std::chrono::milliseconds grace =
                             std::chrono::milliseconds(5000))
      : audit_(audit), grace_(grace) {}

  Offer offer(u64 query_id, Frame verdict) {
    std::unique_lock<std::mutex> lk(mu_);
    prune_locked();
    if (consumed_.count(query_id) || parked_.count(query_id)) {
      audit_.log("result-replay-dropped query=" + std::to_string(query_id));
      return Offer::replay_dropped;
    }
    const bool has_waiter = waiting_.count(query_id) > 0;
    parked_.emplace(query_id,
                    Parked{std::move(verdict), std::chrono::steady_clock::now()});
    cv_.notify_all();
    return has_waiter ? Offer::delivered : Offer::parked;
  }

  std::optional<Frame> await(u64 query_id, std::chrono::milliseconds timeout) {
    std::unique_lock<std::mutex> lk(mu_);
    if (consumed_.count(query_id)) return std::nullopt;
    waiting_.insert(query_id);
    const bool got = cv_.wait_for(lk, timeout, [&] {
      return parked_.count(query_id) > 0;
    });
    waiting_.erase(query_id);
    if (!got) return std::nullopt;
    Frame out = std::move(parked_.at(query_id).frame);
    parked_.erase(query_id);
    consumed_.insert(query_id);
    return out;
  }

  size_t parked_count() {
    std::unique_lock<std::mutex> lk(mu_);
    prune_locked();
    return parked_.size();
  }

 private:
  struct Parked {
    Frame frame;
    std::chrono::steady_clock::time_point since;
  };

  void prune_locked() {
    const auto now = std::chrono::steady_clock::now();
    for (auto it = parked_.begin(); it != parked_.end();) {
      if (now - it->second.since > grace_ && !waiting_.count(it->first)) {
        audit_.log("stale-result-dropped query=" + std::to_string(it->first));
        it = parked_.erase(it);
      } else {
        ++it;
      }
    }
  }

  AuditLog& audit_;
  std::chrono::milliseconds grace_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<u64, Parked> parked_;
  std::set<u64> consumed_;
  std::set<u64> waiting_;
};

// ---- Connection server ------------------------------------------------------

class StreamServer {
 public:
  using ConnHandler = std::function<void(net::Socket)>;

  StreamServer(const net::Addr& addr, ConnHandler handler)
      : listener_(net::Listener::open(addr)), handler_(std::move(handler)) {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  ~StreamServer() { stop(); }

  void stop() {
    bool expected = false;
    if (!stopping_.compare_exchange_strong(expected, true)) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    listener_.close();
    std::vector<std::thread> workers;
    {
      std::lock_guard<std::mutex> lk(mu_);
      workers.swap(workers_);
    }
    for (std::thread& t : workers)
      if (t.joinable()) t.join();
  }

  u16 port() const { return listener_.port(); }

 private:
  void accept_loop() {
    while (!stopping_.load()) {
      std::optional<net::Socket> s;
      try {
        s = listener_.accept_for(200);
      } catch (const Error&) {
        break;
      }
      if (!s) continue;
      std::lock_guard<std::mutex> lk(mu_);
      workers_.emplace_back(
          [this, sock = std::move(*s)]() mutable {
            try {
              handler_(std::move(sock));
            } catch (...) {
              // A failed connection must not bring the service down.
            }
          });
    }
  }

  net::Listener listener_;
  ConnHandler handler_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
};

// Observation hook for tests: sees every frame a connection handler receives
// (inbound=true) or sends (inbound=false).
using FrameTrace = std::function<void(const Frame&, bool inbound)>;

// Connection handler for the token-processing service.  Evaluated results
// are pushed to the verdict service over a fresh connection; the querying
// party's request is acknowledged only after that delivery succeeded.
template <class B>
StreamServer::ConnHandler tps_conn_handler(TpsService<B>& svc,
                                           const net::Addr& cs_addr,
                                           int timeout_ms, AuditLog& audit,
                                           FrameTrace trace = {}) {
  return [&svc, cs_addr, timeout_ms, &audit, trace](net::Socket sock) {
    sock.set_recv_timeout(timeout_ms);
    for (;;) {
      std::optional<bytes> msg;
      try {
        msg = net::recv_message(sock);
      } catch (const Error&) {
        break;  // timeout or mid-message close; drop the connection
      }
      if (!msg) break;  // clean end of stream
      Frame reply;
      std::optional<Frame> forward;
      u64 qid = 0;
      try {
        const Frame f = decode_frame(*msg);
        qid = f.query_id;
        if (trace) trace(f, true);
        auto outcome = svc.handle(f);
        reply = std::move(outcome.reply);
        forward = std::move(outcome.forward);
      } catch (const Error& e) {
        audit.log(std::string("bad-frame error=") + e.what());
        reply = make_status(qid, 2, e.what());
      }
      if (forward) {
        try {
          net::Socket cs = net::dial(cs_addr, timeout_ms);
          net::send_message(cs, encode_frame(*forward));
          if (trace) trace(*forward, false);
          std::optional<bytes> ackmsg = net::recv_message(cs);
          require(ackmsg.has_value(), ErrorKind::transport,
                  "verdict service closed without acknowledging");
          const StatusInfo st = parse_status(decode_frame(*ackmsg));
          require(st.code == 0, ErrorKind::protocol,
                  "verdict service rejected the result: " + st.message);
        } catch (const Error& e) {
          audit.log("forward-failed query=" + std::to_string(qid) +
                    " error=" + e.what());
          reply = make_status(qid, 2,
                              "could not deliver the result to the verdict "
                              "service");
        }
      }
      if (trace) trace(reply, false);
      try {
        net::send_message(sock, encode_frame(reply));
      } catch (const Error&) {
        break;
      }
    }
  };
}

// ---- Querying-party helpers ----------------------------------------------

struct QuerySpec {
  qry::QueryKind kind{};
  UserId user_id{};
  std::string value;               // demographic kinds
  cal::Date date{};                // dob_after
  int offset_years = 0;            // dob_after
  std::vector<double> fingercode;  // biometric_match
};

template <class B>
std::vector<bytes> build_query_payloads(const B& b,
                                        const typename B::PublicKeyT& pk,
                                        const QuerySpec& spec, u64 beta,
                                        ChaChaRng& rng) {
  std::vector<bytes> out;
  if (qry::is_demographic(spec.kind)) {
    const SlotVector s =
        enc::encode_field_query(qry::field_of(spec.kind), spec.value);
    out.push_back(he::serialize(b, he::encrypt(b, pk, s, rng)));
  } else if (spec.kind == qry::QueryKind::dob_after) {
    const enc::DobQueryVectors v =
        enc::encode_dob_query(spec.date, spec.offset_years);
    out.push_back(he::serialize(b, he::encrypt(b, pk, v.y_prime, rng)));
    out.push_back(he::serialize(b, he::encrypt(b, pk, v.d_prime, rng)));
  } else {
    const enc::QuantizationConfig qc =
        enc::QuantizationConfig::derive(b.plain_modulus(), beta);
    const SlotVector s = enc::encode_fingercode(spec.fingercode, qc);
    out.push_back(he::serialize(b, he::encrypt(b, pk, s, rng)));
  }
  return out;
}

struct QueryResult {
  qry::Verdict verdict = qry::Verdict::fail;
  Reason reason = Reason::none;
  u64 query_id = 0;
};

// Full querying-party flow: register for the verdict first (so it cannot
// race past us), send the encrypted query to the token service, then block
// on the verdict connection.
template <class B>
QueryResult run_query(const B& b, const typename B::PublicKeyT& pk,
                      const ServiceConfig& cfg, const QuerySpec& spec,
                      ChaChaRng& rng) {
  const u64 qid = rng.next_u64();
  net::Socket cs = net::dial(net::parse_address(cfg.cs_address), cfg.timeout_ms);
  net::send_message(
      cs, encode_frame(make_registration(qid, spec.user_id, spec.kind)));

  {
    net::Socket tps =
        net::dial(net::parse_address(cfg.tps_address), cfg.timeout_ms);
    std::vector<bytes> payloads =
        build_query_payloads(b, pk, spec, cfg.beta, rng);
    net::send_message(tps, encode_frame(make_query(qid, spec.user_id,
                                                   spec.kind,
                                                   std::move(payloads))));
    std::optional<bytes> ack = net::recv_message(tps);
    require(ack.has_value(), ErrorKind::transport,
            "token service closed the connection without replying");
    const StatusInfo st = parse_status(decode_frame(*ack));
    require(st.code == 0, ErrorKind::protocol,
            "token service reported: " + st.message);
  }

  std::optional<bytes> vmsg = net::recv_message(cs);
  require(vmsg.has_value(), ErrorKind::transport,
          "verdict service closed the connection without a verdict");
  const Frame vf = decode_frame(*vmsg);
  if (vf.type == MsgType::error) {
    const StatusInfo st = parse_status(vf);
    fail(ErrorKind::protocol, "verdict service reported: " + st.message);
  }
  const VerdictInfo vi = parse_verdict(vf);
  return QueryResult{vi.pass ? qry::Verdict::pass : qry::Verdict::fail,
                     vi.reason, qid};
}

// Enrollment flow for the party holding the plaintext records: encode,
// encrypt, optionally keep an encrypted backup, send to the token service.
template <class B>
void enroll_records(const B& b, const typename B::PublicKeyT& pk,
                    const ServiceConfig& cfg,
                    const std::vector<enc::UserRecord>& records,
                    ChaChaRng& rng, AuditLog* audit = nullptr) {
  const enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(b.plain_modulus(), cfg.beta);
  net::Socket tps =
      net::dial(net::parse_address(cfg.tps_address), cfg.timeout_ms);
  for (const enc::UserRecord& r : records) {
    bytes demo = he::serialize(
        b, he::encrypt(b, pk, enc::encode_demographic(r, b.plain_modulus()),
                       rng));
    bytes bio = he::serialize(
        b, he::encrypt(b, pk, enc::encode_fingercode(r.fingercode, qc), rng));
    if (cfg.backup) {
      bytes combined = demo;
      combined.insert(combined.end(), bio.begin(), bio.end());
      write_file(cfg.backup_dir + "/" + user_hex(r.user_id), combined);
    }
    net::send_message(
        tps, encode_frame(make_enroll(r.user_id, std::move(demo),
                                      std::move(bio))));
    std::optional<bytes> ack = net::recv_message(tps);
    require(ack.has_value(), ErrorKind::transport,
            "token service closed the connection during enrollment");
    const StatusInfo st = parse_status(decode_frame(*ack));
    require(st.code == 0, ErrorKind::protocol,
            "token service rejected the enrollment: " + st.message);
    if (audit) audit->log("enrolled user=" + user_hex(r.user_id));
  }
}

}  // namespace hevid::proto
