// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Verdict-side protocol logic.  This is the only protocol header that
// includes the secret-key machinery: the verdict service decrypts evaluated
// results, applies the query-agnostic check, and hands PASS/FAIL verdicts to
// the querying party.  Token-service binaries must not include this file.

#include <chrono>
#include <optional>
#include <string>
#include <utility>

#include "hevid/audit.hpp"
#include "hevid/common.hpp"
#include "hevid/he/ops.hpp"
#include "hevid/he/secret.hpp"
#include "hevid/proto/service.hpp"
#include "hevid/proto/wire.hpp"
#include "hevid/queries.hpp"

namespace hevid::proto {

template <class B>
class VerdictService {
 public:
  VerdictService(const B& b, const typename B::SecretKeyT& sk,
                 const qry::QueryConfig& qcfg, AuditLog& audit)
      : b_(b), sk_(sk), cfg_(qcfg), audit_(audit) {}

  // Turns a TPS_RESULT frame into the VERDICT frame for the querying party.
  // Every query kind goes through the same decrypt + unified check; nothing
  // here branches on the query kind.
  Frame to_verdict(const Frame& result) {
    bool pass = false;
    Reason reason = Reason::none;
    if (result.payloads.empty()) {
      reason = Reason::user_not_found;
    } else {
      try {
        const auto out = he::deserialize(b_, result.payloads[0]);
        pass = qry::cs_extended_decrypt(b_, out, sk_, cfg_) ==
               qry::Verdict::pass;
      } catch (const Error& e) {
        audit_.log("decrypt-check-failed query=" +
                   std::to_string(result.query_id) + " error=" + e.what());
        pass = false;
        reason = Reason::evaluation_failed;
      }
    }
    audit_.log("verdict query=" + std::to_string(result.query_id) +
               " user=" + user_hex(result.user_id) +
               " kind=" + std::to_string(result.query_kind) +
               " status=" + (pass ? "PASS" : "FAIL"));
    return make_verdict(result.query_id, result.user_id, result.query_kind,
                        pass, reason);
  }

 private:
  const B& b_;
  const typename B::SecretKeyT& sk_;
  qry::QueryConfig cfg_;
  AuditLog& audit_;
};

// Connection handler for the verdict service.  Two message shapes arrive:
//   * QUERY with zero payloads — the querying party registering for the
//     verdict of query_id; the handler blocks until the matching result
//     has been routed, then sends the VERDICT on the same connection.
//   * TPS_RESULT — the token service delivering an evaluated result; it is
//     turned into a verdict, routed, and acknowledged.
template <class B>
StreamServer::ConnHandler cs_conn_handler(
    VerdictService<B>& svc, VerdictRouter& router, AuditLog& audit,
    int timeout_ms, std::chrono::milliseconds verdict_wait) {
  return [&svc, &router, &audit, timeout_ms, verdict_wait](net::Socket sock) {
    sock.set_recv_timeout(timeout_ms);
    for (;;) {
      std::optional<bytes> msg;
      try {
        msg = net::recv_message(sock);
      } catch (const Error&) {
        break;
      }
      if (!msg) break;
      Frame reply;
      try {
        const Frame f = decode_frame(*msg);
        switch (f.type) {
          case MsgType::query: {
            require(f.payloads.empty(), ErrorKind::protocol,
                    "encrypted queries belong at the token service; the "
                    "verdict service only takes registrations");
            std::optional<Frame> verdict =
                router.await(f.query_id, verdict_wait);
            if (verdict) {
              reply = std::move(*verdict);
            } else {
              reply = make_status(f.query_id, 1,
                                  "no result arrived for this query");
            }
            break;
          }
          case MsgType::tps_result: {
            Frame v = svc.to_verdict(f);
            const VerdictRouter::Offer offered =
                router.offer(f.query_id, std::move(v));
            if (offered == VerdictRouter::Offer::replay_dropped) {
              reply = make_status(f.query_id, 1,
                                  "duplicate result for this query id was "
                                  "dropped");
            } else {
              reply = make_status(f.query_id, 0, "accepted");
            }
            break;
          }
          default:
            audit.log("rejected-frame type=" +
                      std::to_string(static_cast<int>(f.type)));
            reply = make_status(f.query_id, 2,
                                "unexpected message type at the verdict "
                                "service");
        }
      } catch (const Error& e) {
        audit.log(std::string("bad-frame error=") + e.what());
        reply = make_status(0, 2, e.what());
      }
      try {
        net::send_message(sock, encode_frame(reply));
      } catch (const Error&) {
        break;
      }
    }
  };
}

}  // namespace hevid::proto
