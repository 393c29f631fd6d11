// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Wire format shared by the three parties.
//
// Frame layout (all integers little-endian):
//   magic            4 bytes  "PPID"
//   version          u8       (currently 1)
//   msg_type         u8       1=ENROLL 2=QUERY 3=TPS_RESULT 4=VERDICT 5=ERROR
//   query_id         u64
//   user_id          16 bytes
//   query_kind       u8
//   payload_count    u32
//   payloads         payload_count x { len u32, bytes }
//
// Payload conventions:
//   ENROLL      two ciphertext blobs: demographic vector, biometric vector.
//   QUERY       encrypted query vector(s); zero payloads = a service party
//               registering interest in a verdict for query_id.
//   TPS_RESULT  one ciphertext blob with the evaluated result; zero payloads
//               signals that the user is not enrolled.
//   VERDICT     1 byte status (0 FAIL / 1 PASS) + 1 byte reason code.
//   ERROR       1 byte status code (0 = OK / acknowledgement) + UTF-8 text.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hevid/common.hpp"
#include "hevid/queries.hpp"

namespace hevid::proto {

inline constexpr char kFrameMagic[4] = {'P', 'P', 'I', 'D'};
inline constexpr u8 kWireVersion = 1;
inline constexpr u32 kMaxPayloadsPerFrame = 8;
inline constexpr u32 kMaxPayloadBytes = 64u << 20;

enum class MsgType : u8 {
  enroll = 1,
  query = 2,
  tps_result = 3,
  verdict = 4,
  error = 5,
};

enum class Reason : u8 {
  none = 0,
  user_not_found = 1,
  evaluation_failed = 2,
};

inline std::string_view reason_label(Reason r) {
  switch (r) {
    case Reason::none:
      return "none";
    case Reason::user_not_found:
      return "user not enrolled";
    case Reason::evaluation_failed:
      return "evaluation failed";
  }
  return "unknown";
}

using UserId = std::array<u8, 16>;

inline std::string user_hex(const UserId& id) {
  return to_hex(id.data(), id.size());
}

inline UserId user_from_hex(std::string_view hex) {
  const bytes raw = from_hex(hex);
  require(raw.size() == 16, ErrorKind::encoding,
          "user id must be 32 hex characters (16 bytes)");
  UserId id{};
  std::copy(raw.begin(), raw.end(), id.begin());
  return id;
}

struct Frame {
  MsgType type = MsgType::error;
  u64 query_id = 0;
  UserId user_id{};
  u8 query_kind = 0;
  std::vector<bytes> payloads;
};

inline bytes encode_frame(const Frame& f) {
  require(f.payloads.size() <= kMaxPayloadsPerFrame, ErrorKind::protocol,
          "too many payloads in frame");
  bytes out;
  out.reserve(34);
  out.insert(out.end(), kFrameMagic, kFrameMagic + 4);
  out.push_back(kWireVersion);
  out.push_back(static_cast<u8>(f.type));
  put_u64(out, f.query_id);
  out.insert(out.end(), f.user_id.begin(), f.user_id.end());
  out.push_back(f.query_kind);
  put_u32(out, static_cast<u32>(f.payloads.size()));
  for (const bytes& p : f.payloads) {
    require(p.size() <= kMaxPayloadBytes, ErrorKind::protocol,
            "frame payload too large");
    put_u32(out, static_cast<u32>(p.size()));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

inline Frame decode_frame(const u8* data, size_t len) {
  ByteReader r(data, len);
  r.expect_magic(kFrameMagic, "message frame");
  const u8 version = r.get_u8();
  require(version == kWireVersion, ErrorKind::protocol,
          "unsupported wire version " + std::to_string(version));
  const u8 type = r.get_u8();
  require(type >= 1 && type <= 5, ErrorKind::protocol,
          "unknown message type " + std::to_string(type));
  Frame f;
  f.type = static_cast<MsgType>(type);
  f.query_id = r.get_u64();
  r.get_raw(f.user_id.data(), f.user_id.size());
  f.query_kind = r.get_u8();
  const u32 count = r.get_u32();
  require(count <= kMaxPayloadsPerFrame, ErrorKind::protocol,
          "payload count too large");
  f.payloads.reserve(count);
  for (u32 i = 0; i < count; ++i) {
    const u32 plen = r.get_u32();
    require(plen <= kMaxPayloadBytes, ErrorKind::protocol,
            "frame payload too large");
    f.payloads.push_back(r.get_bytes(plen));
  }
  require(r.remaining() == 0, ErrorKind::protocol,
          "trailing bytes after message frame");
  return f;
}

inline Frame decode_frame(const bytes& b) { return decode_frame(b.data(), b.size()); }

// ---- constructors for the message shapes the services exchange ----

inline Frame make_enroll(const UserId& uid, bytes demo_ct, bytes bio_ct) {
  Frame f;
  f.type = MsgType::enroll;
  f.user_id = uid;
  f.payloads.push_back(std::move(demo_ct));
  f.payloads.push_back(std::move(bio_ct));
  return f;
}

inline Frame make_query(u64 query_id, const UserId& uid, qry::QueryKind kind,
                        std::vector<bytes> payloads) {
  Frame f;
  f.type = MsgType::query;
  f.query_id = query_id;
  f.user_id = uid;
  f.query_kind = static_cast<u8>(kind);
  f.payloads = std::move(payloads);
  return f;
}

// A QUERY frame with zero payloads: the querying party announcing to the
// verdict service that it wants the verdict for query_id.
inline Frame make_registration(u64 query_id, const UserId& uid,
                               qry::QueryKind kind) {
  Frame f;
  f.type = MsgType::query;
  f.query_id = query_id;
  f.user_id = uid;
  f.query_kind = static_cast<u8>(kind);
  return f;
}

inline Frame make_tps_result(u64 query_id, const UserId& uid, u8 kind,
                             bytes result_ct) {
  Frame f;
  f.type = MsgType::tps_result;
  f.query_id = query_id;
  f.user_id = uid;
  f.query_kind = kind;
  f.payloads.push_back(std::move(result_ct));
  return f;
}

// TPS_RESULT with zero payloads: the user was not enrolled.  The verdict
// service maps this to FAIL / user_not_found.
inline Frame make_tps_not_found(u64 query_id, const UserId& uid, u8 kind) {
  Frame f;
  f.type = MsgType::tps_result;
  f.query_id = query_id;
  f.user_id = uid;
  f.query_kind = kind;
  return f;
}

inline Frame make_verdict(u64 query_id, const UserId& uid, u8 kind, bool pass,
                          Reason reason) {
  Frame f;
  f.type = MsgType::verdict;
  f.query_id = query_id;
  f.user_id = uid;
  f.query_kind = kind;
  f.payloads.push_back(bytes{static_cast<u8>(pass ? 1 : 0),
                             static_cast<u8>(reason)});
  return f;
}

// ERROR doubles as a status/acknowledgement channel: code 0 means OK.
inline Frame make_status(u64 query_id, u8 code, std::string_view message) {
  Frame f;
  f.type = MsgType::error;
  f.query_id = query_id;
  bytes p;
  p.push_back(code);
  p.insert(p.end(), message.begin(), message.end());
  f.payloads.push_back(std::move(p));
  return f;
}

struct VerdictInfo {
  bool pass = false;
  Reason reason = Reason::none;
};

inline VerdictInfo parse_verdict(const Frame& f) {
  require(f.type == MsgType::verdict, ErrorKind::protocol,
          "expected a VERDICT frame");
  require(f.payloads.size() == 1 && f.payloads[0].size() == 2,
          ErrorKind::protocol, "malformed VERDICT payload");
  const u8 status = f.payloads[0][0];
  require(status <= 1, ErrorKind::protocol, "invalid verdict status byte");
  VerdictInfo v;
  v.pass = status == 1;
  v.reason = static_cast<Reason>(f.payloads[0][1]);
  return v;
}

struct StatusInfo {
  u8 code = 0;
  std::string message;
};

inline StatusInfo parse_status(const Frame& f) {
  require(f.type == MsgType::error, ErrorKind::protocol,
          "expected a status frame");
  require(f.payloads.size() == 1 && !f.payloads[0].empty(),
          ErrorKind::protocol, "malformed status payload");
  StatusInfo s;
  s.code = f.payloads[0][0];
  s.message.assign(f.payloads[0].begin() + 1, f.payloads[0].end());
  return s;
}

}  // namespace hevid::proto
