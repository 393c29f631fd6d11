// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Plaintext user records as JSON Lines: one JSON object per line with keys
//   user_id (32 hex chars), name, gender, pincode, phone, email,
//   dob ("YYYY-MM-DD"), fingercode (array of 640 numbers in [0, 255]).

#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hevid/calendar.hpp"
#include "hevid/common.hpp"
#include "hevid/encoding.hpp"
#include "hevid/proto/wire.hpp"

namespace hevid::proto {

inline enc::UserRecord record_from_json(const nlohmann::json& j) {
  enc::UserRecord r;
  try {
    r.user_id = user_from_hex(j.at("user_id").get<std::string>());
    r.name = j.at("name").get<std::string>();
    r.gender = j.at("gender").get<std::string>();
    r.pincode = j.at("pincode").get<std::string>();
    r.phone = j.at("phone").get<std::string>();
    r.email = j.at("email").get<std::string>();
    r.dob = cal::parse_iso(j.at("dob").get<std::string>());
    const nlohmann::json& fc = j.at("fingercode");
    require(fc.is_array(), ErrorKind::encoding,
            "record field 'fingercode' must be an array");
    require(fc.size() == enc::kFingercodeLen, ErrorKind::encoding,
            "record field 'fingercode' must have " +
                std::to_string(enc::kFingercodeLen) + " entries, got " +
                std::to_string(fc.size()));
    r.fingercode.reserve(fc.size());
    for (const nlohmann::json& v : fc) {
      require(v.is_number(), ErrorKind::encoding,
              "fingercode entries must be numbers");
      r.fingercode.push_back(v.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::encoding, std::string("bad record JSON: ") + e.what());
  }
  return r;
}

inline nlohmann::json record_to_json(const enc::UserRecord& r) {
  nlohmann::json j;
  j["user_id"] = user_hex(r.user_id);
  j["name"] = r.name;
  j["gender"] = r.gender;
  j["pincode"] = r.pincode;
  j["phone"] = r.phone;
  j["email"] = r.email;
  j["dob"] = cal::to_iso(r.dob);
  j["fingercode"] = r.fingercode;
  return j;
}

inline std::vector<enc::UserRecord> parse_records_jsonl(
    const std::string& path) {
  const bytes raw = read_file(path);
  std::istringstream in(std::string(raw.begin(), raw.end()));
  std::vector<enc::UserRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    require(!j.is_discarded(), ErrorKind::encoding,
            path + ":" + std::to_string(lineno) + ": invalid JSON");
    try {
      out.push_back(record_from_json(j));
    } catch (const Error& e) {
      fail(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_records_jsonl(const std::string& path,
                                const std::vector<enc::UserRecord>& records) {
  std::string text;
  for (const enc::UserRecord& r : records) {
    text += record_to_json(r).dump();
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace hevid::proto
