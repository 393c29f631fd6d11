// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic, invertible encodings between human-readable user data and
// 4096-slot vectors.
//
// Demographic layout (one bit per slot, MSB-first, field-start aligned):
//   name    [0,399]     50 chars
//   gender  [400,407]    1 char
//   pincode [408,455]    6 digits
//   phone   [456,559]   13 chars
//   email   [560,799]   30 chars
//   dob     [800,1199]  year since 1900, unary (y ones then zeros)
//           [1200,1599] day-of-year ramp <d, d+1, ..., d+399> mod T
//   [1600,4095] zero.
// Biometric layout: 640 quantized fingercode elements at [0,639], zeros after.

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "hevid/calendar.hpp"
#include "hevid/common.hpp"
#include "hevid/numtheory.hpp"
#include "hevid/slots.hpp"

namespace hevid::enc {

inline constexpr size_t kSlotCount = 4096;
inline constexpr size_t kFingercodeLen = 640;
inline constexpr size_t kYearRegionStart = 800;
inline constexpr size_t kDayRegionStart = 1200;
inline constexpr size_t kDateRegionWidth = 400;
inline constexpr int kPivotYear = 1900;
inline constexpr int kMaxYearOffset = 399;

enum class Field { name, gender, pincode, phone, email };

struct FieldSpec {
  Field field;
  const char* label;
  size_t start;      // first slot
  size_t max_chars;  // capacity in characters
  size_t width() const { return max_chars * 8; }
};

inline constexpr std::array<FieldSpec, 5> kFields = {{
    {Field::name, "name", 0, 50},
    {Field::gender, "gender", 400, 1},
    {Field::pincode, "pincode", 408, 6},
    {Field::phone, "phone", 456, 13},
    {Field::email, "email", 560, 30},
}};

inline const FieldSpec& field_spec(Field f) {
  for (const auto& spec : kFields)
    if (spec.field == f) return spec;
  fail(ErrorKind::config, "unknown field");
}

inline std::optional<Field> field_by_label(std::string_view label) {
  for (const auto& spec : kFields)
    if (label == spec.label) return spec.field;
  return std::nullopt;
}

struct UserRecord {
  std::array<u8, 16> user_id{};
  std::string name;
  std::string gender;
  std::string pincode;
  std::string phone;
  std::string email;
  cal::Date dob{};
  std::vector<double> fingercode;  // raw values in [0, 255]
};

// Fingercode elements are quantized to [0, Q] with Q chosen so the squared
// distance plus the threshold can never wrap mod T:
//   640 * Q^2 + beta < T.
struct QuantizationConfig {
  u64 q_max = 0;
  static QuantizationConfig derive(u64 plain_modulus, u64 beta) {
    require(plain_modulus > beta + 1, ErrorKind::config,
            "threshold too large for plaintext modulus");
    u64 budget = (plain_modulus - beta - 1) / kFingercodeLen;
    QuantizationConfig qc;
    qc.q_max = num::isqrt(budget);
    require(qc.q_max >= 1, ErrorKind::config,
            "plaintext modulus leaves no quantization range");
    return qc;
  }
};

// ---- date helpers ----

inline void check_dob_range(const cal::Date& d) {
  require(cal::valid(d), ErrorKind::encoding, "invalid calendar date");
  require(d.year >= kPivotYear, ErrorKind::encoding,
          "date precedes the 1900 pivot");
  require(d.year <= kPivotYear + kMaxYearOffset, ErrorKind::encoding,
          "date beyond representable range");
}

// (y, d) pair of the layout: years since 1900 and ordinal day of year.
struct DatePair {
  int y = 0;
  int d = 0;
};

inline DatePair date_pair(const cal::Date& date) {
  check_dob_range(date);
  return {date.year - kPivotYear, cal::day_of_year(date)};
}

// ---- field bit encoding ----

inline void check_field_value(const FieldSpec& spec, const std::string& value) {
  require(value.size() <= spec.max_chars, ErrorKind::encoding,
          std::string(spec.label) + " exceeds " +
              std::to_string(spec.max_chars) + " characters");
  if (spec.field == Field::gender)
    require(value.size() == 1, ErrorKind::encoding,
            "gender must be exactly one character");
  if (spec.field == Field::pincode) {
    require(value.size() == 6, ErrorKind::encoding,
            "pincode must be exactly six digits");
    for (char c : value)
      require(c >= '0' && c <= '9', ErrorKind::encoding,
              "pincode must be exactly six digits");
  }
  for (char c : value)
    require(c >= 0x20 && c <= 0x7e, ErrorKind::encoding,
            std::string(spec.label) + " contains a non-printable or non-ASCII "
                                      "character");
}

// Writes value's bits (8 per char, MSB first) at slot `start`, zero-padding
// to the field width.
inline void place_field_bits(SlotVector& s, size_t start, size_t width,
                             const std::string& value) {
  for (size_t i = 0; i < width; ++i) s[start + i] = 0;
  for (size_t ci = 0; ci < value.size(); ++ci) {
    u8 byte = static_cast<u8>(value[ci]);
    for (int bit = 0; bit < 8; ++bit)
      s[start + 8 * ci + bit] = (byte >> (7 - bit)) & 1;
  }
}

inline std::string read_field_bits(const SlotVector& s, size_t start,
                                   size_t max_chars) {
  std::string out;
  for (size_t ci = 0; ci < max_chars; ++ci) {
    u8 byte = 0;
    for (int bit = 0; bit < 8; ++bit) {
      u64 v = s[start + 8 * ci + bit];
      require(v <= 1, ErrorKind::decode, "field region holds a non-bit value");
      byte = static_cast<u8>((byte << 1) | v);
    }
    out.push_back(static_cast<char>(byte));
  }
  while (!out.empty() && out.back() == '\0') out.pop_back();
  for (char c : out)
    require(c != '\0', ErrorKind::decode, "embedded NUL inside field value");
  return out;
}

// ---- record-level encoders ----

inline const std::string& field_value(const UserRecord& r, Field f) {
  switch (f) {
    case Field::name: return r.name;
    case Field::gender: return r.gender;
    case Field::pincode: return r.pincode;
    case Field::phone: return r.phone;
    case Field::email: return r.email;
  }
  fail(ErrorKind::config, "unknown field");
}

inline SlotVector encode_demographic(const UserRecord& r, u64 plain_modulus) {
  SlotVector s(kSlotCount, 0);
  for (const auto& spec : kFields) {
    const std::string& value = field_value(r, spec.field);
    check_field_value(spec, value);
    place_field_bits(s, spec.start, spec.width(), value);
  }
  DatePair dp = date_pair(r.dob);
  for (int j = 0; j < static_cast<int>(kDateRegionWidth); ++j)
    s[kYearRegionStart + j] = j < dp.y ? 1 : 0;
  for (size_t j = 0; j < kDateRegionWidth; ++j)
    s[kDayRegionStart + j] = (static_cast<u64>(dp.d) + j) % plain_modulus;
  return s;
}

// The start-aligned form the service provider sends as query data: the
// field's bits at [0, width), zeros elsewhere.
inline SlotVector encode_field_query(Field f, const std::string& value) {
  const FieldSpec& spec = field_spec(f);
  check_field_value(spec, value);
  SlotVector s(kSlotCount, 0);
  place_field_bits(s, 0, spec.width(), value);
  return s;
}

// Date-comparison query encodings: y' in unary at [0,399] and the constant
// vector of d' over [0,399].
struct DobQueryVectors {
  SlotVector y_prime{kSlotCount};
  SlotVector d_prime{kSlotCount};
};

inline DobQueryVectors encode_dob_query_pair(int y_prime, int d_prime) {
  require(y_prime >= 0 && y_prime <= kMaxYearOffset, ErrorKind::encoding,
          "query year outside representable range");
  require(d_prime >= 1 && d_prime <= 366, ErrorKind::encoding,
          "query day-of-year outside [1, 366]");
  DobQueryVectors out;
  out.y_prime = SlotVector(kSlotCount, 0);
  out.d_prime = SlotVector(kSlotCount, 0);
  for (int j = 0; j < y_prime; ++j) out.y_prime[j] = 1;
  for (size_t j = 0; j < kDateRegionWidth; ++j)
    out.d_prime[j] = static_cast<u64>(d_prime);
  return out;
}

// Age-offset form: "born on or before (query date - offset_years)" is asked
// by shifting the query's year count down by the offset while keeping the
// day-of-year, which matches a homomorphic year shift exactly because both
// operate on the (y, d) pair rather than on calendar dates.
inline DobQueryVectors encode_dob_query(const cal::Date& date,
                                        int offset_years = 0) {
  DatePair dp = date_pair(date);
  require(dp.y >= offset_years, ErrorKind::encoding,
          "age offset reaches before the 1900 pivot");
  return encode_dob_query_pair(dp.y - offset_years, dp.d);
}

inline SlotVector encode_fingercode(const std::vector<double>& raw,
                                    const QuantizationConfig& qc) {
  require(raw.size() == kFingercodeLen, ErrorKind::encoding,
          "fingercode must have exactly 640 elements");
  SlotVector s(kSlotCount, 0);
  for (size_t i = 0; i < kFingercodeLen; ++i) {
    double v = raw[i];
    require(std::isfinite(v) && v >= 0.0 && v <= 255.0, ErrorKind::encoding,
            "fingercode element outside [0, 255]");
    // Affine map [0,255] -> [0,Q], round half up.
    s[i] = static_cast<u64>(
        std::floor(v * static_cast<double>(qc.q_max) / 255.0 + 0.5));
  }
  return s;
}

// ---- test-support inverses ----

inline std::string decode_field(const SlotVector& s, Field f) {
  const FieldSpec& spec = field_spec(f);
  return read_field_bits(s, spec.start, spec.max_chars);
}

inline cal::Date decode_dob(const SlotVector& s, u64 plain_modulus) {
  // Unary year: must be y ones followed by zeros.
  int y = 0;
  while (y < static_cast<int>(kDateRegionWidth) &&
         s[kYearRegionStart + y] == 1)
    ++y;
  for (int j = y; j < static_cast<int>(kDateRegionWidth); ++j)
    require(s[kYearRegionStart + j] == 0, ErrorKind::decode,
            "malformed unary year region");
  // Day ramp: slots must be <d, d+1, ...> mod T with d in [1, 366].
  u64 d = s[kDayRegionStart];
  require(d >= 1 && d <= 366, ErrorKind::decode,
          "day-of-year base outside [1, 366]");
  for (size_t j = 0; j < kDateRegionWidth; ++j)
    require(s[kDayRegionStart + j] == (d + j) % plain_modulus,
            ErrorKind::decode, "malformed day-of-year ramp");
  require(static_cast<int>(d) <= cal::days_in_year(kPivotYear + y),
          ErrorKind::decode, "day-of-year invalid for the year");
  return cal::from_day_of_year(kPivotYear + y, static_cast<int>(d));
}

struct DecodedDemographic {
  std::string name, gender, pincode, phone, email;
  cal::Date dob{};
};

inline DecodedDemographic decode_demographic(const SlotVector& s,
                                             u64 plain_modulus) {
  DecodedDemographic out;
  out.name = decode_field(s, Field::name);
  out.gender = decode_field(s, Field::gender);
  out.pincode = decode_field(s, Field::pincode);
  out.phone = decode_field(s, Field::phone);
  out.email = decode_field(s, Field::email);
  out.dob = decode_dob(s, plain_modulus);
  return out;
}

}  // namespace hevid::enc
