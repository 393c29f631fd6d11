// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// The token-provider-side query evaluators and the credential-service-side
// unified check.
//
// Every evaluator ends with the query-agnostic output transform, so the
// service that decrypts applies one identical predicate regardless of query
// kind: PASS iff slots [0,400) are all zero AND slots [400, 400+beta]
// contain at least one zero.  Demographic matches put their difference bits
// in the prefix and guarantee a witness zero; distance and date comparisons
// keep the prefix clean and produce a witness zero exactly on success.

#include <string>
#include <vector>

#include "hevid/calendar.hpp"
#include "hevid/encoding.hpp"
#include "hevid/gates.hpp"
#include "hevid/he/ops.hpp"

namespace hevid::qry {

enum class QueryKind : u8 {
  name_match = 1,
  gender_match = 2,
  pincode_match = 3,
  phone_match = 4,
  email_match = 5,
  dob_after = 6,
  biometric_match = 7,
};

inline bool is_demographic(QueryKind k) {
  return k >= QueryKind::name_match && k <= QueryKind::email_match;
}

inline size_t payload_count(QueryKind k) {
  return k == QueryKind::dob_after ? 2 : 1;
}

inline const char* kind_label(QueryKind k) {
  switch (k) {
    case QueryKind::name_match: return "name";
    case QueryKind::gender_match: return "gender";
    case QueryKind::pincode_match: return "pincode";
    case QueryKind::phone_match: return "phone";
    case QueryKind::email_match: return "email";
    case QueryKind::dob_after: return "dob-after";
    case QueryKind::biometric_match: return "biometric";
  }
  return "unknown";
}

inline QueryKind kind_from_label(const std::string& label) {
  for (u8 v = 1; v <= 7; ++v)
    if (label == kind_label(static_cast<QueryKind>(v)))
      return static_cast<QueryKind>(v);
  fail(ErrorKind::config, "unknown query kind: " + label);
}

inline enc::Field field_of(QueryKind k) {
  switch (k) {
    case QueryKind::name_match: return enc::Field::name;
    case QueryKind::gender_match: return enc::Field::gender;
    case QueryKind::pincode_match: return enc::Field::pincode;
    case QueryKind::phone_match: return enc::Field::phone;
    case QueryKind::email_match: return enc::Field::email;
    default: fail(ErrorKind::config, "not a demographic query kind");
  }
}

enum class Verdict : u8 { fail = 0, pass = 1 };

struct QueryConfig {
  u64 beta = 3000;

  void validate() const {
    require(beta > 0, ErrorKind::config, "threshold beta must be positive");
    // The witness window [400, 400+beta] must stay inside the vector...
    require(enc::kDateRegionWidth + beta < enc::kSlotCount, ErrorKind::config,
            "threshold beta pushes the witness window past the vector");
    // ...and must cover the date-comparison witness positions [400, 799].
    require(beta + 1 >= enc::kDateRegionWidth, ErrorKind::config,
            "threshold beta must be at least 399 to cover date witnesses");
  }

  size_t witness_begin() const { return enc::kDateRegionWidth; }
  size_t witness_end() const { return enc::kDateRegionWidth + beta; }  // incl.
};

// Plaintext constants an evaluator needs, encoded once per backend + config.
template <class B>
struct EvalCache {
  EvalCache(const B& b, const QueryConfig& cfg_in)
      : cfg(cfg_in), gate_ctx(b) {
    cfg.validate();
    const size_t n = b.slot_count();
    const u64 t = b.plain_modulus();
    require(n == enc::kSlotCount, ErrorKind::params,
            "layout requires 4096 logical slots");

    for (size_t i = 0; i < enc::kFields.size(); ++i) {
      const auto& spec = enc::kFields[i];
      field_mask[i] = b.encode_plain(
          SlotVector::window(n, spec.start, spec.start + spec.width()));
    }
    prefix_mask =
        b.encode_plain(SlotVector::window(n, 0, enc::kDateRegionWidth));
    slot0_mask = b.encode_plain(SlotVector::window(n, 0, 1));

    // Date comparison: ones over [800, 400+beta] keep the witness window
    // nonzero beyond the ramp region.
    {
      SlotVector ones(n, 0);
      for (size_t i = 2 * enc::kDateRegionWidth; i <= cfg.witness_end(); ++i)
        ones[i] = 1;
      dob_tail_ones = b.encode_plain(ones);
    }

    // Threshold: doubling plan for beta+1 copies of the distance.
    copies_pow2 = 1;
    doublings = 0;
    while (copies_pow2 * 2 <= cfg.beta + 1) {
      copies_pow2 *= 2;
      ++doublings;
    }
    remainder = cfg.beta + 1 - copies_pow2;
    if (remainder > 0)
      corr_mask = b.encode_plain(
          SlotVector::window(n, copies_pow2, copies_pow2 + remainder));

    // Combined ramp-minus-threshold constant: slot j in [0, beta] holds
    // (j - beta) mod T, so adding it to <ED, ED, ...> yields ED + j - beta,
    // which is zero exactly at the witness offset j = beta - ED.
    {
      SlotVector ramp(n, 0);
      for (size_t j = 0; j <= cfg.beta; ++j) ramp[j] = (t + j - cfg.beta) % t;
      ramp_minus_beta = b.encode_plain(ramp);
    }

    year_mask = b.encode_plain(SlotVector::window(
        n, enc::kYearRegionStart, enc::kYearRegionStart + enc::kDateRegionWidth));
    minus_year_mask = b.encode_plain(
        SlotVector::window(n, enc::kYearRegionStart,
                           enc::kYearRegionStart + enc::kDateRegionWidth, t - 1));
    day_mask = b.encode_plain(SlotVector::window(
        n, enc::kDayRegionStart, enc::kDayRegionStart + enc::kDateRegionWidth));
    SlotVector not_year(n, 1);
    for (size_t i = enc::kYearRegionStart;
         i < enc::kYearRegionStart + enc::kDateRegionWidth; ++i)
      not_year[i] = 0;
    year_complement_mask = b.encode_plain(not_year);
  }

  QueryConfig cfg;
  gates::GateCtx<B> gate_ctx;
  typename B::EncodedPlainT field_mask[5];
  typename B::EncodedPlainT prefix_mask;  // 1 on [0,400)
  typename B::EncodedPlainT slot0_mask;
  typename B::EncodedPlainT dob_tail_ones;
  typename B::EncodedPlainT corr_mask;
  typename B::EncodedPlainT ramp_minus_beta;
  typename B::EncodedPlainT year_mask;        // 1 on [800,1200)
  typename B::EncodedPlainT minus_year_mask;  // T-1 on [800,1200)
  typename B::EncodedPlainT day_mask;         // 1 on [1200,1600)
  typename B::EncodedPlainT year_complement_mask;
  size_t copies_pow2 = 1;
  size_t doublings = 0;
  size_t remainder = 0;
};

template <class B>
using HV = he::HomomorphicVector<B>;

// ---- Demographic exact match ----
// Isolate the queried field, shift it to the origin, subtract the query,
// then apply the agnostic transform (keep the prefix, clear the witness
// window so a witness zero is always present).
template <class B>
HV<B> tps_demographic_match(const B& b, const EvalCache<B>& c,
                            const HV<B>& demo_enc, enc::Field field,
                            const HV<B>& u_enc) {
  size_t idx = static_cast<size_t>(field);
  const auto& spec = enc::field_spec(field);
  HV<B> iso = he::mul_plain(b, demo_enc, c.field_mask[idx]);
  if (spec.start != 0) iso = he::rotate_left(b, iso, spec.start);
  HV<B> diff = he::sub(b, iso, u_enc);
  return he::mul_plain(b, diff, c.prefix_mask);
}

// ---- Biometric match (squared Euclidean distance + threshold) ----

// Produces <ED, 0, 0, ...> from the two fingercode ciphertexts: square the
// difference, then sum 640 slots with log2-many rotate-and-add doublings.
template <class B>
HV<B> tps_euclidean_distance(const B& b, const EvalCache<B>& c,
                             const HV<B>& u_enc, const HV<B>& bio_enc) {
  HV<B> diff = he::sub(b, u_enc, bio_enc);
  HV<B> sq = he::mul(b, diff, diff);
  // 2^10 = 1024 >= 640: after ten doublings slot 0 holds the full sum.
  for (size_t step = 1; step < 2 * enc::kFingercodeLen; step *= 2)
    sq = he::add(b, sq, he::rotate_left(b, sq, step));
  return he::mul_plain(b, sq, c.slot0_mask);
}

// Builds the ramp <ED, ED+1, ..., ED+beta> - beta over slots [0, beta] and
// moves it into the witness window.  A zero lands at slot 400 + (beta - ED)
// iff ED <= beta.
template <class B>
HV<B> tps_threshold_compare(const B& b, const EvalCache<B>& c,
                            const HV<B>& e_enc) {
  HV<B> acc = e_enc;
  for (size_t j = 0; j < c.doublings; ++j)
    acc = he::add(b, acc, he::rotate_right(b, acc, size_t{1} << j));
  if (c.remainder > 0) {
    HV<B> tail = he::rotate_right(b, acc, c.copies_pow2);
    acc = he::add(b, acc, he::mul_plain(b, tail, c.corr_mask));
  }
  acc = he::add_plain(b, acc, c.ramp_minus_beta);
  return he::rotate_right(b, acc, enc::kDateRegionWidth);
}

template <class B>
HV<B> tps_biometric_match(const B& b, const EvalCache<B>& c,
                          const HV<B>& u_enc, const HV<B>& bio_enc) {
  return tps_threshold_compare(b, c, tps_euclidean_distance(b, c, u_enc, bio_enc));
}

// ---- Date-of-birth comparison ----
// Decides whether the (year-offset, day-of-year) pair carried by the query
// is on-or-after the record's pair, entirely on unary year vectors and the
// day ramp:
//   temp1 = y AND (y XOR y')                nonzero iff record year is later
//   temp2 = (d' - d_ramp) * NOT((y XOR y') AND y')
//           has a zero among [0,399] iff the query passes on day or year
//   out   = temp1 | witness window of temp2 | ones filler.
template <class B>
HV<B> tps_dob_compare(const B& b, const EvalCache<B>& c, const HV<B>& demo_enc,
                      const HV<B>& y_prime_enc, const HV<B>& d_prime_enc) {
  const auto& g = c.gate_ctx;
  // Extract by masking in place and rotating the isolated region to the
  // origin.  Masking the fresh ciphertext first matters for noise: the
  // plaintext multiply scales the (small) fresh noise, and the rotation then
  // only adds the fixed key-switching term instead of having it scaled.
  HV<B> y = he::rotate_left(b, he::mul_plain(b, demo_enc, c.year_mask),
                            enc::kYearRegionStart);
  HV<B> d = he::rotate_left(b, he::mul_plain(b, demo_enc, c.day_mask),
                            enc::kDayRegionStart);
  // Fused NOT(y): (T-1)*y + 1 with the (T-1)-valued mask folded into the
  // extraction multiply, keeping the depth ledger at 1 for this operand.
  HV<B> ny = he::add_plain(
      b,
      he::rotate_left(b, he::mul_plain(b, demo_enc, c.minus_year_mask),
                      enc::kYearRegionStart),
      g.ones);
  HV<B> nyp = gates::gate_not(b, g, y_prime_enc);
  HV<B> nor2 = he::mul(b, ny, nyp);              // NOT y AND NOT y'
  HV<B> either = gates::gate_not(b, g, nor2);    // y OR y'
  HV<B> both = he::mul(b, y, y_prime_enc);       // y AND y'
  HV<B> nboth = gates::gate_not(b, g, both);
  HV<B> xr = he::mul(b, either, nboth);          // y XOR y'
  HV<B> temp1 = he::mul(b, y, xr);
  HV<B> z = he::mul(b, xr, y_prime_enc);
  HV<B> nz = gates::gate_not(b, g, z);
  HV<B> delta = he::sub(b, d_prime_enc, d);
  HV<B> temp2 = he::mul(b, delta, nz);
  HV<B> out =
      he::add(b, temp1, he::rotate_right(b, temp2, enc::kDateRegionWidth));
  return he::add_plain(b, out, c.dob_tail_ones);
}

// Optional primitive for computing an age offset at the evaluator instead of
// at the query encoder: shifts the record's unary year region up by k years
// (prepending k ones), leaving every other region untouched.  Requires
// y + k <= 400 to stay representable.  Not on the default query path.
template <class B>
HV<B> tps_shift_year(const B& b, const EvalCache<B>& c, const HV<B>& demo_enc,
                     size_t k) {
  require(k < enc::kDateRegionWidth, ErrorKind::config,
          "year shift exceeds the unary region");
  if (k == 0) return demo_enc;
  HV<B> year = he::mul_plain(b, demo_enc, c.year_mask);
  HV<B> shifted = he::rotate_right(b, year, k);
  shifted = he::mul_plain(b, shifted, c.year_mask);
  SlotVector head(b.slot_count(), 0);
  for (size_t j = 0; j < k; ++j) head[enc::kYearRegionStart + j] = 1;
  HV<B> rest = he::mul_plain(b, demo_enc, c.year_complement_mask);
  HV<B> out = he::add(b, rest, shifted);
  return he::add_plain(b, out, b.encode_plain(head));
}

// ---- Credential-service side: the unified check ----
// One code path for every query kind; takes no kind parameter at all.
inline Verdict unified_check(const SlotVector& v, const QueryConfig& cfg) {
  for (size_t i = 0; i < enc::kDateRegionWidth; ++i)
    if (v[i] != 0) return Verdict::fail;
  for (size_t i = cfg.witness_begin(); i <= cfg.witness_end(); ++i)
    if (v[i] == 0) return Verdict::pass;
  return Verdict::fail;
}

template <class B>
Verdict cs_extended_decrypt(const B& b, const HV<B>& out_enc,
                            const typename B::SecretKeyT& sk,
                            const QueryConfig& cfg) {
  // `decrypt` is resolved by argument-dependent lookup at the point of
  // instantiation, so this header stays usable in evaluation-only binaries
  // that never pull in the secret-key machinery.
  return unified_check(decrypt(b, out_enc, sk), cfg);
}

// ---- Independent plaintext oracle ----
// Computes the expected verdict directly from plaintext data: string
// equality, calendar comparison (equality passes), or exact squared
// distance against the threshold.  No slot vectors involved.

struct OracleQuery {
  QueryKind kind{};
  std::string text;                // demographic kinds
  cal::Date date{};                // dob_after
  int offset_years = 0;           // dob_after
  std::vector<double> fingercode;  // biometric_match
};

inline Verdict oracle_demographic(const enc::UserRecord& r, enc::Field f,
                                  const std::string& value) {
  return enc::field_value(r, f) == value ? Verdict::pass : Verdict::fail;
}

inline Verdict oracle_dob_after(const enc::UserRecord& r,
                                const cal::Date& query_date,
                                int offset_years) {
  enc::DatePair rec = enc::date_pair(r.dob);
  enc::DatePair q = enc::date_pair(query_date);
  int y_prime = q.y - offset_years;
  if (rec.y != y_prime) return rec.y < y_prime ? Verdict::pass : Verdict::fail;
  return rec.d <= q.d ? Verdict::pass : Verdict::fail;
}

inline Verdict oracle_biometric(const enc::UserRecord& r,
                                const std::vector<double>& query_fc,
                                const enc::QuantizationConfig& qc,
                                const QueryConfig& cfg) {
  SlotVector a = enc::encode_fingercode(r.fingercode, qc);
  SlotVector q = enc::encode_fingercode(query_fc, qc);
  u64 ed = 0;
  for (size_t i = 0; i < enc::kFingercodeLen; ++i) {
    u64 d = a[i] > q[i] ? a[i] - q[i] : q[i] - a[i];
    ed += d * d;
  }
  return ed <= cfg.beta ? Verdict::pass : Verdict::fail;
}

inline Verdict plaintext_oracle(const enc::UserRecord& r, const OracleQuery& q,
                                const enc::QuantizationConfig& qc,
                                const QueryConfig& cfg) {
  if (is_demographic(q.kind))
    return oracle_demographic(r, field_of(q.kind), q.text);
  if (q.kind == QueryKind::dob_after)
    return oracle_dob_after(r, q.date, q.offset_years);
  return oracle_biometric(r, q.fingercode, qc, cfg);
}

}  // namespace hevid::qry
