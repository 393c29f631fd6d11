// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
//
// Encrypted-backend suite: roundtrips, homomorphism, rotation keys, noise
// behaviour, serialization, key I/O, and ref/bfv backend equivalence on
// randomized straight-line programs.  Key generation is expensive, so each
// parameter set is generated once and shared across test cases.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hevid/encoding.hpp"
#include "hevid/gates.hpp"
#include "hevid/he/ops.hpp"
#include "hevid/he/secret.hpp"
#include "hevid/params.hpp"
#include "hevid/queries.hpp"
#include "hevid/slots.hpp"

using namespace hevid;

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

template <class B>
struct Fixture {
  explicit Fixture(SecurityLevel sec, u64 seed)
      : b(select_params(sec)), rng(ChaChaRng::from_seed(seed)) {
    km = he::keygen(b, rng);
    b.set_relin_keys(km.relin);
    b.set_galois_keys(km.galois);
  }
  B b;
  ChaChaRng rng;
  he::KeyMaterial<B> km;
};

Fixture<bfv::Backend>& bfv128() {
  static Fixture<bfv::Backend> f(SecurityLevel::bits128, 0xb128);
  return f;
}

Fixture<bfv::Backend>& bfv192() {
  static Fixture<bfv::Backend> f(SecurityLevel::bits192, 0xb192);
  return f;
}

Fixture<ref::Backend>& ref128() {
  static Fixture<ref::Backend> f(SecurityLevel::bits128, 0xb128);
  return f;
}

SlotVector random_slots(ChaChaRng& rng, size_t n, u64 t) {
  SlotVector s(n);
  for (size_t i = 0; i < n; ++i) s[i] = rng.below(t);
  return s;
}

enc::UserRecord sample_record() {
  enc::UserRecord r;
  r.user_id = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  r.name = "Meera Krishnan";
  r.gender = "F";
  r.pincode = "560100";
  r.phone = "+915551234567";
  r.email = "meera@example.org";
  r.dob = {1994, 11, 23};
  r.fingercode.resize(enc::kFingercodeLen);
  for (size_t i = 0; i < r.fingercode.size(); ++i)
    r.fingercode[i] = static_cast<double>((i * 53 + 11) % 256);
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// encrypt/decrypt roundtrips
// ---------------------------------------------------------------------------

TEST_CASE("bfv roundtrips preserve arbitrary slot vectors") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  const u64 t = b.plain_modulus();
  REQUIRE(n == 4096);
  REQUIRE(t == 4079617);

  // Edge vectors: zero, all T-1, single slot, alternating.
  for (const SlotVector& s :
       {SlotVector(n, 0), SlotVector(n, t - 1), SlotVector::window(n, 17, 18, 5),
        [&] {
          SlotVector v(n);
          for (size_t i = 0; i < n; ++i) v[i] = (i & 1) ? t - 1 : 0;
          return v;
        }()}) {
    auto ct = he::encrypt(b, f.km.pk, s, f.rng);
    REQUIRE(he::decrypt(b, ct, f.km.sk) == s);
  }

  ChaChaRng rng = ChaChaRng::from_seed(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const SlotVector s = random_slots(rng, n, t);
    auto ct = he::encrypt(b, f.km.pk, s, f.rng);
    REQUIRE(he::decrypt(b, ct, f.km.sk) == s);
  }

  // Fresh ciphertexts carry a healthy noise budget.
  auto fresh = he::encrypt(b, f.km.pk, SlotVector(n, 1), f.rng);
  REQUIRE(he::noise_budget(b, fresh, f.km.sk) > 100);
}

TEST_CASE("bfv homomorphism matches slotwise arithmetic") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  const u64 t = b.plain_modulus();
  ChaChaRng rng = ChaChaRng::from_seed(22);

  for (int trial = 0; trial < 40; ++trial) {
    const SlotVector x = random_slots(rng, n, t);
    const SlotVector y = random_slots(rng, n, t);
    auto ex = he::encrypt(b, f.km.pk, x, f.rng);
    auto ey = he::encrypt(b, f.km.pk, y, f.rng);

    const SlotVector got_add = he::decrypt(b, he::add(b, ex, ey), f.km.sk);
    const SlotVector got_sub = he::decrypt(b, he::sub(b, ex, ey), f.km.sk);
    const SlotVector got_neg = he::decrypt(b, he::negate(b, ex), f.km.sk);
    const SlotVector got_mul = he::decrypt(b, he::mul(b, ex, ey), f.km.sk);
    const SlotVector got_mp =
        he::decrypt(b, he::mul_plain(b, ex, b.encode_plain(y)), f.km.sk);
    const SlotVector got_ap =
        he::decrypt(b, he::add_plain(b, ex, b.encode_plain(y)), f.km.sk);
    const SlotVector got_sp =
        he::decrypt(b, he::sub_plain(b, ex, b.encode_plain(y)), f.km.sk);

    for (size_t i = 0; i < n; ++i) {
      REQUIRE(got_add[i] == num::add_mod(x[i], y[i], t));
      REQUIRE(got_sub[i] == num::sub_mod(x[i], y[i], t));
      REQUIRE(got_neg[i] == (x[i] ? t - x[i] : 0));
      REQUIRE(got_mul[i] == num::mul_mod(x[i], y[i], t));
      REQUIRE(got_mp[i] == num::mul_mod(x[i], y[i], t));
      REQUIRE(got_ap[i] == num::add_mod(x[i], y[i], t));
      REQUIRE(got_sp[i] == num::sub_mod(x[i], y[i], t));
    }
  }
}

// ---------------------------------------------------------------------------
// rotations
// ---------------------------------------------------------------------------

TEST_CASE("bfv rotations obey the group laws") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  const u64 t = b.plain_modulus();
  ChaChaRng rng = ChaChaRng::from_seed(23);
  const SlotVector x = random_slots(rng, n, t);
  auto ex = he::encrypt(b, f.km.pk, x, f.rng);

  auto rotated_left = [&](const SlotVector& v, size_t step) {
    SlotVector out(n);
    for (size_t i = 0; i < n; ++i) out[i] = v[(i + step) % n];
    return out;
  };

  // Named steps with dedicated keys, including the layout's field offsets.
  for (size_t step : {size_t{1}, size_t{2}, size_t{400}, size_t{408},
                      size_t{456}, size_t{560}, size_t{800}, size_t{1200},
                      size_t{2048}}) {
    const SlotVector got = he::decrypt(b, he::rotate_left(b, ex, step), f.km.sk);
    REQUIRE(got == rotated_left(x, step));
  }
  // Right rotation with a dedicated key and via the composed path.
  for (size_t step : {size_t{400}, size_t{7}, size_t{1}}) {
    const SlotVector got =
        he::decrypt(b, he::rotate_right(b, ex, step), f.km.sk);
    REQUIRE(got == rotated_left(x, n - step));
  }
  // Composed step without a direct key (7 = 1 + 2 + 4).
  const SlotVector got7 = he::decrypt(b, he::rotate_left(b, ex, 7), f.km.sk);
  REQUIRE(got7 == rotated_left(x, 7));

  // Identity and inverse laws.
  REQUIRE(he::decrypt(b, he::rotate_left(b, ex, 0), f.km.sk) == x);
  REQUIRE(he::decrypt(b, he::rotate_left(b, ex, n), f.km.sk) == x);
  auto there_and_back =
      he::rotate_right(b, he::rotate_left(b, ex, 408), 408);
  REQUIRE(he::decrypt(b, there_and_back, f.km.sk) == x);
  // left a then left b == left (a+b).
  auto ab = he::rotate_left(b, he::rotate_left(b, ex, 400), 8);
  REQUIRE(he::decrypt(b, ab, f.km.sk) == rotated_left(x, 408));

  // Depth ledger: rotations are depth-free.
  REQUIRE(he::rotate_left(b, ex, 400).mult_depth == ex.mult_depth);
}

TEST_CASE("operations without their keys are rejected") {
  auto& f = bfv128();
  bfv::Backend bare(select_params(SecurityLevel::bits128));  // no keys installed
  const size_t n = bare.slot_count();
  auto ct = he::encrypt(bare, f.km.pk, SlotVector(n, 1), f.rng);
  REQUIRE(error_kind([&] { he::rotate_left(bare, ct, 1); }) == ErrorKind::key);
  REQUIRE(error_kind([&] { he::mul(bare, ct, ct); }) == ErrorKind::key);
  // Additions and plaintext operations need no evaluation keys.
  REQUIRE_FALSE(error_kind([&] { he::add(bare, ct, ct); }));
  REQUIRE_FALSE(error_kind(
      [&] { he::mul_plain(bare, ct, bare.encode_plain_const(2)); }));
}

TEST_CASE("plaintext masks isolate slot regions") {
  auto& f = bfv128();
  const auto& b = f.b;
  const enc::UserRecord r = sample_record();
  auto demo = he::encrypt(b, f.km.pk,
                          enc::encode_demographic(r, b.plain_modulus()), f.rng);
  const auto mask = b.encode_plain(SlotVector::window(b.slot_count(), 408, 456));
  const SlotVector got = he::decrypt(b, he::mul_plain(b, demo, mask), f.km.sk);
  const SlotVector full = enc::encode_demographic(r, b.plain_modulus());
  for (size_t i = 0; i < got.size(); ++i)
    REQUIRE(got[i] == (i >= 408 && i < 456 ? full[i] : 0));
}

// ---------------------------------------------------------------------------
// noise behaviour
// ---------------------------------------------------------------------------

TEST_CASE("mul_plain by the constant one is almost free in noise") {
  auto& f = bfv128();
  const auto& b = f.b;
  auto ct = he::encrypt(b, f.km.pk, SlotVector(b.slot_count(), 123), f.rng);
  const int before = he::noise_budget(b, ct, f.km.sk);
  auto after_ct = he::mul_plain(b, ct, b.encode_plain_const(1));
  const int after = he::noise_budget(b, after_ct, f.km.sk);
  REQUIRE(before - after <= 2);
  REQUIRE(he::decrypt(b, after_ct, f.km.sk) ==
          SlotVector(b.slot_count(), 123));
}

TEST_CASE("deep circuits exhaust the budget detectably") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  auto ct = he::encrypt(b, f.km.pk, SlotVector(n, 2), f.rng);

  // Repeated squaring: the budget must decrease monotonically and the
  // decryptor must refuse (integrity error) once it reaches zero rather than
  // returning wrong values silently.
  u64 value = 2;
  const u64 t = b.plain_modulus();
  int prev_budget = he::noise_budget(b, ct, f.km.sk);
  bool exhausted = false;
  for (int depth = 1; depth <= 12; ++depth) {
    ct = he::mul(b, ct, ct);
    value = num::mul_mod(value, value, t);
    const int budget = he::noise_budget(b, ct, f.km.sk);
    REQUIRE(budget <= prev_budget);
    prev_budget = budget;
    if (budget > 0) {
      REQUIRE(he::decrypt(b, ct, f.km.sk) == SlotVector(n, value));
    } else {
      REQUIRE(error_kind([&] { he::decrypt(b, ct, f.km.sk); }) ==
              ErrorKind::integrity);
      exhausted = true;
      break;
    }
  }
  REQUIRE(exhausted);
}

TEST_CASE("the depth-7 date circuit survives at 128-bit parameters") {
  auto& f = bfv128();
  const auto& b = f.b;
  qry::QueryConfig cfg;
  const qry::EvalCache<bfv::Backend> cache(b, cfg);
  const enc::UserRecord r = sample_record();

  auto demo = he::encrypt(b, f.km.pk,
                          enc::encode_demographic(r, b.plain_modulus()), f.rng);
  const enc::DobQueryVectors qv = enc::encode_dob_query({2010, 1, 1}, 0);
  auto y = he::encrypt(b, f.km.pk, qv.y_prime, f.rng);
  auto d = he::encrypt(b, f.km.pk, qv.d_prime, f.rng);
  auto out = qry::tps_dob_compare(b, cache, demo, y, d);
  REQUIRE(out.mult_depth == 7);
  REQUIRE(he::noise_budget(b, out, f.km.sk) > 0);
  REQUIRE(qry::cs_extended_decrypt(b, out, f.km.sk, cfg) ==
          qry::oracle_dob_after(r, {2010, 1, 1}, 0));
}

TEST_CASE("the depth-7 date circuit exhausts the 192-bit budget") {
  // The 192-bit coefficient modulus (152 bits) cannot carry the depth-7
  // comparison; the decryptor must flag it rather than return garbage.
  auto& f = bfv192();
  const auto& b = f.b;
  qry::QueryConfig cfg;
  const qry::EvalCache<bfv::Backend> cache(b, cfg);
  const enc::UserRecord r = sample_record();

  auto demo = he::encrypt(b, f.km.pk,
                          enc::encode_demographic(r, b.plain_modulus()), f.rng);
  const enc::DobQueryVectors qv = enc::encode_dob_query({2010, 1, 1}, 0);
  auto y = he::encrypt(b, f.km.pk, qv.y_prime, f.rng);
  auto d = he::encrypt(b, f.km.pk, qv.d_prime, f.rng);
  auto out = qry::tps_dob_compare(b, cache, demo, y, d);
  REQUIRE(he::noise_budget(b, out, f.km.sk) == 0);
  REQUIRE(error_kind([&] { he::decrypt(b, out, f.km.sk); }) ==
          ErrorKind::integrity);

  // Shallow circuits still work at 192-bit.
  auto q = he::encrypt(
      b, f.km.pk, enc::encode_field_query(enc::Field::gender, "F"), f.rng);
  auto match = qry::tps_demographic_match(b, cache, demo, enc::Field::gender, q);
  REQUIRE(qry::cs_extended_decrypt(b, match, f.km.sk, cfg) ==
          qry::Verdict::pass);
}

// ---------------------------------------------------------------------------
// serialization and key files
// ---------------------------------------------------------------------------

TEST_CASE("ciphertext serialization roundtrips and rejects damage") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  ChaChaRng rng = ChaChaRng::from_seed(24);
  const SlotVector x = random_slots(rng, n, b.plain_modulus());
  auto ex = he::encrypt(b, f.km.pk, x, f.rng);
  auto prod = he::mul(b, ex, ex);  // nonzero depth ledger

  const bytes blob = he::serialize(b, prod);
  auto back = he::deserialize(b, blob);
  REQUIRE(back.mult_depth == prod.mult_depth);
  REQUIRE(he::decrypt(b, back, f.km.sk) == he::decrypt(b, prod, f.km.sk));

  bytes trunc(blob.begin(), blob.end() - 7);
  REQUIRE(error_kind([&] { he::deserialize(b, trunc); }) == ErrorKind::codec);

  bytes corrupt = blob;
  corrupt[0] ^= 0xff;  // magic
  REQUIRE(error_kind([&] { he::deserialize(b, corrupt); }) == ErrorKind::codec);

  // Parameter fingerprint mismatch: 128-bit blob into a 192-bit backend.
  auto& g = bfv192();
  REQUIRE(error_kind([&] { he::deserialize(g.b, blob); }) == ErrorKind::codec);

  // Backend mismatch: reference blob into the encrypted backend.
  auto& r = ref128();
  auto ref_ct = he::encrypt(r.b, r.km.pk, SlotVector(n, 3), r.rng);
  const bytes ref_blob = he::serialize(r.b, ref_ct);
  REQUIRE(error_kind([&] { he::deserialize(b, ref_blob); }) == ErrorKind::codec);
}

TEST_CASE("serialized sizes at 192-bit match the published footprint") {
  auto& f = bfv192();
  const auto& b = f.b;
  const enc::UserRecord r = sample_record();
  const u64 beta = 3000;
  const enc::QuantizationConfig qc =
      enc::QuantizationConfig::derive(b.plain_modulus(), beta);

  auto demo = he::encrypt(b, f.km.pk,
                          enc::encode_demographic(r, b.plain_modulus()), f.rng);
  auto bio = he::encrypt(b, f.km.pk, enc::encode_fingercode(r.fingercode, qc),
                         f.rng);
  const size_t demo_bytes = he::serialize(b, demo).size();
  const size_t bio_bytes = he::serialize(b, bio).size();

  // Published reference: 432 KB per data vector, 0.864 MB per enrolled user.
  const double vector_budget = 3.0 * 432.0 * 1024.0;
  const double user_budget = 3.0 * 0.864 * 1024.0 * 1024.0;
  REQUIRE(static_cast<double>(demo_bytes) <= vector_budget);
  REQUIRE(static_cast<double>(bio_bytes) <= vector_budget);
  REQUIRE(static_cast<double>(demo_bytes + bio_bytes) <= user_budget);
}

TEST_CASE("key files roundtrip through disk and demand an audit sink") {
  namespace fs = std::filesystem;
  auto& f = bfv128();
  const auto& b = f.b;
  const fs::path dir = fs::temp_directory_path() / "hevid-keyio-test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };

  he::save_public_key(b, f.km.pk, p("pk.bin"));
  he::save_relin_keys(b, f.km.relin, p("rk.bin"));
  he::save_galois_keys(b, f.km.galois, p("gk.bin"));

  std::vector<std::string> audit_lines;
  he::AuditSink sink = [&](const std::string& s) { audit_lines.push_back(s); };
  he::save_secret_key(b, f.km.sk, p("sk.bin"), sink);
  REQUIRE(audit_lines.size() == 1);
  REQUIRE(audit_lines[0].find("secret-key-export") != std::string::npos);

  // Fresh backend instance loads everything and interoperates.
  bfv::Backend b2(select_params(SecurityLevel::bits128));
  auto pk2 = he::load_public_key(b2, p("pk.bin"));
  he::load_evaluation_keys(b2, p("rk.bin"), p("gk.bin"));
  auto sk2 = he::load_secret_key(b2, p("sk.bin"), sink);
  REQUIRE(audit_lines.size() == 2);
  REQUIRE(audit_lines[1].find("secret-key-load") != std::string::npos);

  const SlotVector x(b2.slot_count(), 77);
  auto ct = he::encrypt(b2, pk2, x, f.rng);
  auto rot = he::rotate_left(b2, he::mul(b2, ct, ct), 400);
  SlotVector want(b2.slot_count(), 0);
  for (size_t i = 0; i < want.size(); ++i)
    want[i] = num::mul_mod(77, 77, b2.plain_modulus());
  REQUIRE(he::decrypt(b2, rot, sk2) == want);
  // Keys generated by one instance decrypt ciphertexts of the other.
  REQUIRE(he::decrypt(b, ct, f.km.sk) == x);

  // Secret-key I/O without an audit sink is a configuration error.
  REQUIRE(error_kind([&] {
            he::save_secret_key(b, f.km.sk, p("sk2.bin"), he::AuditSink{});
          }) == ErrorKind::config);
  REQUIRE(error_kind([&] {
            he::load_secret_key(b, p("sk.bin"), he::AuditSink{});
          }) == ErrorKind::config);

  // Wrong-parameter loads are rejected.
  auto& g = bfv192();
  REQUIRE(error_kind([&] { he::load_public_key(g.b, p("pk.bin")); }) ==
          ErrorKind::codec);
  REQUIRE(error_kind([&] { he::load_secret_key(g.b, p("sk.bin"), sink); }) ==
          ErrorKind::codec);

  fs::remove_all(dir);
}

TEST_CASE("independent keygen runs produce different key material") {
  auto& f = bfv128();
  ChaChaRng rng = ChaChaRng::from_seed(0xd1ff);
  const auto km2 = he::keygen(f.b, rng);
  REQUIRE(bfv::serialize_public_key(f.km.pk) !=
          bfv::serialize_public_key(km2.pk));
  REQUIRE(he::secret_key_payload(f.km.sk) != he::secret_key_payload(km2.sk));
  // The second key set is itself consistent.
  auto ct = he::encrypt(f.b, km2.pk, SlotVector(f.b.slot_count(), 9), f.rng);
  REQUIRE(he::decrypt(f.b, ct, km2.sk) == SlotVector(f.b.slot_count(), 9));
  // ...and the fixture key cannot decrypt it: the mismatched phase looks
  // like exhausted noise, so the decryptor refuses.
  REQUIRE(error_kind([&] { he::decrypt(f.b, ct, f.km.sk); }) ==
          ErrorKind::integrity);
}

TEST_CASE("encryption under a foreign-parameter public key is rejected") {
  auto& f = bfv128();
  auto& g = bfv192();
  REQUIRE(error_kind([&] {
            he::encrypt(g.b, f.km.pk, SlotVector(g.b.slot_count(), 0), f.rng);
          }) == ErrorKind::params);
}

// ---------------------------------------------------------------------------
// gates on the encrypted backend
// ---------------------------------------------------------------------------

TEST_CASE("gates compute correct truth tables under encryption") {
  auto& f = bfv128();
  const auto& b = f.b;
  const size_t n = b.slot_count();
  gates::GateCtx<bfv::Backend> g(b);

  SlotVector av(n), xv(n);
  for (size_t i = 0; i < n; ++i) {
    av[i] = i & 1;
    xv[i] = (i >> 1) & 1;
  }
  auto ea = he::encrypt(b, f.km.pk, av, f.rng);
  auto ex = he::encrypt(b, f.km.pk, xv, f.rng);

  const auto dnot = he::decrypt(b, gates::gate_not(b, g, ea), f.km.sk);
  const auto dand = he::decrypt(b, gates::gate_and(b, g, ea, ex), f.km.sk);
  const auto dor = he::decrypt(b, gates::gate_or(b, g, ea, ex), f.km.sk);
  const auto dxor = he::decrypt(b, gates::gate_xor(b, g, ea, ex), f.km.sk);
  for (size_t i = 0; i < n; ++i) {
    REQUIRE(dnot[i] == 1 - av[i]);
    REQUIRE(dand[i] == (av[i] & xv[i]));
    REQUIRE(dor[i] == (av[i] | xv[i]));
    REQUIRE(dxor[i] == (av[i] ^ xv[i]));
  }
}

// ---------------------------------------------------------------------------
// backend equivalence
// ---------------------------------------------------------------------------

namespace {

// One straight-line program interpreted over a backend.  All structural
// decisions come from `prog` (shared across backends); encryption randomness
// comes from `enc_rng` (backend-specific).  Returns the decrypted value and
// depth ledger of every node.
template <class B>
void run_program(const Fixture<B>& f, u64 seed,
                 std::vector<SlotVector>* values, std::vector<u32>* depths) {
  const auto& b = f.b;
  const size_t n = b.slot_count();
  const u64 t = b.plain_modulus();
  ChaChaRng prog = ChaChaRng::from_seed(seed, 0x9009);
  ChaChaRng enc_rng = ChaChaRng::from_seed(seed, 0xe0c);

  std::vector<he::HomomorphicVector<B>> nodes;
  for (int i = 0; i < 3; ++i)
    nodes.push_back(he::encrypt(b, f.km.pk, random_slots(prog, n, t), enc_rng));

  const size_t steps = 40 + prog.below(21);  // up to ~60 ops
  size_t ct_muls = 0, plain_muls = 0;
  for (size_t s = 0; s < steps; ++s) {
    const size_t a = prog.below(nodes.size());
    const size_t c = prog.below(nodes.size());
    const u64 op = prog.below(9);
    switch (op) {
      case 0:
        nodes.push_back(he::add(b, nodes[a], nodes[c]));
        break;
      case 1:
        nodes.push_back(he::sub(b, nodes[a], nodes[c]));
        break;
      case 2:
        nodes.push_back(he::negate(b, nodes[a]));
        break;
      case 3: {
        // Ciphertext multiply, bounded for noise headroom.
        if (ct_muls >= 3 ||
            std::max(nodes[a].mult_depth, nodes[c].mult_depth) >= 3) {
          nodes.push_back(he::add(b, nodes[a], nodes[c]));
        } else {
          nodes.push_back(he::mul(b, nodes[a], nodes[c]));
          ++ct_muls;
        }
        break;
      }
      case 4: {
        // Plaintext multiply with small coefficients: large random
        // multipliers would scale the noise past the budget when combined
        // with the ciphertext multiplies below.
        if (plain_muls >= 3) {
          nodes.push_back(he::add(b, nodes[a], nodes[c]));
        } else {
          nodes.push_back(he::mul_plain(
              b, nodes[a], b.encode_plain(random_slots(prog, n, 1024))));
          ++plain_muls;
        }
        break;
      }
      case 5:
        nodes.push_back(
            he::add_plain(b, nodes[a], b.encode_plain(random_slots(prog, n, t))));
        break;
      case 6:
        nodes.push_back(
            he::sub_plain(b, nodes[a], b.encode_plain(random_slots(prog, n, t))));
        break;
      case 7:
        nodes.push_back(he::rotate_left(b, nodes[a], prog.below(n)));
        break;
      case 8:
        nodes.push_back(he::rotate_right(b, nodes[a], prog.below(n)));
        break;
    }
  }

  values->clear();
  depths->clear();
  for (const auto& node : nodes) {
    values->push_back(he::decrypt(b, node, f.km.sk));
    depths->push_back(node.mult_depth);
  }
}

}  // namespace

TEST_CASE("reference and encrypted backends agree on random programs") {
  auto& fb = bfv128();
  auto& fr = ref128();
  for (u64 seed = 1; seed <= 25; ++seed) {
    std::vector<SlotVector> vb, vr;
    std::vector<u32> db, dr;
    run_program(fb, seed, &vb, &db);
    run_program(fr, seed, &vr, &dr);
    REQUIRE(vb.size() == vr.size());
    REQUIRE(db == dr);
    for (size_t i = 0; i < vb.size(); ++i) REQUIRE(vb[i] == vr[i]);
  }
}

TEST_CASE("every evaluator agrees across backends on a shared input") {
  auto& fb = bfv128();
  auto& fr = ref128();
  qry::QueryConfig cfg;
  const qry::EvalCache<bfv::Backend> cb(fb.b, cfg);
  const qry::EvalCache<ref::Backend> cr(fr.b, cfg);
  const u64 t = fb.b.plain_modulus();
  const enc::QuantizationConfig qc = enc::QuantizationConfig::derive(t, cfg.beta);
  const enc::UserRecord r = sample_record();

  ChaChaRng rb = ChaChaRng::from_seed(31);
  ChaChaRng rr = ChaChaRng::from_seed(31);

  const SlotVector demo_pt = enc::encode_demographic(r, t);
  auto demo_b = he::encrypt(fb.b, fb.km.pk, demo_pt, rb);
  auto demo_r = he::encrypt(fr.b, fr.km.pk, demo_pt, rr);

  // Demographic kinds.
  for (enc::Field field : {enc::Field::name, enc::Field::gender,
                           enc::Field::pincode, enc::Field::phone,
                           enc::Field::email}) {
    const SlotVector q_pt =
        enc::encode_field_query(field, enc::field_value(r, field));
    auto qb = he::encrypt(fb.b, fb.km.pk, q_pt, rb);
    auto qr = he::encrypt(fr.b, fr.km.pk, q_pt, rr);
    auto ob = qry::tps_demographic_match(fb.b, cb, demo_b, field, qb);
    auto orf = qry::tps_demographic_match(fr.b, cr, demo_r, field, qr);
    REQUIRE(he::decrypt(fb.b, ob, fb.km.sk) == he::decrypt(fr.b, orf, fr.km.sk));
    REQUIRE(ob.mult_depth == orf.mult_depth);
  }

  // Date comparison.
  const enc::DobQueryVectors qv = enc::encode_dob_query({2012, 6, 30}, 18);
  auto yb = he::encrypt(fb.b, fb.km.pk, qv.y_prime, rb);
  auto db_ = he::encrypt(fb.b, fb.km.pk, qv.d_prime, rb);
  auto yr = he::encrypt(fr.b, fr.km.pk, qv.y_prime, rr);
  auto dr_ = he::encrypt(fr.b, fr.km.pk, qv.d_prime, rr);
  auto dob_b = qry::tps_dob_compare(fb.b, cb, demo_b, yb, db_);
  auto dob_r = qry::tps_dob_compare(fr.b, cr, demo_r, yr, dr_);
  REQUIRE(he::decrypt(fb.b, dob_b, fb.km.sk) ==
          he::decrypt(fr.b, dob_r, fr.km.sk));

  // Biometric.
  const SlotVector bio_pt = enc::encode_fingercode(r.fingercode, qc);
  std::vector<double> probe = r.fingercode;
  probe[0] = probe[0] < 128.0 ? probe[0] + 40.0 : probe[0] - 40.0;
  const SlotVector probe_pt = enc::encode_fingercode(probe, qc);
  auto bio_b = he::encrypt(fb.b, fb.km.pk, bio_pt, rb);
  auto pr_b = he::encrypt(fb.b, fb.km.pk, probe_pt, rb);
  auto bio_r = he::encrypt(fr.b, fr.km.pk, bio_pt, rr);
  auto pr_r = he::encrypt(fr.b, fr.km.pk, probe_pt, rr);
  auto out_b = qry::tps_biometric_match(fb.b, cb, pr_b, bio_b);
  auto out_r = qry::tps_biometric_match(fr.b, cr, pr_r, bio_r);
  REQUIRE(he::decrypt(fb.b, out_b, fb.km.sk) ==
          he::decrypt(fr.b, out_r, fr.km.sk));
}
