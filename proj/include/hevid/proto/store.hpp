// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Durable ciphertext store for the token-processing service.  Each enrolled
// user is one file named by the hex user id, holding the demographic
// ciphertext blob immediately followed by the biometric ciphertext blob
// (both self-describing, so the boundary is recoverable).  Writes go to a
// temp file first and are renamed into place so a crash never leaves a
// half-written record under a user id.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "hevid/audit.hpp"
#include "hevid/common.hpp"
#include "hevid/he/ops.hpp"
#include "hevid/proto/wire.hpp"

namespace hevid::proto {

struct StoredUser {
  bytes demo_ct;
  bytes bio_ct;
};

class TpsStore {
 public:
  explicit TpsStore(const std::string& dir, AuditLog* audit = nullptr)
      : dir_(dir), audit_(audit) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    require(std::filesystem::is_directory(dir_), ErrorKind::config,
            "cannot create store directory: " + dir);
  }

  // Returns true if this user id was already enrolled (record replaced).
  bool put(const UserId& uid, const bytes& demo_ct, const bytes& bio_ct) {
    // Validate both blobs before touching disk.
    unwrap_blob(he::kCiphertextMagic, "demographic ciphertext", demo_ct);
    unwrap_blob(he::kCiphertextMagic, "biometric ciphertext", bio_ct);
    const std::string hex = user_hex(uid);
    std::lock_guard<std::mutex> lk(mu_);
    const std::filesystem::path final_path = dir_ / hex;
    const bool existed = std::filesystem::exists(final_path);
    const std::filesystem::path tmp_path = dir_ / (".tmp-" + hex);
    bytes combined;
    combined.reserve(demo_ct.size() + bio_ct.size());
    combined.insert(combined.end(), demo_ct.begin(), demo_ct.end());
    combined.insert(combined.end(), bio_ct.begin(), bio_ct.end());
    write_file(tmp_path.string(), combined);
    std::filesystem::rename(tmp_path, final_path);
    if (audit_) {
      audit_->log((existed ? "enroll-overwrite user=" : "enroll user=") + hex);
    }
    return existed;
  }

  std::optional<StoredUser> get(const UserId& uid) const {
    const std::filesystem::path path = dir_ / user_hex(uid);
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (!std::filesystem::exists(path)) return std::nullopt;
    }
    const bytes combined = read_file(path.string());
    // First blob: header is magic(4) + fingerprint(4) + length(4).
    const UnwrappedBlob first =
        unwrap_blob(he::kCiphertextMagic, "stored demographic ciphertext",
                    combined.data(), combined.size());
    const size_t first_total = 12 + first.len;
    require(first_total < combined.size(), ErrorKind::codec,
            "stored record is missing its biometric ciphertext");
    StoredUser u;
    u.demo_ct.assign(combined.begin(), combined.begin() + first_total);
    u.bio_ct.assign(combined.begin() + first_total, combined.end());
    const UnwrappedBlob second = unwrap_blob(
        he::kCiphertextMagic, "stored biometric ciphertext", u.bio_ct);
    require(12 + second.len == u.bio_ct.size(), ErrorKind::codec,
            "stored record has trailing bytes after the biometric ciphertext");
    return u;
  }

  size_t count() const {
    std::lock_guard<std::mutex> lk(mu_);
    size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_regular_file()) continue;
      if (entry.path().filename().string().rfind(".tmp-", 0) == 0) continue;
      ++n;
    }
    return n;
  }

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  AuditLog* audit_ = nullptr;
  mutable std::mutex mu_;
};

}  // namespace hevid::proto
