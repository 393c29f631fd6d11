// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Append-only audit log shared by the services.  Every security-relevant
// event (secret-key file access, enrollment overwrites, replayed results,
// verdicts) is recorded with a UTC timestamp.  The log always keeps an
// in-memory copy so tests can assert on it; optionally it also appends to a
// file so long-running services leave a durable trail.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "hevid/common.hpp"

namespace hevid {

class AuditLog {
 public:
  AuditLog() = default;

  // An empty path keeps the log in memory only.
  explicit AuditLog(const std::string& path) : path_(path) {
    if (path.empty()) return;
    namespace fs = std::filesystem;
    std::error_code ec;
    const fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    file_.open(path, std::ios::app);
    require(file_.is_open(), ErrorKind::config,
            "cannot open audit log for append: " + path);
  }

  void log(std::string_view event) {
    const std::string line = timestamp() + " " + std::string(event);
    std::lock_guard<std::mutex> lk(mu_);
    mem_.push_back(line);
    if (file_.is_open()) {
      file_ << line << '\n';
      file_.flush();
    }
  }

  std::vector<std::string> entries() const {
    std::lock_guard<std::mutex> lk(mu_);
    return mem_;
  }

  bool contains(std::string_view needle) const {
    std::lock_guard<std::mutex> lk(mu_);
    for (const auto& line : mem_)
      if (line.find(needle) != std::string::npos) return true;
    return false;
  }

  // Adapter for APIs that take a plain callback (e.g. secret-key file I/O).
  std::function<void(const std::string&)> sink() {
    return [this](const std::string& event) { log(event); };
  }

 private:
  static std::string timestamp() {
    using namespace std::chrono;
    const auto now = system_clock::now();
    const std::time_t secs = system_clock::to_time_t(now);
    const auto ms = duration_cast<milliseconds>(now.time_since_epoch()) % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, static_cast<int>(ms.count()));
    return buf;
  }

  mutable std::mutex mu_;
  std::vector<std::string> mem_;
  std::string path_;
  std::ofstream file_;
};

}  // namespace hevid
