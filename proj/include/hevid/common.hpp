// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hevid {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

using bytes = std::vector<u8>;

// Error taxonomy. Every throwing path in the library uses one of these so
// callers (CLI mains in particular) can map failures to distinct exit codes.
enum class ErrorKind {
  config,     // bad configuration / CLI usage
  encoding,   // value does not fit the layout, non-ASCII, bad date, ...
  decode,     // malformed slot vector handed to a decoder
  params,     // parameter mismatch between operands / artifacts
  key,        // missing or unusable key material
  codec,      // bad serialized blob (wrong magic, truncated, ...)
  transport,  // socket-level failure
  protocol,   // well-formed transport, bad message semantics
  integrity,  // ciphertext noise budget exhausted; decryption unsafe
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

// 32-bit FNV-1a; used for parameter fingerprints embedded in serialized
// artifacts.  Not cryptographic and does not need to be.
inline u32 fnv1a32(std::string_view s, u32 h = 0x811c9dc5u) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x01000193u;
  }
  return h;
}

inline std::string to_hex(const u8* data, size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

inline std::string to_hex(const bytes& b) { return to_hex(b.data(), b.size()); }

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline bytes from_hex(std::string_view s) {
  require(s.size() % 2 == 0, ErrorKind::codec, "hex string has odd length");
  bytes out(s.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = hex_nibble(s[2 * i]);
    int lo = hex_nibble(s[2 * i + 1]);
    require(hi >= 0 && lo >= 0, ErrorKind::codec, "bad hex digit");
    out[i] = static_cast<u8>((hi << 4) | lo);
  }
  return out;
}

// Little-endian scalar append / read used by every codec in the project.
inline void put_u32(bytes& out, u32 v) {
  out.push_back(static_cast<u8>(v));
  out.push_back(static_cast<u8>(v >> 8));
  out.push_back(static_cast<u8>(v >> 16));
  out.push_back(static_cast<u8>(v >> 24));
}

inline void put_u64(bytes& out, u64 v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

class ByteReader {
 public:
  ByteReader(const u8* data, size_t len) : p_(data), end_(data + len) {}
  explicit ByteReader(const bytes& b) : ByteReader(b.data(), b.size()) {}

  size_t remaining() const { return static_cast<size_t>(end_ - p_); }

  u8 get_u8() {
    require(remaining() >= 1, ErrorKind::codec, "truncated blob (u8)");
    return *p_++;
  }
  u32 get_u32() {
    require(remaining() >= 4, ErrorKind::codec, "truncated blob (u32)");
    u32 v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<u32>(*p_++) << (8 * i);
    return v;
  }
  u64 get_u64() {
    require(remaining() >= 8, ErrorKind::codec, "truncated blob (u64)");
    u64 v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<u64>(*p_++) << (8 * i);
    return v;
  }
  void get_raw(u8* dst, size_t n) {
    require(remaining() >= n, ErrorKind::codec, "truncated blob (raw)");
    for (size_t i = 0; i < n; ++i) dst[i] = *p_++;
  }
  bytes get_bytes(size_t n) {
    bytes out(n);
    if (n) get_raw(out.data(), n);
    return out;
  }
  void expect_magic(const char tag[4], const char* what) {
    u8 m[4];
    get_raw(m, 4);
    for (int i = 0; i < 4; ++i)
      require(m[i] == static_cast<u8>(tag[i]), ErrorKind::codec,
              std::string("bad magic, expected ") + what);
  }

 private:
  const u8* p_;
  const u8* end_;
};

// Every serialized artifact in the project shares one envelope:
//   magic (4 bytes) | parameter fingerprint (u32 LE) | payload length (u32 LE)
//   | payload.
// The fingerprint covers the full parameter set including the backend tag,
// so artifacts produced under different parameters or a different backend
// are rejected at load time instead of being misinterpreted.
inline bytes wrap_blob(const char magic[4], u32 fp, const bytes& payload) {
  bytes out;
  out.reserve(12 + payload.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<u8>(magic[i]));
  put_u32(out, fp);
  put_u32(out, static_cast<u32>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

struct UnwrappedBlob {
  u32 fp = 0;
  const u8* data = nullptr;
  size_t len = 0;
};

inline UnwrappedBlob unwrap_blob(const char magic[4], const char* what,
                                 const u8* data, size_t len) {
  ByteReader r(data, len);
  r.expect_magic(magic, what);
  UnwrappedBlob u;
  u.fp = r.get_u32();
  u.len = r.get_u32();
  require(r.remaining() >= u.len, ErrorKind::codec,
          std::string(what) + ": truncated payload");
  u.data = data + 12;
  return u;
}

inline UnwrappedBlob unwrap_blob(const char magic[4], const char* what,
                                 const bytes& b) {
  return unwrap_blob(magic, what, b.data(), b.size());
}

inline bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::config, "cannot open file: " + path);
  bytes out((std::istreambuf_iterator<char>(in)),
            std::istreambuf_iterator<char>());
  require(static_cast<bool>(in) || in.eof(), ErrorKind::config,
          "error while reading file: " + path);
  return out;
}

inline void write_file(const std::string& path, const bytes& data) {
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
    std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::config,
          "cannot create file: " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  require(static_cast<bool>(out), ErrorKind::config,
          "error while writing file: " + path);
}

inline void write_file(const std::string& path, const std::string& data) {
  bytes b(data.begin(), data.end());
  write_file(path, b);
}

}  // namespace hevid
