// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <set>
#include <string>

namespace hevid::caps {

// Process-wide capability registry.  Headers that grant a sensitive ability
// (decryption, secret-key I/O, ...) plant a registration tag; the tag's
// constructor runs during static initialization of any binary whose
// translation units include that header.  A binary therefore advertises
// exactly the capabilities it was built with, and the service binaries
// expose the list via --capabilities so tests can assert, for example, that
// the evaluation service carries no decryption path.
inline std::set<std::string>& registry() {
  static std::set<std::string> r;
  return r;
}

struct Tag {
  explicit Tag(const char* name) { registry().insert(name); }
};

inline void print(std::ostream& os) {
  for (const auto& c : registry()) os << c << "\n";
}

inline bool has(const std::string& name) {
  return registry().count(name) != 0;
}

}  // namespace hevid::caps
