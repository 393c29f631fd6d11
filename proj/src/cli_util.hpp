// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared command-line plumbing for the service binaries: the common option
// set (bindable to a config file and the PPID_CONFIG environment variable),
// error-to-exit-code mapping, and signal handling for long-running servers.

#include <csignal>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hevid/capabilities.hpp"
#include "hevid/common.hpp"
#include "hevid/proto/service.hpp"

namespace hevid::cli {

// Registers the shared service options on the top-level app, together with
// `--config FILE` (or PPID_CONFIG=FILE) reading the same long option names
// from a `key = value` file.  Explicit command-line values win over the
// file, which wins over defaults.  Call this before adding subcommands and
// enable `app.fallthrough()` so the shared options may also be written
// after the subcommand name.
inline void add_service_options(CLI::App* cmd, proto::ServiceConfig& cfg) {
  cmd->fallthrough();
  cmd->set_config("--config", "",
                  "configuration file with 'key = value' lines using these "
                  "option names")
      ->envname("PPID_CONFIG");
  cmd->add_option("--security", cfg.security,
                  "security level in bits (128, 192, 256)")
      ->check(CLI::IsMember({128, 192, 256}))
      ->capture_default_str();
  cmd->add_option("--backend", cfg.backend,
                  "'bfv' (encrypted) or 'ref' (plaintext reference)")
      ->check(CLI::IsMember({std::string("bfv"), std::string("ref")}))
      ->capture_default_str();
  cmd->add_option("--beta", cfg.beta, "biometric squared-distance threshold")
      ->capture_default_str();
  cmd->add_option("--tps-address", cfg.tps_address,
                  "token-processing service host:port")
      ->capture_default_str();
  cmd->add_option("--cs-address", cfg.cs_address,
                  "verdict (credential) service host:port")
      ->capture_default_str();
  cmd->add_option("--store-dir", cfg.store_dir,
                  "directory for the token service's ciphertext store")
      ->capture_default_str();
  cmd->add_option("--key-dir", cfg.key_dir, "directory holding the key files")
      ->capture_default_str();
  cmd->add_option("--audit-log", cfg.audit_log,
                  "append audit events to this file (always kept in memory)");
  cmd->add_option("--timeout-ms", cfg.timeout_ms,
                  "network receive/connect timeout in milliseconds")
      ->capture_default_str();
  cmd->add_flag("--backup", cfg.backup,
                "keep an encrypted backup of enrolled vectors");
  cmd->add_option("--backup-dir", cfg.backup_dir,
                  "directory for encrypted enrollment backups")
      ->capture_default_str();
}

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::encoding:
    case ErrorKind::params:
      return 3;
    case ErrorKind::decode:
    case ErrorKind::codec:
    case ErrorKind::key:
      return 4;
    case ErrorKind::transport:
      return 5;
    default:
      return 2;
  }
}

// Runs the tool body and maps failures to the documented exit codes:
//   0 success / PASS        3 configuration, usage, or encoding problem
//   1 query verdict FAIL    4 corrupt or mismatched key/ciphertext data
//   2 protocol or internal  5 network transport failure
inline int guarded_main(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return exit_code_for(e);
  } catch (const CLI::ParseError&) {
    throw;  // handled by the caller via app.exit()
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}

// Long-running servers block SIGINT/SIGTERM in every thread (call this
// before spawning any) and then park the main thread until one arrives.
inline void block_termination_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

inline int wait_for_termination() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

// Prints the capability tags this binary links.  A binary that never links
// the secret-key machinery cannot list (or perform) keygen, decryption, or
// secret-key file access.
inline int print_capabilities() {
  caps::print(std::cout);
  return 0;
}

}  // namespace hevid::cli
