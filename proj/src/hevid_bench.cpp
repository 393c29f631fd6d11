// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0

// hevid-bench — single-threaded timing of keygen, every query kind's
// homomorphic evaluation, and the verdict-side decrypt+check, reported
// alongside the published reference numbers.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "cli_util.hpp"
#include "hevid/bench.hpp"

using namespace hevid;

int main(int argc, char** argv) {
  CLI::App app{
      "benchmark: times every query kind single-threaded and compares "
      "against the published reference numbers"};
  bool caps_flag = false;
  app.add_flag("--capabilities", caps_flag,
               "print the cryptographic capability tags this binary links, "
               "then exit");
  int security = 128;
  std::string backend = "bfv";
  u64 beta = 3000;
  int iterations = 100;
  std::string json_path;
  app.add_option("--security", security,
                 "security level in bits (128, 192, 256)")
      ->check(CLI::IsMember({128, 192, 256}))
      ->capture_default_str();
  app.add_option("--backend", backend,
                 "'bfv' (encrypted) or 'ref' (plaintext reference)")
      ->check(CLI::IsMember({std::string("bfv"), std::string("ref")}))
      ->capture_default_str();
  app.add_option("--beta", beta, "biometric squared-distance threshold")
      ->capture_default_str();
  app.add_option("--iterations", iterations, "timing iterations per kind")
      ->check(CLI::Range(100, 1000000))
      ->capture_default_str();
  app.add_option("--json", json_path,
                 "also write the full report as JSON to this file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  if (caps_flag) return cli::print_capabilities();
  return cli::guarded_main([&] {
    const HeParams params = select_params(security_from_int(security));
    const bench::Report rep =
        backend == "bfv"
            ? bench::run<bfv::Backend>(params, backend, security, beta,
                                       iterations)
            : bench::run<ref::Backend>(params, backend, security, beta,
                                       iterations);
    std::cout << rep.to_text();
    if (!json_path.empty()) {
      write_file(json_path, rep.to_json().dump(2) + "\n");
      std::cout << "json report written to " << json_path << std::endl;
    }
    return 0;
  });
}
