// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0

// hevid-tps — the token-processing service.  Stores encrypted identity
// vectors and evaluates verification queries on them homomorphically.  This
// binary is built without the secret-key machinery: it cannot decrypt, and
// its --capabilities output proves it carries no keygen/decrypt/secret-key
// code path.

#include <iostream>

#include "cli_util.hpp"
#include "hevid/proto/service.hpp"

using namespace hevid;

namespace {

template <class B>
int serve(const proto::ServiceConfig& cfg) {
  B b(cfg.params());
  he::load_evaluation_keys(b, cfg.relin_keys_path(), cfg.galois_keys_path());
  AuditLog audit(cfg.audit_log);
  const qry::QueryConfig qc = cfg.query_config();
  proto::TpsStore store(cfg.store_dir, &audit);
  proto::TpsService<B> svc(b, qc, store, audit);
  const proto::net::Addr addr = proto::net::parse_address(cfg.tps_address);
  const proto::net::Addr cs_addr = proto::net::parse_address(cfg.cs_address);
  cli::block_termination_signals();
  proto::StreamServer server(
      addr, proto::tps_conn_handler(svc, cs_addr, cfg.timeout_ms, audit));
  std::cout << "token-processing service listening on " << addr.host << ":"
            << server.port() << " (backend " << b.name() << ", store "
            << cfg.store_dir << " with " << store.count()
            << " user(s), forwarding results to " << cfg.cs_address << ")"
            << std::endl;
  const int sig = cli::wait_for_termination();
  std::cout << "received signal " << sig << ", shutting down" << std::endl;
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "token-processing service: stores encrypted identity vectors and "
      "evaluates verification queries without any decryption capability"};
  bool caps_flag = false;
  app.add_flag("--capabilities", caps_flag,
               "print the cryptographic capability tags this binary links, "
               "then exit");
  proto::ServiceConfig cfg;
  cli::add_service_options(&app, cfg);
  CLI::App* serve_cmd =
      app.add_subcommand("serve", "accept enrollments and queries");
  app.require_subcommand(0, 1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  if (caps_flag) return cli::print_capabilities();
  if (!serve_cmd->parsed()) {
    std::cout << app.help();
    return 3;
  }
  return cli::guarded_main([&] {
    return cfg.backend == "bfv" ? serve<bfv::Backend>(cfg)
                                : serve<ref::Backend>(cfg);
  });
}
