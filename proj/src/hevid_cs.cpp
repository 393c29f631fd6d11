// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0

// hevid-cs — the credential service.  The only party holding the secret
// key: it generates the key material, enrolls plaintext user records (by
// encrypting them and shipping the ciphertexts to the token service), and
// serves verdicts by decrypting evaluated results and applying the
// query-agnostic check.

#include <chrono>
#include <filesystem>
#include <iostream>

#include "cli_util.hpp"
#include "hevid/proto/records.hpp"
#include "hevid/proto/verdict_service.hpp"

using namespace hevid;

namespace {

std::string file_size_str(const std::string& path) {
  std::error_code ec;
  const auto n = std::filesystem::file_size(path, ec);
  if (ec) return "?";
  return std::to_string(n) + " bytes";
}

template <class B>
int do_keygen(const proto::ServiceConfig& cfg) {
  B b(cfg.params());
  // Secret-key file access always leaves an audit trail; default its
  // location next to the keys when none was configured.
  AuditLog audit(cfg.audit_log.empty() ? cfg.key_dir + "/audit.log"
                                       : cfg.audit_log);
  ChaChaRng rng = ChaChaRng::system();
  const auto t0 = std::chrono::steady_clock::now();
  he::KeyMaterial<B> km = he::keygen(b, rng);
  const auto t1 = std::chrono::steady_clock::now();
  he::save_public_key(b, km.pk, cfg.public_key_path());
  he::save_relin_keys(b, km.relin, cfg.relin_keys_path());
  he::save_galois_keys(b, km.galois, cfg.galois_keys_path());
  he::save_secret_key(b, km.sk, cfg.secret_key_path(), audit.sink());
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
  std::cout << "generated key material (backend " << b.name() << ", "
            << cfg.security << "-bit, parameter fingerprint " << std::hex
            << b.fingerprint() << std::dec << ") in " << ms << " ms\n"
            << "  public key:  " << cfg.public_key_path() << " ("
            << file_size_str(cfg.public_key_path()) << ")\n"
            << "  relin keys:  " << cfg.relin_keys_path() << " ("
            << file_size_str(cfg.relin_keys_path()) << ")\n"
            << "  galois keys: " << cfg.galois_keys_path() << " ("
            << file_size_str(cfg.galois_keys_path()) << ")\n"
            << "  secret key:  " << cfg.secret_key_path() << " ("
            << file_size_str(cfg.secret_key_path())
            << ", access is audited)" << std::endl;
  return 0;
}

template <class B>
int do_enroll(const proto::ServiceConfig& cfg,
              const std::string& records_path) {
  B b(cfg.params());
  AuditLog audit(cfg.audit_log);
  const auto pk = he::load_public_key(b, cfg.public_key_path());
  const auto records = proto::parse_records_jsonl(records_path);
  require(!records.empty(), ErrorKind::config,
          "no records found in " + records_path);
  ChaChaRng rng = ChaChaRng::system();
  proto::enroll_records(b, pk, cfg, records, rng, &audit);
  std::cout << "enrolled " << records.size()
            << " user(s) with the token service at " << cfg.tps_address
            << std::endl;
  return 0;
}

template <class B>
int do_serve(const proto::ServiceConfig& cfg) {
  B b(cfg.params());
  AuditLog audit(cfg.audit_log);
  const auto sk = he::load_secret_key(b, cfg.secret_key_path(), audit.sink());
  const qry::QueryConfig qc = cfg.query_config();
  proto::VerdictService<B> svc(b, sk, qc, audit);
  proto::VerdictRouter router(audit);
  const proto::net::Addr addr = proto::net::parse_address(cfg.cs_address);
  cli::block_termination_signals();
  proto::StreamServer server(
      addr, proto::cs_conn_handler(svc, router, audit, cfg.timeout_ms,
                                   std::chrono::milliseconds(cfg.timeout_ms)));
  std::cout << "verdict service listening on " << addr.host << ":"
            << server.port() << " (backend " << b.name() << ", "
            << cfg.security << "-bit)" << std::endl;
  const int sig = cli::wait_for_termination();
  std::cout << "received signal " << sig << ", shutting down" << std::endl;
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "credential service: generates keys, enrolls user records, and issues "
      "verdicts by decrypting evaluated query results"};
  bool caps_flag = false;
  app.add_flag("--capabilities", caps_flag,
               "print the cryptographic capability tags this binary links, "
               "then exit");
  proto::ServiceConfig cfg;
  cli::add_service_options(&app, cfg);
  CLI::App* keygen_cmd =
      app.add_subcommand("keygen", "generate and store key material");
  CLI::App* enroll_cmd = app.add_subcommand(
      "enroll", "encrypt user records and enroll them with the token service");
  std::string records_path;
  enroll_cmd
      ->add_option("--records", records_path,
                   "JSON Lines file with one user record per line")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::App* serve_cmd =
      app.add_subcommand("serve", "serve verdicts to querying parties");
  app.require_subcommand(0, 1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  if (caps_flag) return cli::print_capabilities();
  const bool is_bfv = cfg.backend == "bfv";
  return cli::guarded_main([&]() -> int {
    if (keygen_cmd->parsed())
      return is_bfv ? do_keygen<bfv::Backend>(cfg) : do_keygen<ref::Backend>(cfg);
    if (enroll_cmd->parsed())
      return is_bfv ? do_enroll<bfv::Backend>(cfg, records_path)
                    : do_enroll<ref::Backend>(cfg, records_path);
    if (serve_cmd->parsed())
      return is_bfv ? do_serve<bfv::Backend>(cfg) : do_serve<ref::Backend>(cfg);
    std::cout << app.help();
    return 3;
  });
}
