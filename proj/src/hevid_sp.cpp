// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0

// hevid-sp — the querying party (service provider).  Encrypts a query
// under the public key, sends it to the token service, and waits for the
// verdict from the credential service.  Built without the secret-key
// machinery: it can encrypt but never decrypt.

#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cli_util.hpp"
#include "hevid/proto/service.hpp"

using namespace hevid;

namespace {

std::vector<double> load_fingercode(const std::string& path) {
  const bytes raw = read_file(path);
  const nlohmann::json j =
      nlohmann::json::parse(raw.begin(), raw.end(), nullptr, false);
  require(!j.is_discarded() && j.is_array(), ErrorKind::encoding,
          "fingercode file must be a JSON array: " + path);
  require(j.size() == enc::kFingercodeLen, ErrorKind::encoding,
          "fingercode must have " + std::to_string(enc::kFingercodeLen) +
              " entries, got " + std::to_string(j.size()));
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    require(v.is_number(), ErrorKind::encoding,
            "fingercode entries must be numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

struct QueryArgs {
  std::string user_hex;
  std::string kind;
  std::string value;
  std::string date;
  int offset_years = 0;
  std::string fingercode_path;
  bool has_value = false;
  bool has_date = false;
  bool has_fingercode = false;
};

template <class B>
int do_query(const proto::ServiceConfig& cfg, const QueryArgs& args) {
  B b(cfg.params());
  const auto pk = he::load_public_key(b, cfg.public_key_path());
  proto::QuerySpec spec;
  spec.kind = qry::kind_from_label(args.kind);
  spec.user_id = proto::user_from_hex(args.user_hex);
  if (qry::is_demographic(spec.kind)) {
    require(args.has_value, ErrorKind::config,
            std::string("--value is required for kind '") +
                qry::kind_label(spec.kind) + "'");
    spec.value = args.value;
  } else if (spec.kind == qry::QueryKind::dob_after) {
    require(args.has_date, ErrorKind::config,
            "--date is required for kind 'dob-after'");
    spec.date = cal::parse_iso(args.date);
    spec.offset_years = args.offset_years;
  } else {
    require(args.has_fingercode, ErrorKind::config,
            "--fingercode is required for kind 'biometric'");
    spec.fingercode = load_fingercode(args.fingercode_path);
  }
  ChaChaRng rng = ChaChaRng::system();
  const proto::QueryResult res = proto::run_query(b, pk, cfg, spec, rng);
  if (res.verdict == qry::Verdict::pass) {
    std::cout << "PASS" << std::endl;
    return 0;
  }
  std::cout << "FAIL";
  if (res.reason != proto::Reason::none)
    std::cout << " (reason: " << proto::reason_label(res.reason) << ")";
  std::cout << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "querying party: encrypts a verification query, submits it to the "
      "token service, and reports the verdict"};
  bool caps_flag = false;
  app.add_flag("--capabilities", caps_flag,
               "print the cryptographic capability tags this binary links, "
               "then exit");
  proto::ServiceConfig cfg;
  cli::add_service_options(&app, cfg);
  QueryArgs args;
  CLI::App* query_cmd = app.add_subcommand("query", "run one query");
  query_cmd
      ->add_option("--user", args.user_hex,
                   "user id as 32 hex characters (16 bytes)")
      ->required();
  query_cmd
      ->add_option("--kind", args.kind,
                   "query kind: name, gender, pincode, phone, email, "
                   "dob-after, biometric")
      ->required();
  const CLI::Option* value_opt = query_cmd->add_option(
      "--value", args.value, "expected value for demographic kinds");
  const CLI::Option* date_opt = query_cmd->add_option(
      "--date", args.date, "query date YYYY-MM-DD for dob-after");
  query_cmd->add_option("--offset-years", args.offset_years,
                        "subtract this many years from --date (minimum-age "
                        "checks)");
  const CLI::Option* fc_opt =
      query_cmd
          ->add_option("--fingercode", args.fingercode_path,
                       "JSON array file with the 640-entry query fingercode")
          ->check(CLI::ExistingFile);
  app.require_subcommand(0, 1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 3;
  }
  if (caps_flag) return cli::print_capabilities();
  if (!query_cmd->parsed()) {
    std::cout << app.help();
    return 3;
  }
  args.has_value = value_opt->count() > 0;
  args.has_date = date_opt->count() > 0;
  args.has_fingercode = fc_opt->count() > 0;
  return cli::guarded_main([&] {
    return cfg.backend == "bfv" ? do_query<bfv::Backend>(cfg, args)
                                : do_query<ref::Backend>(cfg, args);
  });
}
