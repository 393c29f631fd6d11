#include <cstdio>
#include <string>
#include "CLI11.hpp"
int main(int argc, char** argv) {
  CLI::App app{"t"};
  app.fallthrough();
  std::string addr = "default:1";
  int sec = 128;
  app.set_config("--config", "", "config file")->envname("PPID_CONFIG");
  app.add_option("--tps-address", addr, "addr");
  app.add_option("--security", sec, "sec");
  CLI::App* sub = app.add_subcommand("go", "run");
  std::string rec;
  sub->add_option("--records", rec, "records");
  CLI11_PARSE(app, argc, argv);
  std::printf("addr=%s sec=%d rec=%s parsed=%d\n", addr.c_str(), sec,
              rec.c_str(), (int)sub->parsed());
  return 0;
}
