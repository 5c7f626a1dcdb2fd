#include <iostream>

#include "CLI11.hpp"
#include "mosbench/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"MBNet mean+bias MOS predictor"};
  app.require_subcommand(1);
  mosbench::CommandRequest request;
  std::string config, out;
  for (const auto& name : mosbench::kCommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "config file (key = value lines)");
    sub->add_option("--set", request.overrides, "override, key=value (repeatable)");
    sub->add_option("--out", out, "output directory")->required();
  }
  CLI11_PARSE(app, argc, argv);
  request.command = app.get_subcommands().front()->get_name();
  request.config_path = config;
  request.out_dir = out;
  return mosbench::run_command(request, std::cout, std::cerr);
}
