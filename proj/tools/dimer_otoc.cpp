#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "dimer/errors.hpp"

int main(int argc, char** argv) {
  using namespace dimer;
  CLI::App app{"Bose-Hubbard dimer OTOC simulator"};
  app.require_subcommand(1);

  struct Slot {
    const cli::Command* command;
    CLI::App* sub;
    std::string config_file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    bool forced = false;
  };
  std::vector<Slot> slots;
  slots.reserve(cli::commands().size());
  for (const auto& cmd : cli::commands()) {
    auto& slot = slots.emplace_back();
    slot.command = &cmd;
    slot.sub = app.add_subcommand(cmd.name, cmd.help);
    slot.sub->add_option("-c,--config", slot.config_file, "key = value config file");
    slot.sub->add_option("--set", slot.sets, "override, key=value");
    for (const auto& [key, value] : cmd.defaults) {
      slot.sub->add_option("--" + key, slot.flags[key], "default: " + value);
    }
  }

  // `run -c file.cfg` picks the command from the file's `command` key
  std::string run_config;
  std::vector<std::string> run_sets;
  auto* run = app.add_subcommand("run", "run the command named in a config file");
  run->add_option("-c,--config", run_config, "key = value config file")->required();
  run->add_option("--set", run_sets, "override, key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    try {
      const std::string name = RunConfig::load(run_config).get_string("command");
      auto it = std::find_if(slots.begin(), slots.end(),
                             [&](const Slot& s) { return s.command->name == name; });
      if (it == slots.end()) throw ConfigError("unknown command '" + name + "' in " + run_config);
      it->config_file = run_config;
      it->sets = run_sets;
      it->forced = true;
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    }
  }

  for (auto& slot : slots) {
    if (!slot.sub->parsed() && !slot.forced) continue;
    try {
      RunConfig cfg = slot.config_file.empty() ? RunConfig{} : RunConfig::load(slot.config_file);
      for (const auto& [key, value] : slot.flags) {
        if (slot.sub->count("--" + key) > 0) cfg.set(key, value);
      }
      for (const auto& kv : slot.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      std::vector<std::string> known;
      for (const auto& [key, value] : slot.command->defaults) {
        cfg.set_default(key, value);
        known.push_back(key);
      }
      known.push_back("command");
      if (cfg.has("command") && cfg.get_string("command") != slot.command->name) {
        throw ConfigError("config is for command '" + cfg.get_string("command") + "'");
      }
      cfg.set("command", slot.command->name);
      cfg.check_known(known);
      slot.command->run(cfg);
      cfg.save(std::filesystem::path(cfg.get_string("output_dir")) / "run.cfg");
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return 3;
    }
  }
  return 0;
}
