#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dimer/config.hpp"

namespace dimer::cli {

using Defaults = std::vector<std::pair<std::string, std::string>>;

struct Command {
  std::string name;
  std::string help;
  Defaults defaults;
  void (*run)(const RunConfig&);
};

const std::vector<Command>& commands();

}  // namespace dimer::cli
