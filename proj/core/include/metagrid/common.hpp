#pragma once

#include <stdexcept>
#include <string>

namespace metagrid {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define MG_CHECK(cond, msg)                                        \
  do {                                                             \
    if (!(cond)) throw ::metagrid::Error(std::string(msg));        \
  } while (0)

}  // namespace metagrid
