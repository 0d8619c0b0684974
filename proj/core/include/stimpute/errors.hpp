#pragma once

#include <stdexcept>
#include <string>

namespace stimpute {

struct shape_error : std::runtime_error {
  explicit shape_error(const std::string& msg) : std::runtime_error("shape: " + msg) {}
};

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error("numeric: " + msg) {}
};

struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error("usage: " + msg) {}
};

struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error("io: " + msg) {}
};

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error("config: " + msg) {}
};

}  // namespace stimpute
