#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "pinmix/experiments.hpp"

namespace pinmix {

// Malformed configuration; line is 0 when the problem is not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string field, const std::string& message);
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

// Flat `key = value` lines; `#` starts a comment; lists are comma separated
// and may be wrapped in brackets. Keys mirror ExperimentConfig. Unknown or
// repeated keys, unparsable values and failed validation raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& cfg);

}  // namespace pinmix
