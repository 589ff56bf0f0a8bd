#pragma once

#include <stdexcept>
#include <string>

namespace gam {

// Exit-code mapping used by the CLI: ConfigError -> 2, DivergenceError -> 3,
// IoError -> 4. Anything else is a bug and exits 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required by contract.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gam
