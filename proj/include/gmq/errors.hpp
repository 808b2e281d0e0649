#pragma once

#include <stdexcept>
#include <string>

namespace gmq {

// Bad user-supplied configuration (measure model, config file, CLI args).
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A hard resource cap was exceeded on a required path (cell budget, DP size,
// oracle combinatorics). The CLI maps this to exit code 3. Scans that treat
// "budget exceeded" as a reportable value do not throw this.
struct BudgetError : std::runtime_error {
  explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gmq
