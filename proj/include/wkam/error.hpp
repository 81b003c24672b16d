#pragma once

#include <stdexcept>
#include <string>

namespace wkam {

// Process exit codes used by the CLI; exceptions carry the one they map to.
enum class ExitCode : int {
  ok = 0,
  non_convergence = 2,
  invariant_violation = 3,
  bad_config = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error(ExitCode::non_convergence, what) {}
};

struct InvariantError : Error {
  explicit InvariantError(const std::string& what) : Error(ExitCode::invariant_violation, what) {}
};

// Bad user input: unknown system, non-finite numbers, inconsistent options.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ExitCode::bad_config, what) {}
};

}  // namespace wkam
