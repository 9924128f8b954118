#pragma once

#include <stdexcept>
#include <string>

namespace rpusim {

/// Malformed input text (scenario JSON, predicate string, schedule file).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a model invariant. `path()` names the
/// offending location, e.g. `sequence[1].invocations[0].selectivity`.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Predicate operands whose types cannot be unified.
class TypeError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Search-space guard exceeded by the exhaustive oracle.
class InstanceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rpusim
