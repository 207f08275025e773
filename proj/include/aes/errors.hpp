#pragma once

#include <stdexcept>
#include <string>

namespace aes {

/// Numerical failure: non-finite values, diverging training, quadrature
/// breakdown. Carries a human-readable diagnostic.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Lookup into a dataset/table missed a required cell.
struct NotFoundError : std::runtime_error {
  explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file is syntactically valid but violates an invariant.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text; the message carries the parser's line/position info.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aes
