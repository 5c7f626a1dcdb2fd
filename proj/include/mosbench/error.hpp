#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mosbench {

/// Input violates a documented domain constraint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (manifest, config); message carries the line number.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A correlation was requested on a constant vector.
class UndefinedCorrelation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A config key is unknown, repeated or has an unparsable value.
class ConfigError : public ParseError {
 public:
  ConfigError(std::string key, const std::string& message)
      : ParseError(message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace mosbench
