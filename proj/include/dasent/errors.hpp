#pragma once

#include <stdexcept>
#include <string>

namespace dasent {

// Malformed input data (files, records, arguments). CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or incomplete configuration. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A token that is not part of a network, lexicon or table.
class LookupError : public std::runtime_error {
 public:
  explicit LookupError(std::string token)
      : std::runtime_error("unknown token: '" + token + "'"), token_(std::move(token)) {}
  LookupError(std::string token, const std::string& what)
      : std::runtime_error(what), token_(std::move(token)) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Dimension mismatch between vectors, matrices or models.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quantity that is mathematically undefined for the given input
// (closeness of an isolated node, correlation of a constant series, ...).
class UndefinedValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, double learning_rate)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                           " (learning rate " + std::to_string(learning_rate) + ")"),
        epoch_(epoch),
        learning_rate_(learning_rate) {}

  std::size_t epoch() const noexcept { return epoch_; }
  double learning_rate() const noexcept { return learning_rate_; }

 private:
  std::size_t epoch_;
  double learning_rate_;
};

}  // namespace dasent
