#ifndef ALPHALAB_ERROR_HPP
#define ALPHALAB_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alphalab {

/// Root of the library's exception hierarchy. The four direct subclasses
/// correspond to the CLI's failure classes (config, data, numeric, transport).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Header problems in an input file; names the offending column.
class SchemaError : public DataError {
 public:
  SchemaError(const std::string& column, const std::string& what)
      : DataError(what), column_(column) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class EmptyPanelError : public DataError {
 public:
  using DataError::DataError;
};

/// Formula text could not be parsed. `position` is a 0-based byte offset.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownSignalError : public Error {
 public:
  explicit UnknownSignalError(const std::string& token)
      : Error("unknown signal identifier '" + token + "'"), token_(token) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class InsufficientCrossSectionError : public NumericError {
 public:
  InsufficientCrossSectionError(std::size_t count, std::size_t required)
      : NumericError("insufficient cross-section: " + std::to_string(count) +
                     " companies, need " + std::to_string(required)),
        count_(count),
        required_(required) {}
  std::size_t count() const noexcept { return count_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t count_;
  std::size_t required_;
};

class SingularDesignError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateColumnError : public NumericError {
 public:
  using NumericError::NumericError;
};

class UndefinedCorrelationError : public NumericError {
 public:
  using NumericError::NumericError;
};

class TransportError : public Error {
 public:
  TransportError(int status, const std::string& what)
      : Error(what), status_(status) {}
  /// HTTP status, or 0 when no response was received.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

class NoFixtureError : public TransportError {
 public:
  explicit NoFixtureError(const std::string& hash)
      : TransportError(0, "no replay fixture for request hash " + hash),
        hash_(hash) {}
  const std::string& hash() const noexcept { return hash_; }

 private:
  std::string hash_;
};

}  // namespace alphalab

#endif  // ALPHALAB_ERROR_HPP
