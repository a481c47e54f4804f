#pragma once

#include <stdexcept>
#include <string>

namespace nlsf {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A band or eigenspace projection was requested that the (partial) basis
/// cannot represent exactly.
class CoverageError : public Error {
 public:
  using Error::Error;
};

/// Normalization with e = 0 hit a zero block norm.
class DivideByZero : public Error {
 public:
  using Error::Error;
};

/// Synthesis frame has a zero block, so it is not invertible on that block.
class ZeroBlock : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN or infinite loss.
class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

}  // namespace nlsf
