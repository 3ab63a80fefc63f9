#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nshift {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte position in the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifierError : public ParseError {
 public:
  UnknownIdentifierError(const std::string& name, std::size_t offset)
      : ParseError("unknown identifier \"" + name + "\" at byte " +
                       std::to_string(offset),
                   offset),
        name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Evaluation left the domain of an operation (ln of non-positive,
/// division by zero, sqrt of negative, ...). `offset` points at the node.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Metric not positive definite, singular frame, degenerate hypersurface.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Speed |v|_g vanished where a unit direction is required.
class ZeroVelocityError : public GeometryError {
 public:
  ZeroVelocityError() : GeometryError("zero velocity: |v|_g = 0") {}
};

/// Config or argument validation failure; the message starts with the
/// offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nshift
