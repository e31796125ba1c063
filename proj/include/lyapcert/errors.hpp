#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lyapcert {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnknownVariableError : public ParseError {
 public:
  UnknownVariableError(const std::string& name, std::size_t position)
      : ParseError("unknown variable '" + name + "'", position), name_(name) {}

  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

// Evaluation produced a NaN or infinity.
class NonFiniteError : public Error {
 public:
  // `count` is the number of offending sample points when several were tried.
  NonFiniteError(const std::string& subexpression, std::vector<double> point, long count = 1);

  const std::string& subexpression() const { return subexpression_; }
  const std::vector<double>& point() const { return point_; }
  long count() const { return count_; }

 private:
  std::string subexpression_;
  std::vector<double> point_;
  long count_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace lyapcert
