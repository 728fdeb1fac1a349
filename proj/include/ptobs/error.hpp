#ifndef PTOBS_ERROR_HPP
#define PTOBS_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ptobs {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Syntax or name-resolution failure while reading an expression.
class ParseError : public Error
{
public:
  ParseError(std::size_t offset, const std::string& message)
    : Error("at byte " + std::to_string(offset) + ": " + message), offset_(offset)
  {}

  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Evaluation left the real domain (log of a nonpositive value, division by zero, ...).
class DomainError : public Error
{
public:
  DomainError(const std::string& message, std::string subexpression)
    : Error(message + " in `" + subexpression + "`"), subexpression_(std::move(subexpression))
  {}

  const std::string& subexpression() const { return subexpression_; }

private:
  std::string subexpression_;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

class IntegrationError : public Error
{
public:
  IntegrationError(const std::string& message, double last_good_time, std::vector<double> state)
    : Error(message + " (last good time " + std::to_string(last_good_time) + ")"),
      last_good_time_(last_good_time), state_(std::move(state))
  {}

  double last_good_time() const { return last_good_time_; }
  const std::vector<double>& state() const { return state_; }

private:
  double last_good_time_;
  std::vector<double> state_;
};

/// Scenario schema violation. `path` is a JSON-pointer-like field path.
class ValidationError : public Error
{
public:
  ValidationError(std::string path, const std::string& message)
    : Error(path + ": " + message), path_(std::move(path))
  {}

  const std::string& path() const { return path_; }

private:
  std::string path_;
};

}  // namespace ptobs

#endif  // PTOBS_ERROR_HPP
