#pragma once

#include <stdexcept>
#include <string>

namespace dynfair {

// Base of every error raised by the library. The CLI maps `exit_code()` to
// its process exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Vector lengths disagree (pmf vs grid, policy vs grid, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Unknown group label or node name.
class KeyError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

// A conditional probability was requested on an event of zero mass.
class UndefinedConditionalError : public Error {
 public:
  UndefinedConditionalError(const std::string& group, const std::string& event)
      : Error("conditional on empty event '" + event + "' in group '" + group + "'"),
        group_(group) {}
  const std::string& group() const noexcept { return group_; }

 private:
  std::string group_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class StructureError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class CapacityError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

}  // namespace dynfair
