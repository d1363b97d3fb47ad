#pragma once

#include <stdexcept>
#include <string>

namespace cilm {

// Malformed input data (ids, event times, CSV contents, config keys).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters outside their support.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A model/data combination that cannot be evaluated (e.g. M3 without clusters).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-finite infection rate at (id, t).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(int id, int t, const std::string& what)
      : std::runtime_error(what + " (id " + std::to_string(id) + ", t " + std::to_string(t) + ")"),
        id_(id),
        t_(t) {}

  int id() const { return id_; }
  int t() const { return t_; }

 private:
  int id_;
  int t_;
};

}  // namespace cilm
