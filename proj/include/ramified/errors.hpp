#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ramified {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInstance : public Error {
 public:
  using Error::Error;
};

/// Two measures (or a plan and a path) whose masses or margins disagree.
class InvalidPair : public Error {
 public:
  using Error::Error;
};

class MalformedPath : public Error {
 public:
  using Error::Error;
};

class NotSingleSource : public Error {
 public:
  using Error::Error;
};

class InfeasiblePerturbation : public Error {
 public:
  using Error::Error;
};

class Unsupported : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConstantUndefined : public Error {
 public:
  using Error::Error;
};

/// A state matrix column lost its last candidate factory.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Work budget exceeded (e.g. brute-force enumeration too large).
class Refused : public Error {
 public:
  using Error::Error;
};

/// Steiner relaxation hit its iteration cap; carries the best iterate found.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, std::vector<double> best_positions,
                     double best_cost)
      : Error(what), best_positions_(std::move(best_positions)), best_cost_(best_cost) {}

  const std::vector<double>& best_positions() const noexcept { return best_positions_; }
  double best_cost() const noexcept { return best_cost_; }

 private:
  std::vector<double> best_positions_;
  double best_cost_;
};

}  // namespace ramified
