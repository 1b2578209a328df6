#pragma once

#include <stdexcept>
#include <string>

namespace spectral_cutoff {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The basis handed to the solver has a (numerically) singular Gram matrix.
class IllConditionedBasis : public Error {
 public:
  explicit IllConditionedBasis(double condition_number)
      : Error("ill-conditioned subspace basis (Gram condition number " +
              std::to_string(condition_number) + ")"),
        condition_number_(condition_number) {}

  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

}  // namespace spectral_cutoff
