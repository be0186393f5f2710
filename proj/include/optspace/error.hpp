#pragma once

#include <stdexcept>
#include <string>

namespace optspace {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input that is well-formed but carries no usable information
/// (for instance an observation set that trimming emptied).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap. `best_estimate` is the last
/// value the method produced.
class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double best_estimate, long iterations)
      : Error(what), best_estimate_(best_estimate), iterations_(iterations) {}

  double best_estimate() const noexcept { return best_estimate_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double best_estimate_;
  long iterations_;
};

/// The singular-value spectrum has no gap to pick a rank from.
class NoSpectralGap : public Error {
 public:
  using Error::Error;
};

/// Two subspaces are (numerically) at a principal angle of pi/2, where the
/// Grassmann logarithm is undefined.
class CutLocus : public Error {
 public:
  using Error::Error;
};

/// The incoherence regularizer would overflow; rows of the factor are far
/// outside the cap and should be rescaled.
class RegularizerOverflow : public Error {
 public:
  using Error::Error;
};

/// Malformed MatrixMarket or config input.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace optspace
