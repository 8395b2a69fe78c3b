#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixlin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One sample per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Seed = std::uint64_t;

/// Raised when operand shapes do not agree or a size constraint is violated.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when requested parameters cannot be built (e.g. an infeasible spacing).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of a numerical routine on otherwise well-formed input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The k-th eigenvalue of the second moment fell below the whitening floor.
class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, std::vector<double> spectrum)
      : NumericalError(what), spectrum_(std::move(spectrum)) {}

  /// Full descending spectrum of the symmetrized input.
  const std::vector<double>& spectrum() const { return spectrum_; }

 private:
  std::vector<double> spectrum_;
};

/// Every restart of the tensor power method degenerated to the zero vector.
class DecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Read-only view of the observed part of a dataset. Labels are never part of it.
struct SampleView {
  const SampleMatrix& xs;
  const Vector& ys;

  Eigen::Index size() const { return ys.size(); }
  Eigen::Index dim() const { return xs.cols(); }
};

}  // namespace mixlin
