#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace monolab {

// Charts are small: n <= kMaxDim keeps every vector/matrix on the stack.
inline constexpr int kMaxDim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Point outside the region on which a sampler is valid.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid parameter passed to an operation.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Linear solve or factorization failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input for which the requested quantity is undefined (zero denominator, vanishing phase).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Hypothesis of an inequality check not met by the input.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Vec zero_vec(int n) { return Vec::Zero(n); }

}  // namespace monolab
