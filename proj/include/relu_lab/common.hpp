#pragma once

#include <Eigen/Core>

#include <numbers>
#include <stdexcept>
#include <string>

namespace relu_lab {

template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VecXd = VecX<double>;
using MatXd = MatX<double>;

template <typename Scalar>
constexpr Scalar pi() {
  return std::numbers::pi_v<Scalar>;
}

/// Mismatched dimensions between vectors/matrices that must agree.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Input outside the mathematical domain of an operation (e.g. zero vector
/// where a direction is required).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Invalid configuration or argument value.
struct ParamError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Gradient requested at a point where the objective is not differentiable.
struct NondifferentiableError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A certificate (filter or splitting) failed its precondition.
struct CertificateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extracted certificate failed verification; unreachable if the reduction
/// is sound.
struct ReductionSoundnessError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Exhaustive search refused because the search space exceeds the guard.
struct TooLargeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace relu_lab
