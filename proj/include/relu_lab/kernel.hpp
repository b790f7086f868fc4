#pragma once

// Closed-form Gaussian expectation kernel of two rectified linear responses
// and its gradient. For standard normal x,
//
//   g(u, v) = E[relu(u.x) relu(v.x)]
//           = (1/2pi) |u| |v| (sin t + (pi - t) cos t),   t = angle(u, v).
//
// g extends continuously by 0 when either argument is the zero vector, and
// its u-gradient extends continuously to u parallel to v.

#include <algorithm>
#include <cmath>

#include "relu_lab/common.hpp"

namespace relu_lab {

namespace detail {

template <typename DerivedU, typename DerivedV>
void check_same_size(const Eigen::MatrixBase<DerivedU>& u,
                     const Eigen::MatrixBase<DerivedV>& v, const char* where) {
  if (u.size() != v.size()) {
    throw ShapeError(std::string(where) + ": dimension mismatch (" +
                     std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()) + ")");
  }
}

// Cosine of the angle, clamped into [-1, 1] to absorb floating-point drift
// before acos. Norms must be nonzero.
template <typename Scalar>
Scalar clamped_cosine(Scalar dot, Scalar nu, Scalar nv) {
  return std::clamp(dot / (nu * nv), Scalar(-1), Scalar(1));
}

}  // namespace detail

/// Angle between two nonzero vectors, in [0, pi].
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar angle(const Eigen::MatrixBase<DerivedU>& u,
                                const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  detail::check_same_size(u, v, "angle");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) {
    throw DomainError("angle: undefined for the zero vector");
  }
  return std::acos(detail::clamped_cosine(u.dot(v), nu, nv));
}

/// E[relu(u.x) relu(v.x)] for standard Gaussian x; 0 if either vector is 0.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar kernel_g(const Eigen::MatrixBase<DerivedU>& u,
                                   const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  detail::check_same_size(u, v, "kernel_g");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
  const Scalar c = detail::clamped_cosine(u.dot(v), nu, nv);
  const Scalar s = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
  const Scalar t = std::acos(c);
  // The angular factor is nonnegative on [0, pi] but can round below zero
  // near t = pi.
  const Scalar factor = std::max(Scalar(0), s + (pi<Scalar>() - t) * c);
  return nu * nv / (Scalar(2) * pi<Scalar>()) * factor;
}

/// Gradient of kernel_g with respect to its first argument:
///   (1/2pi) |v| sin(t) u/|u| + (1/2pi) (pi - t) v.
/// Defined for all u != 0; at u parallel to v the formula already carries
/// the continuous-extension values (v/2 at t = 0, the zero vector at t = pi).
template <typename DerivedU, typename DerivedV>
typename DerivedU::PlainObject kernel_grad_u(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  detail::check_same_size(u, v, "kernel_grad_u");
  const Scalar nu = u.norm();
  if (nu == Scalar(0)) {
    throw NondifferentiableError("kernel_grad_u: g is not differentiable at u = 0");
  }
  const Scalar nv = v.norm();
  typename DerivedU::PlainObject grad = u.derived() * Scalar(0);
  if (nv == Scalar(0)) return grad;  // g(., 0) vanishes identically
  const Scalar c = detail::clamped_cosine(u.dot(v), nu, nv);
  const Scalar s = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
  const Scalar t = std::acos(c);
  const Scalar two_pi = Scalar(2) * pi<Scalar>();
  grad = (nv * s / (two_pi * nu)) * u + ((pi<Scalar>() - t) / two_pi) * v;
  return grad;
}

}  // namespace relu_lab
