#pragma once

// Closed-form population risk of a one-hidden-layer network that applies a
// shared filter w to k disjoint windows of a standard-Gaussian input, takes
// ReLU and averages. With b = (k^2-k)/2pi and c = b + k/2,
//
//   loss(w) = (1/k^2) [ c |w|^2 - 2k g(w, w*) - 2b |w||w*| + c |w*|^2 ].
//
// The |w*|^2 term makes loss(w*) = 0 exactly. The loss depends only on |w|,
// |w*| and the angle between w and w*; it is differentiable iff w != 0 and
// for k > 1 has exactly three critical points: a local maximum at 0, the
// global minimum w*, and a degenerate saddle on the ray -w*.

#include <cmath>
#include <optional>
#include <vector>

#include "relu_lab/common.hpp"
#include "relu_lab/kernel.hpp"
#include "relu_lab/numeric.hpp"

namespace relu_lab {

/// Average-pooled ReLU population risk for a general (untied) pair of row
/// lists W, W*:  (1/k^2) sum_{i,j} [g(w_i,w_j) - 2 g(w_i,w*_j) + g(w*_i,w*_j)].
template <typename Scalar>
Scalar pairwise_sum_loss(const std::vector<VecX<Scalar>>& rows,
                         const std::vector<VecX<Scalar>>& target_rows) {
  if (rows.size() != target_rows.size() || rows.empty()) {
    throw ShapeError("pairwise_sum_loss: row lists must have equal nonzero length");
  }
  const Eigen::Index dim = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != dim) throw ShapeError("pairwise_sum_loss: ragged rows");
  for (const auto& r : target_rows)
    if (r.size() != dim) throw ShapeError("pairwise_sum_loss: ragged target rows");

  const std::size_t k = rows.size();
  Scalar acc = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      acc += kernel_g(rows[i], rows[j]);
      acc -= Scalar(2) * kernel_g(rows[i], target_rows[j]);
      acc += kernel_g(target_rows[i], target_rows[j]);
    }
  }
  return acc / (Scalar(k) * Scalar(k));
}

template <typename Scalar>
struct CriticalPoints {
  VecX<Scalar> origin;      // local maximum for k > 1, non-differentiable
  VecX<Scalar> global_min;  // w*
  std::optional<VecX<Scalar>> saddle;  // present only for k > 1
};

template <typename Scalar>
class NoOverlapLoss {
 public:
  NoOverlapLoss(VecX<Scalar> w_star, int k) : w_star_(std::move(w_star)), k_(k) {
    if (k_ < 1) throw ParamError("NoOverlapLoss: k must be >= 1");
    if (w_star_.size() < 1 || !w_star_.allFinite() || w_star_.norm() == Scalar(0)) {
      throw ParamError("NoOverlapLoss: w* must be finite and nonzero");
    }
  }

  int k() const { return k_; }
  Eigen::Index filter_size() const { return w_star_.size(); }
  Eigen::Index input_dim() const { return k_ * w_star_.size(); }
  const VecX<Scalar>& target() const { return w_star_; }

  Scalar beta() const {
    const Scalar kk = Scalar(k_);
    return (kk * kk - kk) / (Scalar(2) * pi<Scalar>());
  }
  Scalar gamma() const { return beta() + Scalar(k_) / Scalar(2); }

  Scalar loss(const VecX<Scalar>& w) const {
    check_shape(w);
    const Scalar kk = Scalar(k_);
    const Scalar nw = w.norm();
    const Scalar ns = w_star_.norm();
    return (gamma() * (nw * nw + ns * ns) - Scalar(2) * kk * kernel_g(w, w_star_) -
            Scalar(2) * beta() * nw * ns) /
           (kk * kk);
  }

  VecX<Scalar> grad(const VecX<Scalar>& w) const {
    check_shape(w);
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) {
      throw NondifferentiableError("NoOverlapLoss::grad: not differentiable at w = 0");
    }
    const Scalar kk = Scalar(k_);
    const Scalar ns = w_star_.norm();
    const Scalar c = detail::clamped_cosine(w.dot(w_star_), nw, ns);
    const Scalar s = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
    const Scalar theta = std::acos(c);
    const Scalar b = (kk * kk - kk) / pi<Scalar>();
    const Scalar coeff_w =
        kk + b - kk * ns * s / (pi<Scalar>() * nw) - b * ns / nw;
    const Scalar coeff_star = kk * (pi<Scalar>() - theta) / pi<Scalar>();
    return (coeff_w * w - coeff_star * w_star_) / (kk * kk);
  }

  CriticalPoints<Scalar> critical_points() const {
    CriticalPoints<Scalar> cp;
    cp.origin = VecX<Scalar>::Zero(w_star_.size());
    cp.global_min = w_star_;
    if (k_ > 1) {
      const Scalar kk = Scalar(k_);
      const Scalar factor = (kk * kk - kk) / (kk * kk + (pi<Scalar>() - 1) * kk);
      cp.saddle = -factor * w_star_;
    }
    return cp;
  }

  /// Central-difference Hessian of the loss; w must stay clear of the origin.
  MatX<Scalar> fd_hessian(const VecX<Scalar>& w, Scalar step) const {
    check_shape(w);
    if (step <= Scalar(0)) throw ParamError("fd_hessian: step must be positive");
    if (w.norm() < Scalar(2) * step) {
      throw DomainError("fd_hessian: w must be bounded away from 0 by 2*step");
    }
    return relu_lab::fd_hessian<Scalar>(
        [this](const VecX<Scalar>& p) { return loss(p); }, w, step);
  }

  /// d |w - w*|^2 with d = k * m; loss(w) never exceeds it.
  Scalar upper_bound_by_distance(const VecX<Scalar>& w) const {
    check_shape(w);
    const Scalar d = Scalar(k_) * Scalar(w_star_.size());
    return d * (w - w_star_).squaredNorm();
  }

  /// Rows of the equivalent untied network: w_i = (0_{(i-1)m}, w, 0_{d-im}).
  std::vector<VecX<Scalar>> embedded_rows(const VecX<Scalar>& w) const {
    check_shape(w);
    const Eigen::Index m = w_star_.size();
    std::vector<VecX<Scalar>> rows;
    rows.reserve(k_);
    for (int i = 0; i < k_; ++i) {
      VecX<Scalar> row = VecX<Scalar>::Zero(k_ * m);
      row.segment(i * m, m) = w;
      rows.push_back(std::move(row));
    }
    return rows;
  }

 private:
  void check_shape(const VecX<Scalar>& w) const {
    if (w.size() != w_star_.size()) {
      throw ShapeError("NoOverlapLoss: w has wrong dimension");
    }
  }

  VecX<Scalar> w_star_;
  int k_;
};

using NoOverlapLossd = NoOverlapLoss<double>;

}  // namespace relu_lab
