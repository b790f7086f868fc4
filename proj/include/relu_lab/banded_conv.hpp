#pragma once

// Population risk of a general one-hidden-layer convolutional network on
// standard Gaussian inputs: k hidden units applying a shared filter of size
// f with stride s to an input of dimension f + (k-1)s, ReLU, average pool.
// Rows i and j of the equivalent untied network overlap iff |i-j| s < f, and
// the kernel value of such a pair depends only on the shift |i-j|, so the
// k^2 pairwise kernel sum collapses to at most ceil(f/s) distinct terms.

#include <cmath>
#include <vector>

#include "relu_lab/common.hpp"
#include "relu_lab/kernel.hpp"

namespace relu_lab {

namespace detail {

template <typename Scalar>
Scalar g_from_dot(Scalar dot, Scalar nu, Scalar nv) {
  if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
  const Scalar c = clamped_cosine(dot, nu, nv);
  const Scalar s = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
  const Scalar t = std::acos(c);
  const Scalar factor = std::max(Scalar(0), s + (pi<Scalar>() - t) * c);
  return nu * nv / (Scalar(2) * pi<Scalar>()) * factor;
}

}  // namespace detail

template <typename Scalar>
class BandedConvLoss {
 public:
  BandedConvLoss(VecX<Scalar> w_star, int k, int stride)
      : w_star_(std::move(w_star)), k_(k), stride_(stride) {
    if (k_ < 1) throw ParamError("BandedConvLoss: k must be >= 1");
    if (stride_ < 1) throw ParamError("BandedConvLoss: stride must be >= 1");
    if (w_star_.size() < 1 || !w_star_.allFinite() || w_star_.norm() == Scalar(0)) {
      throw ParamError("BandedConvLoss: w* must be finite and nonzero");
    }
    const Eigen::Index f = w_star_.size();
    for (int c = 1; c < k_; ++c) {
      const Eigen::Index offset = Eigen::Index(c) * stride_;
      if (offset >= f) break;
      overlaps_.push_back({offset, Scalar(k_ - c)});
    }
    Scalar n_overlap = 0;
    for (const auto& ov : overlaps_) n_overlap += ov.count;
    n_orth_ = Scalar(k_) * Scalar(k_) - Scalar(k_) - 2 * n_overlap;
  }

  int k() const { return k_; }
  int stride() const { return stride_; }
  Eigen::Index filter_size() const { return w_star_.size(); }
  Eigen::Index input_dim() const {
    return w_star_.size() + Eigen::Index(k_ - 1) * stride_;
  }
  const VecX<Scalar>& target() const { return w_star_; }

  Scalar loss(const VecX<Scalar>& w) const {
    check_shape(w);
    const Scalar kk(k_);
    return (pair_sum(w, w) - 2 * cross_sum(w, w_star_) +
            pair_sum(w_star_, w_star_)) /
           (kk * kk);
  }

  VecX<Scalar> grad(const VecX<Scalar>& w) const {
    check_shape(w);
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) {
      throw NondifferentiableError("BandedConvLoss::grad: not differentiable at w = 0");
    }
    const Scalar kk(k_);
    const Scalar ns = w_star_.norm();
    const Eigen::Index f = w_star_.size();
    VecX<Scalar> g = Scalar(k_) * w;  // diagonal of the w,w sum
    g -= Scalar(2 * k_) * kernel_grad_u(w, w_star_);
    // Fully separated pairs contribute through the norms only.
    g += n_orth_ / pi<Scalar>() * (w - ns / nw * w);

    for (const auto& ov : overlaps_) {
      const Eigen::Index o = ov.offset;
      const Eigen::Index len = f - o;
      // Same-filter shifted pair (w, 0) vs (0, w).
      {
        const Scalar dot = w.tail(len).dot(w.head(len));
        const Scalar c = detail::clamped_cosine(dot, nw, nw);
        const Scalar sn = std::sqrt(std::max(Scalar(0), Scalar(1) - c * c));
        const Scalar t = std::acos(c);
        // d/dw of 2 * count * g: two lifted kernel gradients.
        g += ov.count * (Scalar(2) * sn / pi<Scalar>()) * w;
        VecX<Scalar> shifted = VecX<Scalar>::Zero(f);
        shifted.tail(len) = w.head(len);   // other argument seen from (w,0)
        shifted.head(len) += w.tail(len);  // other argument seen from (0,w)
        g += ov.count * (pi<Scalar>() - t) / pi<Scalar>() * shifted;
      }
      // Cross pairs against the target, both shift directions.
      {
        const Scalar dot_fwd = w.tail(len).dot(w_star_.head(len));
        const Scalar dot_bwd = w.head(len).dot(w_star_.tail(len));
        const Scalar c_fwd = detail::clamped_cosine(dot_fwd, nw, ns);
        const Scalar c_bwd = detail::clamped_cosine(dot_bwd, nw, ns);
        const Scalar t_fwd = std::acos(c_fwd);
        const Scalar t_bwd = std::acos(c_bwd);
        const Scalar sn_fwd = std::sqrt(std::max(Scalar(0), Scalar(1) - c_fwd * c_fwd));
        const Scalar sn_bwd = std::sqrt(std::max(Scalar(0), Scalar(1) - c_bwd * c_bwd));
        g -= ov.count * ns * (sn_fwd + sn_bwd) / (pi<Scalar>() * nw) * w;
        VecX<Scalar> lifted = VecX<Scalar>::Zero(f);
        lifted.tail(len) = (pi<Scalar>() - t_fwd) * w_star_.head(len);
        lifted.head(len) += (pi<Scalar>() - t_bwd) * w_star_.tail(len);
        g -= ov.count / pi<Scalar>() * lifted;
      }
    }
    return g / (kk * kk);
  }

  /// Rows of the equivalent untied network in R^{f + (k-1)s}.
  std::vector<VecX<Scalar>> banded_rows(const VecX<Scalar>& w) const {
    check_shape(w);
    std::vector<VecX<Scalar>> rows;
    rows.reserve(k_);
    for (int i = 0; i < k_; ++i) {
      VecX<Scalar> row = VecX<Scalar>::Zero(input_dim());
      row.segment(Eigen::Index(i) * stride_, w.size()) = w;
      rows.push_back(std::move(row));
    }
    return rows;
  }

 private:
  struct Overlap {
    Eigen::Index offset;
    Scalar count;  // ordered pairs per shift direction
  };

  void check_shape(const VecX<Scalar>& w) const {
    if (w.size() != w_star_.size()) {
      throw ShapeError("BandedConvLoss: w has wrong dimension");
    }
  }

  // sum_{i,j} g(row_i(u), row_j(v)) for u, v playing symmetric roles.
  Scalar pair_sum(const VecX<Scalar>& u, const VecX<Scalar>& v) const {
    const Scalar nu = u.norm(), nv = v.norm();
    const Eigen::Index f = w_star_.size();
    Scalar acc = Scalar(k_) * kernel_g(u, v);
    for (const auto& ov : overlaps_) {
      const Eigen::Index len = f - ov.offset;
      acc += ov.count * detail::g_from_dot(u.tail(len).dot(v.head(len)), nu, nv);
      acc += ov.count * detail::g_from_dot(v.tail(len).dot(u.head(len)), nv, nu);
    }
    acc += n_orth_ * nu * nv / (2 * pi<Scalar>());
    return acc;
  }

  Scalar cross_sum(const VecX<Scalar>& w, const VecX<Scalar>& t) const {
    return pair_sum(w, t);
  }

  VecX<Scalar> w_star_;
  int k_;
  int stride_;
  std::vector<Overlap> overlaps_;
  Scalar n_orth_ = 0;
};

using BandedConvLossd = BandedConvLoss<double>;

}  // namespace relu_lab
