#pragma once

// Population risk of the width-2, stride-1 convolutional filter with k = d-1
// hidden units and ground truth (-s, s), s > 0. Adjacent rows overlap in one
// coordinate, which introduces kernel terms between the padded vectors
// w_r = (w1, w2, 0) and w_l = (0, w1, w2) and makes the landscape trap
// gradient descent: the open fourth quadrant {w1 > 0, w2 < 0} is invariant
// under gradient steps with rate < 1/3, and every point in it has loss at
// least (2h(k)+1) / (k^2 (2h(k)+2)) |w*|^2.

#include <cmath>

#include "relu_lab/common.hpp"
#include "relu_lab/kernel.hpp"

namespace relu_lab {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

/// h(k) = (k^2-3k+2)/pi + sqrt(3)(k-1)/pi + 2(k-1)/3 for k >= 2.
template <typename Scalar = double>
Scalar h_of_k(int k) {
  if (k < 2) throw ParamError("h_of_k: requires k >= 2");
  const Scalar kk(k);
  return (kk * kk - 3 * kk + 2) / pi<Scalar>() +
         std::sqrt(Scalar(3)) * (kk - 1) / pi<Scalar>() +
         Scalar(2) * (kk - 1) / Scalar(3);
}

/// Tight lower bound on the fourth-quadrant loss, |w*|^2 = 2 s^2.
template <typename Scalar = double>
Scalar suboptimality_bound(int k, Scalar w_star_scale) {
  if (k < 2) throw ParamError("suboptimality_bound: requires k >= 2");
  if (!(w_star_scale > Scalar(0))) {
    throw ParamError("suboptimality_bound: w* scale must be positive");
  }
  const Scalar h = h_of_k<Scalar>(k);
  const Scalar target_sq = Scalar(2) * w_star_scale * w_star_scale;
  return (2 * h + 1) / (Scalar(k) * Scalar(k) * (2 * h + 2)) * target_sq;
}

/// Strict membership in the open fourth quadrant.
template <typename Scalar>
bool in_trap(const Vec2<Scalar>& w) {
  return w[0] > Scalar(0) && w[1] < Scalar(0);
}

/// sin t + (pi - t) cos t, the angular factor of the kernel.
template <typename Scalar>
Scalar kernel_angle_factor(Scalar t) {
  return std::sin(t) + (pi<Scalar>() - t) * std::cos(t);
}

/// The combined angular term f(t) of the fourth-quadrant analysis, with t
/// the angle between w and the nearer trap boundary axis, t in [0, pi/4].
/// On that interval f is maximized at t = pi/4.
template <typename Scalar = double>
Scalar trap_angle_term(int k, Scalar t) {
  const Scalar kk(k);
  const auto h2 = [](Scalar x) {
    return std::sqrt(Scalar(1) - x * x) + (pi<Scalar>() - std::acos(x)) * x;
  };
  const Scalar r2 = std::sqrt(Scalar(2));
  return 2 * kk * kernel_angle_factor(Scalar(3) * pi<Scalar>() / 4 + t) +
         (2 * kk - 2) * (h2(std::cos(t) / r2) + h2(std::sin(t) / r2));
}

template <typename Scalar>
class OverlapLoss2D {
 public:
  OverlapLoss2D(Scalar w_star_scale, int k) : scale_(w_star_scale), k_(k) {
    if (!(scale_ > Scalar(0))) {
      throw ParamError("OverlapLoss2D: w* scale must be positive");
    }
    if (k_ < 2) throw ParamError("OverlapLoss2D: requires k >= 2");
    w_star_ << -scale_, scale_;
  }

  int k() const { return k_; }
  Scalar w_star_scale() const { return scale_; }
  const Vec2<Scalar>& target() const { return w_star_; }
  Eigen::Index input_dim() const { return k_ + 1; }

  Scalar loss(const Vec2<Scalar>& w) const {
    const Scalar kk(k_);
    const Scalar q = (kk * kk - 3 * kk + 2) / pi<Scalar>();
    const Scalar a = kk / 2 + q / 2;
    const Vec3<Scalar> wr = pad_right(w), wl = pad_left(w);
    const Vec3<Scalar> sr = pad_right(w_star_), sl = pad_left(w_star_);
    Scalar acc = a * (w.squaredNorm() + w_star_.squaredNorm());
    acc += 2 * (kk - 1) * (kernel_g(wr, wl) + kernel_g(sr, sl));
    acc -= 2 * kk * kernel_g(w, w_star_);
    acc -= 2 * (kk - 1) * (kernel_g(wl, sr) + kernel_g(wr, sl));
    acc -= q * w.norm() * w_star_.norm();
    return acc / (kk * kk);
  }

  Vec2<Scalar> grad(const Vec2<Scalar>& w) const {
    const Scalar nw = w.norm();
    if (nw == Scalar(0)) {
      throw NondifferentiableError("OverlapLoss2D::grad: not differentiable at w = 0");
    }
    const Scalar kk(k_);
    const Scalar q = (kk * kk - 3 * kk + 2) / pi<Scalar>();
    const Scalar ns = w_star_.norm();
    const Vec3<Scalar> wr = pad_right(w), wl = pad_left(w);
    const Vec3<Scalar> sr = pad_right(w_star_), sl = pad_left(w_star_);
    const Scalar t_rl = angle(wr, wl);
    const Scalar t_ws = angle(w, w_star_);
    const Scalar t_l_sr = angle(wl, sr);
    const Scalar t_r_sl = angle(wr, sl);
    const Vec2<Scalar> w_p(w[1], w[0]);
    const Vec2<Scalar> star_p1(Scalar(0), -scale_);
    const Vec2<Scalar> star_p2(scale_, Scalar(0));

    Vec2<Scalar> g = (kk + q) * w;
    g += 2 * (kk - 1) * std::sin(t_rl) / pi<Scalar>() * w;
    g += (kk - 1) * (pi<Scalar>() - t_rl) / pi<Scalar>() * w_p;
    g -= q * ns / nw * w;
    g -= kk * ns * std::sin(t_ws) / (pi<Scalar>() * nw) * w;
    g -= kk * (pi<Scalar>() - t_ws) / pi<Scalar>() * w_star_;
    g -= (kk - 1) * std::sin(t_l_sr) * ns / (pi<Scalar>() * nw) * w;
    g -= (kk - 1) * (pi<Scalar>() - t_l_sr) / pi<Scalar>() * star_p2;
    g -= (kk - 1) * std::sin(t_r_sl) * ns / (pi<Scalar>() * nw) * w;
    g -= (kk - 1) * (pi<Scalar>() - t_r_sl) / pi<Scalar>() * star_p1;
    return g / (kk * kk);
  }

  /// The fourth-quadrant point attaining the loss lower bound.
  Vec2<Scalar> trap_minimizer() const {
    const Scalar h = h_of_k<Scalar>(k_);
    return -(h / (h + 1)) * w_star_;
  }

  Scalar trap_lower_bound() const { return suboptimality_bound<Scalar>(k_, scale_); }

  /// Polar rewrite of the loss, valid on the closed fourth quadrant; equals
  /// loss() there and exposes the trap_angle_term dependence.
  Scalar loss_polar_rewrite(const Vec2<Scalar>& w) const {
    if (w[0] < Scalar(0) || w[1] > Scalar(0)) {
      throw DomainError("loss_polar_rewrite: valid on the fourth quadrant only");
    }
    const Scalar kk(k_);
    const Scalar nw = w.norm();
    const Scalar ns = w_star_.norm();
    // Angle from the positive x axis, or from the negative y axis on the
    // lower half of the quadrant; both land in [0, pi/4].
    Scalar t = 0;
    if (nw > Scalar(0)) {
      const Scalar c = (w[0] >= -w[1]) ? w[0] / nw : -w[1] / nw;
      t = std::acos(std::min(c, Scalar(1)));
    }
    const Vec3<Scalar> wr = pad_right(w), wl = pad_left(w);
    const Vec3<Scalar> sr = pad_right(w_star_), sl = pad_left(w_star_);
    Scalar acc = (kk * kk - 3 * kk + 2) / (2 * pi<Scalar>()) * (nw - ns) * (nw - ns);
    acc += kk / 2 * (nw * nw + ns * ns);
    acc += 2 * (kk - 1) * (kernel_g(wr, wl) + kernel_g(sr, sl));
    acc -= nw * ns / (2 * pi<Scalar>()) * trap_angle_term<Scalar>(k_, t);
    return acc / (kk * kk);
  }

 private:
  static Vec3<Scalar> pad_right(const Vec2<Scalar>& v) {
    return Vec3<Scalar>(v[0], v[1], Scalar(0));
  }
  static Vec3<Scalar> pad_left(const Vec2<Scalar>& v) {
    return Vec3<Scalar>(Scalar(0), v[0], v[1]);
  }

  Scalar scale_;
  int k_;
  Vec2<Scalar> w_star_;
};

using OverlapLoss2Dd = OverlapLoss2D<double>;

}  // namespace relu_lab
