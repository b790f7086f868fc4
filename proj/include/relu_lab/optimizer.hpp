#pragma once

// Plain gradient descent and AdaGrad with per-iteration instrumentation.
// Trajectories carry running aggregates (angle monotonicity, norm floor,
// summed squared gradients, planarity) so long runs can be checked against
// the convergence-proof invariants without storing every iterate.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "relu_lab/common.hpp"
#include "relu_lab/kernel.hpp"

namespace relu_lab {

enum class StopReason { grad_tol_reached, max_iters, nondifferentiable_point };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::grad_tol_reached: return "grad_tol_reached";
    case StopReason::max_iters: return "max_iters";
    case StopReason::nondifferentiable_point: return "nondifferentiable_point";
  }
  return "unknown";
}

struct GdConfig {
  double step_size = 0.1;  // in (0, 1)
  std::int64_t max_iters = 100000;
  double grad_tol = 1e-9;
  std::uint64_t seed = 0;
  std::int64_t record_stride = 1;  // keep every Nth point; first/last always

  void validate() const {
    if (!(step_size > 0.0 && step_size < 1.0)) {
      throw ParamError("GdConfig: step_size must lie in (0, 1)");
    }
    if (max_iters < 1) throw ParamError("GdConfig: max_iters must be positive");
    if (grad_tol < 0.0) throw ParamError("GdConfig: grad_tol must be nonnegative");
    if (record_stride < 1) throw ParamError("GdConfig: record_stride must be >= 1");
  }
};

template <typename Scalar>
struct TrajectoryPoint {
  std::int64_t iter;
  VecX<Scalar> w;
  Scalar loss_value;
  Scalar grad_norm;
  Scalar w_norm;
  Scalar angle_to_target;
};

/// Running aggregates over consecutive iterates of a full run.
template <typename Scalar>
struct TrajectoryStats {
  Scalar max_angle_increase = -std::numeric_limits<Scalar>::infinity();
  Scalar max_loss_increase = -std::numeric_limits<Scalar>::infinity();
  Scalar min_w_norm = std::numeric_limits<Scalar>::infinity();
  Scalar sum_sq_grad_norms = 0;
  Scalar max_out_of_plane = 0;  // vs span{w0, target}
  std::int64_t iterations = 0;
};

template <typename Scalar>
struct Trajectory {
  std::vector<TrajectoryPoint<Scalar>> points;
  StopReason terminated_reason = StopReason::max_iters;
  TrajectoryStats<Scalar> stats;

  const TrajectoryPoint<Scalar>& final_point() const { return points.back(); }
};

/// One gradient-descent update w - step * grad(w).
template <typename Loss, typename Scalar>
VecX<Scalar> gd_step(const Loss& loss, const VecX<Scalar>& w, Scalar step_size) {
  return w - step_size * loss.grad(w);
}

namespace detail {

template <typename Scalar>
struct PlaneBasis {
  VecX<Scalar> b1, b2;
  bool has_b2 = false;

  PlaneBasis(const VecX<Scalar>& w0, const VecX<Scalar>& target) {
    b1 = w0 / w0.norm();
    VecX<Scalar> r = target - target.dot(b1) * b1;
    const Scalar rn = r.norm();
    if (rn > Scalar(1e-14) * target.norm()) {
      b2 = r / rn;
      has_b2 = true;
    }
  }

  Scalar out_of_plane(const VecX<Scalar>& w) const {
    VecX<Scalar> r = w - w.dot(b1) * b1;
    if (has_b2) r -= r.dot(b2) * b2;
    return r.norm();
  }
};

// Angle via atan2 of the decomposed unit vectors. Unlike acos of the
// cosine, this keeps absolute error near machine epsilon for angles close
// to 0 and pi, which the monotonicity instrumentation relies on.
template <typename Scalar>
Scalar safe_angle(const VecX<Scalar>& w, const VecX<Scalar>& target) {
  const Scalar nw = w.norm();
  const Scalar nt = target.norm();
  if (nw == Scalar(0) || nt == Scalar(0)) {
    return std::numeric_limits<Scalar>::quiet_NaN();
  }
  const VecX<Scalar> wn = w / nw;
  const VecX<Scalar> tn = target / nt;
  const Scalar c = wn.dot(tn);
  const Scalar s = (wn - c * tn).norm();
  return std::atan2(s, c);
}

// Shared driver: `update` maps the current gradient to the next iterate.
template <typename Loss, typename Scalar, typename Update>
Trajectory<Scalar> run_first_order(const Loss& loss, VecX<Scalar> w,
                                   const GdConfig& config, Update&& update) {
  config.validate();
  if (w.norm() == Scalar(0)) throw ParamError("optimizer: w0 must be nonzero");

  Trajectory<Scalar> traj;
  const VecX<Scalar>& target = loss.target();
  PlaneBasis<Scalar> plane(w, target);

  Scalar prev_angle = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar prev_loss = std::numeric_limits<Scalar>::quiet_NaN();

  for (std::int64_t t = 0;; ++t) {
    const Scalar value = loss.loss(w);
    VecX<Scalar> g;
    bool differentiable = true;
    try {
      g = loss.grad(w);
    } catch (const NondifferentiableError&) {
      differentiable = false;
    }
    const Scalar gnorm =
        differentiable ? g.norm() : std::numeric_limits<Scalar>::quiet_NaN();
    if (differentiable) traj.stats.sum_sq_grad_norms += gnorm * gnorm;

    const Scalar ang = safe_angle(w, target);
    if (t > 0) {
      traj.stats.max_angle_increase =
          std::max(traj.stats.max_angle_increase, ang - prev_angle);
      traj.stats.max_loss_increase =
          std::max(traj.stats.max_loss_increase, value - prev_loss);
    }
    prev_angle = ang;
    prev_loss = value;
    traj.stats.min_w_norm = std::min(traj.stats.min_w_norm, w.norm());
    traj.stats.max_out_of_plane =
        std::max(traj.stats.max_out_of_plane, plane.out_of_plane(w));
    traj.stats.iterations = t;

    const bool terminal = !differentiable ||
                          gnorm <= Scalar(config.grad_tol) ||
                          t >= config.max_iters;
    if (terminal || t % config.record_stride == 0) {
      traj.points.push_back({t, w, value, gnorm, w.norm(), ang});
    }
    if (terminal) {
      traj.terminated_reason = !differentiable ? StopReason::nondifferentiable_point
                               : gnorm <= Scalar(config.grad_tol)
                                   ? StopReason::grad_tol_reached
                                   : StopReason::max_iters;
      break;
    }
    w = update(w, g);
  }
  return traj;
}

}  // namespace detail

/// Gradient descent from w0 until the gradient norm drops to grad_tol or
/// max_iters is reached; deterministic given (w0, config).
template <typename Loss, typename Scalar>
Trajectory<Scalar> run_gd(const Loss& loss, const VecX<Scalar>& w0,
                          const GdConfig& config) {
  const Scalar step(config.step_size);
  return detail::run_first_order(loss, w0, config,
                                 [step](const VecX<Scalar>& w, const VecX<Scalar>& g) {
                                   return VecX<Scalar>(w - step * g);
                                 });
}

/// AdaGrad: per-coordinate step step_size / sqrt(accumulated g^2 + 1e-8).
template <typename Loss, typename Scalar>
Trajectory<Scalar> run_adagrad(const Loss& loss, const VecX<Scalar>& w0,
                               const GdConfig& config) {
  VecX<Scalar> accum = VecX<Scalar>::Zero(w0.size());
  const Scalar step(config.step_size);
  const Scalar eps(1e-8);
  return detail::run_first_order(
      loss, w0, config, [&accum, step, eps](const VecX<Scalar>& w, const VecX<Scalar>& g) {
        accum += g.cwiseProduct(g);
        return VecX<Scalar>(w - step * g.cwiseQuotient((accum.array() + eps).sqrt().matrix()));
      });
}

/// alpha(k) = 1/k + (k^2-k)/(pi k^2), the norm-bound constant of the
/// convergence analysis; at most 1 for every k >= 1.
template <typename Scalar = double>
Scalar alpha_of_k(int k) {
  if (k < 1) throw ParamError("alpha_of_k: k must be >= 1");
  const Scalar kk(k);
  return 1 / kk + (kk * kk - kk) / (pi<Scalar>() * kk * kk);
}

/// Smallest guaranteed iterate norm for unit-sphere initialization with
/// initial angle at most pi(1-delta):
///   min{ sin(pi(1-delta)), sin^2(pi(1-delta)) / (alpha(k) pi), 1/8 }.
template <typename Scalar = double>
Scalar norm_floor(int k, Scalar delta) {
  const Scalar s = std::sin(pi<Scalar>() * (1 - delta));
  return std::min({s, s * s / (alpha_of_k<Scalar>(k) * pi<Scalar>()), Scalar(1) / 8});
}

/// The convergence-guarantee step size: lambda = 1 / (1 + 3 |w*| / M) with
/// M = norm_floor(k, delta) cos(pi(1-delta)/2). Always in (0, 1/2).
template <typename Scalar = double>
Scalar theorem_step_size(int k, Scalar delta, Scalar w_star_norm) {
  if (k < 1) throw ParamError("theorem_step_size: k must be >= 1");
  if (!(delta > Scalar(0) && delta < Scalar(1))) {
    throw ParamError("theorem_step_size: delta must lie in (0, 1)");
  }
  if (!(w_star_norm > Scalar(0))) {
    throw ParamError("theorem_step_size: |w*| must be positive");
  }
  const Scalar m = norm_floor(k, delta) * std::cos(pi<Scalar>() * (1 - delta) / 2);
  const Scalar lipschitz = 1 + 3 * w_star_norm / m;
  return 1 / lipschitz;
}

/// Lipschitz constant matching theorem_step_size (lambda = 1/L).
template <typename Scalar = double>
Scalar theorem_lipschitz(int k, Scalar delta, Scalar w_star_norm) {
  return 1 / theorem_step_size(k, delta, w_star_norm);
}

/// Largest grad_tol for which the final epsilon-to-distance argument of the
/// convergence guarantee applies: epsilon < delta sin(pi delta) / k.
template <typename Scalar = double>
Scalar theorem_epsilon_bound(int k, Scalar delta) {
  if (k < 1) throw ParamError("theorem_epsilon_bound: k must be >= 1");
  return delta * std::sin(pi<Scalar>() * delta) / Scalar(k);
}

/// Isotropic unit vector: normalized standard normal draws.
template <typename Rng>
VecXd unit_sphere_init(Eigen::Index dim, Rng& rng) {
  if (dim < 1) throw ParamError("unit_sphere_init: dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  VecXd v(dim);
  double n = 0.0;
  do {
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
    n = v.norm();
  } while (n == 0.0);
  return v / n;
}

}  // namespace relu_lab
