#pragma once

// Central finite-difference derivatives of scalar fields on R^n.

#include <functional>

#include "relu_lab/common.hpp"

namespace relu_lab {

/// Central-difference gradient of f at w with step h per coordinate.
template <typename Scalar, typename F>
VecX<Scalar> fd_gradient(F&& f, const VecX<Scalar>& w, Scalar h) {
  if (h <= Scalar(0)) throw ParamError("fd_gradient: step must be positive");
  VecX<Scalar> g(w.size());
  VecX<Scalar> p = w;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    p[i] = w[i] + h;
    const Scalar fp = f(p);
    p[i] = w[i] - h;
    const Scalar fm = f(p);
    p[i] = w[i];
    g[i] = (fp - fm) / (Scalar(2) * h);
  }
  return g;
}

/// Central-difference Hessian of f at w; symmetric by construction.
template <typename Scalar, typename F>
MatX<Scalar> fd_hessian(F&& f, const VecX<Scalar>& w, Scalar h) {
  if (h <= Scalar(0)) throw ParamError("fd_hessian: step must be positive");
  const Eigen::Index n = w.size();
  MatX<Scalar> hess(n, n);
  const Scalar f0 = f(w);
  VecX<Scalar> p = w;
  for (Eigen::Index i = 0; i < n; ++i) {
    p[i] = w[i] + h;
    const Scalar fp = f(p);
    p[i] = w[i] - h;
    const Scalar fm = f(p);
    p[i] = w[i];
    hess(i, i) = (fp - Scalar(2) * f0 + fm) / (h * h);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      p[i] = w[i] + h;
      p[j] = w[j] + h;
      const Scalar fpp = f(p);
      p[j] = w[j] - h;
      const Scalar fpm = f(p);
      p[i] = w[i] - h;
      const Scalar fmm = f(p);
      p[j] = w[j] + h;
      const Scalar fmp = f(p);
      p[i] = w[i];
      p[j] = w[j];
      hess(i, j) = (fpp - fpm - fmp + fmm) / (Scalar(4) * h * h);
      hess(j, i) = hess(i, j);
    }
  }
  return hess;
}

/// |a - b| relative to max(|a|, |b|, floor). The unit floor makes the
/// comparison absolute where the true gradient vanishes and finite
/// differences bottom out at their noise floor; inputs are expected at
/// unit scale.
template <typename Scalar>
Scalar relative_error(const VecX<Scalar>& a, const VecX<Scalar>& b,
                      Scalar floor = Scalar(1)) {
  const Scalar scale = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / scale;
}

}  // namespace relu_lab
