#include "relu_lab/verify.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "relu_lab/banded_conv.hpp"
#include "relu_lab/empirical.hpp"
#include "relu_lab/hardness.hpp"
#include "relu_lab/kernel.hpp"
#include "relu_lab/no_overlap.hpp"
#include "relu_lab/numeric.hpp"
#include "relu_lab/optimizer.hpp"
#include "relu_lab/overlap2d.hpp"
#include "relu_lab/parallel.hpp"

namespace relu_lab::verify {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

VecXd random_vec(std::mt19937_64& rng, Eigen::Index dim, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  VecXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

VecXd random_unit_scale(std::mt19937_64& rng, Eigen::Index dim) {
  VecXd v;
  do {
    v = random_vec(rng, dim, -1.0, 1.0);
  } while (v.norm() < 1e-3);
  std::uniform_real_distribution<double> radius(0.5, 2.0);
  return v * (radius(rng) / v.norm());
}

double mc_kernel_gap_in_se(const VecXd& u, const VecXd& v, std::int64_t samples,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VecXd x(u.size());
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(rng);
    const double val = std::max(0.0, u.dot(x)) * std::max(0.0, v.dot(x));
    sum += val;
    sum_sq += val * val;
  }
  const double mean = sum / double(samples);
  const double var = std::max(0.0, sum_sq / double(samples) - mean * mean);
  const double se = std::sqrt(var / double(samples));
  return std::abs(kernel_g(u, v) - mean) / std::max(se, 1e-300);
}

using Checker = std::function<CheckResult(const VerifyOptions&, std::mt19937_64&)>;

CheckResult kernel_algebra(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 200 : 2000;
  double worst_hom = 0.0;
  bool symmetric = true, nonneg = true;
  std::uniform_real_distribution<double> scale(0.1, 4.0);
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index d = 1 + t % 7;
    const VecXd u = random_unit_scale(rng, d);
    const VecXd v = random_unit_scale(rng, d);
    const double g = kernel_g(u, v);
    symmetric = symmetric && (g == kernel_g(v, u));
    nonneg = nonneg && g >= 0.0;
    // Relative homogeneity is ill-posed near antipodal pairs, where the
    // kernel vanishes cubically; keep the angle clear of pi.
    if (d >= 2 && angle(u, v) > pi<double>() - 0.15) continue;
    const double a = scale(rng), b = scale(rng);
    worst_hom = std::max(worst_hom,
                         std::abs(kernel_g(VecXd(a * u), VecXd(b * v)) - a * b * g) /
                             std::max(a * b * g, 1e-300));
  }
  return {"kernel symmetry/homogeneity/nonnegativity",
          symmetric && nonneg && worst_hom <= 1e-12,
          "worst homogeneity rel err " + fmt(worst_hom)};
}

CheckResult kernel_grad_fd(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 200 : 1000;
  double worst = 0.0;
  int done = 0;
  while (done < trials) {
    const Eigen::Index d = 2 + done % 6;
    const VecXd u = random_unit_scale(rng, d);
    const VecXd v = random_unit_scale(rng, d);
    const double theta = angle(u, v);
    if (theta < 1e-3 || theta > pi<double>() - 1e-3) continue;
    ++done;
    const VecXd fd = fd_gradient<double>(
        [&v](const VecXd& p) { return kernel_g(p, v); }, u, 1e-6);
    worst = std::max(worst, relative_error(VecXd(kernel_grad_u(u, v)), fd));
  }
  return {"kernel gradient vs finite differences", worst <= 1e-6,
          "worst rel err " + fmt(worst)};
}

CheckResult kernel_monte_carlo(const VerifyOptions& options, std::mt19937_64& rng) {
  const int pairs = options.quick ? 4 : 20;
  const std::int64_t samples = options.quick ? 100000 : 1000000;
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Eigen::Index d = 2 + (p % 9);
    const VecXd u = random_unit_scale(rng, d);
    const VecXd v = random_unit_scale(rng, d);
    worst = std::max(worst, mc_kernel_gap_in_se(u, v, samples, rng));
  }
  return {"kernel vs Monte-Carlo expectation", worst <= 3.0,
          "worst gap " + fmt(worst) + " standard errors"};
}

CheckResult no_overlap_consistency(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 50 : 300;
  double worst_pairwise = 0.0, worst_fd = 0.0, worst_plane = 0.0;
  int done = 0;
  while (done < trials) {
    const int k = 1 + done % 6;
    const Eigen::Index m = 2 + done % 5;
    const NoOverlapLossd model(random_unit_scale(rng, m), k);
    const VecXd w = random_unit_scale(rng, m);
    const double theta = angle(w, model.target());
    if (theta < 1e-3 || theta > pi<double>() - 1e-3) continue;
    ++done;
    const double closed = model.loss(w);
    const double pairwise = pairwise_sum_loss(model.embedded_rows(w),
                                              model.embedded_rows(model.target()));
    worst_pairwise =
        std::max(worst_pairwise, std::abs(closed - pairwise) / std::max(closed, 1e-12));
    const VecXd fd = fd_gradient<double>(
        [&model](const VecXd& p) { return model.loss(p); }, w, 1e-6);
    const VecXd g = model.grad(w);
    worst_fd = std::max(worst_fd, relative_error(g, fd));
    if (m >= 3) {
      VecXd b1 = w / w.norm();
      VecXd r = model.target() - model.target().dot(b1) * b1;
      VecXd res = g - g.dot(b1) * b1;
      if (r.norm() > 1e-12) res -= res.dot(VecXd(r / r.norm())) * (r / r.norm());
      worst_plane = std::max(worst_plane, res.norm());
    }
  }
  return {"no-overlap loss/gradient consistency",
          worst_pairwise <= 1e-12 && worst_fd <= 1e-6 && worst_plane <= 1e-12,
          "pairwise " + fmt(worst_pairwise) + ", fd " + fmt(worst_fd) + ", out-of-span " +
              fmt(worst_plane)};
}

CheckResult no_overlap_critical(const VerifyOptions&, std::mt19937_64& rng) {
  bool ok = true;
  std::string detail;
  for (int k : {2, 3, 8}) {
    VecXd w_star = random_unit_scale(rng, 3);
    w_star /= w_star.norm();
    const NoOverlapLossd model(w_star, k);
    const auto cp = model.critical_points();
    const double g_min = model.grad(cp.global_min).norm();
    const double g_saddle = model.grad(*cp.saddle).norm();
    Eigen::SelfAdjointEigenSolver<MatXd> eig(model.fd_hessian(*cp.saddle, 1e-5));
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double expected = (k + (double(k) * k - k) / pi<double>()) / (double(k) * k);
    ok = ok && g_min <= 1e-10 && g_saddle <= 1e-10 && lo >= -1e-4 && lo <= 1e-4 &&
         std::abs(hi - expected) <= 1e-3;
    if (k == 8) {
      detail = "k=8: |grad|=" + fmt(g_saddle) + ", eig range [" + fmt(lo) + ", " +
               fmt(hi) + "]";
    }
  }
  return {"no-overlap critical points and degenerate saddle", ok, detail};
}

CheckResult no_overlap_upper_bound(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 200 : 1000;
  double worst_margin = -1e300;
  bool positive = true;
  const NoOverlapLossd model(random_unit_scale(rng, 4), 3);
  for (int t = 0; t < trials; ++t) {
    const VecXd w = random_vec(rng, 4, -3.0, 3.0);
    worst_margin =
        std::max(worst_margin, model.loss(w) - model.upper_bound_by_distance(w));
    if ((w - model.target()).norm() >= 1e-3) {
      positive = positive && model.loss(w) > 1e-12;
    }
  }
  return {"no-overlap distance bound and unique zero",
          worst_margin <= 1e-12 && positive,
          "max loss-bound margin " + fmt(worst_margin)};
}

CheckResult overlap_forms(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 100 : 500;
  double worst_rows = 0.0, worst_polar = 0.0, worst_fd = 0.0;
  std::uniform_real_distribution<double> entry(-2.0, 2.0);
  std::uniform_real_distribution<double> mag(1e-3, 2.0);
  for (int t = 0; t < trials; ++t) {
    const int k = 2 + t % 6;
    const OverlapLoss2Dd model(1.0, k);
    VecXd w_star2(2);
    w_star2 << -1.0, 1.0;
    const BandedConvLossd banded(w_star2, k, 1);
    const Vec2<double> w(entry(rng), entry(rng));
    if (w.norm() < 0.3) continue;
    worst_rows = std::max(worst_rows, std::abs(model.loss(w) - banded.loss(VecXd(w))));
    const Vec2<double> q4(mag(rng), -mag(rng));
    worst_polar =
        std::max(worst_polar, std::abs(model.loss(q4) - model.loss_polar_rewrite(q4)));
    if (angle(w, model.target()) > 1e-2 &&
        angle(w, model.target()) < pi<double>() - 1e-2) {
      VecXd wx = w;
      const VecXd fd = fd_gradient<double>(
          [&model](const VecXd& p) { return model.loss(Vec2<double>(p[0], p[1])); }, wx,
          1e-6);
      worst_fd = std::max(worst_fd, relative_error(VecXd(model.grad(w)), fd));
    }
  }
  return {"overlap loss forms and gradient",
          worst_rows <= 1e-12 && worst_polar <= 1e-12 && worst_fd <= 1e-6,
          "rows " + fmt(worst_rows) + ", polar " + fmt(worst_polar) + ", fd " +
              fmt(worst_fd)};
}

CheckResult overlap_trap(const VerifyOptions& options, std::mt19937_64& rng) {
  const int trials = options.quick ? 1000 : 10000;
  std::uniform_real_distribution<double> mag(1e-4, 3.0);
  std::uniform_real_distribution<double> rate(1e-6, 1.0 / 3.0 - 1e-9);
  bool invariant = true, bounded = true, kernel_bound = true;
  double worst_attain = 0.0;
  const double d2_factor =
      (std::sqrt(3.0) / 2.0 - pi<double>() / 6.0) / (2.0 * pi<double>());
  for (int k : {2, 4, 8}) {
    const OverlapLoss2Dd model(1.0, k);
    const double bound = model.trap_lower_bound();
    worst_attain =
        std::max(worst_attain, std::abs(model.loss(model.trap_minimizer()) - bound));
    for (int t = 0; t < trials; ++t) {
      const Vec2<double> w(mag(rng), -mag(rng));
      const Vec2<double> next = w - rate(rng) * model.grad(w);
      invariant = invariant && in_trap(next) && next.norm() > 0.0;
      bounded = bounded && model.loss(w) >= bound - 1e-10;
      const Vec3<double> wr(w[0], w[1], 0.0), wl(0.0, w[0], w[1]);
      kernel_bound =
          kernel_bound && kernel_g(wl, wr) >= d2_factor * w.squaredNorm() - 1e-12;
    }
  }
  return {"overlap trap: invariance, lower bound, kernel bound",
          invariant && bounded && kernel_bound && worst_attain <= 1e-10,
          "attainment gap " + fmt(worst_attain)};
}

CheckResult overlap_angle_term(const VerifyOptions& options, std::mt19937_64&) {
  const int n = options.quick ? 20000 : 100000;
  bool ok = true;
  for (int k : {2, 3, 8}) {
    double best = -1e300;
    int best_i = -1;
    for (int i = 0; i <= n; ++i) {
      const double t = pi<double>() / 4.0 * double(i) / double(n);
      const double value = trap_angle_term(k, t);
      if (value > best) {
        best = value;
        best_i = i;
      }
    }
    ok = ok && best_i == n;
  }
  return {"overlap angle term maximized at the endpoint", ok,
          std::string("grid of ") + std::to_string(n + 1) + " points"};
}

CheckResult trap_direction_mass(const VerifyOptions& options, std::mt19937_64& rng) {
  const int n = options.quick ? 2000 : 10000;
  std::uniform_real_distribution<double> u(0.0, 2.0 * pi<double>());
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    const double phi = u(rng);
    if (in_trap(Vec2<double>(std::cos(phi), std::sin(phi)))) ++hits;
  }
  const double frac = double(hits) / n;
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  return {"trap direction mass near 1/4", std::abs(frac - 0.25) <= 3.0 * sigma,
          "fraction " + fmt(frac)};
}

CheckResult gd_guarantee(const VerifyOptions& options, std::mt19937_64& rng) {
  const int k = 8;
  const int runs = options.quick ? 3 : 10;
  VecXd w_star = random_unit_scale(rng, 4);
  w_star /= w_star.norm();
  const NoOverlapLossd model(w_star, k);
  const double lambda = theorem_step_size(k, 0.1, 1.0);
  const double lipschitz = 1.0 / lambda;
  GdConfig config;
  config.step_size = lambda;
  config.max_iters = 1000000;
  config.grad_tol = 1e-6;
  config.record_stride = 1000000;
  bool ok = true;
  double worst_dist = 0.0;
  int done = 0;
  while (done < runs) {
    const VecXd w0 = unit_sphere_init(4, rng);
    const double theta0 = angle(w0, w_star);
    if (theta0 > 0.9 * pi<double>()) continue;
    ++done;
    const auto traj = run_gd(model, w0, config);
    const double dist = (traj.final_point().w - w_star).norm();
    worst_dist = std::max(worst_dist, dist);
    const double floor = std::min({w0.norm() * std::sin(theta0),
                                   std::sin(theta0) * std::sin(theta0) /
                                       (alpha_of_k(k) * pi<double>()),
                                   1.0 / 8.0});
    const double grad_bound =
        model.loss(w0) / (lambda * (1.0 - lambda * lipschitz / 2.0));
    ok = ok && dist <= 1e-3 && traj.stats.max_angle_increase <= 1e-12 &&
         traj.stats.min_w_norm >= floor - 1e-10 &&
         traj.stats.sum_sq_grad_norms <= grad_bound + 1e-8 &&
         traj.stats.max_out_of_plane <= 1e-10;
  }
  return {"gradient-descent convergence guarantee and invariants", ok,
          "worst final distance " + fmt(worst_dist)};
}

CheckResult hardness_equivalence(const VerifyOptions& options, std::mt19937_64& rng) {
  using namespace hardness;
  bool ok = true;
  int tested = 0;
  const int var_cap = options.quick ? 2 : 3;
  // Random small formulas with matched clause counts.
  std::uniform_int_distribution<int> sign(0, 1);
  for (int n = 1; n <= var_cap; ++n) {
    const int formulas = options.quick ? 40 : 400;
    for (int f = 0; f < formulas; ++f) {
      CnfFormula phi;
      phi.num_vars = n;
      std::uniform_int_distribution<int> var(1, n);
      std::uniform_int_distribution<int> len(1, 3);
      for (int c = 0; c < n; ++c) {
        std::set<int> clause;
        const int target_len = len(rng);
        while (int(clause.size()) < target_len) {
          const int v = var(rng);
          clause.insert(sign(rng) ? v : -v);
          if (int(clause.size()) == n * 2) break;
        }
        phi.clauses.emplace_back(clause.begin(), clause.end());
      }
      const SetSplitInstance instance = equal3sat_to_split2(to_equal_3sat(phi));
      const auto split = brute_force_split(instance);
      ok = ok && (brute_force_sat(phi) == split.has_value());
      if (split) {
        const VecXd w = splitting_to_filter(*split, instance.d);
        const double risk = dataset_risk(w, build_dataset(instance));
        ok = ok && risk == 0.0 && risk < risk_threshold(instance.k, instance.d);
        ok = ok && verify_splitting(instance, filter_to_splitting(w, instance));
      }
      ++tested;
    }
  }
  return {"hardness reduction equivalence and round trip", ok,
          std::to_string(tested) + " formulas"};
}

CheckResult empirical_consistency(const VerifyOptions& options, std::mt19937_64& rng) {
  using namespace empirical;
  const Eigen::Index n = options.quick ? 20000 : 100000;
  const NetworkShape shape{3, 3, 3};
  const VecXd w_star = random_unit_scale(rng, 3);
  const NoOverlapLossd population(w_star, 3);
  const VecXd w = random_unit_scale(rng, 3);
  const auto data = sample_gaussian_dataset(n, shape, w_star, rng());
  const VecXd out = forward_all(w, data, shape);
  const VecXd sq = (out - data.labels).array().square();
  const double mean = sq.mean();
  const double se = std::sqrt((sq.array() - mean).square().sum() / double(n - 1) /
                              double(n));
  const double gap = std::abs(mean - population.loss(w)) / std::max(se, 1e-300);
  return {"empirical risk matches the population closed form", gap <= 3.0,
          "gap " + fmt(gap) + " standard errors"};
}

CheckResult wilson_values(const VerifyOptions&, std::mt19937_64&) {
  using empirical::wilson_lower_bound;
  const double at3 = wilson_lower_bound(3, 20, 1.645);
  bool ok = at3 > 1.0 / 17.0 && wilson_lower_bound(0, 20, 1.645) == 0.0;
  const double full = wilson_lower_bound(20, 20, 1.645);
  ok = ok && full > 0.8 && full < 1.0;
  for (int s = 1; s <= 20; ++s) {
    ok = ok && wilson_lower_bound(s, 20, 1.645) > wilson_lower_bound(s - 1, 20, 1.645);
  }
  return {"wilson lower bound values and monotonicity", ok,
          "bound(3/20) = " + fmt(at3)};
}

CheckResult uniqueness_sweep(const VerifyOptions& options, std::mt19937_64& rng) {
  using namespace empirical;
  const int trials = options.quick ? 200 : 1000;
  const NetworkShape shape{3, 1, 5};
  const VecXd w_star = random_unit_scale(rng, 3);
  const BandedConvLossd population(w_star, shape.k, 1);
  bool ok = true;
  for (int t = 0; t < trials; ++t) {
    VecXd w = random_vec(rng, 3, -2.0, 2.0);
    if ((w - w_star).norm() == 0.0) continue;
    const auto result = uniqueness_probe(shape, w, w_star);
    ok = ok && !result.identical && result.value_w != result.value_w_star &&
         population.loss(w) > 0.0;
  }
  return {"uniqueness probe discriminates every w != w*", ok,
          std::to_string(trials) + " probes"};
}

}  // namespace

std::vector<CheckResult> run_all_checks(const VerifyOptions& options) {
  const std::vector<Checker> checkers = {
      kernel_algebra,        kernel_grad_fd,       kernel_monte_carlo,
      no_overlap_consistency, no_overlap_critical, no_overlap_upper_bound,
      overlap_forms,         overlap_trap,         overlap_angle_term,
      trap_direction_mass,   gd_guarantee,         hardness_equivalence,
      empirical_consistency, wilson_values,        uniqueness_sweep,
  };
  std::vector<CheckResult> results(checkers.size());
  // Independent derived streams keep the suite deterministic under the
  // parallel dispatch.
  parallel_for(std::int64_t(checkers.size()), [&](std::int64_t i) {
    std::mt19937_64 rng(options.seed + 0x9e3779b97f4a7c15ULL * std::uint64_t(i + 1));
    results[std::size_t(i)] = checkers[std::size_t(i)](options, rng);
  });
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace relu_lab::verify
