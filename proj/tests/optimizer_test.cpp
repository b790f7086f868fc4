#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "relu_lab/no_overlap.hpp"
#include "relu_lab/optimizer.hpp"
#include "relu_lab/overlap2d.hpp"
#include "test_util.hpp"

using namespace relu_lab;

namespace {

// Loss with a constant gradient; exercises the AdaGrad accumulator.
struct LinearLoss {
  VecXd slope;
  VecXd tgt;
  double loss(const VecXd& w) const { return slope.dot(w); }
  VecXd grad(const VecXd&) const { return slope; }
  const VecXd& target() const { return tgt; }
};

// Adapter so the 2-vector overlap loss can drive the generic runners.
struct Overlap2DAdapter {
  OverlapLoss2Dd model;
  VecXd tgt;
  explicit Overlap2DAdapter(OverlapLoss2Dd m) : model(std::move(m)), tgt(model.target()) {}
  double loss(const VecXd& w) const { return model.loss(Vec2<double>(w[0], w[1])); }
  VecXd grad(const VecXd& w) const { return model.grad(Vec2<double>(w[0], w[1])); }
  const VecXd& target() const { return tgt; }
};

}  // namespace

TEST_CASE("gd_step fixed points and span decomposition") {
  auto rng = test_util::make_rng(89);
  const NoOverlapLossd model(test_util::random_unit_scale_vec(rng, 4), 3);
  CHECK((gd_step(model, model.target(), 0.1) - model.target()).norm() <= 1e-12);
  const auto cp = model.critical_points();
  CHECK((gd_step(model, *cp.saddle, 0.1) - *cp.saddle).norm() <= 1e-12);

  // One step lands at (1 + lambda c1) w0 + lambda c2 w* with c1 >= -1, c2 >= 0.
  for (int trial = 0; trial < 200; ++trial) {
    const VecXd w0 = test_util::random_unit_scale_vec(rng, 4);
    const double lambda = 0.3;
    const double k = model.k();
    const double theta = angle(w0, model.target());
    const double ns = model.target().norm();
    const double c1 =
        -(k + (k * k - k) / pi<double>() -
          k * ns * std::sin(theta) / (pi<double>() * w0.norm()) -
          (k * k - k) / pi<double>() * ns / w0.norm()) /
        (k * k);
    const double c2 = (pi<double>() - theta) / (pi<double>() * k);
    CHECK(c1 >= -1.0);
    CHECK(c2 >= 0.0);
    const VecXd expected = (1 + lambda * c1) * w0 + lambda * c2 * model.target();
    CHECK((gd_step(model, w0, lambda) - expected).norm() <= 1e-12);
  }
}

TEST_CASE("run_gd at the target stops immediately") {
  auto rng = test_util::make_rng(97);
  const NoOverlapLossd model(test_util::random_unit_scale_vec(rng, 3), 2);
  GdConfig config;
  config.grad_tol = 1e-9;
  const auto traj = run_gd(model, model.target(), config);
  CHECK(traj.terminated_reason == StopReason::grad_tol_reached);
  CHECK(traj.points.size() == 1);
  CHECK(traj.final_point().iter == 0);
}

TEST_CASE("run_gd is deterministic and honors the record stride") {
  auto rng = test_util::make_rng(101);
  const NoOverlapLossd model(VecXd(test_util::random_unit_scale_vec(rng, 4)).normalized(), 8);
  const VecXd w0 = unit_sphere_init(4, rng);
  GdConfig config;
  config.step_size = theorem_step_size(8, 0.25, 1.0);
  config.max_iters = 5000;
  config.grad_tol = 1e-8;
  config.record_stride = 100;
  const auto a = run_gd(model, w0, config);
  const auto b = run_gd(model, w0, config);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].w == b.points[i].w);  // bitwise reproducible
  }
  CHECK(a.points.front().iter == 0);
  CHECK(a.points.back().iter == a.stats.iterations);
  for (std::size_t i = 1; i + 1 < a.points.size(); ++i) {
    CHECK(a.points[i].iter % 100 == 0);
  }
}

TEST_CASE("theorem step size closed value and sweep") {
  // k = 1, delta = 1/2: M = (1/8) cos(pi/4), lambda = 1 / (1 + 3/M).
  const double m = 0.125 * std::cos(pi<double>() / 4.0);
  CHECK(theorem_step_size(1, 0.5, 1.0) == doctest::Approx(1.0 / (1.0 + 3.0 / m)).epsilon(1e-14));
  for (int k = 1; k <= 64; ++k) {
    double prev = 0.0;
    for (double delta : {0.1, 0.25, 0.5}) {
      const double lambda = theorem_step_size(k, delta, 1.0);
      CHECK(lambda > 0.0);
      CHECK(lambda < 0.5);
      CHECK(lambda > prev);  // larger delta, larger step
      prev = lambda;
    }
  }
  CHECK_THROWS_AS(theorem_step_size(0, 0.5, 1.0), ParamError);
  CHECK_THROWS_AS(theorem_step_size(2, 0.0, 1.0), ParamError);
  CHECK_THROWS_AS(theorem_step_size(2, 0.5, 0.0), ParamError);
}

TEST_CASE("guaranteed convergence regime with trajectory invariants" *
          doctest::timeout(300)) {
  auto rng = test_util::make_rng(103);
  const int k = 8;
  VecXd w_star = test_util::random_unit_scale_vec(rng, 4).normalized();
  const NoOverlapLossd model(w_star, k);
  const double delta = 0.1;
  const double lambda = theorem_step_size(k, delta, 1.0);
  const double lipschitz = theorem_lipschitz(k, delta, 1.0);

  GdConfig config;
  config.step_size = lambda;
  config.max_iters = 1000000;
  config.grad_tol = 1e-6;
  config.record_stride = 1000000;

  int runs = 0;
  while (runs < 5) {
    const VecXd w0 = unit_sphere_init(4, rng);
    const double theta0 = angle(w0, w_star);
    if (theta0 > 0.9 * pi<double>()) continue;
    ++runs;
    const auto traj = run_gd(model, w0, config);
    CHECK(traj.terminated_reason == StopReason::grad_tol_reached);
    CHECK((traj.final_point().w - w_star).norm() <= 1e-3);

    // Angle decreases, the norm respects its floor, descent is monotone,
    // iterates stay in the starting plane.
    CHECK(traj.stats.max_angle_increase <= 1e-12);
    const double floor =
        std::min({w0.norm() * std::sin(theta0),
                  std::sin(theta0) * std::sin(theta0) / (alpha_of_k(k) * pi<double>()),
                  1.0 / 8.0});
    CHECK(traj.stats.min_w_norm >= floor - 1e-10);
    CHECK(traj.stats.max_loss_increase <= 1e-15);
    CHECK(traj.stats.max_out_of_plane <= 1e-10);
    const double grad_sum_bound =
        model.loss(w0) / (lambda * (1.0 - lambda * lipschitz / 2.0));
    CHECK(traj.stats.sum_sq_grad_norms <= grad_sum_bound + 1e-8);
  }
}

TEST_CASE("gradient descent stays trapped in the fourth quadrant") {
  auto rng = test_util::make_rng(107);
  const Overlap2DAdapter adapter{OverlapLoss2Dd(1.0, 4)};
  GdConfig config;
  config.step_size = 0.1;
  config.max_iters = 20000;
  config.grad_tol = 1e-12;
  config.record_stride = 1;
  std::uniform_real_distribution<double> mag(0.05, 2.0);
  for (int run = 0; run < 10; ++run) {
    VecXd w0(2);
    w0 << mag(rng), -mag(rng);
    const auto traj = run_gd(adapter, w0, config);
    for (const auto& pt : traj.points) {
      CHECK(in_trap(Vec2<double>(pt.w[0], pt.w[1])));
    }
    CHECK(traj.final_point().loss_value >=
          suboptimality_bound(4, 1.0) - 1e-10);
  }
}

TEST_CASE("adagrad: stationary at the minimum, decreasing steps on a ramp") {
  auto rng = test_util::make_rng(109);
  const NoOverlapLossd model(test_util::random_unit_scale_vec(rng, 3), 2);
  GdConfig config;
  config.step_size = 0.5;
  config.max_iters = 50;
  const auto stationary = run_adagrad(model, model.target(), config);
  CHECK(stationary.points.size() == 1);
  CHECK(stationary.terminated_reason == StopReason::grad_tol_reached);

  LinearLoss ramp;
  ramp.slope = VecXd::Ones(3);
  ramp.tgt = VecXd::Ones(3);
  config.grad_tol = 0.0;
  config.max_iters = 10;
  config.record_stride = 1;
  const auto traj = run_adagrad(ramp, VecXd(VecXd::Ones(3)), config);
  // With constant gradient g the t-th step is step_size/sqrt(t g^2 + eps),
  // strictly decreasing; the first is about step_size, the second 1/sqrt(2)
  // of it.
  std::vector<double> step_norms;
  for (std::size_t i = 1; i < traj.points.size(); ++i) {
    step_norms.push_back((traj.points[i].w - traj.points[i - 1].w).norm());
  }
  REQUIRE(step_norms.size() >= 3);
  CHECK(step_norms[0] == doctest::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-6));
  CHECK(step_norms[1] == doctest::Approx(0.5 * std::sqrt(3.0) / std::sqrt(2.0)).epsilon(1e-6));
  for (std::size_t i = 1; i < step_norms.size(); ++i) {
    CHECK(step_norms[i] < step_norms[i - 1]);
  }
}

TEST_CASE("unit sphere initialization is isotropic") {
  auto rng = test_util::make_rng(113);
  VecXd mean = VecXd::Zero(8);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const VecXd v = unit_sphere_init(8, rng);
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
    mean += v;
  }
  mean /= double(n);
  CHECK(mean.norm() <= 0.02);

  // dim = 2: the angle to a fixed direction is uniform on [0, pi], so the
  // cap {angle > 0.9 pi} has mass 0.1.
  VecXd e1 = VecXd::Zero(2);
  e1[0] = 1.0;
  int cap_hits = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    if (angle(unit_sphere_init(2, rng), e1) > 0.9 * pi<double>()) ++cap_hits;
  }
  const double frac = double(cap_hits) / draws;
  const double sigma = std::sqrt(0.1 * 0.9 / draws);
  CHECK(std::abs(frac - 0.1) <= 3.0 * sigma);
}

TEST_CASE("config validation") {
  GdConfig config;
  config.step_size = 1.5;
  CHECK_THROWS_AS(config.validate(), ParamError);
  config.step_size = 0.1;
  config.max_iters = 0;
  CHECK_THROWS_AS(config.validate(), ParamError);
  config.max_iters = 10;
  config.grad_tol = -1.0;
  CHECK_THROWS_AS(config.validate(), ParamError);

  // epsilon-delta compatibility bound of the convergence theorem
  CHECK(theorem_epsilon_bound(8, 0.1) ==
        doctest::Approx(0.1 * std::sin(0.1 * pi<double>()) / 8.0).epsilon(1e-14));
}
