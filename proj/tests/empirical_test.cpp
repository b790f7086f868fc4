#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "relu_lab/banded_conv.hpp"
#include "relu_lab/empirical.hpp"
#include "relu_lab/no_overlap.hpp"
#include "relu_lab/numeric.hpp"
#include "relu_lab/optimizer.hpp"
#include "test_util.hpp"

using namespace relu_lab;
using namespace relu_lab::empirical;

TEST_CASE("shape validation and dimensions") {
  NetworkShape shape{4, 2, 3};
  shape.validate();
  CHECK(shape.input_dim() == 4 + 2 * 2);
  CHECK_FALSE(shape.no_overlap());
  CHECK(NetworkShape{4, 4, 3}.no_overlap());
  CHECK_THROWS_AS(NetworkShape({4, 5, 3}).validate(), ParamError);
  CHECK_THROWS_AS(NetworkShape({0, 1, 3}).validate(), ParamError);
}

TEST_CASE("gaussian dataset: nonnegative labels with the right mean") {
  auto rng = test_util::make_rng(149);
  const NetworkShape shape{5, 5, 3};
  const VecXd w_star = test_util::random_unit_scale_vec(rng, 5);
  const auto data = sample_gaussian_dataset(20000, shape, w_star, 99);
  CHECK(data.size() == 20000);
  CHECK(data.labels.minCoeff() >= 0.0);
  // E relu(w*.x) = |w*| / sqrt(2 pi) per window, and the average keeps it.
  const double expected = w_star.norm() / std::sqrt(2.0 * pi<double>());
  const double mean = data.labels.mean();
  const double se = std::sqrt((data.labels.array() - mean).square().sum() /
                              double(data.size() - 1) / double(data.size()));
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("empirical risk vanishes on the generating filter") {
  auto rng = test_util::make_rng(151);
  for (const NetworkShape shape : {NetworkShape{4, 4, 2}, NetworkShape{4, 2, 3},
                                   NetworkShape{3, 1, 4}}) {
    const VecXd w_star = test_util::random_unit_scale_vec(rng, shape.filter_size);
    const auto data = sample_gaussian_dataset(500, shape, w_star, 7);
    CHECK(empirical_risk(w_star, data, shape) == 0.0);
    CHECK(empirical_grad(w_star, data, shape).norm() == 0.0);
  }
}

TEST_CASE("empirical risk converges to the population closed form") {
  auto rng = test_util::make_rng(157);
  const NetworkShape shape{3, 3, 3};
  const VecXd w_star = test_util::random_unit_scale_vec(rng, 3);
  const NoOverlapLossd population(w_star, 3);
  const VecXd w = test_util::random_unit_scale_vec(rng, 3);
  // Consistency at every sample scale, with the standard error shrinking
  // like 1/sqrt(n).
  double prev_se = 1e300;
  for (Eigen::Index n : {1000, 10000, 100000}) {
    const auto data = sample_gaussian_dataset(n, shape, w_star, 11 + n);
    const VecXd out = forward_all(w, data, shape);
    const VecXd sq = (out - data.labels).array().square();
    const double mean = sq.mean();
    const double se =
        std::sqrt((sq.array() - mean).square().sum() / double(n - 1) / double(n));
    CHECK(std::abs(mean - population.loss(w)) <= 3.0 * se);
    CHECK(se < prev_se);
    prev_se = se;
  }
}

TEST_CASE("hardness dataset adapter reproduces the planted zero risk") {
  const auto planted = hardness::plant_random_instance(6, 2, 5, 3, 3);
  const auto hard = hardness::build_dataset(planted.instance);
  const auto data = dataset_from_hard(hard);
  const NetworkShape shape = shape_for_hard(hard);
  const VecXd w_star = hardness::splitting_to_filter(planted.planted, 6);
  CHECK(empirical_risk(w_star, data, shape) == 0.0);
  // Adapter and hardness-side risk agree at other points too.
  auto rng = test_util::make_rng(163);
  const VecXd w = test_util::random_vec(rng, shape.filter_size, -2.0, 2.0);
  CHECK(empirical_risk(w, data, shape) ==
        doctest::Approx(hardness::dataset_risk(w, hard)).epsilon(1e-14));
}

TEST_CASE("empirical subgradient matches finite differences away from kinks") {
  auto rng = test_util::make_rng(167);
  const NetworkShape shape{3, 1, 3};
  const VecXd w_star = test_util::random_unit_scale_vec(rng, 3);
  const auto data = sample_gaussian_dataset(200, shape, w_star, 13);
  int checked = 0;
  while (checked < 50) {
    const VecXd w = test_util::random_unit_scale_vec(rng, 3);
    // Kink guard: skip points with any near-zero pre-activation.
    bool near_kink = false;
    for (int i = 0; i < shape.k && !near_kink; ++i) {
      const VecXd pre =
          data.points.middleCols(Eigen::Index(i) * shape.stride, shape.filter_size) * w;
      near_kink = (pre.array().abs() < 1e-6).any();
    }
    if (near_kink) continue;
    ++checked;
    const VecXd analytic = empirical_grad(w, data, shape);
    const VecXd fd = fd_gradient<double>(
        [&](const VecXd& p) { return empirical_risk(p, data, shape); }, w, 1e-7);
    CHECK(relative_error(analytic, fd) <= 1e-5);
  }

  // Single point, all windows active: plain least-squares gradient.
  LabeledDataset single;
  single.k = 1;
  single.points = MatXd::Ones(1, 2);
  single.labels = VecXd::Zero(1);
  const NetworkShape tiny{2, 2, 1};
  VecXd w(2);
  w << 0.5, 0.25;  // pre-activation 0.75 > 0
  const VecXd g = empirical_grad(w, single, tiny);
  const VecXd expected = 2.0 * (w.sum() - 0.0) * VecXd::Ones(2);
  CHECK((g - expected).norm() <= 1e-14);
}

TEST_CASE("wilson lower bound: pinned values, clamping, monotonicity") {
  const double z = 1.645;
  const double at_3_of_20 = wilson_lower_bound(3, 20, z);
  CHECK(at_3_of_20 > 1.0 / 17.0);
  CHECK(at_3_of_20 == doctest::Approx(0.0616).epsilon(1e-2));
  CHECK(wilson_lower_bound(0, 20, z) == 0.0);
  const double full = wilson_lower_bound(20, 20, z);
  CHECK(full > 0.8);
  CHECK(full < 1.0);
  for (int s = 1; s <= 20; ++s) {
    CHECK(wilson_lower_bound(s, 20, z) > wilson_lower_bound(s - 1, 20, z));
  }
  // For fixed p-hat, more trials tighten the bound upward.
  CHECK(wilson_lower_bound(30, 200, z) > wilson_lower_bound(3, 20, z));
  CHECK_THROWS_AS(wilson_lower_bound(5, 4, z), ParamError);
  CHECK_THROWS_AS(wilson_lower_bound(1, 4, 0.0), ParamError);
}

TEST_CASE("restarts on the no-overlap landscape almost always succeed" *
          doctest::timeout(300)) {
  auto rng = test_util::make_rng(173);
  const NoOverlapLossd model(VecXd(test_util::random_unit_scale_vec(rng, 3)), 4);
  RestartConfig config;
  config.runs = 30;
  config.step_size = 0.3;
  config.max_iters = 100000;
  config.seed = 5;
  const RestartReport report = restart_experiment(model, config);
  CHECK(report.num_runs == 30);
  CHECK(report.num_global + report.num_stuck == report.num_runs);
  CHECK(report.p_hat == 1.0);  // the pi-angle initializations have measure zero

  // Determinism: bit-identical aggregate on replay.
  const RestartReport replay = restart_experiment(model, config);
  CHECK(replay.num_global == report.num_global);
  CHECK(replay.p_hat == report.p_hat);
  CHECK(replay.wilson_lower == report.wilson_lower);
}

TEST_CASE("restarts on the two-tap overlap trap get stuck about a quarter of the time" *
          doctest::timeout(600)) {
  VecXd w_star(2);
  w_star << -1.0, 1.0;
  const BandedConvLossd model(w_star, 8, 1);
  RestartConfig config;
  config.runs = 400;
  config.step_size = 0.25;  // within the quadrant-invariance range
  config.max_iters = 60000;
  config.seed = 17;
  const RestartReport report = restart_experiment(model, config);
  // Fourth-quadrant starts (a quarter of the hypercube) always stay trapped;
  // the trap's basin can only be larger, so the stuck fraction is bounded
  // below by 1/4 and the success rate above by 3/4, up to sampling noise.
  const double sigma = std::sqrt(0.25 * 0.75 / config.runs);
  CHECK(double(report.num_stuck) / config.runs >= 0.25 - 3.0 * sigma);
  CHECK(report.p_hat <= 0.75 + 3.0 * sigma);
}

TEST_CASE("uniqueness probe finds discriminating inputs") {
  auto rng = test_util::make_rng(179);
  const NetworkShape shape{3, 1, 5};
  const VecXd w_star = test_util::random_unit_scale_vec(rng, 3);

  const auto same = uniqueness_probe(shape, w_star, w_star);
  CHECK(same.identical);

  int with_loss_check = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    VecXd w = test_util::random_vec(rng, 3, -2.0, 2.0);
    if ((w - w_star).norm() == 0.0) continue;
    const auto result = uniqueness_probe(shape, w, w_star);
    REQUIRE_FALSE(result.identical);
    CHECK(result.value_w != result.value_w_star);
    CHECK(result.witness.cwiseAbs().sum() == 1.0);  // signed basis probe
    if (trial % 10 == 0) {
      const BandedConvLossd population(w_star, shape.k, 1);
      CHECK(population.loss(w) > 0.0);
      ++with_loss_check;
    }
  }
  CHECK(with_loss_check > 0);

  // Differing only in a later coordinate: the probe moves to that axis.
  VecXd w2 = w_star;
  w2[1] += 0.5;
  const auto second = uniqueness_probe(shape, w2, w_star);
  CHECK(second.coordinate == 2);
  CHECK(second.value_w != second.value_w_star);

  CHECK_THROWS_AS(uniqueness_probe(NetworkShape{3, 3, 2}, w_star, w_star), ParamError);
}

TEST_CASE("adagrad training curve decreases on a gaussian dataset") {
  auto rng = test_util::make_rng(181);
  const NetworkShape shape{4, 4, 2};
  const VecXd w_star = test_util::random_unit_scale_vec(rng, 4);
  const auto data = sample_gaussian_dataset(300, shape, w_star, 23);
  const EmpiricalRiskModel model(data, shape, w_star);
  VecXd w0(4);
  for (Eigen::Index i = 0; i < 4; ++i) w0[i] = test_util::random_vec(rng, 1)[0];
  const TrainingCurve curve = train_adagrad(model, w0, 0.3, 2000);
  CHECK(curve.epoch_loss.size() == 2001);
  CHECK(curve.final_loss() < 0.1 * curve.epoch_loss.front());
}
