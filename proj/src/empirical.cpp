#include "relu_lab/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relu_lab/optimizer.hpp"
#include "relu_lab/parallel.hpp"

namespace relu_lab::empirical {

namespace {

void check_filter(const VecXd& w, const NetworkShape& shape, const char* where) {
  if (w.size() != shape.filter_size) {
    throw ShapeError(std::string(where) + ": filter size does not match shape");
  }
}

void check_data(const LabeledDataset& data, const NetworkShape& shape,
                const char* where) {
  if (data.points.rows() != data.labels.size()) {
    throw ShapeError(std::string(where) + ": points/labels length mismatch");
  }
  if (data.points.cols() != shape.input_dim()) {
    throw ShapeError(std::string(where) + ": point dimension does not match shape");
  }
}

}  // namespace

double forward(const VecXd& w, const Eigen::Ref<const VecXd>& x,
               const NetworkShape& shape) {
  shape.validate();
  check_filter(w, shape, "forward");
  if (x.size() != shape.input_dim()) throw ShapeError("forward: wrong input dimension");
  double acc = 0.0;
  for (int i = 0; i < shape.k; ++i) {
    acc += std::max(0.0, w.dot(x.segment(Eigen::Index(i) * shape.stride, shape.filter_size)));
  }
  return acc / double(shape.k);
}

VecXd forward_points(const VecXd& w, const MatXd& points, const NetworkShape& shape) {
  shape.validate();
  check_filter(w, shape, "forward_points");
  if (points.cols() != shape.input_dim()) {
    throw ShapeError("forward_points: point dimension does not match shape");
  }
  VecXd out = VecXd::Zero(points.rows());
  for (int i = 0; i < shape.k; ++i) {
    out += (points.middleCols(Eigen::Index(i) * shape.stride, shape.filter_size) * w)
               .cwiseMax(0.0);
  }
  return out / double(shape.k);
}

VecXd forward_all(const VecXd& w, const LabeledDataset& data, const NetworkShape& shape) {
  check_data(data, shape, "forward_all");
  return forward_points(w, data.points, shape);
}

double empirical_risk(const VecXd& w, const LabeledDataset& data,
                      const NetworkShape& shape) {
  const VecXd out = forward_all(w, data, shape);
  return (out - data.labels).squaredNorm() / double(data.size());
}

VecXd empirical_grad(const VecXd& w, const LabeledDataset& data,
                     const NetworkShape& shape) {
  shape.validate();
  check_filter(w, shape, "empirical_grad");
  check_data(data, shape, "empirical_grad");
  const Eigen::Index n = data.size();
  const VecXd resid = forward_all(w, data, shape) - data.labels;
  VecXd grad = VecXd::Zero(shape.filter_size);
  for (int i = 0; i < shape.k; ++i) {
    const auto window =
        data.points.middleCols(Eigen::Index(i) * shape.stride, shape.filter_size);
    const VecXd pre = window * w;
    // Active-window residuals; the indicator is 0 at exactly zero.
    const VecXd gated = (pre.array() > 0.0).select(resid, VecXd::Zero(n));
    grad += window.transpose() * gated;
  }
  return grad * (2.0 / (double(n) * double(shape.k)));
}

LabeledDataset sample_gaussian_dataset(Eigen::Index n, const NetworkShape& shape,
                                       const VecXd& w_star, std::uint64_t seed) {
  shape.validate();
  check_filter(w_star, shape, "sample_gaussian_dataset");
  if (n < 1) throw ParamError("sample_gaussian_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledDataset data;
  data.k = shape.k;
  data.points.resize(n, shape.input_dim());
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < data.points.cols(); ++c) {
      data.points(r, c) = normal(rng);
    }
  }
  data.labels = forward_points(w_star, data.points, shape);
  return data;
}

LabeledDataset dataset_from_hard(const hardness::HardDataset& hard) {
  LabeledDataset data;
  data.points = hard.points;
  data.labels = hard.labels;
  data.k = hard.k;
  return data;
}

NetworkShape shape_for_hard(const hardness::HardDataset& hard) {
  NetworkShape shape;
  shape.k = hard.k;
  shape.filter_size = hard.k * hard.d;
  shape.stride = shape.filter_size;
  return shape;
}

EmpiricalRiskModel::EmpiricalRiskModel(LabeledDataset data, NetworkShape shape,
                                       std::optional<VecXd> generating_filter)
    : data_(std::move(data)), shape_(shape) {
  shape_.validate();
  check_data(data_, shape_, "EmpiricalRiskModel");
  if (generating_filter) {
    check_filter(*generating_filter, shape_, "EmpiricalRiskModel");
    target_ = std::move(*generating_filter);
    has_target_ = true;
  } else {
    target_ = VecXd::Zero(shape_.filter_size);
  }
}

double wilson_lower_bound(int successes, int trials, double z_alpha) {
  if (trials < 1 || successes < 0 || successes > trials) {
    throw ParamError("wilson_lower_bound: need 0 <= successes <= trials, trials >= 1");
  }
  if (!(z_alpha > 0.0)) throw ParamError("wilson_lower_bound: z must be positive");
  const double n = trials;
  const double p = double(successes) / n;
  const double z2 = z_alpha * z_alpha;
  const double center = p + z2 / (2.0 * n);
  const double spread =
      z_alpha * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  const double lower = (center - spread) / (1.0 + z2 / n);
  return std::clamp(lower, 0.0, 1.0);
}

namespace detail {

RestartReport classify_runs(const std::vector<char>& reached_global, double z_alpha) {
  RestartReport report;
  report.num_runs = int(reached_global.size());
  for (char c : reached_global) report.num_global += (c != 0);
  report.num_stuck = report.num_runs - report.num_global;
  report.p_hat = double(report.num_global) / double(report.num_runs);
  report.wilson_lower = wilson_lower_bound(report.num_global, report.num_runs, z_alpha);
  return report;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair; decorrelates per-run streams.
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

VecXd hypercube_init(Eigen::Index dim, double half_width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-half_width, half_width);
  VecXd w(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) w[i] = uniform(rng);
  } while (w.norm() == 0.0);
  return w;
}

}  // namespace detail

void parallel_for_runs(int n, const std::function<void(std::int64_t)>& fn) {
  parallel_for(n, fn);
}

TrainingCurve train_adagrad(const EmpiricalRiskModel& model, const VecXd& w0,
                            double learning_rate, int epochs) {
  if (epochs < 0) throw ParamError("train_adagrad: epochs must be >= 0");
  TrainingCurve curve;
  curve.learning_rate = learning_rate;
  curve.epoch_loss.reserve(std::size_t(epochs) + 1);
  VecXd w = w0;
  VecXd accum = VecXd::Zero(w0.size());
  curve.epoch_loss.push_back(model.loss(w));
  for (int e = 0; e < epochs; ++e) {
    const VecXd g = model.grad(w);
    accum += g.cwiseProduct(g);
    w -= learning_rate * g.cwiseQuotient((accum.array() + 1e-8).sqrt().matrix());
    curve.epoch_loss.push_back(model.loss(w));
  }
  return curve;
}

TractabilityGapResult tractability_gap_experiment(const TractabilityGapConfig& config) {
  // Reduction dataset with a planted splitting, plus a Gaussian dataset of
  // the same size labeled by the planted filter.
  const auto planted = hardness::plant_random_instance(
      config.d, config.k, config.num_subsets, config.subset_size, config.seed);
  const auto hard = hardness::build_dataset(planted.instance);
  const VecXd w_star = hardness::splitting_to_filter(planted.planted, config.d);

  const NetworkShape shape = shape_for_hard(hard);
  const EmpiricalRiskModel hard_model(dataset_from_hard(hard), shape, w_star);
  const EmpiricalRiskModel gauss_model(
      sample_gaussian_dataset(hard.num_points(), shape, w_star,
                              detail::mix_seed(config.seed, 1)),
      shape, w_star);

  // Shared random normal initializer.
  std::mt19937_64 rng(detail::mix_seed(config.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  VecXd w0(shape.filter_size);
  for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = normal(rng);

  TractabilityGapResult result;
  const VecXd zero = VecXd::Zero(shape.filter_size);
  result.zero_filter_mse = hard_model.loss(zero);
  result.zero_filter_rmse = std::sqrt(result.zero_filter_mse);

  auto sweep = [&](const EmpiricalRiskModel& model, std::vector<TrainingCurve>& out) {
    std::size_t best = 0;
    for (double lr : config.learning_rates) {
      out.push_back(train_adagrad(model, w0, lr, config.epochs));
      if (out.back().final_loss() < out[best].final_loss()) best = out.size() - 1;
    }
    return out[best];
  };
  result.gaussian = sweep(gauss_model, result.gaussian_sweep);
  result.hard = sweep(hard_model, result.hard_sweep);
  return result;
}

UniquenessResult uniqueness_probe(const NetworkShape& shape, const VecXd& w,
                                  const VecXd& w_star) {
  shape.validate();
  if (shape.stride != 1) {
    throw ParamError("uniqueness_probe: the coordinate argument needs stride 1");
  }
  check_filter(w, shape, "uniqueness_probe");
  check_filter(w_star, shape, "uniqueness_probe");

  UniquenessResult result;
  Eigen::Index first_diff = -1;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w[j] != w_star[j]) {
      first_diff = j;
      break;
    }
  }
  if (first_diff < 0) {
    result.identical = true;
    return result;
  }

  // Probing t e_{j+1} touches filter coordinates 1..j+1 only; the first j
  // agree, so the outputs differ for t = +1 or t = -1.
  result.coordinate = int(first_diff) + 1;
  const double a = w[first_diff];
  const double b = w_star[first_diff];
  result.sign = (std::max(a, 0.0) != std::max(b, 0.0)) ? 1.0 : -1.0;
  result.witness = VecXd::Zero(shape.input_dim());
  result.witness[first_diff] = result.sign;
  result.value_w = forward(w, result.witness, shape);
  result.value_w_star = forward(w_star, result.witness, shape);
  return result;
}

}  // namespace relu_lab::empirical
