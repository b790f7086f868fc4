#pragma once

// Finite-sample side of the study: Gaussian training sets labeled by a
// ground-truth filter, the empirical risk and its subgradient, the
// easy-vs-hard training comparison, random-restart basin estimation with
// Wilson confidence bounds, and the coordinate-probe uniqueness argument.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "relu_lab/common.hpp"
#include "relu_lab/hardness.hpp"

namespace relu_lab::empirical {

/// Convolutional layer geometry: k windows of size filter_size placed at
/// the given stride; input dimension filter_size + (k-1) stride.
struct NetworkShape {
  int filter_size = 1;
  int stride = 1;
  int k = 1;

  Eigen::Index input_dim() const {
    return filter_size + Eigen::Index(k - 1) * stride;
  }
  bool no_overlap() const { return stride == filter_size; }
  void validate() const {
    if (filter_size < 1) throw ParamError("NetworkShape: filter_size must be >= 1");
    if (stride < 1 || stride > filter_size) {
      throw ParamError("NetworkShape: stride must lie in [1, filter_size]");
    }
    if (k < 1) throw ParamError("NetworkShape: k must be >= 1");
  }
};

struct LabeledDataset {
  MatXd points;  // one row per sample
  VecXd labels;
  int k = 1;  // hidden units used to produce the labels

  Eigen::Index size() const { return points.rows(); }
};

/// (1/k) sum_i relu(w . window_i(x)).
double forward(const VecXd& w, const Eigen::Ref<const VecXd>& x,
               const NetworkShape& shape);

/// Network outputs for a matrix of inputs (one row per sample).
VecXd forward_points(const VecXd& w, const MatXd& points, const NetworkShape& shape);

/// Network outputs for every dataset row.
VecXd forward_all(const VecXd& w, const LabeledDataset& data, const NetworkShape& shape);

/// Mean squared error (1/n) sum (f(x_i; w) - y_i)^2.
double empirical_risk(const VecXd& w, const LabeledDataset& data,
                      const NetworkShape& shape);

/// Subgradient of the empirical risk; the ReLU indicator is 0 at exactly
/// zero pre-activation.
VecXd empirical_grad(const VecXd& w, const LabeledDataset& data,
                     const NetworkShape& shape);

/// n i.i.d. standard normal inputs labeled by the w_star network.
LabeledDataset sample_gaussian_dataset(Eigen::Index n, const NetworkShape& shape,
                                       const VecXd& w_star, std::uint64_t seed);

/// View a reduction training set as a labeled dataset (no-overlap shape
/// with filter size k d).
LabeledDataset dataset_from_hard(const hardness::HardDataset& hard);
NetworkShape shape_for_hard(const hardness::HardDataset& hard);

/// Adapter running first-order methods on the empirical risk.
class EmpiricalRiskModel {
 public:
  EmpiricalRiskModel(LabeledDataset data, NetworkShape shape,
                     std::optional<VecXd> generating_filter = std::nullopt);

  double loss(const VecXd& w) const { return empirical_risk(w, data_, shape_); }
  VecXd grad(const VecXd& w) const { return empirical_grad(w, data_, shape_); }
  const VecXd& target() const { return target_; }
  const NetworkShape& shape() const { return shape_; }
  const LabeledDataset& data() const { return data_; }
  bool has_target() const { return has_target_; }

 private:
  LabeledDataset data_;
  NetworkShape shape_;
  VecXd target_;  // zero placeholder when the generating filter is unknown
  bool has_target_ = false;
};

// --- Restart studies -------------------------------------------------------

struct RestartConfig {
  int runs = 20;
  double step_size = 0.1;
  std::int64_t max_iters = 200000;
  double stuck_grad_tol = 1e-7;   // "very low gradient"
  int stuck_window = 5000;        // consecutive low-gradient iterations
  double global_dist_tol = 1e-2;  // closeness to the unique global minimum
  double z_alpha = 1.645;         // one-sided 95%
  std::uint64_t seed = 0;
  double init_half_width = -1.0;  // < 0: 4 max(1, |w*|)

  void validate() const {
    if (runs < 1) throw ParamError("RestartConfig: runs must be >= 1");
    if (!(step_size > 0.0)) throw ParamError("RestartConfig: step_size must be positive");
    if (stuck_window < 1) throw ParamError("RestartConfig: stuck_window must be >= 1");
  }
};

struct RestartReport {
  int num_runs = 0;
  int num_global = 0;
  int num_stuck = 0;
  double p_hat = 0.0;
  double wilson_lower = 0.0;
};

/// One-sided Wilson score lower bound for a binomial proportion.
double wilson_lower_bound(int successes, int trials, double z_alpha);

namespace detail {
RestartReport classify_runs(const std::vector<char>& reached_global, double z_alpha);
VecXd hypercube_init(Eigen::Index dim, double half_width, std::uint64_t seed);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
}  // namespace detail

/// Run gradient descent `config.runs` times from uniform hypercube
/// initializations; classify each run as reaching the global minimum or as
/// stuck (a long streak of tiny gradients away from the minimum).
template <typename Loss>
RestartReport restart_experiment(const Loss& loss, const RestartConfig& config);

// --- Experiments ------------------------------------------------------------

struct TrainingCurve {
  double learning_rate = 0.0;
  std::vector<double> epoch_loss;  // mean squared error per epoch, entry 0 = initial
  double final_loss() const { return epoch_loss.back(); }
};

struct TractabilityGapResult {
  TrainingCurve gaussian;   // best learning rate on the Gaussian dataset
  TrainingCurve hard;       // best learning rate on the reduction dataset
  double zero_filter_mse = 0.0;   // zero filter on the reduction dataset
  double zero_filter_rmse = 0.0;
  std::vector<TrainingCurve> gaussian_sweep;
  std::vector<TrainingCurve> hard_sweep;
};

struct TractabilityGapConfig {
  std::uint64_t seed = 0;
  int epochs = 6000;
  // The planted filter has entries in {1, -d}, so labels reach O(100) and
  // the sweep must extend well above the unit-scale rates.
  std::vector<double> learning_rates = {3.0, 1.0, 0.3, 0.1};
  int d = 40;
  int k = 2;
  int num_subsets = 760;
  int subset_size = 20;
};

/// Build the reduction dataset and an equally sized Gaussian dataset labeled
/// by the same planted filter; train both with full-batch AdaGrad from the
/// same random normal initializer, per learning rate; keep the best curve
/// for each dataset.
TractabilityGapResult tractability_gap_experiment(const TractabilityGapConfig& config);

/// Per-epoch AdaGrad losses on one dataset.
TrainingCurve train_adagrad(const EmpiricalRiskModel& model, const VecXd& w0,
                            double learning_rate, int epochs);

// --- Uniqueness probe -------------------------------------------------------

struct UniquenessResult {
  bool identical = false;
  VecXd witness;           // probe input with differing outputs (when !identical)
  double value_w = 0.0;    // f(witness; w)
  double value_w_star = 0.0;
  int coordinate = -1;     // first differing filter coordinate (1-based)
  double sign = 0.0;
};

/// Coordinate-by-coordinate discrimination for stride-1 networks: if
/// w != w*, produce a signed basis input on which the outputs differ.
UniquenessResult uniqueness_probe(const NetworkShape& shape, const VecXd& w,
                                  const VecXd& w_star);

// --- template implementation -----------------------------------------------

/// Deterministic parallel dispatch of restart runs (indirection keeps the
/// threading machinery out of this header).
void parallel_for_runs(int n, const std::function<void(std::int64_t)>& fn);

template <typename Loss>
RestartReport restart_experiment(const Loss& loss, const RestartConfig& config) {
  config.validate();
  const VecXd target = loss.target();
  const double half_width = config.init_half_width > 0.0
                                ? config.init_half_width
                                : 4.0 * std::max(1.0, target.norm());
  std::vector<char> reached_global(config.runs, 0);

  auto one_run = [&](std::int64_t run) {
    VecXd w = detail::hypercube_init(target.size(), half_width,
                                     detail::mix_seed(config.seed, std::uint64_t(run)));
    int low_grad_streak = 0;
    bool global = false;
    for (std::int64_t t = 0; t < config.max_iters; ++t) {
      VecXd g;
      try {
        g = loss.grad(w);
      } catch (const NondifferentiableError&) {
        break;  // stalled on a kink; counts as stuck
      }
      const double gnorm = g.norm();
      const double dist = (w - target).norm();
      if (gnorm < config.stuck_grad_tol) {
        if (dist <= config.global_dist_tol) {
          global = true;
          break;
        }
        if (++low_grad_streak >= config.stuck_window) break;
      } else {
        low_grad_streak = 0;
      }
      w -= config.step_size * g;
    }
    if (!global) {
      global = (w - target).norm() <= config.global_dist_tol;
    }
    reached_global[std::size_t(run)] = global ? 1 : 0;
  };

  parallel_for_runs(config.runs, one_run);
  return detail::classify_runs(reached_global, config.z_alpha);
}

}  // namespace relu_lab::empirical
