// relu-lab: experiments on the Gaussian population risk of one-hidden-layer
// ReLU convolutional networks, the adversarial training-set reduction, and
// gradient-descent basin studies. Every command is deterministic under
// --seed and writes a JSON manifest next to its artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "relu_lab/banded_conv.hpp"
#include "relu_lab/empirical.hpp"
#include "relu_lab/hardness.hpp"
#include "relu_lab/io.hpp"
#include "relu_lab/no_overlap.hpp"
#include "relu_lab/optimizer.hpp"
#include "relu_lab/overlap2d.hpp"
#include "relu_lab/verify.hpp"

namespace {

using namespace relu_lab;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;

VecXd read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open vector file: " + path);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  if (!in.eof()) throw ParamError("non-numeric token in vector file: " + path);
  if (values.empty()) throw ParamError("empty vector file: " + path);
  VecXd w(Eigen::Index(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) w[Eigen::Index(i)] = values[i];
  return w;
}

VecXd resolve_w_star(const std::string& spec, Eigen::Index dim, double norm,
                     std::uint64_t seed) {
  if (spec == "random") {
    std::mt19937_64 rng(seed ^ 0x5deece66dULL);
    return norm * unit_sphere_init(dim, rng);
  }
  VecXd w = read_vector_file(spec);
  if (w.size() != dim) {
    throw ParamError("w* file has dimension " + std::to_string(w.size()) +
                     ", expected " + std::to_string(dim));
  }
  return w;
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

struct DatasetCsv {
  MatXd points;
  VecXd labels;
};

void write_dataset_csv(const std::string& path, const MatXd& points,
                       const VecXd& labels) {
  std::vector<std::string> header;
  header.reserve(std::size_t(points.cols()) + 1);
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    header.push_back("x" + std::to_string(c));
  }
  header.push_back("label");
  io::CsvWriter csv(path, header);
  std::vector<double> row(std::size_t(points.cols()) + 1);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) row[std::size_t(c)] = points(r, c);
    row.back() = labels[r];
    csv.row_reals(row);
  }
}

DatasetCsv read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParamError("empty dataset file: " + path);
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 2) throw ParamError("dataset needs at least one feature column");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(std::size_t(columns));
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParamError("non-numeric cell in dataset: " + cell);
      }
    }
    if (Eigen::Index(row.size()) != columns) {
      throw ParamError("ragged dataset row in " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParamError("dataset has no rows: " + path);
  DatasetCsv data;
  data.points.resize(Eigen::Index(rows.size()), columns - 1);
  data.labels.resize(Eigen::Index(rows.size()));
  for (Eigen::Index r = 0; r < data.points.rows(); ++r) {
    for (Eigen::Index c = 0; c + 1 < columns; ++c) {
      data.points(r, c) = rows[std::size_t(r)][std::size_t(c)];
    }
    data.labels[r] = rows[std::size_t(r)].back();
  }
  return data;
}

void write_trajectory_csv(const std::string& path, const Trajectory<double>& traj) {
  io::CsvWriter csv(path, {"iter", "loss", "grad_norm", "w_norm", "angle"});
  for (const auto& pt : traj.points) {
    csv.row({std::to_string(pt.iter), io::format_real(pt.loss_value),
             io::format_real(pt.grad_norm), io::format_real(pt.w_norm),
             io::format_real(pt.angle_to_target)});
  }
}

// --- descend ---------------------------------------------------------------

struct DescendArgs {
  int k = 8;
  int m = 4;
  std::string w_star = "random";
  double w_star_norm = 1.0;
  double delta = 0.1;
  std::int64_t steps = 1000000;
  double lambda_override = 0.0;  // 0: use the guarantee step size
  double grad_tol = 1e-9;
  std::int64_t record_stride = 0;  // 0: pick from steps
  std::uint64_t seed = 0;
  std::string out = "descend";
};

int cmd_descend(const DescendArgs& args) {
  io::ManifestTimer timer;
  const VecXd w_star = resolve_w_star(args.w_star, args.m, args.w_star_norm, args.seed);
  const NoOverlapLossd model(w_star, args.k);

  GdConfig config;
  config.step_size = args.lambda_override > 0.0
                         ? args.lambda_override
                         : theorem_step_size(args.k, args.delta, w_star.norm());
  config.max_iters = args.steps;
  config.grad_tol = args.grad_tol;
  config.seed = args.seed;
  config.record_stride =
      args.record_stride > 0 ? args.record_stride : std::max<std::int64_t>(1, args.steps / 10000);
  config.validate();

  if (config.grad_tol >= theorem_epsilon_bound(args.k, args.delta)) {
    std::cerr << "warning: grad tolerance " << config.grad_tol
              << " exceeds the guarantee bound "
              << theorem_epsilon_bound(args.k, args.delta)
              << " (epsilon < delta sin(pi delta) / k); the distance bound may not apply\n";
  }

  std::mt19937_64 rng(args.seed);
  const VecXd w0 = unit_sphere_init(args.m, rng);
  const auto traj = run_gd(model, w0, config);

  const double theta0 = angle(w0, w_star);
  const double floor = std::min({w0.norm() * std::sin(theta0),
                                 w_star.norm() * std::sin(theta0) * std::sin(theta0) /
                                     (alpha_of_k(args.k) * pi<double>()),
                                 w_star.norm() / 8.0});
  // The summed-gradient bound holds for steps below 2/L with the loss's own
  // Lipschitz constant; an aggressive override leaves it inapplicable.
  const double lipschitz = theorem_lipschitz(args.k, args.delta, w_star.norm());
  const bool grad_sum_applicable = config.step_size < 2.0 / lipschitz;
  const double grad_sum_bound =
      grad_sum_applicable
          ? model.loss(w0) / (config.step_size * (1.0 - config.step_size * lipschitz / 2.0))
          : std::numeric_limits<double>::infinity();

  const bool angle_ok = traj.stats.max_angle_increase <= 1e-12;
  const bool norm_ok = traj.stats.min_w_norm >= floor - 1e-10;
  const bool grad_sum_ok =
      !grad_sum_applicable || traj.stats.sum_sq_grad_norms <= grad_sum_bound + 1e-8;
  const bool planar_ok = traj.stats.max_out_of_plane <= 1e-10;
  const double final_distance = (traj.final_point().w - w_star).norm();

  const std::string traj_path = args.out + ".trajectory.csv";
  write_trajectory_csv(traj_path, traj);

  json summary;
  summary["k"] = args.k;
  summary["m"] = args.m;
  summary["step_size"] = config.step_size;
  summary["grad_tol"] = config.grad_tol;
  summary["initial_angle"] = theta0;
  summary["iterations"] = traj.stats.iterations;
  summary["terminated_reason"] = to_string(traj.terminated_reason);
  summary["final_distance"] = final_distance;
  summary["final_loss"] = traj.final_point().loss_value;
  summary["converged"] =
      traj.terminated_reason == StopReason::grad_tol_reached && final_distance <= 1e-3;
  summary["invariants"]["angle_monotone"] = angle_ok;
  summary["invariants"]["norm_floor"] = norm_ok;
  summary["invariants"]["grad_sum_bounded"] = grad_sum_ok;
  summary["invariants"]["grad_sum_applicable"] = grad_sum_applicable;
  summary["invariants"]["planar"] = planar_ok;
  summary["invariants"]["max_angle_increase"] = traj.stats.max_angle_increase;
  summary["invariants"]["min_w_norm"] = traj.stats.min_w_norm;
  summary["invariants"]["norm_floor_value"] = floor;
  summary["invariants"]["sum_sq_grad_norms"] = traj.stats.sum_sq_grad_norms;
  summary["invariants"]["grad_sum_bound"] = grad_sum_bound;
  summary["invariants"]["max_out_of_plane"] = traj.stats.max_out_of_plane;
  const std::string summary_path = args.out + ".summary.json";
  {
    std::ofstream out(summary_path);
    if (!out) throw ParamError("cannot open " + summary_path);
    out << summary.dump(2) << '\n';
  }

  io::RunManifest manifest;
  manifest.command = "descend";
  manifest.seed = args.seed;
  manifest.parameters = {{"k", std::to_string(args.k)},
                         {"m", std::to_string(args.m)},
                         {"w_star", args.w_star},
                         {"w_star_norm", io::format_real(args.w_star_norm)},
                         {"delta", io::format_real(args.delta)},
                         {"steps", std::to_string(args.steps)},
                         {"lambda", io::format_real(config.step_size)},
                         {"grad_tol", io::format_real(config.grad_tol)},
                         {"record_stride", std::to_string(config.record_stride)}};
  manifest.artifacts = {traj_path, summary_path};
  manifest.duration_seconds = timer.seconds();
  manifest.write(manifest_path(args.out));

  if (!(angle_ok && norm_ok && grad_sum_ok && planar_ok)) {
    std::cerr << "invariant violation; see " << summary_path << "\n";
    return kExitVerificationFailure;
  }
  std::cout << "descend: " << to_string(traj.terminated_reason) << " after "
            << traj.stats.iterations << " iterations, final distance "
            << final_distance << "\n";
  return kExitOk;
}

// --- landscape ---------------------------------------------------------------

struct LandscapeArgs {
  int k = 4;
  double w_star_scale = 1.0;
  double grid_min = -2.0;
  double grid_max = 2.0;
  int grid_steps = 81;
  std::string out = "landscape.csv";
};

int cmd_landscape(const LandscapeArgs& args) {
  io::ManifestTimer timer;
  if (args.grid_steps < 2 || !(args.grid_max > args.grid_min)) {
    throw ParamError("landscape: need grid_steps >= 2 and grid_max > grid_min");
  }
  const OverlapLoss2Dd model(args.w_star_scale, args.k);
  io::CsvWriter csv(args.out, {"w1", "w2", "loss"});
  const double step = (args.grid_max - args.grid_min) / (args.grid_steps - 1);
  for (int i = 0; i < args.grid_steps; ++i) {
    for (int j = 0; j < args.grid_steps; ++j) {
      const double w1 = args.grid_min + i * step;
      const double w2 = args.grid_min + j * step;
      csv.row_reals({w1, w2, model.loss(Vec2<double>(w1, w2))});
    }
  }

  io::RunManifest manifest;
  manifest.command = "landscape";
  manifest.parameters = {{"k", std::to_string(args.k)},
                         {"w_star_scale", io::format_real(args.w_star_scale)},
                         {"grid_min", io::format_real(args.grid_min)},
                         {"grid_max", io::format_real(args.grid_max)},
                         {"grid_steps", std::to_string(args.grid_steps)}};
  manifest.artifacts = {args.out};
  manifest.duration_seconds = timer.seconds();
  manifest.write(manifest_path(args.out));
  std::cout << "landscape: " << args.grid_steps << "x" << args.grid_steps
            << " grid written to " << args.out << "\n";
  return kExitOk;
}

// --- reduce ------------------------------------------------------------------

struct ReduceArgs {
  std::string cnf;
  std::string instance;
  bool plant = false;
  int plant_d = 40;
  int plant_subsets = 760;
  int plant_size = 20;
  int k = 2;
  std::uint64_t seed = 0;
  std::string out_dataset = "dataset.csv";
  std::string out_instance;
  std::string emit_certificate;
};

int cmd_reduce(const ReduceArgs& args) {
  io::ManifestTimer timer;
  using namespace hardness;

  SetSplitInstance instance;
  std::optional<SplittingSolution> certificate;
  std::string source;
  if (!args.cnf.empty()) {
    const CnfFormula phi = parse_dimacs_file(args.cnf);
    instance = reduce_cnf(phi, args.k);
    source = "cnf:" + args.cnf;
  } else if (!args.instance.empty()) {
    instance = load_instance_file(args.instance);
    while (instance.k < args.k) instance = lift_k(instance);
    source = "instance:" + args.instance;
  } else if (args.plant) {
    auto planted = plant_random_instance(args.plant_d, args.k, args.plant_subsets,
                                         args.plant_size, args.seed);
    instance = std::move(planted.instance);
    certificate = std::move(planted.planted);
    source = "planted";
  } else {
    throw ParamError("reduce: provide --cnf, --instance, or --plant");
  }

  const HardDataset dataset = build_dataset(instance);
  write_dataset_csv(args.out_dataset, dataset.points, dataset.labels);

  io::RunManifest manifest;
  manifest.command = "reduce";
  manifest.seed = args.seed;
  manifest.parameters = {{"source", source},
                         {"k", std::to_string(args.k)},
                         {"d", std::to_string(instance.d)},
                         {"subsets", std::to_string(instance.subsets.size())}};
  manifest.artifacts = {args.out_dataset};

  if (!args.out_instance.empty()) {
    std::ofstream out(args.out_instance);
    if (!out) throw ParamError("cannot open " + args.out_instance);
    out << instance_to_json(instance) << '\n';
    manifest.artifacts.push_back(args.out_instance);
  }

  if (!args.emit_certificate.empty()) {
    if (!certificate) {
      certificate = brute_force_split(instance);  // guarded; may throw TooLargeError
    }
    json cert;
    if (certificate) {
      const VecXd filter = splitting_to_filter(*certificate, instance.d);
      const double risk = dataset_risk(filter, dataset);
      cert["splitting"] = certificate->parts;
      cert["filter"] = std::vector<double>(filter.data(), filter.data() + filter.size());
      cert["risk"] = risk;
      cert["risk_threshold"] = risk_threshold(instance.k, instance.d);
      // Round trip through the extraction as a self-check.
      const SplittingSolution extracted = filter_to_splitting(filter, instance);
      cert["extraction_verified"] = verify_splitting(instance, extracted);
    } else {
      cert["splitting"] = nullptr;
      cert["note"] = "instance admits no splitting";
    }
    std::ofstream out(args.emit_certificate);
    if (!out) throw ParamError("cannot open " + args.emit_certificate);
    out << cert.dump(2) << '\n';
    manifest.artifacts.push_back(args.emit_certificate);
  }

  manifest.duration_seconds = timer.seconds();
  manifest.write(manifest_path(args.out_dataset));
  std::cout << "reduce: " << dataset.num_points() << " points in R^"
            << dataset.point_dim() << " written to " << args.out_dataset << "\n";
  return kExitOk;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::int64_t gaussian_n = 0;
  int m = 80;
  int stride = 0;  // 0: no overlap (stride = m)
  int neurons = 2;
  std::string w_star = "random";
  double w_star_norm = 1.0;
  std::string optimizer = "adagrad";
  double lr = 0.3;
  int epochs = 1000;
  std::uint64_t seed = 0;
  std::string out = "train.csv";
};

int cmd_train(const TrainArgs& args) {
  io::ManifestTimer timer;
  using namespace empirical;

  NetworkShape shape;
  shape.filter_size = args.m;
  shape.stride = args.stride > 0 ? args.stride : args.m;
  shape.k = args.neurons;
  shape.validate();

  LabeledDataset data;
  std::optional<VecXd> generating;
  if (!args.dataset.empty()) {
    const DatasetCsv csv = read_dataset_csv(args.dataset);
    if (csv.points.cols() != shape.input_dim()) {
      throw ShapeError("dataset dimension " + std::to_string(csv.points.cols()) +
                       " does not match shape input dimension " +
                       std::to_string(shape.input_dim()));
    }
    data.points = csv.points;
    data.labels = csv.labels;
    data.k = shape.k;
  } else if (args.gaussian_n > 0) {
    const VecXd w_star =
        resolve_w_star(args.w_star, shape.filter_size, args.w_star_norm, args.seed);
    data = sample_gaussian_dataset(args.gaussian_n, shape, w_star, args.seed);
    generating = w_star;
  } else {
    throw ParamError("train: provide --dataset or --gaussian");
  }

  const EmpiricalRiskModel model(std::move(data), shape, generating);

  std::mt19937_64 rng(args.seed ^ 0xada5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  VecXd w0(shape.filter_size);
  for (Eigen::Index i = 0; i < w0.size(); ++i) w0[i] = normal(rng);

  TrainingCurve curve;
  if (args.optimizer == "adagrad") {
    curve = train_adagrad(model, w0, args.lr, args.epochs);
  } else if (args.optimizer == "gd") {
    if (!(args.lr > 0.0)) throw ParamError("train: learning rate must be positive");
    curve.learning_rate = args.lr;
    VecXd w = w0;
    curve.epoch_loss.push_back(model.loss(w));
    for (int e = 0; e < args.epochs; ++e) {
      w -= args.lr * model.grad(w);
      curve.epoch_loss.push_back(model.loss(w));
    }
  } else {
    throw ParamError("train: optimizer must be gd or adagrad");
  }

  io::CsvWriter csv(args.out, {"epoch", "loss"});
  for (std::size_t e = 0; e < curve.epoch_loss.size(); ++e) {
    csv.row({std::to_string(e), io::format_real(curve.epoch_loss[e])});
  }

  io::RunManifest manifest;
  manifest.command = "train";
  manifest.seed = args.seed;
  manifest.parameters = {{"dataset", args.dataset.empty() ? "gaussian" : args.dataset},
                         {"gaussian_n", std::to_string(args.gaussian_n)},
                         {"m", std::to_string(args.m)},
                         {"stride", std::to_string(shape.stride)},
                         {"neurons", std::to_string(args.neurons)},
                         {"optimizer", args.optimizer},
                         {"lr", io::format_real(args.lr)},
                         {"epochs", std::to_string(args.epochs)}};
  manifest.artifacts = {args.out};
  manifest.duration_seconds = timer.seconds();
  manifest.write(manifest_path(args.out));
  std::cout << "train: initial loss " << curve.epoch_loss.front() << ", final loss "
            << curve.final_loss() << " (" << args.optimizer << ", lr " << args.lr
            << ")\n";
  return kExitOk;
}

// --- restarts -------------------------------------------------------------------

struct RestartsArgs {
  bool grid = false;
  std::string loss = "banded";  // no-overlap | overlap2d | banded
  int k = 4;
  int m = 2;
  int stride = 1;
  std::string w_star = "random";
  double w_star_scale = 1.0;
  int runs = 20;
  int gt_count = 5;
  double lr = 0.2;
  std::int64_t max_iters = 400000;
  double z_alpha = 1.645;
  std::uint64_t seed = 0;
  std::string out = "restarts.csv";
};

struct GridCell {
  int neurons;
  int filter;
  int stride;
  double lo, hi;
};

std::vector<GridCell> reduced_table_grid() {
  std::vector<GridCell> cells;
  const std::vector<std::pair<double, double>> dists = {{-1, 1}, {-2, 0}, {0, 2}};
  for (int neurons : {50, 100}) {
    for (int filter : {2, 8, 16}) {
      std::vector<int> strides{1};
      if (filter >= 8) {
        strides.push_back(filter / 4);
        strides.push_back(filter / 2);
      }
      for (int stride : strides) {
        for (const auto& [lo, hi] : dists) {
          cells.push_back({neurons, filter, stride, lo, hi});
        }
      }
    }
  }
  return cells;
}

int cmd_restarts(const RestartsArgs& args) {
  io::ManifestTimer timer;
  using namespace empirical;

  io::CsvWriter csv(args.out,
                    {"config", "neurons", "filter", "stride", "dist_lo", "dist_hi",
                     "gt", "num_runs", "num_global", "num_stuck", "p_hat",
                     "wilson_lower"});

  RestartConfig config;
  config.runs = args.runs;
  config.step_size = args.lr;
  config.max_iters = args.max_iters;
  config.z_alpha = args.z_alpha;

  int rows = 0;
  double min_p_hat = 1.0, min_wilson = 1.0;
  auto emit = [&](const std::string& name, int neurons, int filter, int stride,
                  double lo, double hi, const std::string& gt,
                  const RestartReport& report) {
    csv.row({name, std::to_string(neurons), std::to_string(filter),
             std::to_string(stride), io::format_real(lo), io::format_real(hi), gt,
             std::to_string(report.num_runs), std::to_string(report.num_global),
             std::to_string(report.num_stuck), io::format_real(report.p_hat),
             io::format_real(report.wilson_lower)});
    ++rows;
    min_p_hat = std::min(min_p_hat, report.p_hat);
    min_wilson = std::min(min_wilson, report.wilson_lower);
  };

  if (args.grid) {
    const auto cells = reduced_table_grid();
    std::uint64_t cell_index = 0;
    for (const auto& cell : cells) {
      std::ostringstream name;
      name << "n" << cell.neurons << "_f" << cell.filter << "_s" << cell.stride
           << "_U(" << cell.lo << ".." << cell.hi << ")";
      RestartReport pooled;
      for (int gt = 0; gt < args.gt_count; ++gt) {
        std::mt19937_64 rng(
            empirical::detail::mix_seed(args.seed, cell_index * 1000 + gt));
        std::uniform_real_distribution<double> dist(cell.lo, cell.hi);
        VecXd w_star(cell.filter);
        do {
          for (int i = 0; i < cell.filter; ++i) w_star[i] = dist(rng);
        } while (w_star.norm() < 1e-6);
        const BandedConvLossd model(w_star, cell.neurons, cell.stride);
        RestartConfig cell_config = config;
        cell_config.seed = empirical::detail::mix_seed(args.seed, cell_index * 1000 + gt + 500);
        const RestartReport report = restart_experiment(model, cell_config);
        pooled.num_runs += report.num_runs;
        pooled.num_global += report.num_global;
        pooled.num_stuck += report.num_stuck;
        emit(name.str(), cell.neurons, cell.filter, cell.stride, cell.lo, cell.hi,
             std::to_string(gt), report);
      }
      // Configuration-level estimate over all its ground truths.
      pooled.p_hat = double(pooled.num_global) / double(pooled.num_runs);
      pooled.wilson_lower =
          wilson_lower_bound(pooled.num_global, pooled.num_runs, args.z_alpha);
      emit(name.str(), cell.neurons, cell.filter, cell.stride, cell.lo, cell.hi,
           "pooled", pooled);
      ++cell_index;
    }
  } else {
    config.seed = args.seed;
    if (args.loss == "no-overlap") {
      const VecXd w_star =
          resolve_w_star(args.w_star, args.m, args.w_star_scale, args.seed);
      const NoOverlapLossd model(w_star, args.k);
      emit("no-overlap", args.k, args.m, args.m, 0, 0, "0",
           restart_experiment(model, config));
    } else if (args.loss == "overlap2d") {
      VecXd w_star(2);
      w_star << -args.w_star_scale, args.w_star_scale;
      const BandedConvLossd model(w_star, args.k, 1);
      emit("overlap2d", args.k, 2, 1, 0, 0, "0", restart_experiment(model, config));
    } else if (args.loss == "banded") {
      const VecXd w_star =
          resolve_w_star(args.w_star, args.m, args.w_star_scale, args.seed);
      const BandedConvLossd model(w_star, args.k, args.stride);
      emit("banded", args.k, args.m, args.stride, 0, 0, "0",
           restart_experiment(model, config));
    } else {
      throw ParamError("restarts: loss must be no-overlap, overlap2d, or banded");
    }
  }

  io::RunManifest manifest;
  manifest.command = "restarts";
  manifest.seed = args.seed;
  manifest.parameters = {{"grid", args.grid ? "reduced-table" : "explicit"},
                         {"loss", args.loss},
                         {"runs", std::to_string(args.runs)},
                         {"gt_count", std::to_string(args.gt_count)},
                         {"lr", io::format_real(args.lr)},
                         {"max_iters", std::to_string(args.max_iters)},
                         {"z_alpha", io::format_real(args.z_alpha)}};
  manifest.artifacts = {args.out};
  manifest.duration_seconds = timer.seconds();
  manifest.write(manifest_path(args.out));
  std::cout << "restarts: " << rows << " rows, min p_hat " << min_p_hat
            << ", min wilson lower bound " << min_wilson << "\n";
  return kExitOk;
}

// --- verify ----------------------------------------------------------------------

int cmd_verify(bool quick, std::uint64_t seed) {
  verify::VerifyOptions options;
  options.quick = quick;
  options.seed = seed;
  const auto results = verify::run_all_checks(options);
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.measured
              << ")\n";
  }
  const bool ok = verify::all_passed(results);
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << "\n";
  return ok ? kExitOk : kExitVerificationFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population-risk laboratory for one-hidden-layer ReLU conv nets"};
  app.require_subcommand(1);

  DescendArgs descend;
  auto* sub_descend =
      app.add_subcommand("descend", "run guaranteed gradient descent on the no-overlap risk");
  sub_descend->add_option("--k", descend.k, "hidden units");
  sub_descend->add_option("--m", descend.m, "filter size");
  sub_descend->add_option("--w-star", descend.w_star, "ground truth: file path or 'random'");
  sub_descend->add_option("--w-star-norm", descend.w_star_norm, "norm for random w*");
  sub_descend->add_option("--delta", descend.delta, "confidence parameter in (0,1)");
  sub_descend->add_option("--steps", descend.steps, "iteration cap");
  sub_descend->add_option("--lambda", descend.lambda_override, "step-size override in (0,1)");
  sub_descend->add_option("--grad-tol", descend.grad_tol, "gradient-norm stop tolerance");
  sub_descend->add_option("--record-stride", descend.record_stride, "trajectory down-sampling");
  sub_descend->add_option("--seed", descend.seed, "RNG seed");
  sub_descend->add_option("--out", descend.out, "output prefix");

  LandscapeArgs landscape;
  auto* sub_landscape =
      app.add_subcommand("landscape", "grid the two-tap overlap population risk");
  sub_landscape->add_option("--k", landscape.k, "hidden units");
  sub_landscape->add_option("--w-star-scale", landscape.w_star_scale, "s in w* = (-s, s)");
  sub_landscape->add_option("--grid-min", landscape.grid_min, "grid lower corner");
  sub_landscape->add_option("--grid-max", landscape.grid_max, "grid upper corner");
  sub_landscape->add_option("--grid-steps", landscape.grid_steps, "points per axis");
  sub_landscape->add_option("--out", landscape.out, "output CSV");

  ReduceArgs reduce;
  auto* sub_reduce =
      app.add_subcommand("reduce", "run the CNF -> set-splitting -> training-set reduction");
  sub_reduce->add_option("--cnf", reduce.cnf, "DIMACS CNF input");
  sub_reduce->add_option("--instance", reduce.instance, "set-splitting instance JSON");
  sub_reduce->add_flag("--plant", reduce.plant, "generate an instance with a planted splitting");
  sub_reduce->add_option("--plant-d", reduce.plant_d, "planted ground-set size");
  sub_reduce->add_option("--plant-subsets", reduce.plant_subsets, "planted subset count");
  sub_reduce->add_option("--plant-size", reduce.plant_size, "planted subset size");
  sub_reduce->add_option("--k", reduce.k, "target part count (lifting)");
  sub_reduce->add_option("--seed", reduce.seed, "RNG seed");
  sub_reduce->add_option("--out-dataset", reduce.out_dataset, "training-set CSV");
  sub_reduce->add_option("--out-instance", reduce.out_instance, "instance JSON output");
  sub_reduce->add_option("--emit-certificate", reduce.emit_certificate,
                         "write filter/splitting certificate JSON");

  TrainArgs train;
  auto* sub_train = app.add_subcommand("train", "optimize the empirical risk on a dataset");
  sub_train->add_option("--dataset", train.dataset, "dataset CSV (label in last column)");
  sub_train->add_option("--gaussian", train.gaussian_n, "sample a Gaussian dataset of this size");
  sub_train->add_option("--m", train.m, "filter size");
  sub_train->add_option("--stride", train.stride, "stride (default: no overlap)");
  sub_train->add_option("--neurons", train.neurons, "hidden units");
  sub_train->add_option("--w-star", train.w_star, "labeling filter: file or 'random'");
  sub_train->add_option("--w-star-norm", train.w_star_norm, "norm for random w*");
  sub_train->add_option("--optimizer", train.optimizer, "gd or adagrad");
  sub_train->add_option("--lr", train.lr, "learning rate");
  sub_train->add_option("--epochs", train.epochs, "full-batch epochs");
  sub_train->add_option("--seed", train.seed, "RNG seed");
  sub_train->add_option("--out", train.out, "per-epoch loss CSV");

  RestartsArgs restarts;
  auto* sub_restarts =
      app.add_subcommand("restarts", "estimate global-minimum basin mass by random restarts");
  sub_restarts->add_flag("--grid", restarts.grid, "run the reduced parameter grid");
  sub_restarts->add_option("--loss", restarts.loss, "no-overlap, overlap2d, or banded");
  sub_restarts->add_option("--k", restarts.k, "hidden units");
  sub_restarts->add_option("--m", restarts.m, "filter size");
  sub_restarts->add_option("--stride", restarts.stride, "stride");
  sub_restarts->add_option("--w-star", restarts.w_star, "ground truth: file or 'random'");
  sub_restarts->add_option("--w-star-scale", restarts.w_star_scale,
                           "norm of random w* / scale of the two-tap target");
  sub_restarts->add_option("--runs", restarts.runs, "restarts per ground truth");
  sub_restarts->add_option("--gt-count", restarts.gt_count, "ground truths per grid cell");
  sub_restarts->add_option("--lr", restarts.lr, "gradient-descent step size");
  sub_restarts->add_option("--max-iters", restarts.max_iters, "iteration cap per run");
  sub_restarts->add_option("--z-alpha", restarts.z_alpha, "Z-score for the Wilson bound");
  sub_restarts->add_option("--seed", restarts.seed, "RNG seed");
  sub_restarts->add_option("--out", restarts.out, "report CSV");

  bool verify_quick = false;
  std::uint64_t verify_seed = 2718281828ULL;
  auto* sub_verify = app.add_subcommand("verify", "run the cross-module invariant suite");
  sub_verify->add_flag("--quick", verify_quick, "reduced sample counts");
  sub_verify->add_option("--seed", verify_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sub_descend->parsed()) return cmd_descend(descend);
    if (sub_landscape->parsed()) return cmd_landscape(landscape);
    if (sub_reduce->parsed()) return cmd_reduce(reduce);
    if (sub_train->parsed()) return cmd_train(train);
    if (sub_restarts->parsed()) return cmd_restarts(restarts);
    if (sub_verify->parsed()) return cmd_verify(verify_quick, verify_seed);
  } catch (const ParamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TooLargeError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitVerificationFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerificationFailure;
  }
  return kExitUsage;
}
