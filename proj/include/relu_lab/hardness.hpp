#pragma once

// Reduction pipeline showing that fitting a no-overlap ReLU network on an
// adversarial training set is as hard as set splitting:
//
//   CNF -> Equal-3SAT -> Set-Splitting-by-2-Sets -> (lift) -> k sets
//       -> labeled training set in R^{k^2 d}
//
// with certificates translated in both directions: a splitting yields a
// zero-risk filter, and any filter with risk below 1/(4 k^5 d) yields a
// verified splitting. Exhaustive oracles for both SAT and splitting cover
// the toy scales the equivalences are tested at.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "relu_lab/common.hpp"

namespace relu_lab::hardness {

struct CnfFormula {
  int num_vars = 0;
  std::vector<std::vector<int>> clauses;  // signed 1-based literals, 1..3 per clause

  int num_clauses() const { return int(clauses.size()); }
  void validate() const;
};

struct SetSplitInstance {
  int d = 0;  // ground set {1, ..., d}
  int k = 2;  // number of parts
  std::vector<std::vector<int>> subsets;  // each nonempty, within {1..d}

  void validate() const;
  /// The decision-problem budget |C| <= (k-1) d. Required along the
  /// reduction chain; experiment-scale instances may exceed it.
  bool respects_subset_budget() const;
};

struct SplittingSolution {
  std::vector<std::vector<int>> parts;  // k disjoint sets covering {1..d}
};

/// Training set of the reduction: one point per element (label 1/k) followed
/// by one point per subset (label 0), each in R^{k^2 d} with 0/1 entries.
struct HardDataset {
  int k = 0;
  int d = 0;
  MatXd points;  // row per point
  VecXd labels;

  Eigen::Index num_points() const { return points.rows(); }
  Eigen::Index point_dim() const { return points.cols(); }
};

// --- CNF handling ---------------------------------------------------------

/// Parse DIMACS CNF; throws ParamError on malformed input.
CnfFormula parse_dimacs(std::istream& in);
CnfFormula parse_dimacs_file(const std::string& path);
void write_dimacs(const CnfFormula& phi, std::ostream& out);

/// Exhaustive satisfiability check; guard 2^num_vars <= 10^7.
bool brute_force_sat(const CnfFormula& phi);

/// Pad with fresh variables/clauses until num_vars == num_clauses without
/// changing satisfiability.
CnfFormula to_equal_3sat(const CnfFormula& phi);

// --- Reduction chain ------------------------------------------------------

/// Equal-3SAT formula -> 2-set splitting instance with d = 2n+1 elements:
/// element i is literal x_i, n+i is its negation, 2n+1 is the shared marker.
SetSplitInstance equal3sat_to_split2(const CnfFormula& psi);

/// k -> k+1 lift: new element d+1 plus pair subsets {j, d+1} for all j.
SetSplitInstance lift_k(const SetSplitInstance& instance);

/// Full chain from CNF to a k-set instance (k >= 2).
SetSplitInstance reduce_cnf(const CnfFormula& phi, int target_k);

HardDataset build_dataset(const SetSplitInstance& instance);

/// Average of ReLU responses over the k disjoint windows of x.
double no_overlap_forward(const VecXd& w, const VecXd& x, int k);

/// Mean squared error of filter w over the dataset (uniform point weights).
double dataset_risk(const VecXd& w, const HardDataset& dataset);

/// Def. 4.2 accuracy demand: 1 / (4 k^5 d).
double risk_threshold(int k, int d);

/// Splitting -> filter in R^{kd} with zero risk on the induced dataset:
/// block l holds +1 on S_l and -d elsewhere.
VecXd splitting_to_filter(const SplittingSolution& solution, int d);

/// Filter -> splitting via thresholding w_l^T e_i > 1/(2k); refuses unless
/// the filter's dataset risk is strictly below risk_threshold.
SplittingSolution filter_to_splitting(const VecXd& w, const SetSplitInstance& instance);

bool verify_splitting(const SetSplitInstance& instance, const SplittingSolution& solution);

/// Exhaustive splitting search in lexicographic assignment order; guard
/// k^d <= 10^7.
std::optional<SplittingSolution> brute_force_split(const SetSplitInstance& instance);

// --- Instance generation and serialization --------------------------------

struct PlantedInstance {
  SetSplitInstance instance;
  SplittingSolution planted;
};

/// Random instance with a planted balanced splitting; subsets are sampled
/// uniformly at the requested size and rejected if contained in a part.
PlantedInstance plant_random_instance(int d, int k, int num_subsets,
                                      int subset_size, std::uint64_t seed);

std::string instance_to_json(const SetSplitInstance& instance);
SetSplitInstance instance_from_json(const std::string& text);
SetSplitInstance load_instance_file(const std::string& path);

}  // namespace relu_lab::hardness
