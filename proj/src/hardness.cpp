#include "relu_lab/hardness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace relu_lab::hardness {

namespace {

constexpr double kBruteForceGuard = 1e7;

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void CnfFormula::validate() const {
  if (num_vars < 1) throw ParamError("CnfFormula: needs at least one variable");
  if (clauses.empty()) throw ParamError("CnfFormula: needs at least one clause");
  for (const auto& clause : clauses) {
    if (clause.empty() || clause.size() > 3) {
      throw ParamError("CnfFormula: clauses must have 1..3 literals");
    }
    for (int lit : clause) {
      const int var = std::abs(lit);
      if (lit == 0 || var > num_vars) {
        throw ParamError("CnfFormula: literal out of range");
      }
    }
  }
}

void SetSplitInstance::validate() const {
  if (d < 1) throw ParamError("SetSplitInstance: d must be >= 1");
  if (k < 2) throw ParamError("SetSplitInstance: k must be >= 2");
  for (const auto& subset : subsets) {
    if (subset.empty()) throw ParamError("SetSplitInstance: empty subset");
    for (int e : subset) {
      if (e < 1 || e > d) throw ParamError("SetSplitInstance: element out of range");
    }
  }
}

bool SetSplitInstance::respects_subset_budget() const {
  return subsets.size() <= std::size_t(k - 1) * std::size_t(d);
}

// --- CNF ------------------------------------------------------------------

CnfFormula parse_dimacs(std::istream& in) {
  CnfFormula phi;
  int declared_clauses = -1;
  bool header_seen = false;
  std::vector<int> current;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'c') continue;
    std::istringstream ls(line);
    if (line[0] == 'p') {
      std::string p, fmt;
      if (!(ls >> p >> fmt >> phi.num_vars >> declared_clauses) || fmt != "cnf") {
        throw ParamError("DIMACS: malformed problem line: " + line);
      }
      header_seen = true;
      continue;
    }
    if (!header_seen) throw ParamError("DIMACS: clause before problem line");
    int lit;
    while (ls >> lit) {
      if (lit == 0) {
        phi.clauses.push_back(current);
        current.clear();
      } else {
        current.push_back(lit);
      }
    }
    if (!ls.eof()) throw ParamError("DIMACS: non-integer token in clause: " + line);
  }
  if (!header_seen) throw ParamError("DIMACS: missing problem line");
  if (!current.empty()) throw ParamError("DIMACS: clause not terminated by 0");
  if (declared_clauses >= 0 && int(phi.clauses.size()) != declared_clauses) {
    throw ParamError("DIMACS: clause count does not match header");
  }
  phi.validate();
  return phi;
}

CnfFormula parse_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open CNF file: " + path);
  return parse_dimacs(in);
}

void write_dimacs(const CnfFormula& phi, std::ostream& out) {
  out << "p cnf " << phi.num_vars << ' ' << phi.clauses.size() << '\n';
  for (const auto& clause : phi.clauses) {
    for (int lit : clause) out << lit << ' ';
    out << "0\n";
  }
}

bool brute_force_sat(const CnfFormula& phi) {
  phi.validate();
  if (std::pow(2.0, phi.num_vars) > kBruteForceGuard) {
    throw TooLargeError("brute_force_sat: more than 10^7 assignments");
  }
  const std::uint64_t total = std::uint64_t(1) << phi.num_vars;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    bool all = true;
    for (const auto& clause : phi.clauses) {
      bool sat = false;
      for (int lit : clause) {
        const bool value = (mask >> (std::abs(lit) - 1)) & 1;
        if ((lit > 0) == value) {
          sat = true;
          break;
        }
      }
      if (!sat) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

CnfFormula to_equal_3sat(const CnfFormula& phi) {
  phi.validate();
  CnfFormula psi = phi;
  // Raise num_vars - num_clauses with fresh (x v y) clauses, then lower it
  // with duplicated fresh unit clauses.
  while (psi.num_vars < psi.num_clauses()) {
    const int x = ++psi.num_vars;
    const int y = ++psi.num_vars;
    psi.clauses.push_back({x, y});
  }
  while (psi.num_vars > psi.num_clauses()) {
    const int z = ++psi.num_vars;
    psi.clauses.push_back({z});
    psi.clauses.push_back({z});
  }
  psi.validate();
  return psi;
}

// --- Reduction chain ------------------------------------------------------

SetSplitInstance equal3sat_to_split2(const CnfFormula& psi) {
  psi.validate();
  const int n = psi.num_vars;
  if (n != psi.num_clauses()) {
    throw ParamError("equal3sat_to_split2: needs equal variable and clause counts");
  }
  // Elements: i is literal x_i, n+i its negation, 2n+1 the shared marker.
  SetSplitInstance instance;
  instance.d = 2 * n + 1;
  instance.k = 2;
  const int marker = 2 * n + 1;
  for (const auto& clause : psi.clauses) {
    std::vector<int> subset;
    for (int lit : clause) {
      subset.push_back(lit > 0 ? lit : n - lit);
    }
    subset.push_back(marker);
    instance.subsets.push_back(sorted_unique(std::move(subset)));
  }
  for (int i = 1; i <= n; ++i) {
    instance.subsets.push_back({i, n + i});
  }
  instance.validate();
  return instance;
}

SetSplitInstance lift_k(const SetSplitInstance& instance) {
  instance.validate();
  if (!instance.respects_subset_budget()) {
    throw ParamError("lift_k: instance exceeds the (k-1)d subset budget");
  }
  SetSplitInstance lifted;
  lifted.d = instance.d + 1;
  lifted.k = instance.k + 1;
  lifted.subsets = instance.subsets;
  for (int j = 1; j <= instance.d; ++j) {
    lifted.subsets.push_back({j, instance.d + 1});
  }
  lifted.validate();
  return lifted;
}

SetSplitInstance reduce_cnf(const CnfFormula& phi, int target_k) {
  if (target_k < 2) throw ParamError("reduce_cnf: target k must be >= 2");
  SetSplitInstance instance = equal3sat_to_split2(to_equal_3sat(phi));
  while (instance.k < target_k) instance = lift_k(instance);
  return instance;
}

HardDataset build_dataset(const SetSplitInstance& instance) {
  instance.validate();
  const int k = instance.k;
  const int d = instance.d;
  const Eigen::Index dim = Eigen::Index(k) * k * d;
  HardDataset dataset;
  dataset.k = k;
  dataset.d = d;
  dataset.points = MatXd::Zero(d + Eigen::Index(instance.subsets.size()), dim);
  dataset.labels = VecXd::Zero(dataset.points.rows());

  // d(v) repeats the support of v in each of the k blocks of length kd,
  // shifted by (i-1)d inside block i.
  auto emit = [&](Eigen::Index row, const std::vector<int>& support) {
    for (int block = 0; block < k; ++block) {
      const Eigen::Index base = Eigen::Index(block) * k * d + Eigen::Index(block) * d;
      for (int e : support) dataset.points(row, base + e - 1) = 1.0;
    }
  };

  for (int i = 1; i <= d; ++i) {
    emit(i - 1, {i});
    dataset.labels[i - 1] = 1.0 / double(k);
  }
  for (std::size_t j = 0; j < instance.subsets.size(); ++j) {
    emit(d + Eigen::Index(j), instance.subsets[j]);
  }
  return dataset;
}

double no_overlap_forward(const VecXd& w, const VecXd& x, int k) {
  if (k < 1) throw ParamError("no_overlap_forward: k must be >= 1");
  const Eigen::Index m = w.size();
  if (x.size() != Eigen::Index(k) * m) {
    throw ShapeError("no_overlap_forward: input dim must be k * filter dim");
  }
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    acc += std::max(0.0, w.dot(x.segment(Eigen::Index(i) * m, m)));
  }
  return acc / double(k);
}

double dataset_risk(const VecXd& w, const HardDataset& dataset) {
  if (w.size() * dataset.k != dataset.point_dim()) {
    throw ShapeError("dataset_risk: filter dim must be k d");
  }
  double acc = 0.0;
  for (Eigen::Index r = 0; r < dataset.num_points(); ++r) {
    const double diff =
        no_overlap_forward(w, dataset.points.row(r).transpose(), dataset.k) -
        dataset.labels[r];
    acc += diff * diff;
  }
  return acc / double(dataset.num_points());
}

double risk_threshold(int k, int d) {
  if (k < 2 || d < 1) throw ParamError("risk_threshold: needs k >= 2, d >= 1");
  return 1.0 / (4.0 * std::pow(double(k), 5) * double(d));
}

VecXd splitting_to_filter(const SplittingSolution& solution, int d) {
  const int k = int(solution.parts.size());
  if (k < 1 || d < 1) throw CertificateError("splitting_to_filter: empty solution");
  VecXd w = VecXd::Constant(Eigen::Index(k) * d, -double(d));
  for (int l = 0; l < k; ++l) {
    for (int e : solution.parts[l]) {
      if (e < 1 || e > d) throw CertificateError("splitting_to_filter: element out of range");
      w[Eigen::Index(l) * d + e - 1] = 1.0;
    }
  }
  return w;
}

SplittingSolution filter_to_splitting(const VecXd& w, const SetSplitInstance& instance) {
  instance.validate();
  const int k = instance.k;
  const int d = instance.d;
  if (w.size() != Eigen::Index(k) * d) {
    throw ShapeError("filter_to_splitting: filter dim must be k d");
  }
  const double risk = dataset_risk(w, build_dataset(instance));
  const double threshold = risk_threshold(k, d);
  if (!(risk < threshold)) {
    throw CertificateError("filter_to_splitting: risk " + std::to_string(risk) +
                           " not strictly below threshold " + std::to_string(threshold));
  }
  SplittingSolution solution;
  solution.parts.assign(k, {});
  for (int i = 1; i <= d; ++i) {
    // Lowest qualifying part wins for elements crossing several thresholds.
    for (int l = 0; l < k; ++l) {
      if (w[Eigen::Index(l) * d + i - 1] > 1.0 / (2.0 * k)) {
        solution.parts[l].push_back(i);
        break;
      }
    }
  }
  if (!verify_splitting(instance, solution)) {
    throw ReductionSoundnessError(
        "filter_to_splitting: extracted sets fail verification despite low risk");
  }
  return solution;
}

bool verify_splitting(const SetSplitInstance& instance, const SplittingSolution& solution) {
  if (int(solution.parts.size()) != instance.k) return false;
  std::vector<int> owner(instance.d + 1, -1);
  for (std::size_t l = 0; l < solution.parts.size(); ++l) {
    for (int e : solution.parts[l]) {
      if (e < 1 || e > instance.d) return false;
      if (owner[e] != -1) return false;  // overlap
      owner[e] = int(l);
    }
  }
  for (int e = 1; e <= instance.d; ++e) {
    if (owner[e] == -1) return false;  // not covered
  }
  for (const auto& subset : instance.subsets) {
    const int first = owner[subset.front()];
    const bool contained = std::all_of(subset.begin(), subset.end(),
                                       [&](int e) { return owner[e] == first; });
    if (contained) return false;
  }
  return true;
}

std::optional<SplittingSolution> brute_force_split(const SetSplitInstance& instance) {
  instance.validate();
  if (std::pow(double(instance.k), instance.d) > kBruteForceGuard) {
    throw TooLargeError("brute_force_split: more than 10^7 assignments");
  }
  std::vector<int> assign(instance.d, 0);
  while (true) {
    bool valid = true;
    for (const auto& subset : instance.subsets) {
      const int first = assign[subset.front() - 1];
      const bool contained = std::all_of(subset.begin(), subset.end(),
                                         [&](int e) { return assign[e - 1] == first; });
      if (contained) {
        valid = false;
        break;
      }
    }
    if (valid) {
      SplittingSolution solution;
      solution.parts.assign(instance.k, {});
      for (int i = 0; i < instance.d; ++i) solution.parts[assign[i]].push_back(i + 1);
      return solution;
    }
    // Next assignment in lexicographic order, leftmost digit most significant.
    int pos = instance.d - 1;
    while (pos >= 0 && assign[pos] == instance.k - 1) assign[pos--] = 0;
    if (pos < 0) return std::nullopt;
    ++assign[pos];
  }
}

PlantedInstance plant_random_instance(int d, int k, int num_subsets,
                                      int subset_size, std::uint64_t seed) {
  if (d < k || k < 2) throw ParamError("plant_random_instance: needs d >= k >= 2");
  if (subset_size < 2 || subset_size > d) {
    throw ParamError("plant_random_instance: subset size must be in [2, d]");
  }
  std::mt19937_64 rng(seed);

  // Balanced planted parts over a random permutation of {1..d}.
  std::vector<int> elems(d);
  for (int i = 0; i < d; ++i) elems[i] = i + 1;
  std::shuffle(elems.begin(), elems.end(), rng);
  PlantedInstance result;
  result.instance.d = d;
  result.instance.k = k;
  result.planted.parts.assign(k, {});
  std::vector<int> owner(d + 1, 0);
  for (int i = 0; i < d; ++i) {
    const int part = i % k;
    result.planted.parts[part].push_back(elems[i]);
    owner[elems[i]] = part;
  }
  for (auto& part : result.planted.parts) std::sort(part.begin(), part.end());

  while (int(result.instance.subsets.size()) < num_subsets) {
    std::shuffle(elems.begin(), elems.end(), rng);
    std::vector<int> subset(elems.begin(), elems.begin() + subset_size);
    const int first = owner[subset.front()];
    const bool contained = std::all_of(subset.begin(), subset.end(),
                                       [&](int e) { return owner[e] == first; });
    if (contained) continue;  // would break the planted splitting
    result.instance.subsets.push_back(sorted_unique(std::move(subset)));
  }
  result.instance.validate();
  return result;
}

std::string instance_to_json(const SetSplitInstance& instance) {
  nlohmann::json j;
  j["d"] = instance.d;
  j["k"] = instance.k;
  j["subsets"] = instance.subsets;
  return j.dump(2);
}

SetSplitInstance instance_from_json(const std::string& text) {
  SetSplitInstance instance;
  try {
    const auto j = nlohmann::json::parse(text);
    instance.d = j.at("d").get<int>();
    instance.k = j.at("k").get<int>();
    instance.subsets = j.at("subsets").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("instance JSON: ") + e.what());
  }
  instance.validate();
  return instance;
}

SetSplitInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParamError("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace relu_lab::hardness
