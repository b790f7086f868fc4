// End-to-end checks of the command-line surface: artifact formats,
// determinism under a fixed seed, and exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relu_lab/overlap2d.hpp"

#ifndef RELU_LAB_CLI
#error "RELU_LAB_CLI must point at the relu-lab binary"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("relu_lab_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RELU_LAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::vector<double>> read_csv_body(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        row.push_back(std::numeric_limits<double>::quiet_NaN());  // text column
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("descend: determinism, summary, manifest" * doctest::timeout(120)) {
  TempDir dir;
  const std::string base = "descend --k 4 --m 3 --delta 0.2 --seed 12 --steps 200000";
  CHECK(run_cli(base + " --out " + dir.file("a")) == 0);
  CHECK(run_cli(base + " --out " + dir.file("b")) == 0);
  CHECK(slurp(dir.file("a.trajectory.csv")) == slurp(dir.file("b.trajectory.csv")));
  CHECK(slurp(dir.file("a.summary.json")) == slurp(dir.file("b.summary.json")));

  const auto summary = nlohmann::json::parse(slurp(dir.file("a.summary.json")));
  CHECK(summary.at("converged").get<bool>());
  CHECK(summary.at("invariants").at("angle_monotone").get<bool>());

  const auto manifest = nlohmann::json::parse(slurp(dir.file("a.manifest.json")));
  CHECK(manifest.at("command") == "descend");
  for (const auto& artifact : manifest.at("artifacts")) {
    CHECK(fs::exists(artifact.get<std::string>()));
  }

  // Step-size override outside (0,1) is a usage error.
  CHECK(run_cli(base + " --lambda 1.5 --out " + dir.file("c")) == 2);
}

TEST_CASE("landscape: grid values and exact symmetry" * doctest::timeout(120)) {
  TempDir dir;
  const std::string grid_path = dir.file("grid.csv");
  CHECK(run_cli("landscape --k 4 --w-star-scale 1 --grid-min -2 --grid-max 2 "
                "--grid-steps 41 --out " + grid_path) == 0);
  const auto rows = read_csv_body(grid_path);
  const int n = 41;
  REQUIRE(rows.size() == std::size_t(n) * n);

  // Row-major grid: index (i, j) holds w = (min + i h, min + j h).
  auto at = [&](int i, int j) -> const std::vector<double>& {
    return rows[std::size_t(i) * n + j];
  };

  // Zero at the planted optimum, trap bound in the fourth quadrant.
  bool found_optimum = false;
  const double bound = relu_lab::suboptimality_bound(4, 1.0);
  double q4_min = 1e300;
  for (const auto& row : rows) {
    if (row[0] == -1.0 && row[1] == 1.0) {
      found_optimum = true;
      CHECK(row[2] == doctest::Approx(0.0).epsilon(1e-12));
    }
    if (row[0] > 0.0 && row[1] < 0.0) q4_min = std::min(q4_min, row[2]);
  }
  CHECK(found_optimum);
  CHECK(q4_min >= bound - 1e-10);

  // Reflection across span{(1,-1)}, i.e. (w1,w2) -> (-w2,-w1), is an exact
  // symmetry of the loss (cell (i,j) mirrors to (n-1-j, n-1-i) on this
  // 0-symmetric grid); plain swap and point reflection are not symmetries.
  double worst_sym = 0.0;
  bool swap_differs = false, negate_differs = false;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      worst_sym = std::max(worst_sym,
                           std::abs(at(i, j)[2] - at(n - 1 - j, n - 1 - i)[2]));
      if (std::abs(at(i, j)[2] - at(j, i)[2]) > 1e-6) swap_differs = true;
      if (std::abs(at(i, j)[2] - at(n - 1 - i, n - 1 - j)[2]) > 1e-6)
        negate_differs = true;
    }
  }
  CHECK(worst_sym <= 1e-9);
  CHECK(swap_differs);
  CHECK(negate_differs);
}

TEST_CASE("reduce: certificates and parse failures" * doctest::timeout(120)) {
  TempDir dir;
  const std::string cnf = dir.file("phi.cnf");
  {
    std::ofstream out(cnf);
    out << "c 3-variable instance\np cnf 3 2\n1 -2 3 0\n-1 2 0\n";
  }
  CHECK(run_cli("reduce --cnf " + cnf + " --k 2 --out-dataset " + dir.file("ds.csv") +
                " --out-instance " + dir.file("inst.json") + " --emit-certificate " +
                dir.file("cert.json")) == 0);
  const auto cert = nlohmann::json::parse(slurp(dir.file("cert.json")));
  CHECK(cert.at("risk").get<double>() == 0.0);
  CHECK(cert.at("extraction_verified").get<bool>());
  const auto instance = nlohmann::json::parse(slurp(dir.file("inst.json")));
  // Equal-3SAT pads to n = m = 4, so d = 2n + 1 = 9.
  CHECK(instance.at("d").get<int>() == 9);

  const auto rows = read_csv_body(dir.file("ds.csv"));
  CHECK(rows.size() == 9 + 8);
  for (const auto& row : rows) CHECK(row.size() == 4 * 9 + 1);

  // Malformed DIMACS is a usage error.
  const std::string bad = dir.file("bad.cnf");
  {
    std::ofstream out(bad);
    out << "p cnf 2 1\n1 2\n";
  }
  CHECK(run_cli("reduce --cnf " + bad + " --out-dataset " + dir.file("x.csv")) == 2);

  // Oversized brute force (certificate requested without a planted
  // splitting) is refused with the guard message.
  const std::string big_instance = dir.file("big.json");
  {
    std::ofstream out(big_instance);
    out << "{\"d\": 40, \"k\": 2, \"subsets\": [[1,2],[3,4]]}\n";
  }
  CHECK(run_cli("reduce --instance " + big_instance + " --out-dataset " +
                dir.file("y.csv") + " --emit-certificate " + dir.file("ycert.json")) ==
        1);
}

TEST_CASE("train: epoch accounting and determinism" * doctest::timeout(120)) {
  TempDir dir;
  const std::string base =
      "train --gaussian 100 --m 4 --neurons 2 --w-star random --seed 3 --epochs 0 "
      "--out ";
  CHECK(run_cli(base + dir.file("t0.csv")) == 0);
  const auto rows = read_csv_body(dir.file("t0.csv"));
  CHECK(rows.size() == 1);  // initial loss only

  const std::string longer =
      "train --gaussian 100 --m 4 --neurons 2 --w-star random --seed 3 --epochs 50 "
      "--optimizer adagrad --lr 0.3 --out ";
  CHECK(run_cli(longer + dir.file("t1.csv")) == 0);
  CHECK(run_cli(longer + dir.file("t2.csv")) == 0);
  CHECK(slurp(dir.file("t1.csv")) == slurp(dir.file("t2.csv")));
  const auto curve = read_csv_body(dir.file("t1.csv"));
  CHECK(curve.size() == 51);
  CHECK(curve.back()[1] < curve.front()[1]);

  // Declared shape must match the dataset.
  CHECK(run_cli("reduce --plant --plant-d 4 --plant-subsets 3 --plant-size 2 "
                "--out-dataset " + dir.file("hd.csv")) == 0);
  CHECK(run_cli("train --dataset " + dir.file("hd.csv") +
                " --m 5 --neurons 2 --epochs 1 --out " + dir.file("t3.csv")) == 2);
  CHECK(run_cli("train --dataset " + dir.file("hd.csv") +
                " --m 8 --neurons 2 --epochs 1 --out " + dir.file("t4.csv")) == 0);
}

TEST_CASE("restarts: explicit presets write wilson bounds" * doctest::timeout(300)) {
  TempDir dir;
  CHECK(run_cli("restarts --loss overlap2d --k 4 --runs 40 --seed 9 --lr 0.25 "
                "--max-iters 60000 --out " + dir.file("r.csv")) == 0);
  const auto rows = read_csv_body(dir.file("r.csv"));
  REQUIRE(rows.size() == 1);
  // columns: config,neurons,filter,stride,lo,hi,gt,runs,global,stuck,p_hat,wilson
  const auto& row = rows[0];
  CHECK(row[7] == 40);
  CHECK(row[8] + row[9] == 40);
  const double p_hat = row[10];
  const double sigma = std::sqrt(0.25 * 0.75 / 40.0);
  CHECK(p_hat <= 0.75 + 3.0 * sigma);
  CHECK(row[11] <= p_hat);
}

TEST_CASE("verify --quick passes and stays fast" * doctest::timeout(120)) {
  const auto start = std::chrono::steady_clock::now();
  CHECK(run_cli("verify --quick") == 0);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 60.0);
}
