#pragma once

// Cross-module invariant suite behind the `verify` command: each check
// re-derives one documented property (closed forms against Monte-Carlo or
// finite differences, landscape facts, reduction soundness, trajectory
// invariants) and reports a measured value with its pass/fail verdict.

#include <cstdint>
#include <string>
#include <vector>

namespace relu_lab::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string measured;  // human-readable summary of the observed values
};

struct VerifyOptions {
  bool quick = false;  // reduced sample counts, same tolerances
  std::uint64_t seed = 2718281828;
};

std::vector<CheckResult> run_all_checks(const VerifyOptions& options);

/// True when every check passed.
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace relu_lab::verify
