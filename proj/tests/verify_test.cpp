#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relu_lab/kernel.hpp"
#include "relu_lab/numeric.hpp"
#include "relu_lab/verify.hpp"
#include "test_util.hpp"

using namespace relu_lab;

TEST_CASE("quick invariant suite passes end to end") {
  verify::VerifyOptions options;
  options.quick = true;
  const auto results = verify::run_all_checks(options);
  CHECK(results.size() >= 14);
  for (const auto& r : results) {
    CHECK_MESSAGE(r.passed, r.name, ": ", r.measured);
  }
  CHECK(verify::all_passed(results));
}

TEST_CASE("finite-difference check catches an injected gradient sign flip") {
  auto rng = test_util::make_rng(191);
  int detected = 0, total = 0;
  while (total < 50) {
    const VecXd u = test_util::random_unit_scale_vec(rng, 4);
    const VecXd v = test_util::random_unit_scale_vec(rng, 4);
    const double theta = angle(u, v);
    if (theta < 1e-2 || theta > pi<double>() - 1e-2) continue;
    ++total;
    const VecXd fd = fd_gradient<double>(
        [&v](const VecXd& p) { return kernel_g(p, v); }, u, 1e-6);
    const VecXd mutated = -kernel_grad_u(u, v);  // deliberate sign flip
    if (relative_error(mutated, fd) > 1e-6) ++detected;
  }
  CHECK(detected == total);
}
