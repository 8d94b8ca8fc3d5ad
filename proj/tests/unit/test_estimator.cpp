#include <doctest.h>

#include <cmath>

#include "dosps/dosps.hpp"

using namespace dosps;

TEST_CASE("estimate arithmetic") {
  CHECK(estimate_global_utility({0, 2.0}, {{1, 3.0}, {2, 5.0}}, 0.5) == 18.0);
  CHECK(estimate_global_utility({0, 2.0}, {}, 0.5) == 2.0);
  CHECK(estimate_global_utility({4, 1.5}, {{0, -1.0}, {2, 2.5}}, 1.0) == 3.0);
}

TEST_CASE("estimate input validation") {
  CHECK_THROWS_AS(estimate_global_utility({0, 1.0}, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_global_utility({0, 1.0}, {}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(estimate_global_utility({0, 1.0}, {{0, 1.0}}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_global_utility({0, 1.0}, {{1, 1.0}, {1, 2.0}}, 1.0), std::invalid_argument);
}

namespace {
// zeta = 1 and integer actions give integer utilities, so sums are exact in
// any order.
struct IntegerSetup {
  QuadraticModel model{std::vector<double>(5, 0.0), 1.0, 1.0};
  std::vector<double> a{1.0, -2.0, 3.0, 0.0, 2.0};
  Activity delta{1, 1, 0, 1, 1};
  std::vector<double> env = std::vector<double>(5, 1.0);
};
}  // namespace

TEST_CASE("full reception without noise is exact") {
  IntegerSetup s;
  RngStream rng(1, 1);
  const auto b = mc_check_unbiasedness(s.model, s.a, s.delta, s.env, 1, 1.0, 0.0, 1000, rng);
  CHECK(b.bias == 0.0);
  CHECK(b.std_error == 0.0);
}

TEST_CASE("single active node sees only its own noise") {
  IntegerSetup s;
  s.delta = {0, 0, 1, 0, 0};
  RngStream rng(2, 2);
  const auto b = mc_check_unbiasedness(s.model, s.a, s.delta, s.env, 2, 0.3, 0.5, 100000, rng);
  CHECK(std::abs(b.bias) <= 3.0 * b.std_error);
  CHECK(b.std_error == doctest::Approx(0.5 / std::sqrt(100000.0)).epsilon(0.05));
}

TEST_CASE("estimator is unbiased across reception and noise levels") {
  PowerControlModel pm(8, ChannelSpec{}, 20.0, 1.0);
  RngStream rng(3, 3);
  const Activity d = {1, 1, 0, 1, 0, 1, 1, 0};
  std::vector<double> a(8);
  for (auto& x : a) x = rng.uniform(-2.0, 2.0);
  auto env = pm.make_env();
  pm.resample_env(env, active_indices(d), rng);
  for (double qr : {0.1, 0.3, 0.7, 1.0}) {
    for (double sigma : {0.0, 0.5, 2.0}) {
      const auto b = mc_check_unbiasedness(pm, a, d, env, 3, qr, sigma, 100000, rng);
      CHECK(std::abs(b.bias) <= 3.5 * b.std_error + 1e-12);
    }
  }
}

TEST_CASE("estimator rejects an inactive reference node") {
  IntegerSetup s;
  RngStream rng(4, 4);
  CHECK_THROWS(mc_check_unbiasedness(s.model, s.a, s.delta, s.env, 2, 0.5, 0.1, 10, rng));
}

TEST_CASE("estimator variance does not increase with q_r") {
  IntegerSetup s;
  RngStream rng(5, 5);
  const std::size_t n = 50000;
  std::vector<double> se;
  for (double qr : {0.1, 0.5, 1.0}) {
    se.push_back(mc_check_unbiasedness(s.model, s.a, s.delta, s.env, 0, qr, 0.5, n, rng).std_error);
  }
  // std_error^2 * n is the sample variance; its own relative sd is about sqrt(2/n) for
  // near-normal data, widened here for the heavier reception mixture.
  const double tol = 3.0 * std::sqrt(2.0 / n) * 4.0;
  CHECK(se[0] * (1.0 + tol) >= se[1]);
  CHECK(se[1] * (1.0 + tol) >= se[2]);
  CHECK(se[0] > 2.0 * se[2]);
}
