#include <doctest.h>

#include <cmath>
#include <set>

#include "dosps/dosps.hpp"

using namespace dosps;

namespace {
const StepSizeSchedule kFig(0.025, 10.0, 0.75, 0.25);
}

TEST_CASE("beta and gamma at documented indices") {
  CHECK(kFig.beta(1) == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(kFig.beta(16) == doctest::Approx(0.003125).epsilon(1e-14));
  CHECK(StepSizeSchedule(1.0, 1.0, 0.75, 0.25).beta(10000) == doctest::Approx(0.001).epsilon(1e-13));
  CHECK(kFig.gamma(1) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(kFig.gamma(16) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(kFig.gamma(10000) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("index zero is rejected") {
  CHECK_THROWS_AS(kFig.beta(0), std::out_of_range);
  CHECK_THROWS_AS(kFig.gamma(0), std::out_of_range);
}

TEST_CASE("schedule construction rejects invalid exponents and scales") {
  CHECK_THROWS_AS(StepSizeSchedule(0.0, 1.0, 0.75, 0.25), ConfigError);
  CHECK_THROWS_AS(StepSizeSchedule(1.0, -1.0, 0.75, 0.25), ConfigError);
  CHECK_THROWS_AS(StepSizeSchedule(1.0, 1.0, 0.5, 0.25), ConfigError);
  CHECK_THROWS_AS(StepSizeSchedule(1.0, 1.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(StepSizeSchedule(1.0, 1.0, 0.75, 0.3), ConfigError);
  CHECK_THROWS_AS(StepSizeSchedule(1.0, 1.0, 0.75, 0.0), ConfigError);
  CHECK_NOTHROW(StepSizeSchedule(1.0, 1.0, 0.7, 0.3));  // c2 == 1 - c1 exactly
  CHECK_NOTHROW(StepSizeSchedule(1.0, 1.0, 0.9, 0.1));
}

TEST_CASE("step sizes are strictly decreasing") {
  for (std::uint64_t l = 1; l < 5000; ++l) {
    REQUIRE(kFig.beta(l) > kFig.beta(l + 1));
    REQUIRE(kFig.gamma(l) > kFig.gamma(l + 1));
  }
  CHECK(kFig.beta(1000000) > kFig.beta(1000001));
}

TEST_CASE("square-summable beta, divergent beta*gamma") {
  auto partial = [](auto&& x, std::uint64_t K) {
    double s = 0.0;
    for (std::uint64_t l = 1; l <= K; ++l) s += x(l);
    return s;
  };
  auto b2 = [](std::uint64_t l) { return kFig.beta(l) * kFig.beta(l); };
  auto bg = [](std::uint64_t l) { return kFig.beta(l) * kFig.gamma(l); };
  // Tail blocks of sum beta^2 shrink geometrically in the block index.
  const double t1 = partial(b2, 10000) - partial(b2, 1000);
  const double t2 = partial(b2, 100000) - partial(b2, 10000);
  CHECK(t2 < t1);
  CHECK(t2 < 0.5 * t1);
  // sum beta*gamma behaves like log K for c1 + c2 = 1: equal increments per decade.
  const double s3 = partial(bg, 1000), s4 = partial(bg, 10000), s5 = partial(bg, 100000);
  CHECK(s4 > s3);
  CHECK(s5 > s4);
  CHECK((s5 - s4) == doctest::Approx(s4 - s3).epsilon(0.01));
  CHECK((s5 - s4) == doctest::Approx(0.25 * std::log(10.0)).epsilon(0.01));
}

TEST_CASE("rademacher perturbation") {
  const auto spec = PerturbationSpec::rademacher();
  CHECK(spec.alpha_phi() == 1.0);
  CHECK(spec.sigma_phi_sq() == 1.0);
  RngStream rng(1, 2);
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double x = sample_perturbation(spec, rng);
    REQUIRE((x == 1.0 || x == -1.0));
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("scaled symmetric perturbation") {
  const auto spec = PerturbationSpec::scaled_symmetric(2.0);
  CHECK(spec.alpha_phi() == 2.0);
  CHECK(spec.sigma_phi_sq() == doctest::Approx(4.0 / 3.0));
  RngStream rng(3, 4);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < n; ++t) {
    const double x = sample_perturbation(spec, rng);
    REQUIRE(std::abs(x) <= spec.alpha_phi());
    s += x;
    s2 += x * x;
  }
  const double sd = std::sqrt(spec.sigma_phi_sq() / n);
  CHECK(std::abs(s / n) <= 4.0 * sd);
  // Var(Phi^2) = E Phi^4 - sigma^4 = s^4/5 - s^4/9.
  const double sd2 = std::sqrt((16.0 / 5.0 - 16.0 / 9.0) / n);
  CHECK(std::abs(s2 / n - spec.sigma_phi_sq()) <= 4.0 * sd2);
  CHECK_THROWS_AS(PerturbationSpec::scaled_symmetric(0.0), ConfigError);
}

TEST_CASE("action bounds") {
  const ActionBounds b({-3.0, -1.0}, {2.0, 5.0});
  CHECK(b.sigma_a_sq() == 25.0);
  CHECK(ActionBounds::uniform(3, -12.0, 7.0).sigma_a_sq() == 144.0);
  CHECK(b.contains(0, -3.0));
  CHECK(b.contains(0, 2.0));
  CHECK_FALSE(b.contains(0, 2.0000001));
  CHECK_THROWS_AS(ActionBounds({1.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(ActionBounds({0.0, 0.0}, {1.0}), ConfigError);
  CHECK_THROWS_AS(ActionBounds({}, {}), ConfigError);
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  std::set<std::uint64_t> firsts;
  bool same = true;
  for (int t = 0; t < 1000; ++t) {
    const auto x = a();
    same = same && x == b();
    if (t == 0) {
      firsts.insert(x);
      firsts.insert(c());
      firsts.insert(d());
    }
  }
  CHECK(same);
  CHECK(firsts.size() == 3);
}

TEST_CASE("uniform draws stay in [0, 1)") {
  RngStream r(9, 9);
  double lo = 1.0, hi = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const double x = r.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(hi > 0.999);
}

TEST_CASE("stream ids separate roles, replications and nodes") {
  std::set<std::uint64_t> ids;
  for (std::uint64_t rep = 0; rep < 3; ++rep) {
    for (auto role : {StreamRole::activity, StreamRole::perturbation, StreamRole::noise}) {
      for (std::uint64_t node = 0; node < 4; ++node) ids.insert(stream_id(rep, role, node));
    }
  }
  CHECK(ids.size() == 36);
}
