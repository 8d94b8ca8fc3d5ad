#include <doctest.h>

#include <cmath>

#include "dosps/dosps.hpp"

using namespace dosps;

TEST_CASE("network config validation and lambda") {
  const NetworkConfig net(50, 0.05, 1.0);
  CHECK(net.lambda() == 50 * 0.05);
  CHECK_THROWS_AS(NetworkConfig(50, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(NetworkConfig(50, 1.1, 1.0), ConfigError);
  CHECK_THROWS_AS(NetworkConfig(50, 0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(NetworkConfig(0, 0.5, 1.0), ConfigError);
}

TEST_CASE("activity count has mean lambda") {
  const NetworkConfig net(50, 0.05, 1.0);
  RngStream rng(11, 1);
  const int slots = 100000;
  double s = 0.0;
  for (int t = 0; t < slots; ++t) s += static_cast<double>(count_active(sample_activity(net, rng)));
  const double sd = std::sqrt(50 * 0.05 * 0.95 / slots);
  CHECK(std::abs(s / slots - 2.5) <= 3.0 * sd);
}

TEST_CASE("q_a = 1 activates everyone") {
  RngStream rng(1, 1);
  const auto d = sample_activity(NetworkConfig(7, 1.0, 1.0), rng);
  CHECK(count_active(d) == 7);
}

TEST_CASE("activity is serially uncorrelated") {
  const NetworkConfig net(1, 0.3, 1.0);
  RngStream rng(5, 5);
  const int n = 100000;
  std::vector<double> x(n);
  for (auto& v : x) v = sample_activity(net, rng)[0];
  double m = 0.0;
  for (double v : x) m += v;
  m /= n;
  double c0 = 0.0, c1 = 0.0;
  for (int t = 0; t < n; ++t) {
    c0 += (x[t] - m) * (x[t] - m);
    if (t + 1 < n) c1 += (x[t] - m) * (x[t + 1] - m);
  }
  CHECK(std::abs(c1 / c0) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("poisson activity mode is capped at N and has mean near lambda") {
  const NetworkConfig net(200, 0.01, 1.0, ActivityMode::poisson);
  RngStream rng(2, 3);
  double s = 0.0;
  const int slots = 50000;
  for (int t = 0; t < slots; ++t) {
    const auto c = count_active(sample_activity(net, rng));
    REQUIRE(c <= 200);
    s += static_cast<double>(c);
  }
  CHECK(std::abs(s / slots - 2.0) <= 3.0 * std::sqrt(2.0 / slots));
}

TEST_CASE("reception sets") {
  RngStream rng(3, 3);
  const std::vector<std::size_t> active = {1, 4, 6, 9};
  CHECK(sample_reception(active, 4, 1.0, rng) == std::vector<std::size_t>{1, 6, 9});
  CHECK(sample_reception({4}, 4, 0.7, rng).empty());
  CHECK_THROWS_AS(sample_reception(active, 2, 0.5, rng), std::invalid_argument);

  const int trials = 100000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    for (auto j : sample_reception(active, 1, 0.5, rng)) hits += j == 6;
  }
  CHECK(std::abs(hits / double(trials) - 0.5) <= 3.0 * std::sqrt(0.25 / trials));
}

TEST_CASE("reception probability does not depend on the active-set size") {
  RngStream rng(8, 8);
  for (std::size_t n : {2u, 10u}) {
    std::vector<std::size_t> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = i;
    const int trials = 50000;
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      for (auto j : sample_reception(active, 0, 0.3, rng)) hits += j == 1;
    }
    CHECK(std::abs(hits / double(trials) - 0.3) <= 3.0 * std::sqrt(0.21 / trials));
  }
}

TEST_CASE("channel gains have the configured means and are nonnegative") {
  const ChannelSpec spec;
  RngStream rng(4, 4);
  const int draws = 100000;
  double sd = 0.0, sc = 0.0;
  for (int t = 0; t < draws; ++t) {
    const auto s = sample_channel(2, spec, rng);
    for (double v : s.data()) REQUIRE(v >= 0.0);
    sd += s(0, 0);
    sc += s(1, 0);
  }
  // s = h^2 with h real normal: Var(s) = 2 var^2.
  CHECK(std::abs(sd / draws - 1.0) <= 3.0 * std::sqrt(2.0 / draws));
  CHECK(std::abs(sc / draws - 0.1) <= 3.0 * std::sqrt(2.0 * 0.01 / draws));
}

TEST_CASE("complex fading gives exponential gains with the same mean") {
  ChannelSpec spec;
  spec.fading = FadingKind::complex_gaussian;
  RngStream rng(4, 5);
  const int draws = 100000;
  double s = 0.0, s2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    const double g = sample_gain(spec.var_direct, spec.fading, rng);
    s += g;
    s2 += g * g;
  }
  CHECK(std::abs(s / draws - 1.0) <= 3.0 / std::sqrt(double(draws)));
  // Exponential(1): E s^2 = 2 (real fading would give 3).
  CHECK(s2 / draws == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("successive channel draws are independent") {
  const ChannelSpec spec;
  RngStream rng(6, 6);
  const int n = 50000;
  double sx = 0.0, sy = 0.0, sxy = 0.0, sxx = 0.0, syy = 0.0;
  auto s = sample_channel(3, spec, rng);
  for (int t = 0; t < n; ++t) {
    const double x = s(0, 0);
    s = sample_channel(3, spec, rng);
    const double y = s(0, 0);
    sx += x, sy += y, sxy += x * y, sxx += x * x, syy += y * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(corr) <= 4.0 / std::sqrt(double(n)));
}

TEST_CASE("observation noise") {
  RngStream rng(7, 7);
  for (double v : sample_obs_noise(0.0, 10, rng)) CHECK(v == 0.0);
  CHECK_THROWS_AS(sample_obs_noise(-1.0, 3, rng), ConfigError);

  const int n = 100000;
  for (auto kind : {NoiseKind::gaussian, NoiseKind::uniform}) {
    double s = 0.0, s2 = 0.0, cross = 0.0;
    for (int t = 0; t < n; ++t) {
      const auto eta = sample_obs_noise(1.0, 2, rng, kind);
      s += eta[0];
      s2 += eta[0] * eta[0];
      cross += eta[0] * eta[1];
    }
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
    CHECK(std::abs(cross / n) <= 4.0 / std::sqrt(double(n)));
  }
}
