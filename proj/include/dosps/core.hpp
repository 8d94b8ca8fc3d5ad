#pragma once

// Value types shared by every module: step-size schedules, perturbation
// laws, per-node action intervals and seeded random streams.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dosps {

/// Thrown for invalid parameters supplied by a configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a simulation produces a non-finite quantity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Power-law step sizes beta_l = beta0 * l^-c1 and gamma_l = gamma0 * l^-c2.
///
/// Indices start at 1; index 0 is unreachable in the algorithm and rejected.
class StepSizeSchedule {
 public:
  StepSizeSchedule(double beta0, double gamma0, double c1, double c2)
      : beta0_(beta0), gamma0_(gamma0), c1_(c1), c2_(c2) {
    if (!(beta0 > 0.0) || !(gamma0 > 0.0)) {
      throw ConfigError("step-size scales beta0 and gamma0 must be positive");
    }
    if (!(c1 > 0.5 && c1 < 1.0)) {
      throw ConfigError("exponent c1 must lie in (0.5, 1)");
    }
    // c2 == 1 - c1 is allowed; the slack absorbs representation error of 1 - c1.
    if (!(c2 > 0.0 && c2 <= 1.0 - c1 + 1e-12)) {
      throw ConfigError("exponent c2 must lie in (0, 1 - c1]");
    }
  }

  double beta0() const { return beta0_; }
  double gamma0() const { return gamma0_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }

  double beta(std::uint64_t ell) const {
    check_index(ell);
    return beta0_ * std::pow(static_cast<double>(ell), -c1_);
  }
  double gamma(std::uint64_t ell) const {
    check_index(ell);
    return gamma0_ * std::pow(static_cast<double>(ell), -c2_);
  }

  // Real-argument extensions used by the Jensen-type bounds.
  double beta_at(double x) const { return beta0_ * std::pow(x, -c1_); }
  double gamma_at(double x) const { return gamma0_ * std::pow(x, -c2_); }

  friend bool operator==(const StepSizeSchedule&, const StepSizeSchedule&) = default;

 private:
  static void check_index(std::uint64_t ell) {
    if (ell == 0) throw std::out_of_range("step-size index must be >= 1");
  }

  double beta0_;
  double gamma0_;
  double c1_;
  double c2_;
};

/// Deterministic random stream identified by (seed, stream id).
///
/// Satisfies UniformRandomBitGenerator so it can drive any <random>
/// distribution. A stream is owned by one worker at a time.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform draw on [0, 1).
  /// Uniform on [0, 1). Top 53 bits of one draw, so 1.0 is never returned.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  bool bernoulli(double p) { return p >= 1.0 || uniform() < p; }
  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::uint64_t> dist(n, p);
    return dist(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Roles that own an independent stream per node (or per replication).
enum class StreamRole : std::uint8_t {
  activity = 1,
  perturbation,
  index,
  reception,
  environment,
  noise,
  init,
  evaluation,
};

/// Packs (replication, role, node) into a stream id; disjoint for distinct triples.
constexpr std::uint64_t stream_id(std::uint64_t replication, StreamRole role,
                                  std::uint64_t node = 0) {
  return (replication << 32) | (static_cast<std::uint64_t>(role) << 24) | (node & 0xFFFFFFu);
}

enum class PerturbationKind { rademacher, scaled_symmetric };

/// Law of the exploration signal Phi.
///
/// `scaled_symmetric(s)` is uniform on [-s, s], so alpha = s and
/// sigma^2 = s^2 / 3; both constants are exposed explicitly.
class PerturbationSpec {
 public:
  static PerturbationSpec rademacher() { return {PerturbationKind::rademacher, 1.0}; }
  static PerturbationSpec scaled_symmetric(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw ConfigError("perturbation scale must be positive and finite");
    }
    return {PerturbationKind::scaled_symmetric, scale};
  }

  PerturbationKind kind() const { return kind_; }
  double scale() const { return scale_; }
  double alpha_phi() const { return scale_; }
  double sigma_phi_sq() const {
    return kind_ == PerturbationKind::rademacher ? 1.0 : scale_ * scale_ / 3.0;
  }

  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;

 private:
  PerturbationSpec(PerturbationKind kind, double scale) : kind_(kind), scale_(scale) {}

  PerturbationKind kind_;
  double scale_;
};

inline double sample_perturbation(const PerturbationSpec& spec, RngStream& rng) {
  switch (spec.kind()) {
    case PerturbationKind::rademacher:
      return (rng() >> 63) ? 1.0 : -1.0;
    case PerturbationKind::scaled_symmetric:
      return spec.scale() * (2.0 * rng.uniform() - 1.0);
  }
  return 0.0;
}

/// Per-node feasible intervals [a_min_i, a_max_i].
class ActionBounds {
 public:
  ActionBounds(std::vector<double> a_min, std::vector<double> a_max)
      : a_min_(std::move(a_min)), a_max_(std::move(a_max)) {
    if (a_min_.size() != a_max_.size() || a_min_.empty()) {
      throw ConfigError("action bounds need matching, nonempty lower and upper vectors");
    }
    for (std::size_t i = 0; i < a_min_.size(); ++i) {
      if (!std::isfinite(a_min_[i]) || !std::isfinite(a_max_[i]) || !(a_min_[i] < a_max_[i])) {
        throw ConfigError("action bounds require finite a_min < a_max for node " +
                          std::to_string(i));
      }
    }
  }

  static ActionBounds uniform(std::size_t n, double lo, double hi) {
    return {std::vector<double>(n, lo), std::vector<double>(n, hi)};
  }

  std::size_t size() const { return a_min_.size(); }
  double a_min(std::size_t i) const { return a_min_[i]; }
  double a_max(std::size_t i) const { return a_max_[i]; }
  const std::vector<double>& lower() const { return a_min_; }
  const std::vector<double>& upper() const { return a_max_; }

  /// max over nodes of max(a_min^2, a_max^2).
  double sigma_a_sq() const {
    double out = 0.0;
    for (std::size_t i = 0; i < a_min_.size(); ++i) {
      out = std::max({out, a_min_[i] * a_min_[i], a_max_[i] * a_max_[i]});
    }
    return out;
  }

  bool contains(std::size_t i, double a) const { return a >= a_min_[i] && a <= a_max_[i]; }

  friend bool operator==(const ActionBounds&, const ActionBounds&) = default;

 private:
  std::vector<double> a_min_;
  std::vector<double> a_max_;
};

}  // namespace dosps
