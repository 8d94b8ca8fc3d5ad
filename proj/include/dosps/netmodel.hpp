#pragma once

// Per-slot network randomness: activity, reception sets, fading channel and
// observation noise.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "dosps/core.hpp"

namespace dosps {

/// Activity vector; entry i is 1 when node i is active in the slot.
using Activity = std::vector<std::uint8_t>;

enum class ActivityMode { binomial, poisson };

struct NetworkConfig {
  std::size_t n_nodes = 1;
  double q_activity = 1.0;
  double q_reception = 1.0;
  ActivityMode activity_mode = ActivityMode::binomial;

  NetworkConfig() = default;
  NetworkConfig(std::size_t n, double qa, double qr, ActivityMode mode = ActivityMode::binomial)
      : n_nodes(n), q_activity(qa), q_reception(qr), activity_mode(mode) {
    validate();
  }

  double lambda() const { return static_cast<double>(n_nodes) * q_activity; }

  void validate() const {
    if (n_nodes == 0) throw ConfigError("network needs at least one node");
    if (!(q_activity > 0.0 && q_activity <= 1.0)) {
      throw ConfigError("q_activity must lie in (0, 1]");
    }
    if (!(q_reception > 0.0 && q_reception <= 1.0)) {
      throw ConfigError("q_reception must lie in (0, 1]");
    }
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

enum class FadingKind { real_gaussian, complex_gaussian };
enum class NoiseKind { gaussian, uniform };

struct ChannelSpec {
  double var_direct = 1.0;
  double var_cross = 0.1;
  double noise_floor = 0.2;
  FadingKind fading = FadingKind::real_gaussian;

  void validate() const {
    if (!(var_direct > 0.0) || !(var_cross > 0.0) || !(noise_floor > 0.0)) {
      throw ConfigError("channel variances and noise floor must be positive");
    }
  }

  friend bool operator==(const ChannelSpec&, const ChannelSpec&) = default;
};

/// Dense N x N power-gain matrix; entry (j, i) is the gain from transmitter j
/// to receiver i.
class ChannelMatrix {
 public:
  ChannelMatrix() = default;
  explicit ChannelMatrix(std::size_t n) : n_(n), s_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t from, std::size_t to) const { return s_[from * n_ + to]; }
  double& operator()(std::size_t from, std::size_t to) { return s_[from * n_ + to]; }
  const std::vector<double>& data() const { return s_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> s_;
};

struct SlotOutcome {
  Activity activity;
  std::size_t n_active = 0;
  ChannelMatrix channel;
  std::vector<double> obs_noise;
  std::vector<std::vector<std::size_t>> reception;
};

inline std::vector<std::size_t> active_indices(const Activity& delta) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i]) out.push_back(i);
  }
  return out;
}

inline std::size_t count_active(const Activity& delta) {
  return static_cast<std::size_t>(std::count(delta.begin(), delta.end(), std::uint8_t{1}));
}

/// Draws delta_k. In poisson mode n_k ~ Poisson(lambda) capped at N and the
/// active subset is uniform among subsets of that size.
inline Activity sample_activity(const NetworkConfig& cfg, RngStream& rng) {
  Activity delta(cfg.n_nodes, 0);
  if (cfg.activity_mode == ActivityMode::binomial) {
    for (auto& d : delta) d = rng.bernoulli(cfg.q_activity) ? 1 : 0;
    return delta;
  }
  std::poisson_distribution<std::size_t> pois(cfg.lambda());
  const std::size_t n = std::min(pois(rng), cfg.n_nodes);
  std::vector<std::size_t> idx(cfg.n_nodes);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Partial Fisher-Yates.
  for (std::size_t m = 0; m < n; ++m) {
    std::uniform_int_distribution<std::size_t> pick(m, cfg.n_nodes - 1);
    std::swap(idx[m], idx[pick(rng)]);
    delta[idx[m]] = 1;
  }
  return delta;
}

/// Senders whose observation reaches node_i; each other active node is
/// included independently with probability q_r.
inline std::vector<std::size_t> sample_reception(const std::vector<std::size_t>& active_set,
                                                 std::size_t node_i, double q_r, RngStream& rng) {
  if (std::find(active_set.begin(), active_set.end(), node_i) == active_set.end()) {
    throw std::invalid_argument("inactive node cannot receive observations");
  }
  std::vector<std::size_t> out;
  for (std::size_t j : active_set) {
    if (j == node_i) continue;
    if (rng.bernoulli(q_r)) out.push_back(j);
  }
  return out;
}

inline double sample_gain(double variance, FadingKind fading, RngStream& rng) {
  if (fading == FadingKind::real_gaussian) {
    const double h = std::sqrt(variance) * rng.normal();
    return h * h;
  }
  const double re = std::sqrt(variance / 2.0) * rng.normal();
  const double im = std::sqrt(variance / 2.0) * rng.normal();
  return re * re + im * im;
}

/// Direct gains equal to exactly zero are redrawn so log(s_ii) stays finite.
inline double sample_direct_gain(const ChannelSpec& spec, RngStream& rng) {
  double s = 0.0;
  while (!(s > 0.0)) s = sample_gain(spec.var_direct, spec.fading, rng);
  return s;
}

inline ChannelMatrix sample_channel(std::size_t n, const ChannelSpec& spec, RngStream& rng) {
  ChannelMatrix s(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      s(j, i) = (i == j) ? sample_direct_gain(spec, rng) : sample_gain(spec.var_cross, spec.fading, rng);
    }
  }
  return s;
}

/// Redraws only the entries among active nodes. Utilities never read the
/// other entries, so the slot's law is the same as a full fresh draw.
inline void refresh_channel(ChannelMatrix& s, const std::vector<std::size_t>& active,
                            const ChannelSpec& spec, RngStream& rng) {
  for (std::size_t j : active) {
    for (std::size_t i : active) {
      s(j, i) = (i == j) ? sample_direct_gain(spec, rng) : sample_gain(spec.var_cross, spec.fading, rng);
    }
  }
}

inline double sample_noise(double sigma_eta, NoiseKind kind, RngStream& rng) {
  if (sigma_eta == 0.0) return 0.0;
  if (kind == NoiseKind::gaussian) return sigma_eta * rng.normal();
  // Uniform on [-sqrt(3) s, sqrt(3) s] has variance s^2.
  return sigma_eta * std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
}

inline std::vector<double> sample_obs_noise(double sigma_eta, std::size_t n, RngStream& rng,
                                            NoiseKind kind = NoiseKind::gaussian) {
  if (!(sigma_eta >= 0.0)) throw ConfigError("sigma_eta must be nonnegative");
  std::vector<double> eta(n);
  for (auto& e : eta) e = sample_noise(sigma_eta, kind, rng);
  return eta;
}

}  // namespace dosps
