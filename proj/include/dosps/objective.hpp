#pragma once

// Objective models. A model supplies local utilities u_i for the active
// nodes of a slot, their exact gradient and a per-slot random environment.

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <vector>

#include "dosps/core.hpp"
#include "dosps/netmodel.hpp"

namespace dosps {

template <class M>
concept ObjectiveModel = requires(const M& m, std::size_t i, const std::vector<double>& a,
                                  const Activity& delta, const std::vector<std::size_t>& active,
                                  typename M::Env& env, std::vector<double>& out, RngStream& rng) {
  typename M::Env;
  { m.n_nodes() } -> std::convertible_to<std::size_t>;
  { m.make_env() } -> std::same_as<typename M::Env>;
  m.resample_env(env, active, rng);
  { m.local_utility(i, a, delta, env) } -> std::convertible_to<double>;
  m.utilities(a, active, env, out);
  { m.global_gradient(a, delta, env) } -> std::same_as<std::vector<double>>;
  { m.optimum_hint() } -> std::same_as<std::optional<std::vector<double>>>;
};

namespace detail {
inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
}
}  // namespace detail

/// Log-domain power control: a_i = log p_i and
/// u_i = w1 * log(s_ii e^{a_i} / (sigma^2 + sum_{j != i} delta_j s_ji e^{a_j})) - w2 e^{a_i}.
class PowerControlModel {
 public:
  using Env = ChannelMatrix;

  PowerControlModel(std::size_t n, ChannelSpec channel, double omega1, double omega2)
      : n_(n), channel_(channel), omega1_(omega1), omega2_(omega2) {
    channel_.validate();
    if (!(omega1 > 0.0) || !(omega2 > 0.0)) throw ConfigError("omega1 and omega2 must be positive");
  }

  std::size_t n_nodes() const { return n_; }
  const ChannelSpec& channel() const { return channel_; }
  double omega1() const { return omega1_; }
  double omega2() const { return omega2_; }

  Env make_env() const { return ChannelMatrix(n_); }
  void resample_env(Env& env, const std::vector<std::size_t>& active, RngStream& rng) const {
    refresh_channel(env, active, channel_, rng);
  }

  /// sigma^2 plus interference received at node i.
  double interference(std::size_t i, const std::vector<double>& a, const Activity& delta,
                      const Env& s) const {
    double total = channel_.noise_floor;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j != i && delta[j]) total += s(j, i) * std::exp(a[j]);
    }
    return total;
  }

  double local_utility(std::size_t i, const std::vector<double>& a, const Activity& delta,
                       const Env& s) const {
    if (!delta[i]) return 0.0;
    detail::require_finite(a[i], "action");
    const double sii = s(i, i);
    if (!(sii > 0.0)) return -std::numeric_limits<double>::infinity();
    return omega1_ * (std::log(sii) + a[i] - std::log(interference(i, a, delta, s))) -
           omega2_ * std::exp(a[i]);
  }

  /// Fills out[i] for each active i; other entries are left untouched.
  void utilities(const std::vector<double>& a, const std::vector<std::size_t>& active, const Env& s,
                 std::vector<double>& out) const {
    for (std::size_t i : active) {
      detail::require_finite(a[i], "action");
      double total = channel_.noise_floor;
      for (std::size_t j : active) {
        if (j != i) total += s(j, i) * std::exp(a[j]);
      }
      out[i] = omega1_ * (std::log(s(i, i)) + a[i] - std::log(total)) - omega2_ * std::exp(a[i]);
    }
  }

  /// Gradient of f = sum_n u_n. Node i enters its own utility through the
  /// signal term and every other active node's utility through interference.
  std::vector<double> global_gradient(const std::vector<double>& a, const Activity& delta,
                                      const Env& s) const {
    std::vector<double> g(n_, 0.0);
    const auto active = active_indices(delta);
    std::vector<double> inv_interf(n_, 0.0);
    for (std::size_t n : active) inv_interf[n] = 1.0 / interference(n, a, delta, s);
    for (std::size_t i : active) {
      detail::require_finite(a[i], "action");
      const double p = std::exp(a[i]);
      double cross = 0.0;
      for (std::size_t n : active) {
        if (n != i) cross += s(i, n) * inv_interf[n];
      }
      g[i] = omega1_ - omega2_ * p - omega1_ * p * cross;
    }
    return g;
  }

  std::optional<std::vector<double>> optimum_hint() const { return std::nullopt; }

 private:
  std::size_t n_;
  ChannelSpec channel_;
  double omega1_;
  double omega2_;
};

/// Separable quadratic u_i = -zeta_i (a_i - t_i)^2 with zeta_i ~ U(lo, hi)
/// redrawn every slot. Its expected utility is maximized at a = t.
class QuadraticModel {
 public:
  using Env = std::vector<double>;

  explicit QuadraticModel(std::vector<double> targets, double gain_lo = 0.5, double gain_hi = 1.5)
      : t_(std::move(targets)), lo_(gain_lo), hi_(gain_hi) {
    if (t_.empty()) throw ConfigError("quadratic model needs at least one target");
    if (!(gain_lo > 0.0 && gain_lo <= gain_hi)) {
      throw ConfigError("quadratic gain range must satisfy 0 < lo <= hi");
    }
    for (double x : t_) detail::require_finite(x, "target");
  }

  std::size_t n_nodes() const { return t_.size(); }
  const std::vector<double>& targets() const { return t_; }
  double gain_lo() const { return lo_; }
  double gain_hi() const { return hi_; }
  double gain_mean() const { return 0.5 * (lo_ + hi_); }
  double gain_second_moment() const {
    const double w = hi_ - lo_;
    return w * w / 12.0 + gain_mean() * gain_mean();
  }

  /// Strong-concavity constant of F(a) = -q_a E[zeta] sum (a_i - t_i)^2.
  double alpha_F(double q_a) const { return 2.0 * q_a * gain_mean(); }
  /// Lipschitz constant of the gradient of G(a, delta) = E_zeta f.
  double alpha_G() const { return 2.0 * gain_mean(); }

  /// Lipschitz-type constant L with L^2 sigma_a^2 >= E[u_i^2] over the box.
  /// The quadratic has u(0) != 0 in general, so the raw slope bound is
  /// replaced by one that dominates the second moment directly.
  double effective_L(const ActionBounds& bounds) const {
    double r = 0.0;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      r = std::max({r, std::abs(bounds.a_max(i) - t_[i]), std::abs(bounds.a_min(i) - t_[i])});
    }
    return std::sqrt(gain_second_moment()) * r * r / std::sqrt(bounds.sigma_a_sq());
  }

  Env make_env() const { return Env(t_.size(), gain_mean()); }
  void resample_env(Env& env, const std::vector<std::size_t>& active, RngStream& rng) const {
    for (std::size_t i : active) env[i] = rng.uniform(lo_, hi_);
  }

  double local_utility(std::size_t i, const std::vector<double>& a, const Activity& delta,
                       const Env& zeta) const {
    if (!delta[i]) return 0.0;
    detail::require_finite(a[i], "action");
    const double e = a[i] - t_[i];
    return -zeta[i] * e * e;
  }

  void utilities(const std::vector<double>& a, const std::vector<std::size_t>& active,
                 const Env& zeta, std::vector<double>& out) const {
    for (std::size_t i : active) {
      detail::require_finite(a[i], "action");
      const double e = a[i] - t_[i];
      out[i] = -zeta[i] * e * e;
    }
  }

  std::vector<double> global_gradient(const std::vector<double>& a, const Activity& delta,
                                      const Env& zeta) const {
    std::vector<double> g(t_.size(), 0.0);
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (delta[i]) g[i] = -2.0 * zeta[i] * (a[i] - t_[i]);
    }
    return g;
  }

  std::optional<std::vector<double>> optimum_hint() const { return t_; }

 private:
  std::vector<double> t_;
  double lo_;
  double hi_;
};

/// f(a, delta, env) = sum over active nodes of u_i.
template <ObjectiveModel M>
double global_utility(const M& model, const std::vector<double>& a, const Activity& delta,
                      const typename M::Env& env) {
  const auto active = active_indices(delta);
  std::vector<double> u(model.n_nodes(), 0.0);
  model.utilities(a, active, env, u);
  double f = 0.0;
  for (std::size_t i : active) f += u[i];
  return f;
}

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of F(a) = E_{delta,S} f(a, delta, S). `draw_activity`
/// replaces the Bernoulli activity sampler when provided.
template <ObjectiveModel M, class ActivitySampler>
McEstimate mc_expected_F(const M& model, const std::vector<double>& a, std::size_t n_samples,
                         RngStream& rng, ActivitySampler&& draw_activity) {
  if (n_samples == 0) throw std::invalid_argument("mc_expected_F needs n_samples >= 1");
  auto env = model.make_env();
  std::vector<double> u(model.n_nodes(), 0.0);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const Activity delta = draw_activity(rng);
    const auto active = active_indices(delta);
    model.resample_env(env, active, rng);
    model.utilities(a, active, env, u);
    double f = 0.0;
    for (std::size_t i : active) f += u[i];
    const double d = f - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (f - mean);
  }
  McEstimate out;
  out.estimate = mean;
  if (n_samples > 1) {
    out.std_error = std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples));
  }
  return out;
}

template <ObjectiveModel M>
McEstimate mc_expected_F(const M& model, const std::vector<double>& a, const NetworkConfig& cfg,
                         std::size_t n_samples, RngStream& rng) {
  return mc_expected_F(model, a, n_samples, rng,
                       [&cfg](RngStream& r) { return sample_activity(cfg, r); });
}

/// Largest observed |u_i(a) - u_i(a')| / |(a - a') o delta| over random pairs
/// inside the box. An empirical stand-in for L when no closed form exists.
template <ObjectiveModel M>
double estimate_lipschitz(const M& model, const ActionBounds& bounds, const NetworkConfig& cfg,
                          std::size_t n_pairs, RngStream& rng) {
  const std::size_t n = model.n_nodes();
  auto env = model.make_env();
  std::vector<double> a(n), b(n), ua(n, 0.0), ub(n, 0.0);
  double best = 0.0;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    Activity delta = sample_activity(cfg, rng);
    auto active = active_indices(delta);
    if (active.empty()) continue;
    model.resample_env(env, active, rng);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(bounds.a_min(i), bounds.a_max(i));
      b[i] = rng.uniform(bounds.a_min(i), bounds.a_max(i));
    }
    double dist2 = 0.0;
    for (std::size_t i : active) dist2 += (a[i] - b[i]) * (a[i] - b[i]);
    if (dist2 == 0.0) continue;
    model.utilities(a, active, env, ua);
    model.utilities(b, active, env, ub);
    for (std::size_t i : active) best = std::max(best, std::abs(ua[i] - ub[i]) / std::sqrt(dist2));
  }
  return best;
}

}  // namespace dosps
