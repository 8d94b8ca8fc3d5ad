#pragma once

// Per-node DOSP-S state machine and the exact-gradient reference method.
// Both advance one slot at a time; the caller owns activity and RNG streams.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "dosps/core.hpp"
#include "dosps/estimator.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"

namespace dosps {

enum class IndexMode { sampled, counted };

struct NodeState {
  double action = 0.0;  // a_{i,k}
  double a_min = 0.0;
  double a_max = 0.0;
  IndexMode index_mode = IndexMode::sampled;
  std::uint64_t activation_count = 0;  // activations before the current slot
  std::uint64_t ell = 0;               // l_{i,k}; 0 when inactive in the current slot
};

struct SlotUpdateRecord {
  std::uint64_t k = 0;
  std::size_t node = 0;
  std::uint64_t ell = 0;
  double action = 0.0;
  double performed_action = 0.0;
  double f_tilde = 0.0;
  double step_beta = 0.0;
  double step_gamma = 0.0;
  double perturbation = 0.0;
};

/// Shared algorithm parameters for one experiment.
struct DospParams {
  NetworkConfig net;
  StepSizeSchedule schedule{1.0, 1.0, 0.75, 0.25};
  PerturbationSpec pert = PerturbationSpec::rademacher();
  double sigma_eta = 0.0;
  NoiseKind noise = NoiseKind::gaussian;
  IndexMode index_mode = IndexMode::sampled;
};

struct NodeStreams {
  RngStream perturbation;
  RngStream index;
  RngStream reception;
  RngStream noise;
};

/// All streams used by one replication. Perturbation streams can be seeded
/// separately so exploration can be varied with everything else frozen.
struct ReplicationStreams {
  RngStream activity;
  RngStream environment;
  RngStream init;
  std::vector<NodeStreams> nodes;

  static ReplicationStreams make(std::uint64_t seed, std::uint64_t replication, std::size_t n,
                                 std::optional<std::uint64_t> perturbation_seed = std::nullopt) {
    ReplicationStreams rs;
    rs.activity = RngStream(seed, stream_id(replication, StreamRole::activity));
    rs.environment = RngStream(seed, stream_id(replication, StreamRole::environment));
    rs.init = RngStream(seed, stream_id(replication, StreamRole::init));
    const std::uint64_t pseed = perturbation_seed.value_or(seed);
    rs.nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      rs.nodes.push_back({RngStream(pseed, stream_id(replication, StreamRole::perturbation, i)),
                          RngStream(seed, stream_id(replication, StreamRole::index, i)),
                          RngStream(seed, stream_id(replication, StreamRole::reception, i)),
                          RngStream(seed, stream_id(replication, StreamRole::noise, i))});
    }
    return rs;
  }
};

/// Process-wide count of performed actions found outside [a_min, a_max].
inline std::atomic<std::uint64_t>& feasibility_violations() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

/// Process-wide count of updates clipped by the projection (the boundary
/// case of the update). Diagnostic only.
inline std::atomic<std::uint64_t>& projection_events() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

/// Index l_{i,k} for slot k: 0 when inactive, otherwise 1 + l~ where l~ is a
/// fresh Binomial(k-1, q_a) draw (sampled) or the past activation count.
inline std::uint64_t sample_step_index(std::uint64_t k, double q_a, bool active, IndexMode mode,
                                       RngStream& rng, std::uint64_t activation_count = 0) {
  if (k == 0) throw std::invalid_argument("slot index k must be >= 1");
  if (!active) return 0;
  if (mode == IndexMode::counted) return activation_count + 1;
  return rng.binomial(k - 1, q_a) + 1;
}

struct Interval {
  double lo;
  double hi;
};

/// [a_min + alpha*g, a_max - alpha*g], tightened by rounding so that any
/// point x inside satisfies x - alpha*g >= a_min and x + alpha*g <= a_max.
inline Interval shrunk_interval(double a_min, double a_max, double alpha_phi, double gamma_tilde) {
  const double r = alpha_phi * gamma_tilde;
  double lo = a_min + r;
  double hi = a_max - r;
  if (r > 0.0) {
    while (lo - r < a_min) lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
    while (hi + r > a_max) hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
  }
  if (!(lo <= hi)) {
    throw ConfigError("shrunk action interval is empty: gamma step too large for the bounds");
  }
  return {lo, hi};
}

inline double project(double a_tilde, double a_min, double a_max, double alpha_phi,
                      double gamma_tilde) {
  if (!(gamma_tilde >= 0.0)) throw std::invalid_argument("gamma_tilde must be nonnegative");
  const Interval iv = shrunk_interval(a_min, a_max, alpha_phi, gamma_tilde);
  if (a_tilde < iv.lo || a_tilde > iv.hi) projection_events().fetch_add(1, std::memory_order_relaxed);
  return std::min(std::max(a_tilde, iv.lo), iv.hi);
}

/// Rejects configurations whose largest exploration radius alpha*gamma0
/// does not fit inside every node's interval.
inline void check_projection_feasible(const ActionBounds& bounds, const PerturbationSpec& pert,
                                      const StepSizeSchedule& schedule) {
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(pert.alpha_phi() * schedule.gamma0() < 0.5 * (bounds.a_max(i) - bounds.a_min(i)))) {
      throw ConfigError("alpha_phi * gamma0 must be below half the width of node " +
                        std::to_string(i) + "'s interval");
    }
  }
}

/// Draws a_{i,1} uniformly on the interval shrunk by the slot-1 exploration radius.
inline std::vector<NodeState> initialize_states(const ActionBounds& bounds, const Activity& delta1,
                                                const DospParams& p, RngStream& rng) {
  check_projection_feasible(bounds, p.pert, p.schedule);
  std::vector<NodeState> states(bounds.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& s = states[i];
    s.a_min = bounds.a_min(i);
    s.a_max = bounds.a_max(i);
    s.index_mode = p.index_mode;
    s.ell = delta1[i] ? 1 : 0;
    const double g = delta1[i] ? p.schedule.gamma(1) : 0.0;
    const Interval iv = shrunk_interval(s.a_min, s.a_max, p.pert.alpha_phi(), g);
    s.action = std::min(rng.uniform(iv.lo, iv.hi), iv.hi);
  }
  return states;
}

namespace detail {

inline void record_violation(std::uint64_t k, std::size_t i, double a_hat, const NodeState& s) {
  feasibility_violations().fetch_add(1);
  std::ostringstream msg;
  msg << "performed action " << a_hat << " of node " << i << " at slot " << k
      << " left [" << s.a_min << ", " << s.a_max << "]";
  throw NumericError(msg.str());
}

/// Draws the slot-(k+1) index for every node and projects the tentative
/// actions with the corresponding exploration radius.
inline void advance_indices(std::vector<NodeState>& states, const std::vector<double>& a_tilde,
                            std::uint64_t k, const Activity& delta, const Activity& delta_next,
                            const DospParams& p, ReplicationStreams& rs, double alpha_phi) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& s = states[i];
    if (delta[i]) ++s.activation_count;
    s.ell = sample_step_index(k + 1, p.net.q_activity, delta_next[i] != 0, s.index_mode,
                              rs.nodes[i].index, s.activation_count);
    const double g_next = s.ell ? p.schedule.gamma(s.ell) : 0.0;
    s.action = project(a_tilde[i], s.a_min, s.a_max, alpha_phi, g_next);
  }
}

}  // namespace detail

/// One slot of DOSP-S for every node. `delta` is the activity of slot k and
/// `delta_next` the pre-drawn activity of slot k+1, which fixes the radius
/// used by the projection. Appends one record per active node when
/// `records` is non-null.
template <ObjectiveModel M>
void dosp_slot(std::vector<NodeState>& states, std::uint64_t k, const Activity& delta,
               const Activity& delta_next, const M& model, typename M::Env& env,
               const DospParams& p, ReplicationStreams& rs,
               std::vector<SlotUpdateRecord>* records = nullptr) {
  if (k == 0) throw std::invalid_argument("slot index k must be >= 1");
  const std::size_t n = states.size();
  const auto active = active_indices(delta);

  std::vector<double> a_hat(n), phi(n, 0.0), beta_t(n, 0.0), gamma_t(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a_hat[i] = states[i].action;
  for (std::size_t i : active) {
    const auto& s = states[i];
    beta_t[i] = p.schedule.beta(s.ell);
    gamma_t[i] = p.schedule.gamma(s.ell);
    phi[i] = sample_perturbation(p.pert, rs.nodes[i].perturbation);
    a_hat[i] = s.action + gamma_t[i] * phi[i];
    if (!(a_hat[i] >= s.a_min && a_hat[i] <= s.a_max)) detail::record_violation(k, i, a_hat[i], s);
  }

  model.resample_env(env, active, rs.environment);
  std::vector<double> u(n, 0.0);
  model.utilities(a_hat, active, env, u);
  std::vector<double> observed(n, 0.0);
  for (std::size_t i : active) {
    observed[i] = u[i] + sample_noise(p.sigma_eta, p.noise, rs.nodes[i].noise);
  }

  std::vector<double> a_tilde(n);
  std::vector<UtilityObservation> received;
  for (std::size_t i = 0; i < n; ++i) a_tilde[i] = states[i].action;
  for (std::size_t i : active) {
    received.clear();
    for (std::size_t j : sample_reception(active, i, p.net.q_reception, rs.nodes[i].reception)) {
      received.push_back({j, observed[j]});
    }
    const double f_tilde = estimate_global_utility({i, observed[i]}, received, p.net.q_reception);
    if (!std::isfinite(f_tilde)) {
      std::ostringstream msg;
      msg << "non-finite utility estimate at slot " << k << ", node " << i;
      throw NumericError(msg.str());
    }
    a_tilde[i] = states[i].action + beta_t[i] * phi[i] * f_tilde;
    if (records) {
      records->push_back({k, i, states[i].ell, states[i].action, a_hat[i], f_tilde, beta_t[i],
                          gamma_t[i], phi[i]});
    }
  }

  detail::advance_indices(states, a_tilde, k, delta, delta_next, p, rs, p.pert.alpha_phi());
}

/// One slot of the exact-gradient method: active nodes move along the
/// per-slot gradient of f with step gain * beta_{l_{i,k}}.
template <ObjectiveModel M>
void ideal_gradient_slot(std::vector<NodeState>& states, std::uint64_t k, const Activity& delta,
                         const Activity& delta_next, const M& model, typename M::Env& env,
                         const DospParams& p, ReplicationStreams& rs, double gain = 1.0) {
  if (k == 0) throw std::invalid_argument("slot index k must be >= 1");
  const std::size_t n = states.size();
  const auto active = active_indices(delta);
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = states[i].action;
  model.resample_env(env, active, rs.environment);
  const auto g = model.global_gradient(a, delta, env);
  std::vector<double> a_tilde = a;
  for (std::size_t i : active) {
    a_tilde[i] = a[i] + gain * p.schedule.beta(states[i].ell) * g[i];
    if (!std::isfinite(a_tilde[i])) {
      std::ostringstream msg;
      msg << "non-finite gradient step at slot " << k << ", node " << i;
      throw NumericError(msg.str());
    }
  }
  // No exploration, so the plain interval is the feasible set.
  detail::advance_indices(states, a_tilde, k, delta, delta_next, p, rs, 0.0);
}

}  // namespace dosps
