#pragma once

// Single-shot estimate of the global utility at one active node.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dosps/core.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"

namespace dosps {

struct UtilityObservation {
  std::size_t node = 0;
  double value = 0.0;
};

/// f~_i = u~_i + (1/q_r) * sum of received u~_j.
inline double estimate_global_utility(const UtilityObservation& own,
                                      const std::vector<UtilityObservation>& received, double q_r) {
  if (!(q_r > 0.0 && q_r <= 1.0)) throw std::invalid_argument("q_r must lie in (0, 1]");
  double sum = 0.0;
  std::vector<std::size_t> seen;
  seen.reserve(received.size());
  for (const auto& obs : received) {
    if (obs.node == own.node) throw std::invalid_argument("own observation listed as received");
    if (std::find(seen.begin(), seen.end(), obs.node) != seen.end()) {
      throw std::invalid_argument("duplicate sender in received observations");
    }
    seen.push_back(obs.node);
    sum += obs.value;
  }
  return own.value + sum / q_r;
}

struct BiasEstimate {
  double bias = 0.0;
  double std_error = 0.0;
};

/// Mean of f~ at `ref_node` minus f over fresh reception and noise draws,
/// holding actions, activity and environment fixed.
template <ObjectiveModel M>
BiasEstimate mc_check_unbiasedness(const M& model, const std::vector<double>& a,
                                   const Activity& delta, const typename M::Env& env,
                                   std::size_t ref_node, double q_r, double sigma_eta,
                                   std::size_t n_trials, RngStream& rng,
                                   NoiseKind noise = NoiseKind::gaussian) {
  const auto active = active_indices(delta);
  if (active.empty() || !delta.at(ref_node)) {
    throw std::invalid_argument("reference node must be active");
  }
  if (n_trials == 0) throw std::invalid_argument("n_trials must be >= 1");
  std::vector<double> u(model.n_nodes(), 0.0);
  model.utilities(a, active, env, u);
  double f = 0.0;
  for (std::size_t i : active) f += u[i];

  std::vector<UtilityObservation> received;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < n_trials; ++t) {
    received.clear();
    const double own = u[ref_node] + sample_noise(sigma_eta, noise, rng);
    for (std::size_t j : active) {
      if (j == ref_node) continue;
      const double obs = u[j] + sample_noise(sigma_eta, noise, rng);
      if (rng.bernoulli(q_r)) received.push_back({j, obs});
    }
    const double ft = estimate_global_utility({ref_node, own}, received, q_r);
    const double d = ft - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d * (ft - mean);
  }
  BiasEstimate out;
  out.bias = mean - f;
  if (n_trials > 1) {
    out.std_error = std::sqrt(m2 / static_cast<double>(n_trials - 1) / static_cast<double>(n_trials));
  }
  return out;
}

}  // namespace dosps
