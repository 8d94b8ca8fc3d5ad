#pragma once

// Assembly of the `bounds` report from an experiment config.

#include <optional>
#include <string>
#include <vector>

#include "dosps/analysis.hpp"
#include "dosps/harness/config.hpp"
#include "dosps/harness/runner.hpp"

namespace dosps {

struct BoundsReport {
  std::optional<ModelConstants> constants;
  std::optional<RateBoundParams> params;
  std::vector<EnvelopePoint> envelope;
  std::vector<BiasDiagnostics> bias;
  std::string note;
};

/// Model constants for the rate bounds. Only the quadratic model has a known
/// strong-concavity constant; the power model yields nullopt.
inline std::optional<ModelConstants> model_constants(const ExperimentConfig& c) {
  if (c.model != ModelKind::quadratic) return std::nullopt;
  const QuadraticModel qm(c.quadratic.targets, c.quadratic.gain_lo, c.quadratic.gain_hi);
  ModelConstants mc;
  mc.alpha_F = qm.alpha_F(c.network.q_activity);
  mc.alpha_G = qm.alpha_G();
  mc.L = qm.effective_L(c.bounds);
  mc.sigma_eta = c.sigma_eta;
  mc.sigma_a_sq = c.bounds.sigma_a_sq();
  mc.K0 = compute_K0(c.schedule, c.pert, c.bounds, c.quadratic.targets);
  mc.D_K0 = worst_case_divergence(c.bounds, c.quadratic.targets);
  return mc;
}

inline BoundsReport bounds_report(const ExperimentConfig& c, std::uint64_t k_max) {
  if (k_max < 2) throw ConfigError("kmax must be at least 2");
  BoundsReport r;
  const auto grid = make_k_grid(1, k_max, 2000, 100);
  const double alpha_G = c.model == ModelKind::quadratic
                             ? QuadraticModel(c.quadratic.targets, c.quadratic.gain_lo, c.quadratic.gain_hi).alpha_G()
                             : 1.0;
  r.bias = bias_diagnostics(c.schedule, c.network, c.pert, alpha_G, grid);
  r.constants = model_constants(c);
  if (r.constants && k_max > r.constants->K0) {
    r.params = rate_params(c.schedule, c.network, *r.constants, c.pert, k_max);
    r.envelope = rate_envelope(*r.params, grid);
    if (!r.params->applicable()) r.note = "epsilon checks failed: no envelope is valid for this schedule";
    return r;
  }
  r.note = r.constants ? "kmax does not exceed K0" : "no strong-concavity constant is known for this model";
  r.envelope.reserve(grid.size());
  for (std::uint64_t k : grid) {
    const auto sq = rate_sequences(c.schedule, c.network, k);
    EnvelopePoint e;
    e.k = k;
    e.theta = sq.theta;
    e.upsilon = sq.upsilon;
    e.psi = sq.psi;
    e.status = "inapplicable";
    r.envelope.push_back(e);
  }
  return r;
}

}  // namespace dosps
