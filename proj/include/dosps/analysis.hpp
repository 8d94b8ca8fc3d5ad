#pragma once

// Averaged step sizes, bias bounds, convergence-rate envelopes and numeric
// checks of the step-size identities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dosps/core.hpp"
#include "dosps/estimator.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"
#include "dosps/optimizer.hpp"

namespace dosps {

inline constexpr std::uint64_t kMaxAveragedSlot = 1'000'000;

/// Weights of the step index l = 1 + Binomial(k-1, q) scaled by q, i.e.
/// w[j] = q * P(l = first + j). Entries below e^-50 of the mode are dropped.
struct BinomialWeights {
  std::uint64_t first = 1;
  std::vector<double> w;
};

inline BinomialWeights binomial_weights(std::uint64_t k, double q) {
  if (k == 0) throw std::invalid_argument("binomial average needs k >= 1");
  if (k > kMaxAveragedSlot) throw std::invalid_argument("binomial average limited to k <= 1e6");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("q must lie in (0, 1]");
  BinomialWeights out;
  if (q == 1.0) {
    out.first = k;
    out.w = {1.0};
    return out;
  }
  const std::uint64_t m = k - 1;
  const auto mode = std::min<std::uint64_t>(
      m, static_cast<std::uint64_t>(std::floor(static_cast<double>(m + 1) * q)));
  const double log_odds = std::log(q) - std::log1p(-q);
  constexpr double kCut = -50.0;

  // Log-weights relative to the mode, accumulated outward from it.
  std::vector<double> up;
  double lw = 0.0;
  for (std::uint64_t j = mode; j < m;) {
    lw += std::log(static_cast<double>(m - j)) - std::log(static_cast<double>(j + 1)) + log_odds;
    if (lw < kCut) break;
    up.push_back(lw);
    ++j;
  }
  std::vector<double> down;
  lw = 0.0;
  for (std::uint64_t j = mode; j > 0;) {
    lw += std::log(static_cast<double>(j)) - std::log(static_cast<double>(m - j + 1)) - log_odds;
    if (lw < kCut) break;
    down.push_back(lw);
    --j;
  }
  out.first = mode - down.size() + 1;
  out.w.reserve(down.size() + 1 + up.size());
  for (auto it = down.rbegin(); it != down.rend(); ++it) out.w.push_back(std::exp(*it));
  out.w.push_back(1.0);
  for (double v : up) out.w.push_back(std::exp(v));
  double total = 0.0;
  for (double v : out.w) total += v;
  for (double& v : out.w) v *= q / total;
  return out;
}

/// sum_{l=1}^{k} x_l q^l (1-q)^{k-l} C(k-1, l-1).
template <class X>
double binomial_average(X&& x, std::uint64_t k, double q) {
  const auto bw = binomial_weights(k, q);
  double s = 0.0;
  for (std::size_t j = 0; j < bw.w.size(); ++j) s += bw.w[j] * x(bw.first + j);
  return s;
}

struct AveragedSteps {
  std::uint64_t k = 0;
  double bg = 0.0;   // E[beta~ gamma~]
  double b = 0.0;    // E[beta~]
  double g = 0.0;    // E[gamma~]
  double b2 = 0.0;   // E[beta~^2]
  double g2 = 0.0;   // E[gamma~^2]
  double bg2 = 0.0;  // E[beta~ gamma~^2]
};

inline AveragedSteps averaged_steps(const StepSizeSchedule& s, std::uint64_t k, double q) {
  const auto bw = binomial_weights(k, q);
  AveragedSteps a;
  a.k = k;
  for (std::size_t j = 0; j < bw.w.size(); ++j) {
    const std::uint64_t ell = bw.first + j;
    const double w = bw.w[j];
    const double be = s.beta(ell);
    const double ga = s.gamma(ell);
    a.bg += w * be * ga;
    a.b += w * be;
    a.g += w * ga;
    a.b2 += w * be * be;
    a.g2 += w * ga * ga;
    a.bg2 += w * be * ga * ga;
  }
  return a;
}

// ---------------------------------------------------------------------------
// Partial-sum identity and Chernoff-type bound.

struct PartialSumReport {
  std::uint64_t K = 0;
  double sum_x = 0.0;
  double sum_xbar = 0.0;
  double gap = 0.0;           // sum_x - sum_xbar
  double relative_gap = 0.0;  // gap / sum_x, 0 when sum_x == 0
};

template <class X>
PartialSumReport verify_partial_sums(X&& x, double q, std::uint64_t K) {
  if (K == 0) throw std::invalid_argument("horizon K must be >= 1");
  PartialSumReport r;
  r.K = K;
  for (std::uint64_t k = 1; k <= K; ++k) {
    r.sum_x += x(k);
    r.sum_xbar += binomial_average(x, k, q);
  }
  r.gap = r.sum_x - r.sum_xbar;
  r.relative_gap = r.sum_x != 0.0 ? r.gap / r.sum_x : 0.0;
  return r;
}

/// q (exp(-xi^2 q (k-1) / 2) z_1 + z_{floor((1-xi) q (k-1)) + 2}).
template <class Z>
double chernoff_step_bound(Z&& z, std::uint64_t k, double q, double xi) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("xi must lie in (0, 1)");
  if (k == 0) throw std::invalid_argument("k must be >= 1");
  const double km1 = static_cast<double>(k - 1);
  const double p = std::exp(-0.5 * xi * xi * q * km1);
  const auto kxi = static_cast<std::uint64_t>(std::floor((1.0 - xi) * q * km1)) + 2;
  return q * (p * z(std::uint64_t{1}) + z(kxi));
}

// ---------------------------------------------------------------------------
// Bias diagnostics.

struct BiasDiagnostics {
  std::uint64_t k = 0;
  double w_bound = 0.0;
  double omega = 0.0;
  double b_bound = 0.0;
};

/// Upper bound on w_{i,k} from the exact expansion of its numerator with
/// E[gamma~]^2 <= E[gamma~^2].
inline double w_bound(const AveragedSteps& a, const NetworkConfig& net) {
  const double nm1 = static_cast<double>(net.n_nodes) - 1.0;
  return net.q_activity * (a.bg2 + 2.0 * nm1 * a.bg * a.g + nm1 * nm1 * a.b * a.g2) / a.bg;
}

/// Closed-form envelope Omega_k >= w_bound built from the Chernoff bound and
/// the Jensen lower bound on E[beta~ gamma~].
inline double omega_envelope(const StepSizeSchedule& s, const NetworkConfig& net, std::uint64_t k,
                             double xi = 0.5) {
  const double q = net.q_activity;
  const double lam = net.lambda();
  const double km1 = static_cast<double>(k - 1);
  const double p = std::exp(-0.5 * xi * xi * q * km1);
  const auto kxi = static_cast<std::uint64_t>(std::floor((1.0 - xi) * q * km1)) + 2;
  const double kp = 1.0 + q * km1;
  const double bg_kp = s.beta_at(kp) * s.gamma_at(kp);
  const double b1g1sq = s.beta(1) * s.gamma(1) * s.gamma(1);
  const double gx = s.gamma(kxi);
  return (3.0 * lam * lam + q) * b1g1sq * p / bg_kp +
         (lam * lam + q) * s.beta(kxi) * gx * gx / bg_kp + 2.0 * lam * q * (s.gamma(1) * p + gx);
}

inline std::vector<BiasDiagnostics> bias_diagnostics(const StepSizeSchedule& s,
                                                     const NetworkConfig& net,
                                                     const PerturbationSpec& pert, double alpha_G,
                                                     const std::vector<std::uint64_t>& k_grid,
                                                     double xi = 0.5) {
  if (!(alpha_G > 0.0)) throw std::invalid_argument("alpha_G must be positive");
  std::vector<BiasDiagnostics> out;
  out.reserve(k_grid.size());
  const double scale = alpha_G * std::pow(pert.alpha_phi(), 3) / (2.0 * pert.sigma_phi_sq());
  for (std::uint64_t k : k_grid) {
    BiasDiagnostics d;
    d.k = k;
    d.w_bound = w_bound(averaged_steps(s, k, net.q_activity), net);
    d.omega = omega_envelope(s, net, k, xi);
    d.b_bound = scale * d.w_bound;
    out.push_back(d);
  }
  return out;
}

struct BiasMcEstimate {
  double bias = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of b_{i,k} at frozen actions `a`. Each inner sample
/// draws activity, step indices, perturbations, environment, noise and
/// reception; the exact per-sample gradient of f serves as an unbiased
/// estimate of dF/da_i under the same draw.
template <ObjectiveModel M>
BiasMcEstimate mc_bias_estimate(const M& model, const std::vector<double>& a, std::size_t node,
                                std::uint64_t k, const DospParams& p, std::size_t n_inner,
                                RngStream& rng) {
  if (n_inner < 2) throw std::invalid_argument("need at least two inner samples");
  const std::size_t n = model.n_nodes();
  const auto avg = averaged_steps(p.schedule, k, p.net.q_activity);
  const double scale = p.net.q_activity / (p.pert.sigma_phi_sq() * avg.bg);
  auto env = model.make_env();
  std::vector<double> a_hat(n), phi(n), u(n, 0.0), observed(n, 0.0);
  std::vector<UtilityObservation> received;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < n_inner; ++t) {
    const Activity delta = sample_activity(p.net, rng);
    const auto active = active_indices(delta);
    double beta_i = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a_hat[i] = a[i];
      phi[i] = 0.0;
      if (!delta[i]) continue;
      const std::uint64_t ell = sample_step_index(k, p.net.q_activity, true, IndexMode::sampled, rng);
      phi[i] = sample_perturbation(p.pert, rng);
      a_hat[i] = a[i] + p.schedule.gamma(ell) * phi[i];
      if (i == node) beta_i = p.schedule.beta(ell);
    }
    model.resample_env(env, active, rng);
    double sample = 0.0;
    if (delta[node]) {
      model.utilities(a_hat, active, env, u);
      for (std::size_t i : active) observed[i] = u[i] + sample_noise(p.sigma_eta, p.noise, rng);
      received.clear();
      for (std::size_t j : active) {
        if (j != node && rng.bernoulli(p.net.q_reception)) received.push_back({j, observed[j]});
      }
      const double f_tilde =
          estimate_global_utility({node, observed[node]}, received, p.net.q_reception);
      sample = scale * beta_i * phi[node] * f_tilde;
    }
    sample -= model.global_gradient(a, delta, env)[node];
    const double d = sample - mean;
    mean += d / static_cast<double>(t + 1);
    m2 += d * (sample - mean);
  }
  return {mean, std::sqrt(m2 / static_cast<double>(n_inner - 1) / static_cast<double>(n_inner))};
}

// ---------------------------------------------------------------------------
// Rate-bound parameters.

struct ModelConstants {
  double alpha_F = 0.0;
  double alpha_G = 0.0;
  double L = 0.0;
  double sigma_eta = 0.0;
  double sigma_a_sq = 0.0;
  std::uint64_t K0 = 1;
  double D_K0 = 0.0;  // upper bound on D at slot K0
  double C_tilde = 1.0;
  bool L_is_estimate = false;
};

/// theta_k, upsilon_k and psi_k at one slot.
struct RateSequences {
  std::uint64_t k = 0;
  double theta = 0.0;
  double upsilon = 0.0;
  double psi = 0.0;
};

inline RateSequences rate_sequences(const AveragedSteps& a, const NetworkConfig& net) {
  const double n = static_cast<double>(net.n_nodes);
  RateSequences r;
  r.k = a.k;
  r.theta = a.bg / net.q_activity;
  r.upsilon = a.b2;
  r.psi = 2.0 * n * a.bg * a.g + a.bg2 + (n - 1.0) * (n - 1.0) * a.b * a.g2;
  return r;
}

inline RateSequences rate_sequences(const StepSizeSchedule& s, const NetworkConfig& net,
                                    std::uint64_t k) {
  return rate_sequences(averaged_steps(s, k, net.q_activity), net);
}

/// Every integer up to `dense_until`, then about `per_decade` log-spaced
/// points up to k_max (always included).
inline std::vector<std::uint64_t> make_k_grid(std::uint64_t k_min, std::uint64_t k_max,
                                              std::uint64_t dense_until = 2000,
                                              std::size_t per_decade = 100) {
  std::vector<std::uint64_t> grid;
  if (k_min == 0) k_min = 1;
  for (std::uint64_t k = k_min; k <= std::min(k_max, dense_until); ++k) grid.push_back(k);
  const double step = std::pow(10.0, 1.0 / static_cast<double>(per_decade));
  double x = static_cast<double>(std::max(k_min, dense_until + 1));
  while (x <= static_cast<double>(k_max)) {
    const auto k = static_cast<std::uint64_t>(std::llround(x));
    if (grid.empty() || k > grid.back()) grid.push_back(k);
    x *= step;
  }
  if (grid.empty() || grid.back() != k_max) {
    if (k_max >= k_min) grid.push_back(k_max);
  }
  return grid;
}

struct RateBoundParams {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double q_a = 0.0;
  double q_r = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  std::uint64_t K0 = 1;
  std::uint64_t K1 = 1;
  std::uint64_t K2 = 0;  // 0 when theta_k < 1/A never held up to k_max
  std::uint64_t k_max = 0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double eps3 = 0.0;
  double eps4 = 0.0;
  bool eps2_tail_finite = true;
  bool eps4_tail_finite = true;
  double vartheta = 0.0;
  double varrho = 0.0;
  double Xi = 0.0;
  double D_K0 = 0.0;
  bool L_is_estimate = false;
  StepSizeSchedule schedule{1.0, 1.0, 0.75, 0.25};
  NetworkConfig net;

  bool envelope_a_valid() const {
    return eps1 < A && eps2_tail_finite && std::isfinite(eps2) && std::isfinite(vartheta);
  }
  bool envelope_b_valid() const {
    return eps3 < A && eps4_tail_finite && std::isfinite(eps4) && std::isfinite(varrho);
  }
  bool applicable() const { return envelope_a_valid() || envelope_b_valid(); }
  double th4_exponent() const { return std::min(2.0 * c2, c1 - c2); }
};

/// C = C~ + (1 + lambda/q_r) sigma_phi^2 sigma_eta^2
///       + (1 + (2/q_r + 5) lambda + (1/q_r + 5) lambda^2 + lambda^3) L^2 sigma_phi^2 sigma_a^2.
inline double rate_constant_C(const NetworkConfig& net, const PerturbationSpec& pert,
                              const ModelConstants& mc) {
  const double lam = net.lambda();
  const double iq = 1.0 / net.q_reception;
  const double s2 = pert.sigma_phi_sq();
  const double poly = 1.0 + (2.0 * iq + 5.0) * lam + (iq + 5.0) * lam * lam + lam * lam * lam;
  return mc.C_tilde + (1.0 + iq * lam) * s2 * mc.sigma_eta * mc.sigma_eta +
         poly * mc.L * mc.L * s2 * mc.sigma_a_sq;
}

inline std::uint64_t compute_K0(const StepSizeSchedule& s, const PerturbationSpec& pert,
                                const ActionBounds& bounds, const std::vector<double>& a_star) {
  if (a_star.size() != bounds.size()) throw std::invalid_argument("a_star size mismatch");
  double thr = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!(a_star[i] > bounds.a_min(i) && a_star[i] < bounds.a_max(i))) {
      throw std::invalid_argument("a_star must be strictly interior");
    }
    thr = std::max({thr, std::abs(bounds.a_max(i) - a_star[i]), std::abs(bounds.a_min(i) - a_star[i])});
  }
  const double guess = std::pow(pert.alpha_phi() * s.gamma0() / thr, 1.0 / s.c2());
  auto ell = static_cast<std::uint64_t>(std::max(1.0, std::ceil(guess)));
  while (ell > 1 && pert.alpha_phi() * s.gamma(ell - 1) <= thr) --ell;
  while (pert.alpha_phi() * s.gamma(ell) > thr) ++ell;
  return ell;
}

/// N^-1 sum_i max(|a_max - a*_i|, |a_min - a*_i|)^2, a sure bound on d_k.
inline double worst_case_divergence(const ActionBounds& bounds, const std::vector<double>& a_star) {
  double s = 0.0;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const double r = std::max(std::abs(bounds.a_max(i) - a_star[i]), std::abs(bounds.a_min(i) - a_star[i]));
    s += r * r;
  }
  return s / static_cast<double>(bounds.size());
}

/// First k >= max(K0, 2) where the exponential bound on the expected
/// projection excess drops below C~ * E[beta~^2]_{k-1}.
inline std::uint64_t compute_K1(const StepSizeSchedule& s, const NetworkConfig& net,
                                const PerturbationSpec& pert, std::uint64_t K0, double C_tilde,
                                std::uint64_t k_limit = kMaxAveragedSlot) {
  const double q = net.q_activity;
  const double lead = pert.alpha_phi() * pert.alpha_phi() * s.gamma0() * s.gamma0() * q;
  for (std::uint64_t k = std::max<std::uint64_t>(K0, 2); k <= k_limit; ++k) {
    const double lhs = lead * std::exp(-0.5 * q * static_cast<double>(k - 1) + static_cast<double>(K0) - 1.0);
    if (lhs <= C_tilde * averaged_steps(s, k - 1, q).b2) return k;
  }
  throw std::runtime_error("K1 not found below the slot limit");
}

namespace detail {
inline bool nearly_equal(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x)); }
}  // namespace detail

/// Assembles every rate-bound constant. Sequence maxima are taken over a
/// grid of k in [K0, k_max]; the tails of eps2 and eps4 are classified from
/// the exponents (finite iff c1 >= 3 c2, resp. c1 <= 3 c2).
inline RateBoundParams rate_params(const StepSizeSchedule& s, const NetworkConfig& net,
                                   const ModelConstants& mc, const PerturbationSpec& pert,
                                   std::uint64_t k_max) {
  for (double v : {mc.alpha_F, mc.alpha_G, mc.sigma_a_sq}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("model constants must be positive");
  }
  if (!(mc.L >= 0.0) || !(mc.sigma_eta >= 0.0)) throw std::invalid_argument("L and sigma_eta must be >= 0");
  if (k_max < mc.K0 + 1) throw std::invalid_argument("k_max must exceed K0");
  net.validate();

  RateBoundParams r;
  r.schedule = s;
  r.net = net;
  r.q_a = net.q_activity;
  r.q_r = net.q_reception;
  r.c1 = s.c1();
  r.c2 = s.c2();
  r.k_max = k_max;
  r.K0 = mc.K0;
  r.D_K0 = mc.D_K0;
  r.L_is_estimate = mc.L_is_estimate;
  r.A = 2.0 * pert.sigma_phi_sq() * mc.alpha_F;
  r.B = mc.alpha_G * std::pow(pert.alpha_phi(), 3);
  r.C = rate_constant_C(net, pert, mc);
  r.K1 = compute_K1(s, net, pert, mc.K0, mc.C_tilde);

  r.eps1 = r.eps2 = r.eps3 = r.eps4 = -std::numeric_limits<double>::infinity();
  const auto grid = make_k_grid(mc.K0, k_max - 1);
  for (std::uint64_t k : grid) {
    const auto a = rate_sequences(s, net, k);
    const auto b = rate_sequences(s, net, k + 1);
    const double chi = 1.0 / a.theta - b.psi * b.psi * a.theta / (a.psi * a.psi * b.theta * b.theta);
    const double varpi = 1.0 / a.theta - b.upsilon / (a.upsilon * b.theta);
    r.eps1 = std::max(r.eps1, chi);
    r.eps2 = std::max(r.eps2, a.theta * a.upsilon / (a.psi * a.psi));
    r.eps3 = std::max(r.eps3, varpi);
    r.eps4 = std::max(r.eps4, a.psi * a.psi / (a.theta * a.upsilon));
  }
  const double three_c2 = 3.0 * r.c2;
  r.eps2_tail_finite = r.c1 > three_c2 || detail::nearly_equal(r.c1, three_c2);
  r.eps4_tail_finite = r.c1 < three_c2 || detail::nearly_equal(r.c1, three_c2);
  if (!r.eps2_tail_finite) r.eps2 = std::numeric_limits<double>::infinity();
  if (!r.eps4_tail_finite) r.eps4 = std::numeric_limits<double>::infinity();

  for (std::uint64_t k = std::max<std::uint64_t>(r.K1, 1); k <= k_max; ++k) {
    if (rate_sequences(s, net, k).theta < 1.0 / r.A) {
      r.K2 = k;
      break;
    }
  }

  const auto s0 = rate_sequences(s, net, r.K0);
  const double inf = std::numeric_limits<double>::infinity();
  r.vartheta = inf;
  r.varrho = inf;
  if (r.eps1 < r.A && std::isfinite(r.eps2)) {
    const double d = r.A - r.eps1;
    r.vartheta = std::max(s0.theta * std::sqrt(r.D_K0) / s0.psi,
                          (r.B + std::sqrt(r.B * r.B + 4.0 * r.C * r.eps2 * d)) / (2.0 * d));
  }
  if (r.eps3 < r.A && std::isfinite(r.eps4)) {
    const double d = r.A - r.eps3;
    r.varrho = std::max(std::sqrt(r.D_K0 * s0.theta / s0.upsilon),
                        (r.B * std::sqrt(r.eps4) + std::sqrt(r.B * r.B * r.eps4 + 4.0 * r.C * d)) / (2.0 * d));
  }

  // Xi: least-squares intercept of log(tighter envelope) against the
  // asymptotic power law, over k >= K2 on the grid.
  if (r.applicable() && r.K2 != 0) {
    const double p = r.th4_exponent();
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::uint64_t k : make_k_grid(r.K2, k_max)) {
      const auto sq = rate_sequences(s, net, k);
      double env = inf;
      if (r.envelope_a_valid()) env = std::min(env, r.vartheta * r.vartheta * sq.psi * sq.psi / (sq.theta * sq.theta));
      if (r.envelope_b_valid()) env = std::min(env, r.varrho * r.varrho * sq.upsilon / sq.theta);
      acc += std::log(env) + std::log(r.q_r) + p * std::log(r.q_a * static_cast<double>(k));
      ++cnt;
    }
    if (cnt > 0) r.Xi = std::exp(acc / static_cast<double>(cnt));
  }
  return r;
}

struct EnvelopePoint {
  std::uint64_t k = 0;
  double theta = 0.0;
  double upsilon = 0.0;
  double psi = 0.0;
  std::optional<double> th3_a;
  std::optional<double> th3_b;
  std::optional<double> th4;
  std::optional<double> best;  // min over the valid envelopes
  std::string status;           // ok | before_K0 | inapplicable
};

inline std::vector<EnvelopePoint> rate_envelope(const RateBoundParams& p,
                                                const std::vector<std::uint64_t>& k_grid) {
  std::vector<EnvelopePoint> out;
  out.reserve(k_grid.size());
  for (std::uint64_t k : k_grid) {
    const auto sq = rate_sequences(p.schedule, p.net, k);
    EnvelopePoint e;
    e.k = k;
    e.theta = sq.theta;
    e.upsilon = sq.upsilon;
    e.psi = sq.psi;
    if (!p.applicable()) {
      e.status = "inapplicable";
      out.push_back(e);
      continue;
    }
    if (p.envelope_a_valid()) e.th3_a = p.vartheta * p.vartheta * sq.psi * sq.psi / (sq.theta * sq.theta);
    if (p.envelope_b_valid()) e.th3_b = p.varrho * p.varrho * sq.upsilon / sq.theta;
    if (p.Xi > 0.0) {
      e.th4 = p.Xi / p.q_r * std::pow(p.q_a * static_cast<double>(k), -p.th4_exponent());
    }
    e.best = std::min(e.th3_a.value_or(std::numeric_limits<double>::infinity()),
                      e.th3_b.value_or(std::numeric_limits<double>::infinity()));
    e.status = k < p.K0 ? "before_K0" : "ok";
    out.push_back(e);
  }
  return out;
}

/// Worst-case iterate of D_{k+1} <= (1 - A theta_k) D_k + B psi_k sqrt(D_k) + C upsilon_k
/// from D_init at slot k_start. Each step takes the maximum of the right-hand
/// side over D in [0, D_k], so the result bounds every sequence that
/// satisfies the inequality and starts below D_init. Element j holds the
/// envelope at slot k_start + j.
inline std::vector<double> recurrence_envelope(const RateBoundParams& p, double D_init,
                                               std::uint64_t k_start, std::uint64_t k_end) {
  if (!(D_init >= 0.0)) throw std::invalid_argument("D_init must be nonnegative");
  if (k_start == 0 || k_end < k_start) throw std::invalid_argument("invalid slot range");
  std::vector<double> out;
  out.reserve(k_end - k_start + 1);
  double d = D_init;
  out.push_back(d);
  for (std::uint64_t k = k_start; k < k_end; ++k) {
    const auto sq = rate_sequences(p.schedule, p.net, k);
    const double c = 1.0 - p.A * sq.theta;
    const double b = p.B * sq.psi;
    double top = c * d + b * std::sqrt(d);
    if (c < 0.0 && b > 0.0) {
      // Concave in sqrt(D); interior maximum at sqrt(D) = b / (-2c).
      const double root = b / (-2.0 * c);
      if (root * root <= d) top = b * b / (-4.0 * c);
    }
    d = std::max(top, 0.0) + p.C * sq.upsilon;
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotic ratio bounds.

struct RatioCheck {
  std::string name;
  std::vector<double> value;
  std::vector<double> bound;
  std::optional<std::uint64_t> K_prime;  // first grid k from which value < bound holds to the end
};

struct AsymptoticReport {
  std::vector<std::uint64_t> k_grid;
  RatioCheck upsilon_over_theta;
  RatioCheck psi2_over_theta2;
  RatioCheck psi2_over_theta_upsilon;
  RatioCheck theta_upsilon_over_psi2;
  std::optional<std::uint64_t> K_prime;  // max over the four, if all hold
};

inline AsymptoticReport verify_asymptotic_bounds(const StepSizeSchedule& s,
                                                 const NetworkConfig& net, double xi,
                                                 double xi_prime,
                                                 const std::vector<std::uint64_t>& k_grid) {
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("xi must lie in (0, 1)");
  if (!(xi_prime > 0.0)) throw std::invalid_argument("xi_prime must be positive");
  const double q = net.q_activity;
  const double lam = net.lambda();
  const double c1 = s.c1();
  const double c2 = s.c2();
  const double b0 = s.beta0();
  const double g0 = s.gamma0();
  const double om = 1.0 - xi;
  const double op = 1.0 + xi_prime;
  const double l4 = std::pow(lam + 1.0, 4);

  AsymptoticReport rep;
  rep.k_grid = k_grid;
  rep.upsilon_over_theta.name = "upsilon/theta";
  rep.psi2_over_theta2.name = "psi^2/theta^2";
  rep.psi2_over_theta_upsilon.name = "psi^2/(theta*upsilon)";
  rep.theta_upsilon_over_psi2.name = "theta*upsilon/psi^2";
  for (std::uint64_t k : k_grid) {
    const auto sq = rate_sequences(s, net, k);
    const double qk = q * static_cast<double>(k);
    const double qk1 = q * static_cast<double>(k - 1) + 1.0;
    rep.upsilon_over_theta.value.push_back(sq.upsilon / sq.theta);
    rep.upsilon_over_theta.bound.push_back(op * std::pow(om, -2.0 * c1) * q * b0 / g0 * std::pow(qk, -c1 + c2));
    rep.psi2_over_theta2.value.push_back(sq.psi * sq.psi / (sq.theta * sq.theta));
    rep.psi2_over_theta2.bound.push_back(op * op / std::pow(om, 2.0 * c1 + 4.0 * c2) * l4 * g0 * g0 *
                                         std::pow(qk, -2.0 * c2));
    rep.psi2_over_theta_upsilon.value.push_back(sq.psi * sq.psi / (sq.theta * sq.upsilon));
    rep.psi2_over_theta_upsilon.bound.push_back(op * op * l4 * g0 * g0 * g0 /
                                                (std::pow(om, 2.0 * c1 + 4.0 * c2) * q * b0) *
                                                std::pow(qk1, c1 - 3.0 * c2));
    rep.theta_upsilon_over_psi2.value.push_back(sq.theta * sq.upsilon / (sq.psi * sq.psi));
    rep.theta_upsilon_over_psi2.bound.push_back(op * op * q * b0 /
                                                (std::pow(om, 3.0 * c1 + c2) * std::pow(lam, 4) * g0 * g0 * g0) *
                                                std::pow(qk1, -c1 + 3.0 * c2));
  }
  std::optional<std::uint64_t> overall = std::uint64_t{0};
  for (RatioCheck* rc : {&rep.upsilon_over_theta, &rep.psi2_over_theta2, &rep.psi2_over_theta_upsilon,
                         &rep.theta_upsilon_over_psi2}) {
    std::size_t j = rc->value.size();
    while (j > 0 && rc->value[j - 1] < rc->bound[j - 1]) --j;
    if (j < rc->value.size()) rc->K_prime = k_grid[j];
    if (rc->K_prime && overall) {
      overall = std::max(*overall, *rc->K_prime);
    } else {
      overall.reset();
    }
  }
  rep.K_prime = overall;
  return rep;
}

}  // namespace dosps
