#pragma once

// Self-check suite behind the `verify` subcommand: each check evaluates one
// analytic identity or model property numerically and reports pass/fail with detail.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "dosps/analysis.hpp"
#include "dosps/estimator.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"
#include "dosps/optimizer.hpp"

namespace dosps {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Largest relative mismatch between the exact gradient and central
/// differences of f with step h, normalized by max(1, |g|).
template <ObjectiveModel M>
double gradient_fd_mismatch(const M& model, const std::vector<double>& a, const Activity& delta,
                            const typename M::Env& env, double h = 1e-6) {
  const auto g = model.global_gradient(a, delta, env);
  double worst = 0.0;
  std::vector<double> ap = a, am = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!delta[i]) continue;
    ap[i] = a[i] + h;
    am[i] = a[i] - h;
    const double fd = (global_utility(model, ap, delta, env) - global_utility(model, am, delta, env)) / (2.0 * h);
    ap[i] = am[i] = a[i];
    worst = std::max(worst, std::abs(g[i] - fd) / std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

namespace detail {
inline std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}
}  // namespace detail

inline std::vector<CheckResult> run_verifier_suite(std::uint64_t seed = 7) {
  std::vector<CheckResult> out;
  const StepSizeSchedule sched(0.025, 10.0, 0.75, 0.25);
  const NetworkConfig net(50, 0.05, 1.0);

  {
    auto x = [&](std::uint64_t l) { return sched.beta(l) * sched.beta(l); };
    const auto r = verify_partial_sums(x, 1.0, 2000);
    out.push_back({"partial_sums_exact_at_q1", r.gap == 0.0, "gap=" + detail::fmt(r.gap)});
    const auto r1 = verify_partial_sums(x, 0.05, 1000);
    const auto r2 = verify_partial_sums(x, 0.05, 5000);
    const auto r3 = verify_partial_sums(x, 0.05, 25000);
    const bool shrinks = r1.relative_gap > r2.relative_gap && r2.relative_gap > r3.relative_gap && r3.relative_gap >= 0;
    out.push_back({"partial_sums_gap_shrinks", shrinks,
                   "relative gaps K=1e3,5e3,2.5e4: " + detail::fmt(r1.relative_gap) + ", " +
                       detail::fmt(r2.relative_gap) + ", " + detail::fmt(r3.relative_gap)});
  }
  {
    RngStream rng(seed, 1);
    bool ok = true;
    std::string info;
    auto z = [&](std::uint64_t l) { return sched.gamma(l); };
    for (std::uint64_t k : {100ull, 1000ull, 10000ull}) {
      const std::size_t n = 200000;
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        if (rng.bernoulli(0.05)) s += sched.gamma(rng.binomial(k - 1, 0.05) + 1);
      }
      const double mc = s / static_cast<double>(n);
      const double bound = chernoff_step_bound(z, k, 0.05, 0.5);
      ok = ok && mc <= bound;
      info += "k=" + std::to_string(k) + ": mc=" + detail::fmt(mc) + " bound=" + detail::fmt(bound) + "; ";
    }
    out.push_back({"chernoff_step_bound", ok, info});
  }
  {
    const auto rep = verify_asymptotic_bounds(sched, net, 0.5, 0.5, make_k_grid(1, 100000, 200, 20));
    out.push_back({"asymptotic_ratios", rep.K_prime.has_value(),
                   rep.K_prime ? "K'=" + std::to_string(*rep.K_prime) : "a ratio exceeds its bound at the grid end"});
  }
  {
    bool ok = true;
    double worst_gap = 0.0;
    for (std::uint64_t k = 50; k <= 100000; k *= 2) {
      const double w = w_bound(averaged_steps(sched, k, 0.05), net);
      const double om = omega_envelope(sched, net, k);
      ok = ok && om >= w;
      worst_gap = std::min(worst_gap, om - w);
    }
    out.push_back({"omega_dominates_w", ok, "min(omega - w)=" + detail::fmt(worst_gap)});
  }
  {
    RngStream rng(seed, 2);
    PowerControlModel pm(8, ChannelSpec{}, 20.0, 1.0);
    QuadraticModel qm(std::vector<double>(8, 0.3));
    const NetworkConfig dense(8, 0.6, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Activity d = sample_activity(dense, rng);
      d[0] = 1;
      d[1] = 1;
      std::vector<double> a(8);
      for (auto& x : a) x = rng.uniform(-3.0, 3.0);
      auto env = pm.make_env();
      pm.resample_env(env, active_indices(d), rng);
      worst = std::max(worst, gradient_fd_mismatch(pm, a, d, env));
      auto qenv = qm.make_env();
      qm.resample_env(qenv, active_indices(d), rng);
      worst = std::max(worst, gradient_fd_mismatch(qm, a, d, qenv));
    }
    out.push_back({"gradient_finite_difference", worst < 1e-5, "worst relative mismatch=" + detail::fmt(worst)});
  }
  {
    RngStream rng(seed, 3);
    PowerControlModel pm(6, ChannelSpec{}, 20.0, 1.0);
    Activity d(6, 1);
    std::vector<double> a = {0.5, 1.0, -0.5, 2.0, 0.0, 1.5};
    auto env = pm.make_env();
    pm.resample_env(env, active_indices(d), rng);
    bool ok = true;
    std::string info;
    for (double qr : {1.0, 0.5, 0.1}) {
      const auto b = mc_check_unbiasedness(pm, a, d, env, 0, qr, 0.5, 100000, rng);
      ok = ok && std::abs(b.bias) <= 3.0 * b.std_error;
      info += "q_r=" + detail::fmt(qr) + ": bias=" + detail::fmt(b.bias) + "+-" + detail::fmt(b.std_error) + "; ";
    }
    out.push_back({"estimator_unbiased", ok, info});
  }
  return out;
}

}  // namespace dosps
