#pragma once

// Seeded replication runner, optimum solver and the model factory.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dosps/harness/config.hpp"
#include "dosps/harness/metrics.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"
#include "dosps/optimizer.hpp"

namespace dosps {

using AnyModel = std::variant<PowerControlModel, QuadraticModel>;

inline AnyModel make_model(const ExperimentConfig& c) {
  if (c.model == ModelKind::power) {
    return PowerControlModel(c.network.n_nodes, c.power.channel, c.power.omega1, c.power.omega2);
  }
  return QuadraticModel(c.quadratic.targets, c.quadratic.gain_lo, c.quadratic.gain_hi);
}

struct TrajectoryRecord {
  std::uint64_t replication = 0;
  std::uint64_t k = 0;
  std::optional<double> d_k;
  std::optional<double> F_hat;
  std::optional<double> F_stderr;
  std::size_t n_active = 0;
  double spread = 0.0;  // max_i a_i - min_i a_i; not part of the CSV schema
};

struct ReplicationResult {
  std::uint64_t replication = 0;
  std::vector<TrajectoryRecord> records;
  std::vector<double> final_action;
  std::vector<SlotUpdateRecord> trace;
};

struct SummaryRow {
  std::uint64_t k = 0;
  std::optional<MeanStderr> D;
  std::optional<MeanStderr> F;
  double mean_spread = 0.0;
};

struct Dataset {
  ExperimentConfig config;
  std::optional<std::vector<double>> a_star;
  std::vector<ReplicationResult> replications;
  std::vector<SummaryRow> summary;
};

struct RunOptions {
  bool trace = false;
};

/// Slots at which the state is recorded: 1, every multiple of the stride, and K.
inline std::vector<std::uint64_t> record_slots(std::uint64_t K, std::uint64_t stride) {
  std::vector<std::uint64_t> out{1};
  for (std::uint64_t k = stride; k <= K; k += stride) {
    if (k > out.back()) out.push_back(k);
  }
  if (out.back() != K) out.push_back(K);
  return out;
}

// ---------------------------------------------------------------------------
// Optimum cache.

struct OptimumResult {
  std::vector<double> a_star;
  double grad_norm = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t config_hash = 0;
  double tolerance = 0.0;
};

inline std::string hash_hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex << h;
  return s.str();
}

inline void write_optimum(const std::string& path, const OptimumResult& r) {
  nlohmann::json j = {{"config_hash", hash_hex(r.config_hash)},
                      {"a_star", r.a_star},
                      {"grad_norm", r.grad_norm},
                      {"tolerance", r.tolerance},
                      {"iterations", r.iterations}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

inline OptimumResult read_optimum(const std::string& path) {
  const auto j = parse_json_text(read_text_file(path));
  OptimumResult r;
  try {
    r.a_star = j.at("a_star").get<std::vector<double>>();
    r.grad_norm = j.at("grad_norm").get<double>();
    r.tolerance = j.value("tolerance", 0.0);
    r.iterations = j.value("iterations", std::uint64_t{0});
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw ConfigError("malformed optimum file '" + path + "': " + e.what());
  }
  return r;
}

/// a* from the model when known in closed form, else from the cached file.
/// A cache written for a different network/model/bounds is refused.
inline std::optional<std::vector<double>> resolve_optimum(const ExperimentConfig& c, const AnyModel& model) {
  auto hint = std::visit([](const auto& m) { return m.optimum_hint(); }, model);
  if (hint) return hint;
  if (c.optimum_file.empty()) return std::nullopt;
  const auto r = read_optimum(c.optimum_file);
  if (r.config_hash != optimum_hash(c)) {
    throw ConfigError("optimum file '" + c.optimum_file + "' is stale for this config; rerun solve-optimum");
  }
  if (r.a_star.size() != c.network.n_nodes) throw ConfigError("optimum file has the wrong dimension");
  return r.a_star;
}

// ---------------------------------------------------------------------------
// Replications.

inline Activity draw_slot_activity(const ExperimentConfig& c, RngStream& rng) {
  switch (c.forced_activity) {
    case ForcedActivity::all_active:
      return Activity(c.network.n_nodes, 1);
    case ForcedActivity::all_inactive:
      return Activity(c.network.n_nodes, 0);
    case ForcedActivity::none:
      break;
  }
  return sample_activity(c.network, rng);
}

template <ObjectiveModel M>
ReplicationResult run_replication(const ExperimentConfig& c, const M& model,
                                  const std::optional<std::vector<double>>& a_star, std::uint64_t rep,
                                  const RunOptions& opt = {}) {
  const DospParams p = c.dosp_params();
  const std::size_t n = c.network.n_nodes;
  auto rs = ReplicationStreams::make(c.seed, rep, n, c.perturbation_seed);
  RngStream eval(c.seed, stream_id(rep, StreamRole::evaluation));
  const bool want_d = c.record_divergence && a_star.has_value();

  ReplicationResult out;
  out.replication = rep;
  const auto slots = record_slots(c.horizon, c.metrics_stride);
  out.records.reserve(slots.size());
  std::size_t next_record = 0;

  Activity delta = draw_slot_activity(c, rs.activity);
  auto states = initialize_states(c.bounds, delta, p, rs.init);
  auto env = model.make_env();
  std::vector<double> a(n);
  std::vector<SlotUpdateRecord>* trace = opt.trace ? &out.trace : nullptr;

  for (std::uint64_t k = 1; k <= c.horizon; ++k) {
    if (next_record < slots.size() && slots[next_record] == k) {
      for (std::size_t i = 0; i < n; ++i) a[i] = states[i].action;
      TrajectoryRecord r;
      r.replication = rep;
      r.k = k;
      r.n_active = count_active(delta);
      r.spread = spread(a);
      if (want_d) r.d_k = divergence(a, *a_star);
      if (c.f_samples > 0) {
        const auto est = mc_expected_F(model, a, c.network, c.f_samples, eval);
        r.F_hat = est.estimate;
        r.F_stderr = est.std_error;
      }
      out.records.push_back(r);
      ++next_record;
    }
    const Activity delta_next = draw_slot_activity(c, rs.activity);
    if (c.algorithm == Algorithm::dosp_s) {
      dosp_slot(states, k, delta, delta_next, model, env, p, rs, trace);
    } else {
      ideal_gradient_slot(states, k, delta, delta_next, model, env, p, rs, c.baseline_gain);
    }
    delta = delta_next;
  }
  out.final_action.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.final_action[i] = states[i].action;
  return out;
}

inline unsigned worker_count(unsigned requested, std::uint64_t jobs) {
  unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::uint64_t>(t, jobs));
}

/// Runs fn(i) for i in [0, jobs) on a worker pool; the first failure (by
/// index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::uint64_t jobs, unsigned threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t i = next++; i < jobs; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned t = worker_count(threads, jobs);
  if (t <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < t; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::vector<SummaryRow> summarize(const std::vector<ReplicationResult>& reps) {
  std::vector<SummaryRow> rows;
  if (reps.empty()) return rows;
  const std::size_t n_rec = reps.front().records.size();
  for (std::size_t j = 0; j < n_rec; ++j) {
    SummaryRow row;
    row.k = reps.front().records[j].k;
    std::vector<double> d, f;
    double sp = 0.0;
    for (const auto& r : reps) {
      const auto& rec = r.records[j];
      if (rec.d_k) d.push_back(*rec.d_k);
      if (rec.F_hat) f.push_back(*rec.F_hat);
      sp += rec.spread;
    }
    if (!d.empty()) row.D = mean_stderr(d);
    if (!f.empty()) row.F = mean_stderr(f);
    row.mean_spread = sp / static_cast<double>(reps.size());
    rows.push_back(row);
  }
  return rows;
}

inline Dataset run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
  const AnyModel model = make_model(c);
  Dataset ds;
  ds.config = c;
  ds.a_star = resolve_optimum(c, model);
  if (c.record_divergence && !ds.a_star) {
    throw ConfigError("divergence requested but no optimum is known: run solve-optimum and set run.optimum_file");
  }
  ds.replications.resize(c.replications);
  parallel_for(c.replications, c.threads, [&](std::uint64_t r) {
    ds.replications[r] =
        std::visit([&](const auto& m) { return run_replication(c, m, ds.a_star, r, opt); }, model);
  });
  ds.summary = summarize(ds.replications);
  return ds;
}

// ---------------------------------------------------------------------------
// Optimum solver.

namespace detail {

inline bool exchangeable(const ExperimentConfig& c) {
  if (c.model != ModelKind::power) return false;
  const auto& lo = c.bounds.lower();
  const auto& hi = c.bounds.upper();
  return std::all_of(lo.begin(), lo.end(), [&](double x) { return x == lo.front(); }) &&
         std::all_of(hi.begin(), hi.end(), [&](double x) { return x == hi.front(); });
}

/// Sample-average objective with common random numbers: every evaluation
/// replays the same activity/environment draws. For exchangeable models
/// each draw is also evaluated under every cyclic relabelling of the nodes,
/// which keeps the surrogate symmetric.
template <ObjectiveModel M>
class SaaObjective {
 public:
  SaaObjective(const M& model, const NetworkConfig& net, std::uint64_t seed, std::size_t samples,
               bool symmetrize)
      : model_(model), net_(net), seed_(seed), samples_(samples), symmetrize_(symmetrize) {}

  double value_and_gradient(const std::vector<double>& a, std::vector<double>* grad) const {
    const std::size_t n = a.size();
    RngStream rng(seed_, stream_id(0, StreamRole::evaluation, 0xFFFFFF));
    auto env = model_.make_env();
    const std::size_t rotations = symmetrize_ ? n : 1;
    std::vector<double> rot(n), u(n, 0.0);
    if (grad) grad->assign(n, 0.0);
    double value = 0.0;
    for (std::size_t s = 0; s < samples_; ++s) {
      const Activity delta = sample_activity(net_, rng);
      const auto active = active_indices(delta);
      model_.resample_env(env, active, rng);
      if (active.empty()) continue;
      for (std::size_t r = 0; r < rotations; ++r) {
        for (std::size_t j = 0; j < n; ++j) rot[j] = a[(j + r) % n];
        model_.utilities(rot, active, env, u);
        for (std::size_t i : active) value += u[i];
        if (grad) {
          const auto g = model_.global_gradient(rot, delta, env);
          for (std::size_t j : active) (*grad)[(j + r) % n] += g[j];
        }
      }
    }
    const double scale = 1.0 / static_cast<double>(samples_ * rotations);
    if (grad) {
      for (double& x : *grad) x *= scale;
    }
    return value * scale;
  }

 private:
  const M& model_;
  NetworkConfig net_;
  std::uint64_t seed_;
  std::size_t samples_;
  bool symmetrize_;
};

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

class NonConvergenceError : public NumericError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> last) : NumericError(what), last_(std::move(last)) {}
  const std::vector<double>& last_iterate() const { return last_; }

 private:
  std::vector<double> last_;
};

/// Projected gradient ascent with Armijo backtracking on a fixed-sample
/// average of F. Every node updates at every iteration. Stops when the
/// sup-norm of the surrogate gradient falls below `tolerance`.
inline OptimumResult solve_optimum(const ExperimentConfig& c, double tolerance, std::uint64_t max_iters = 5000,
                                   std::size_t samples = 2000) {
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  const AnyModel any = make_model(c);
  return std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        detail::SaaObjective<M> obj(model, c.network, c.seed, samples, detail::exchangeable(c));
        const std::size_t n = c.network.n_nodes;
        std::vector<double> a(n), g, cand(n), gc;
        for (std::size_t i = 0; i < n; ++i) a[i] = 0.5 * (c.bounds.a_min(i) + c.bounds.a_max(i));
        double fa = obj.value_and_gradient(a, &g);
        double step = 1.0;
        OptimumResult res;
        res.config_hash = optimum_hash(c);
        res.tolerance = tolerance;
        for (std::uint64_t it = 0; it < max_iters; ++it) {
          res.iterations = it;
          if (detail::inf_norm(g) < tolerance) {
            res.a_star = a;
            res.grad_norm = detail::inf_norm(g);
            return res;
          }
          step = std::min(step * 2.0, 1e6);
          bool accepted = false;
          for (int bt = 0; bt < 80; ++bt) {
            double dir = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
              cand[i] = std::clamp(a[i] + step * g[i], c.bounds.a_min(i), c.bounds.a_max(i));
              dir += g[i] * (cand[i] - a[i]);
            }
            const double fc = obj.value_and_gradient(cand, nullptr);
            if (fc >= fa + 1e-4 * dir) {
              accepted = true;
              break;
            }
            step *= 0.5;
          }
          if (!accepted) break;
          a = cand;
          fa = obj.value_and_gradient(a, &g);
        }
        throw NonConvergenceError("solve-optimum did not reach tolerance " + std::to_string(tolerance) +
                                      " (last gradient norm " + std::to_string(detail::inf_norm(g)) + ")",
                                  a);
        return res;
      },
      any);
}

}  // namespace dosps
