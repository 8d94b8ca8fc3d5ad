#include <doctest.h>

#include <cmath>

#include "dosps/dosps.hpp"

using namespace dosps;

TEST_CASE("step index draws") {
  RngStream rng(1, 1);
  CHECK(sample_step_index(1, 0.3, true, IndexMode::sampled, rng) == 1);
  CHECK(sample_step_index(50, 0.3, false, IndexMode::sampled, rng) == 0);
  CHECK(sample_step_index(50, 0.3, false, IndexMode::counted, rng, 7) == 0);
  CHECK(sample_step_index(50, 0.3, true, IndexMode::counted, rng, 7) == 8);
  CHECK_THROWS(sample_step_index(0, 0.3, true, IndexMode::sampled, rng));

  RngStream mc(1, 2);
  const int n = 100000;
  double s = 0.0;
  for (int t = 0; t < n; ++t) s += double(sample_step_index(101, 0.05, true, IndexMode::sampled, mc) - 1);
  CHECK(std::abs(s / n - 5.0) <= 3.0 * std::sqrt(100 * 0.05 * 0.95 / n));
}

TEST_CASE("projection") {
  CHECK(project(0.3, -1.0, 1.0, 1.0, 0.2) == 0.3);
  CHECK(project(6.0, -1.0, 1.0, 1.0, 0.2) == doctest::Approx(0.8));
  CHECK(project(6.0, -1.0, 1.0, 1.0, 0.2) + 0.2 <= 1.0);
  CHECK(project(-6.0, -1.0, 1.0, 1.0, 0.2) - 0.2 >= -1.0);
  CHECK(project(6.0, -1.0, 1.0, 1.0, 0.0) == 1.0);
  CHECK(project(-6.0, -1.0, 1.0, 1.0, 0.0) == -1.0);
  CHECK_THROWS_AS(project(0.0, -1.0, 1.0, 1.0, 1.5), ConfigError);
  CHECK_THROWS(project(0.0, -1.0, 1.0, 1.0, -0.1));
}

TEST_CASE("shrunk interval survives awkward rounding") {
  RngStream rng(2, 2);
  for (int t = 0; t < 10000; ++t) {
    const double lo = rng.uniform(-100.0, 0.0);
    const double hi = lo + rng.uniform(1e-3, 100.0);
    const double r = rng.uniform(0.0, 0.49) * (hi - lo);
    const auto iv = shrunk_interval(lo, hi, 1.0, r);
    REQUIRE(iv.lo - r >= lo);
    REQUIRE(iv.hi + r <= hi);
  }
}

TEST_CASE("projection feasibility is checked up front") {
  const auto sched = StepSizeSchedule(0.025, 10.0, 0.75, 0.25);
  CHECK_THROWS_AS(check_projection_feasible(ActionBounds::uniform(2, -10.0, 10.0), PerturbationSpec::rademacher(), sched),
                  ConfigError);
  CHECK_NOTHROW(check_projection_feasible(ActionBounds::uniform(2, -10.5, 10.5), PerturbationSpec::rademacher(), sched));
}

namespace {

DospParams small_params(std::size_t n, double qa, double qr = 1.0) {
  DospParams p;
  p.net = NetworkConfig(n, qa, qr);
  p.schedule = StepSizeSchedule(0.25, 0.5, 0.75, 0.25);
  p.sigma_eta = 0.1;
  return p;
}

}  // namespace

TEST_CASE("initialization respects the shrunk interval") {
  const auto p = small_params(200, 0.5);
  RngStream rng(3, 3);
  Activity d1(200);
  for (std::size_t i = 0; i < 200; ++i) d1[i] = i % 2;
  const auto b = ActionBounds::uniform(200, -2.0, 2.0);
  const auto states = initialize_states(b, d1, p, rng);
  for (std::size_t i = 0; i < 200; ++i) {
    const double r = d1[i] ? 0.5 : 0.0;
    REQUIRE(states[i].action >= -2.0 + r);
    REQUIRE(states[i].action <= 2.0 - r);
    REQUIRE(states[i].ell == (d1[i] ? 1u : 0u));
  }
}

TEST_CASE("all-inactive slot leaves actions unchanged") {
  const auto p = small_params(4, 0.5);
  QuadraticModel qm(std::vector<double>(4, 0.0));
  auto rs = ReplicationStreams::make(1, 0, 4);
  const Activity none(4, 0);
  auto states = initialize_states(ActionBounds::uniform(4, -2.0, 2.0), none, p, rs.init);
  const auto before = states;
  auto env = qm.make_env();
  std::vector<SlotUpdateRecord> rec;
  dosp_slot(states, 1, none, none, qm, env, p, rs, &rec);
  CHECK(rec.empty());
  for (std::size_t i = 0; i < 4; ++i) CHECK(states[i].action == before[i].action);
}

namespace {

/// u_0 = c for node 0 regardless of the action; used to pin f~.
struct ConstantModel {
  using Env = int;
  double c = 2.0;
  std::size_t n_nodes() const { return 1; }
  Env make_env() const { return 0; }
  void resample_env(Env&, const std::vector<std::size_t>&, RngStream&) const {}
  double local_utility(std::size_t, const std::vector<double>&, const Activity& d, const Env&) const {
    return d[0] ? c : 0.0;
  }
  void utilities(const std::vector<double>&, const std::vector<std::size_t>& active, const Env&,
                 std::vector<double>& out) const {
    for (auto i : active) out[i] = c;
  }
  std::vector<double> global_gradient(const std::vector<double>&, const Activity&, const Env&) const {
    return {0.0};
  }
  std::optional<std::vector<double>> optimum_hint() const { return std::nullopt; }
};
static_assert(ObjectiveModel<ConstantModel>);

}  // namespace

TEST_CASE("single-node update arithmetic") {
  DospParams p;
  p.net = NetworkConfig(1, 1.0, 1.0);
  p.schedule = StepSizeSchedule(0.1, 0.01, 0.75, 0.25);  // beta_1 = 0.1
  auto rs = ReplicationStreams::make(5, 0, 1);
  std::vector<NodeState> states(1);
  states[0].action = 0.0;
  states[0].a_min = -100.0;
  states[0].a_max = 100.0;
  states[0].ell = 1;
  ConstantModel m;
  auto env = m.make_env();
  std::vector<SlotUpdateRecord> rec;
  dosp_slot(states, 1, Activity{1}, Activity{1}, m, env, p, rs, &rec);
  REQUIRE(rec.size() == 1);
  CHECK(rec[0].f_tilde == 2.0);
  CHECK(rec[0].step_beta == 0.1);
  CHECK(states[0].action == doctest::Approx(0.2 * rec[0].perturbation).epsilon(1e-15));
}

TEST_CASE("step sizes in the trace follow the indices") {
  const auto p = small_params(6, 0.4);
  QuadraticModel qm(std::vector<double>(6, 0.2));
  auto rs = ReplicationStreams::make(9, 0, 6);
  Activity d = sample_activity(p.net, rs.activity);
  auto states = initialize_states(ActionBounds::uniform(6, -2.0, 2.0), d, p, rs.init);
  auto env = qm.make_env();
  std::vector<SlotUpdateRecord> rec;
  for (std::uint64_t k = 1; k <= 500; ++k) {
    const Activity dn = sample_activity(p.net, rs.activity);
    const auto ell_before = states;
    rec.clear();
    dosp_slot(states, k, d, dn, qm, env, p, rs, &rec);
    REQUIRE(rec.size() == count_active(d));
    for (const auto& r : rec) {
      REQUIRE(r.ell == ell_before[r.node].ell);
      REQUIRE(r.step_beta == p.schedule.beta(r.ell));
      REQUIRE(r.step_gamma == p.schedule.gamma(r.ell));
    }
    for (std::size_t i = 0; i < 6; ++i) {
      if (!d[i]) REQUIRE(ell_before[i].ell == 0);
    }
    d = dn;
  }
}

TEST_CASE("inactive nodes keep their action bit for bit") {
  for (auto mode : {IndexMode::sampled, IndexMode::counted}) {
    auto p = small_params(8, 0.2);
    p.index_mode = mode;
    QuadraticModel qm(std::vector<double>(8, -0.3));
    auto rs = ReplicationStreams::make(10, 1, 8);
    Activity d = sample_activity(p.net, rs.activity);
    auto states = initialize_states(ActionBounds::uniform(8, -2.0, 2.0), d, p, rs.init);
    auto env = qm.make_env();
    for (std::uint64_t k = 1; k <= 2000; ++k) {
      const Activity dn = sample_activity(p.net, rs.activity);
      const auto before = states;
      dosp_slot(states, k, d, dn, qm, env, p, rs);
      for (std::size_t i = 0; i < 8; ++i) {
        // The projection radius can change only when the node becomes active next slot.
        if (!d[i] && !dn[i]) REQUIRE(states[i].action == before[i].action);
      }
      d = dn;
    }
  }
}

TEST_CASE("counted mode uses the activation count") {
  auto p = small_params(3, 0.5);
  p.index_mode = IndexMode::counted;
  QuadraticModel qm(std::vector<double>(3, 0.0));
  auto rs = ReplicationStreams::make(11, 0, 3);
  Activity d = sample_activity(p.net, rs.activity);
  auto states = initialize_states(ActionBounds::uniform(3, -2.0, 2.0), d, p, rs.init);
  auto env = qm.make_env();
  std::vector<std::uint64_t> count(3, 0);
  for (std::uint64_t k = 1; k <= 300; ++k) {
    const Activity dn = sample_activity(p.net, rs.activity);
    for (std::size_t i = 0; i < 3; ++i) {
      if (d[i]) REQUIRE(states[i].ell == count[i] + 1);
    }
    dosp_slot(states, k, d, dn, qm, env, p, rs);
    for (std::size_t i = 0; i < 3; ++i) count[i] += d[i];
    d = dn;
  }
}

TEST_CASE("performed actions stay feasible under both index modes") {
  const auto before = feasibility_violations().load();
  for (auto mode : {IndexMode::sampled, IndexMode::counted}) {
    DospParams p;
    p.net = NetworkConfig(5, 0.3, 0.5);
    p.schedule = StepSizeSchedule(2.0, 0.9, 0.75, 0.25);  // aggressive: many clamps
    p.sigma_eta = 1.0;
    p.index_mode = mode;
    QuadraticModel qm({0.5, -0.5, 0.9, -0.9, 0.0});
    auto rs = ReplicationStreams::make(12, 0, 5);
    Activity d = sample_activity(p.net, rs.activity);
    const auto b = ActionBounds::uniform(5, -1.0, 1.0);
    auto states = initialize_states(b, d, p, rs.init);
    auto env = qm.make_env();
    std::vector<SlotUpdateRecord> rec;
    for (std::uint64_t k = 1; k <= 5000; ++k) {
      const Activity dn = sample_activity(p.net, rs.activity);
      rec.clear();
      dosp_slot(states, k, d, dn, qm, env, p, rs, &rec);
      for (const auto& r : rec) REQUIRE(b.contains(r.node, r.performed_action));
      d = dn;
    }
  }
  CHECK(feasibility_violations().load() == before);
}

TEST_CASE("quadratic model converges end to end") {
  DospParams p;
  p.net = NetworkConfig(10, 0.2, 1.0);
  p.schedule = StepSizeSchedule(0.25, 2.0, 0.75, 0.25);
  p.sigma_eta = 1.0;
  const std::vector<double> t = {0.5, -0.5, 1.0, -1.0, 0.0, 0.3, -0.3, 0.8, -0.8, 0.1};
  QuadraticModel qm(t);
  const auto b = ActionBounds::uniform(10, -4.0, 4.0);
  std::vector<double> ratio;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    auto rs = ReplicationStreams::make(77, rep, 10);
    Activity d = sample_activity(p.net, rs.activity);
    auto states = initialize_states(b, d, p, rs.init);
    auto env = qm.make_env();
    auto actions = [&] {
      std::vector<double> a(10);
      for (std::size_t i = 0; i < 10; ++i) a[i] = states[i].action;
      return a;
    };
    const double d1 = divergence(actions(), t);
    for (std::uint64_t k = 1; k <= 20000; ++k) {
      const Activity dn = sample_activity(p.net, rs.activity);
      dosp_slot(states, k, d, dn, qm, env, p, rs);
      d = dn;
    }
    ratio.push_back(divergence(actions(), t) / d1);
  }
  CHECK(median(ratio) < 0.01);
}

TEST_CASE("perturbation seed alone changes the trajectory") {
  const auto p = small_params(4, 0.5);
  QuadraticModel qm(std::vector<double>(4, 0.1));
  auto run = [&](std::optional<std::uint64_t> pseed) {
    auto rs = ReplicationStreams::make(13, 0, 4, pseed);
    Activity d = sample_activity(p.net, rs.activity);
    auto states = initialize_states(ActionBounds::uniform(4, -2.0, 2.0), d, p, rs.init);
    auto env = qm.make_env();
    for (std::uint64_t k = 1; k <= 200; ++k) {
      const Activity dn = sample_activity(p.net, rs.activity);
      dosp_slot(states, k, d, dn, qm, env, p, rs);
      d = dn;
    }
    std::vector<double> a;
    for (const auto& s : states) a.push_back(s.action);
    return a;
  };
  CHECK(run(std::nullopt) == run(std::nullopt));
  CHECK(run(std::nullopt) != run(std::uint64_t{999}));
}

TEST_CASE("ideal gradient step") {
  DospParams p;
  p.net = NetworkConfig(2, 1.0, 1.0);
  p.schedule = StepSizeSchedule(0.1, 1.0, 0.75, 0.25);
  QuadraticModel qm({0.3, -0.2}, 1.0, 1.0);
  auto rs = ReplicationStreams::make(14, 0, 2);
  const Activity all(2, 1);
  std::vector<NodeState> states(2);
  for (std::size_t i = 0; i < 2; ++i) {
    states[i].a_min = -5.0;
    states[i].a_max = 5.0;
    states[i].ell = 1;
  }
  states[0].action = 0.3;
  states[1].action = -0.2;
  auto env = qm.make_env();
  ideal_gradient_slot(states, 1, all, all, qm, env, p, rs);
  CHECK(states[0].action == 0.3);
  CHECK(states[1].action == -0.2);

  states[0].action = 0.3 + 0.5;
  states[0].ell = states[1].ell = 1;
  ideal_gradient_slot(states, 1, all, all, qm, env, p, rs);
  CHECK(std::abs(states[0].action - 0.3) < 0.5);
}
