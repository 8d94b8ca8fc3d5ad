#pragma once

// Experiment configuration: a JSON document (comments allowed) with one
// section per concern. Parsing validates every field and rejects unknown keys.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dosps/core.hpp"
#include "dosps/netmodel.hpp"
#include "dosps/objective.hpp"
#include "dosps/optimizer.hpp"

namespace dosps {

enum class ModelKind { power, quadratic };
enum class Algorithm { dosp_s, ideal_gradient };
enum class ForcedActivity { none, all_active, all_inactive };

struct PowerParams {
  ChannelSpec channel;
  double omega1 = 20.0;
  double omega2 = 1.0;
  friend bool operator==(const PowerParams&, const PowerParams&) = default;
};

struct QuadraticParams {
  std::vector<double> targets;
  double gain_lo = 0.5;
  double gain_hi = 1.5;
  friend bool operator==(const QuadraticParams&, const QuadraticParams&) = default;
};

struct ExperimentConfig {
  NetworkConfig network;
  StepSizeSchedule schedule{0.025, 10.0, 0.75, 0.25};
  ModelKind model = ModelKind::power;
  PowerParams power;
  QuadraticParams quadratic;
  PerturbationSpec pert = PerturbationSpec::rademacher();
  ActionBounds bounds = ActionBounds::uniform(1, -1.0, 1.0);

  std::uint64_t horizon = 1;
  std::uint64_t replications = 1;
  std::uint64_t seed = 1;
  std::uint64_t metrics_stride = 100;
  std::uint64_t f_samples = 2000;
  Algorithm algorithm = Algorithm::dosp_s;
  IndexMode index_mode = IndexMode::sampled;
  double baseline_gain = 1.0;
  bool record_divergence = true;
  std::string optimum_file;
  unsigned threads = 0;  // 0: hardware concurrency
  ForcedActivity forced_activity = ForcedActivity::none;
  std::optional<std::uint64_t> perturbation_seed;

  double sigma_eta = 0.0;
  NoiseKind noise = NoiseKind::gaussian;

  DospParams dosp_params() const {
    DospParams p;
    p.net = network;
    p.schedule = schedule;
    p.pert = pert;
    p.sigma_eta = sigma_eta;
    p.noise = noise;
    p.index_mode = index_mode;
    return p;
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& section, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError("section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in '" + section + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& section) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in '" + section + "'");
  return get_or<T>(j, key, T{});
}

/// A scalar is broadcast to n entries; an array must have length n.
inline std::vector<double> per_node(const json& j, const char* key, std::size_t n, const std::string& section) {
  if (!j.contains(key)) throw ConfigError("missing '" + std::string(key) + "' in '" + section + "'");
  const json& v = j.at(key);
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array() || v.size() != n) {
    throw ConfigError("'" + std::string(key) + "' must be a number or an array of n_nodes numbers");
  }
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError("'" + std::string(key) + "' entries must be numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const char* what) {
  for (const auto& [name, value] : table) {
    if (s == name) return value;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

template <class E>
std::string enum_name(E v, std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, value] : table) {
    if (v == value) return name;
  }
  return "?";
}

inline const std::initializer_list<std::pair<const char*, ActivityMode>> kActivityModes = {
    {"binomial", ActivityMode::binomial}, {"poisson", ActivityMode::poisson}};
inline const std::initializer_list<std::pair<const char*, FadingKind>> kFadings = {
    {"real", FadingKind::real_gaussian}, {"complex", FadingKind::complex_gaussian}};
inline const std::initializer_list<std::pair<const char*, NoiseKind>> kNoises = {
    {"gaussian", NoiseKind::gaussian}, {"uniform", NoiseKind::uniform}};
inline const std::initializer_list<std::pair<const char*, Algorithm>> kAlgorithms = {
    {"dosp_s", Algorithm::dosp_s}, {"ideal_gradient", Algorithm::ideal_gradient}};
inline const std::initializer_list<std::pair<const char*, IndexMode>> kIndexModes = {
    {"sampled", IndexMode::sampled}, {"counted", IndexMode::counted}};
inline const std::initializer_list<std::pair<const char*, ForcedActivity>> kForced = {
    {"none", ForcedActivity::none}, {"all_active", ForcedActivity::all_active},
    {"all_inactive", ForcedActivity::all_inactive}};

}  // namespace detail

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  using nlohmann::json;
  using namespace detail;
  json j;
  j["network"] = {{"n_nodes", c.network.n_nodes},
                  {"q_activity", c.network.q_activity},
                  {"q_reception", c.network.q_reception},
                  {"activity_mode", enum_name(c.network.activity_mode, kActivityModes)}};
  j["schedule"] = {{"beta0", c.schedule.beta0()},
                   {"gamma0", c.schedule.gamma0()},
                   {"c1", c.schedule.c1()},
                   {"c2", c.schedule.c2()}};
  if (c.model == ModelKind::power) {
    j["model"] = {{"type", "power"},
                  {"var_direct", c.power.channel.var_direct},
                  {"var_cross", c.power.channel.var_cross},
                  {"noise_floor", c.power.channel.noise_floor},
                  {"fading", enum_name(c.power.channel.fading, kFadings)},
                  {"omega1", c.power.omega1},
                  {"omega2", c.power.omega2}};
  } else {
    j["model"] = {{"type", "quadratic"},
                  {"targets", c.quadratic.targets},
                  {"gain_lo", c.quadratic.gain_lo},
                  {"gain_hi", c.quadratic.gain_hi}};
  }
  if (c.pert.kind() == PerturbationKind::rademacher) {
    j["perturbation"] = {{"kind", "rademacher"}};
  } else {
    j["perturbation"] = {{"kind", "scaled_symmetric"}, {"scale", c.pert.scale()}};
  }
  j["bounds"] = {{"a_min", c.bounds.lower()}, {"a_max", c.bounds.upper()}};
  j["observation"] = {{"sigma_eta", c.sigma_eta}, {"noise", enum_name(c.noise, kNoises)}};
  json run = {{"horizon", c.horizon},
              {"replications", c.replications},
              {"seed", c.seed},
              {"metrics_stride", c.metrics_stride},
              {"f_samples", c.f_samples},
              {"algorithm", enum_name(c.algorithm, kAlgorithms)},
              {"index_mode", enum_name(c.index_mode, kIndexModes)},
              {"baseline_gain", c.baseline_gain},
              {"record_divergence", c.record_divergence},
              {"optimum_file", c.optimum_file},
              {"threads", c.threads},
              {"forced_activity", enum_name(c.forced_activity, kForced)}};
  if (c.perturbation_seed) run["perturbation_seed"] = *c.perturbation_seed;
  j["run"] = run;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  using namespace detail;
  check_keys(j, "root", {"network", "schedule", "model", "perturbation", "bounds", "observation", "run"});
  ExperimentConfig c;

  const json& net = j.contains("network") ? j.at("network") : throw ConfigError("missing 'network'");
  check_keys(net, "network", {"n_nodes", "q_activity", "q_reception", "activity_mode"});
  const auto n = get_req<std::size_t>(net, "n_nodes", "network");
  c.network = NetworkConfig(n, get_req<double>(net, "q_activity", "network"),
                            get_or<double>(net, "q_reception", 1.0),
                            parse_enum(get_or<std::string>(net, "activity_mode", "binomial"), kActivityModes,
                                       "activity_mode"));

  const json& sch = j.contains("schedule") ? j.at("schedule") : throw ConfigError("missing 'schedule'");
  check_keys(sch, "schedule", {"beta0", "gamma0", "c1", "c2"});
  c.schedule = StepSizeSchedule(get_req<double>(sch, "beta0", "schedule"), get_req<double>(sch, "gamma0", "schedule"),
                                get_req<double>(sch, "c1", "schedule"), get_req<double>(sch, "c2", "schedule"));

  const json& m = j.contains("model") ? j.at("model") : throw ConfigError("missing 'model'");
  const auto type = get_req<std::string>(m, "type", "model");
  if (type == "power") {
    check_keys(m, "model", {"type", "var_direct", "var_cross", "noise_floor", "fading", "omega1", "omega2"});
    c.model = ModelKind::power;
    c.power.channel.var_direct = get_or<double>(m, "var_direct", 1.0);
    c.power.channel.var_cross = get_or<double>(m, "var_cross", 0.1);
    c.power.channel.noise_floor = get_or<double>(m, "noise_floor", 0.2);
    c.power.channel.fading = parse_enum(get_or<std::string>(m, "fading", "real"), kFadings, "fading");
    c.power.channel.validate();
    c.power.omega1 = get_or<double>(m, "omega1", 20.0);
    c.power.omega2 = get_or<double>(m, "omega2", 1.0);
    if (!(c.power.omega1 > 0.0) || !(c.power.omega2 > 0.0)) throw ConfigError("omega1 and omega2 must be positive");
  } else if (type == "quadratic") {
    check_keys(m, "model", {"type", "targets", "gain_lo", "gain_hi"});
    c.model = ModelKind::quadratic;
    c.quadratic.targets = per_node(m, "targets", n, "model");
    c.quadratic.gain_lo = get_or<double>(m, "gain_lo", 0.5);
    c.quadratic.gain_hi = get_or<double>(m, "gain_hi", 1.5);
  } else {
    throw ConfigError("unknown model type '" + type + "'");
  }

  if (j.contains("perturbation")) {
    const json& p = j.at("perturbation");
    check_keys(p, "perturbation", {"kind", "scale"});
    const auto kind = get_or<std::string>(p, "kind", "rademacher");
    if (kind == "rademacher") {
      c.pert = PerturbationSpec::rademacher();
    } else if (kind == "scaled_symmetric") {
      c.pert = PerturbationSpec::scaled_symmetric(get_req<double>(p, "scale", "perturbation"));
    } else {
      throw ConfigError("unknown perturbation kind '" + kind + "'");
    }
  }

  const json& b = j.contains("bounds") ? j.at("bounds") : throw ConfigError("missing 'bounds'");
  check_keys(b, "bounds", {"a_min", "a_max"});
  c.bounds = ActionBounds(per_node(b, "a_min", n, "bounds"), per_node(b, "a_max", n, "bounds"));

  if (j.contains("observation")) {
    const json& o = j.at("observation");
    check_keys(o, "observation", {"sigma_eta", "noise"});
    c.sigma_eta = get_or<double>(o, "sigma_eta", 0.0);
    if (!(c.sigma_eta >= 0.0) || !std::isfinite(c.sigma_eta)) throw ConfigError("sigma_eta must be >= 0");
    c.noise = parse_enum(get_or<std::string>(o, "noise", "gaussian"), kNoises, "noise");
  }

  if (j.contains("run")) {
    const json& r = j.at("run");
    check_keys(r, "run", {"horizon", "replications", "seed", "metrics_stride", "f_samples", "algorithm",
                          "index_mode", "baseline_gain", "record_divergence", "optimum_file", "threads",
                          "forced_activity", "perturbation_seed"});
    c.horizon = get_or<std::uint64_t>(r, "horizon", 1);
    c.replications = get_or<std::uint64_t>(r, "replications", 1);
    c.seed = get_or<std::uint64_t>(r, "seed", 1);
    c.metrics_stride = get_or<std::uint64_t>(r, "metrics_stride", 100);
    c.f_samples = get_or<std::uint64_t>(r, "f_samples", 2000);
    c.algorithm = parse_enum(get_or<std::string>(r, "algorithm", "dosp_s"), kAlgorithms, "algorithm");
    c.index_mode = parse_enum(get_or<std::string>(r, "index_mode", "sampled"), kIndexModes, "index_mode");
    c.baseline_gain = get_or<double>(r, "baseline_gain", 1.0);
    c.record_divergence = get_or<bool>(r, "record_divergence", true);
    c.optimum_file = get_or<std::string>(r, "optimum_file", "");
    c.threads = get_or<unsigned>(r, "threads", 0);
    c.forced_activity = parse_enum(get_or<std::string>(r, "forced_activity", "none"), kForced, "forced_activity");
    if (r.contains("perturbation_seed")) c.perturbation_seed = get_or<std::uint64_t>(r, "perturbation_seed", 0);
  }
  if (c.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (c.replications < 1) throw ConfigError("replications must be >= 1");
  if (c.metrics_stride < 1) throw ConfigError("metrics_stride must be >= 1");
  if (!(c.baseline_gain > 0.0)) throw ConfigError("baseline_gain must be positive");

  if (c.model == ModelKind::quadratic) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(c.quadratic.targets[i] > c.bounds.a_min(i) && c.quadratic.targets[i] < c.bounds.a_max(i))) {
        throw ConfigError("quadratic targets must lie strictly inside the bounds");
      }
    }
  }
  check_projection_feasible(c.bounds, c.pert, c.schedule);
  return c;
}

inline nlohmann::json parse_json_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

inline ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_json_text(text)); }

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

/// Sets a dotted path such as "network.q_reception" to a JSON value.
inline void set_config_value(nlohmann::json& j, const std::string& dotted, const nlohmann::json& value) {
  nlohmann::json* cur = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("bad parameter path '" + dotted + "'");
    if (dot == std::string::npos) {
      (*cur)[key] = value;
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

/// FNV-1a over the canonical dump of the parts that determine the optimum.
inline std::uint64_t optimum_hash(const ExperimentConfig& c) {
  const auto j = config_to_json(c);
  const nlohmann::json key = {{"network", j["network"]}, {"model", j["model"]}, {"bounds", j["bounds"]}};
  const std::string s = key.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace dosps
