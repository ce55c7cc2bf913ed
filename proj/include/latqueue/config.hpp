#pragma once

// JSON scenario configs. Parsing is strict about types and ranges and throws
// ConfigError (the CLI maps that to exit code 2). The digest hashes the
// canonical dump (keys sorted, shortest float round-trip), so key order in
// the file cannot change it.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "latqueue/scenario.hpp"

namespace latqueue {

using Json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string canonical_digest(const Json& config) {
  // FNV-1a 64 over the canonical dump; plenty for run bookkeeping.
  const std::string dump = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

namespace detail {

inline const Json& need(const Json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end())
    throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  return *it;
}

inline double need_number(const Json& j, const char* key, const char* where) {
  const Json& v = need(j, key, where);
  if (!v.is_number()) throw ConfigError(std::string(where) + ": '" + key + "' must be a number");
  return v.get<double>();
}

inline InterferenceKernel parse_kernel(const Json& j, int dimension) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nearest") return InterferenceKernel::nearest_neighbor(dimension);
    if (s == "self") return InterferenceKernel::self_only(dimension);
    throw ConfigError("kernel: unknown shorthand '" + s + "'");
  }
  if (!j.is_object() || !j.contains("offsets"))
    throw ConfigError("kernel: expected shorthand or {offsets: [...]}");
  std::map<Offset, double> coeffs;
  coeffs[Offset(dimension, 0)] = 1.0;
  for (const Json& e : j.at("offsets")) {
    Offset off;
    for (const Json& c : need(e, "offset", "kernel")) off.push_back(c.get<std::int64_t>());
    const double w = need_number(e, "weight", "kernel");
    bool zero = true;
    for (auto c : off) zero = zero && c == 0;
    if (zero) {
      if (w != 1.0) throw ConfigError("kernel: the zero offset is fixed at weight 1");
      continue;
    }
    Offset mirror(off.size());
    for (std::size_t k = 0; k < off.size(); ++k) mirror[k] = -off[k];
    auto clash = [&](const Offset& o) {
      auto it = coeffs.find(o);
      return it != coeffs.end() && it->second != w;
    };
    if (clash(off) || clash(mirror))
      throw ConfigError("kernel: conflicting weights for mirrored offsets");
    coeffs[off] = w;
    coeffs[mirror] = w;
  }
  try {
    return InterferenceKernel(dimension, std::move(coeffs));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
}

inline Topology parse_topology(const Json& j) {
  const auto kind = need(j, "kind", "topology").get<std::string>();
  try {
    if (kind == "torus") {
      std::vector<std::int64_t> dims;
      for (const Json& d : need(j, "dims", "topology")) dims.push_back(d.get<std::int64_t>());
      if (dims.empty()) throw ConfigError("topology: dims must be nonempty");
      InterferenceKernel k = j.contains("kernel")
                                 ? parse_kernel(j.at("kernel"), static_cast<int>(dims.size()))
                                 : InterferenceKernel::nearest_neighbor(static_cast<int>(dims.size()));
      return Topology::torus(std::move(dims), std::move(k));
    }
    if (kind == "line") {
      const auto len = static_cast<std::int64_t>(need_number(j, "length", "topology"));
      InterferenceKernel k = j.contains("kernel") ? parse_kernel(j.at("kernel"), 1)
                                                  : InterferenceKernel::nearest_neighbor(1);
      return Topology::line_segment(len, std::move(k));
    }
    if (kind == "graph") {
      const auto n = static_cast<std::size_t>(need_number(j, "nodes", "topology"));
      std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
      if (j.contains("edges"))
        for (const Json& e : j.at("edges")) {
          if (!e.is_array() || e.size() != 3)
            throw ConfigError("topology: edges are [i, j, weight] triples");
          edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>(),
                             e[2].get<double>());
        }
      return Topology::explicit_graph(n, edges);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("topology: ") + e.what());
  }
  throw ConfigError("topology: unknown kind '" + kind + "'");
}

inline std::vector<ArrivalSpec> parse_arrivals(const Json& j, std::size_t nodes) {
  const auto type = need(j, "type", "arrivals").get<std::string>();
  std::vector<ArrivalSpec> out;
  try {
    if (type == "bernoulli" || type == "poisson") {
      const Json& lam = need(j, type == "bernoulli" ? "lambda" : "rate", "arrivals");
      std::vector<double> per_node;
      if (lam.is_array())
        for (const Json& v : lam) per_node.push_back(v.get<double>());
      else
        per_node.assign(nodes, lam.get<double>());
      if (per_node.size() != nodes)
        throw ConfigError("arrivals: per-node table must cover every node");
      for (double v : per_node)
        out.push_back(type == "bernoulli" ? ArrivalSpec::bernoulli(v)
                                          : ArrivalSpec::poisson_rate(v));
      return out;
    }
    if (type == "pmf") {
      std::vector<double> pmf;
      for (const Json& v : need(j, "pmf", "arrivals")) pmf.push_back(v.get<double>());
      out.assign(nodes, ArrivalSpec::truncated_general(pmf));
      return out;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("arrivals: ") + e.what());
  }
  throw ConfigError("arrivals: unknown type '" + type + "'");
}

inline UtilityPair parse_utility(const Json& j) {
  const auto fam = need(j, "family", "utility").get<std::string>();
  try {
    if (fam == "power") return UtilityPair::power(need_number(j, "param", "utility"));
    if (fam == "quadratic-inverse") return UtilityPair::quadratic_inverse();
    if (fam == "exp-log-power") return UtilityPair::exp_log_power(need_number(j, "param", "utility"));
    if (fam == "stretched-exp") return UtilityPair::stretched_exp(need_number(j, "param", "utility"));
    if (fam == "shannon-companion") return UtilityPair::shannon_companion();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("utility: ") + e.what());
  }
  throw ConfigError("utility: unknown family '" + fam + "'");
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const Json& j) {
  if (!j.is_object()) throw ConfigError("config root must be an object");
  ScenarioConfig cfg;
  cfg.topology = detail::parse_topology(detail::need(j, "topology", "config"));
  const std::size_t n = cfg.topology.node_count();
  cfg.arrivals = detail::parse_arrivals(detail::need(j, "arrivals", "config"), n);

  if (j.contains("rates")) {
    const Json& r = j.at("rates");
    const auto fam = detail::need(r, "family", "rates").get<std::string>();
    if (fam == "sir") cfg.rates = {RateFamily::Tag::sir, 0.0};
    else if (fam == "shannon") cfg.rates = {RateFamily::Tag::shannon, 0.0};
    else if (fam == "sinr") cfg.rates = {RateFamily::Tag::sinr, detail::need_number(r, "noise", "rates")};
    else throw ConfigError("rates: unknown family '" + fam + "'");
    if (cfg.rates.noise < 0) throw ConfigError("rates: noise must be nonnegative");
  }

  if (j.contains("scheduler")) {
    const auto s = j.at("scheduler").get<std::string>();
    if (s == "d1") cfg.scheduler = Scheduler::d1;
    else if (s == "d2") cfg.scheduler = Scheduler::d2;
    else if (s == "uniformized") cfg.scheduler = Scheduler::uniformized;
    else throw ConfigError("scheduler: unknown value '" + s + "'");
  }

  if (j.contains("routing")) {
    const Json& r = j.at("routing");
    const auto mode = detail::need(r, "mode", "routing").get<std::string>();
    if (mode == "multi-hop") {
      cfg.routing.multi_hop = true;
      cfg.routing.q = detail::need_number(r, "q", "routing");
      if (r.contains("degree")) {
        const auto d = r.at("degree").get<std::string>();
        if (d == "lattice") cfg.routing.degree = RoutingDegree::lattice;
        else if (d == "power") cfg.routing.degree = RoutingDegree::power;
        else throw ConfigError("routing: unknown degree convention '" + d + "'");
      }
    } else if (mode != "single-hop") {
      throw ConfigError("routing: unknown mode '" + mode + "'");
    }
  }

  const Json& t = detail::need(j, "time", "config");
  const auto model = detail::need(t, "model", "time").get<std::string>();
  if (model == "discrete") cfg.time_model = TimeModel::discrete;
  else if (model == "continuous") cfg.time_model = TimeModel::continuous;
  else throw ConfigError("time: unknown model '" + model + "'");
  cfg.horizon = detail::need_number(t, "horizon", "time");
  if (t.contains("burn_in")) cfg.burn_in_fraction = t.at("burn_in").get<double>();
  if (cfg.time_model == TimeModel::continuous) cfg.scheduler = Scheduler::uniformized;

  if (j.contains("run")) {
    const Json& r = j.at("run");
    if (r.contains("replications")) cfg.replications = r.at("replications").get<int>();
    if (r.contains("seed")) cfg.master_seed = r.at("seed").get<std::uint64_t>();
    if (r.contains("batches")) cfg.batches = r.at("batches").get<int>();
    if (r.contains("trace_stride")) cfg.trace_stride = r.at("trace_stride").get<std::int64_t>();
  }

  if (j.contains("lyapunov")) {
    const Json& l = j.at("lyapunov");
    LyapunovSpec spec;
    const Json& nu = detail::need(l, "nu", "lyapunov");
    if (nu.is_array())
      for (const Json& v : nu) spec.nu.push_back(v.get<double>());
    else
      spec.nu.assign(n, nu.get<double>());
    if (spec.nu.size() != n) throw ConfigError("lyapunov: nu must cover every node");
    spec.epsilon = detail::need_number(l, "epsilon", "lyapunov");
    if (l.contains("utility")) spec.utility = detail::parse_utility(l.at("utility"));
    cfg.lyapunov = std::move(spec);
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

// Property-suite knobs for the verify subcommand. Counts default to the
// documented suite sizes; a "verify" section may override any of them or
// restrict the suites run.
struct VerifyOptions {
  std::vector<std::string> suites;  // empty: every applicable suite
  int fairness_states = 100;
  int fairness_witnesses = 1000;
  std::int64_t fairness_max_queue = 30;
  int coupling_pairs = 1000;
  std::int64_t coupling_slots = 1000;
  std::int64_t d1_slots = 100000;
  std::int64_t exclusion_slots = 1000000;
  std::vector<double> feasibility_cell;  // per-cell arrival means; empty: skip
};

// Exact-solve knobs: fixed cap when given, else auto cap growth from
// initial_cap until the boundary mass drops below tail.
struct ExactOptions {
  std::optional<std::int64_t> cap;
  std::int64_t initial_cap = 15;
  double tail = 1e-8;
};

namespace detail {

inline std::vector<std::string> parse_bound_checks(const Json& root) {
  std::vector<std::string> out;
  if (!root.contains("bounds")) return out;
  const Json& b = root.at("bounds");
  if (!b.is_array()) throw ConfigError("bounds: must be an array of check names");
  for (const Json& v : b) {
    const auto name = v.get<std::string>();
    if (name != "thm22" && name != "thm23" && name != "thm41" && name != "thm55")
      throw ConfigError("bounds: unknown check '" + name + "'");
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

inline std::vector<double> parse_sweep_grid(const Json& root) {
  std::vector<double> grid;
  if (!root.contains("sweep")) return grid;
  const Json& s = root.at("sweep");
  if (s.contains("lambdas")) {
    for (const Json& v : s.at("lambdas")) grid.push_back(v.get<double>());
  } else {
    const double from = need_number(s, "from", "sweep");
    const double to = need_number(s, "to", "sweep");
    const auto steps = need(s, "steps", "sweep").get<int>();
    if (steps < 2) throw ConfigError("sweep: steps must be at least 2");
    for (int i = 0; i < steps; ++i)
      grid.push_back(from + (to - from) * i / (steps - 1));
  }
  for (double l : grid)
    if (!(l >= 0)) throw ConfigError("sweep: arrival means must be nonnegative");
  if (grid.empty()) throw ConfigError("sweep: empty grid");
  return grid;
}

inline VerifyOptions parse_verify(const Json& root) {
  VerifyOptions v;
  if (!root.contains("verify")) return v;
  const Json& j = root.at("verify");
  if (j.contains("suites"))
    for (const Json& s : j.at("suites")) v.suites.push_back(s.get<std::string>());
  if (j.contains("fairness_states")) v.fairness_states = j.at("fairness_states").get<int>();
  if (j.contains("fairness_witnesses")) v.fairness_witnesses = j.at("fairness_witnesses").get<int>();
  if (j.contains("fairness_max_queue")) v.fairness_max_queue = j.at("fairness_max_queue").get<std::int64_t>();
  if (j.contains("coupling_pairs")) v.coupling_pairs = j.at("coupling_pairs").get<int>();
  if (j.contains("coupling_slots")) v.coupling_slots = j.at("coupling_slots").get<std::int64_t>();
  if (j.contains("d1_slots")) v.d1_slots = j.at("d1_slots").get<std::int64_t>();
  if (j.contains("exclusion_slots")) v.exclusion_slots = j.at("exclusion_slots").get<std::int64_t>();
  if (j.contains("feasibility_cell"))
    for (const Json& l : j.at("feasibility_cell")) v.feasibility_cell.push_back(l.get<double>());
  if (v.fairness_states < 1 || v.fairness_witnesses < 1 || v.coupling_pairs < 1 ||
      v.coupling_slots < 1 || v.d1_slots < 1 || v.exclusion_slots < 1 ||
      v.fairness_max_queue < 1)
    throw ConfigError("verify: counts must be positive");
  return v;
}

inline ExactOptions parse_exact(const Json& root) {
  ExactOptions e;
  if (!root.contains("exact")) return e;
  const Json& j = root.at("exact");
  if (j.contains("cap")) e.cap = j.at("cap").get<std::int64_t>();
  if (j.contains("initial_cap")) e.initial_cap = j.at("initial_cap").get<std::int64_t>();
  if (j.contains("tail")) e.tail = j.at("tail").get<double>();
  if ((e.cap && *e.cap < 1) || e.initial_cap < 1 || !(e.tail > 0))
    throw ConfigError("exact: cap must be >= 1 and tail positive");
  return e;
}

}  // namespace detail

struct LoadedConfig {
  Json raw;
  ScenarioConfig scenario;
  std::string digest;
  std::vector<std::string> bound_checks;
  std::vector<double> sweep_grid;
  VerifyOptions verify;
  ExactOptions exact;
};

inline LoadedConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  LoadedConfig lc;
  lc.raw = j;
  lc.scenario = parse_scenario(j);
  lc.digest = canonical_digest(j);
  try {
    lc.bound_checks = detail::parse_bound_checks(j);
    lc.sweep_grid = detail::parse_sweep_grid(j);
    lc.verify = detail::parse_verify(j);
    lc.exact = detail::parse_exact(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return lc;
}

}  // namespace latqueue
