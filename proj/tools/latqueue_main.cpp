// latqueue command line runner.
//
// Subcommands:
//   simulate  run replications, write a JSONL run record and a trace CSV
//   bounds    evaluate the bound checks named in the config, write a CSV table
//   verify    run property suites (fairness, conditions, schedulers, coupling,
//             feasibility) against the configured scenario
//   sweep     re-run the scenario across an arrival-rate grid, classify each
//   exact     solve the truncated chain and hard-check bounds and flow balance
//
// Exit codes: 0 success, 1 property or bound violation, 2 config error.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "latqueue/analysis.hpp"
#include "latqueue/config.hpp"
#include "latqueue/exact.hpp"
#include "latqueue/feasibility.hpp"
#include "latqueue/io.hpp"
#include "latqueue/rates.hpp"
#include "latqueue/rng.hpp"
#include "latqueue/sim_continuous.hpp"
#include "latqueue/sim_discrete.hpp"
#include "latqueue/stats.hpp"
#include "latqueue/utility.hpp"

namespace lq = latqueue;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir;
  std::optional<std::int64_t> trace_stride;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "scenario config (JSON)")->required();
  cmd->add_option("--seed", o.seed, "override the master seed");
  cmd->add_option("--jobs", o.jobs, "replication-level worker threads")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out_dir, "output directory (default $LATQUEUE_OUT or ./out)");
  cmd->add_option("--trace-stride", o.trace_stride,
                  "trace sampling stride (0 auto, negative disables)");
}

std::filesystem::path resolve_out_dir(const CommonOpts& o) {
  std::string dir = o.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("LATQUEUE_OUT")) dir = env;
    if (dir.empty()) dir = "out";
  }
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

lq::LoadedConfig load_with_overrides(const CommonOpts& o) {
  lq::LoadedConfig lc = lq::load_config(o.config_path);
  if (o.seed) lc.scenario.master_seed = *o.seed;
  if (o.trace_stride) lc.scenario.trace_stride = *o.trace_stride;
  return lc;
}

// Auto stride targets roughly a thousand trace samples per run.
std::int64_t effective_stride(const lq::ScenarioConfig& cfg) {
  if (cfg.trace_stride != 0) return cfg.trace_stride;
  double steps = cfg.horizon;
  if (cfg.time_model == lq::TimeModel::continuous)
    steps = cfg.horizon * lq::uniformization_rate(cfg);
  return std::max<std::int64_t>(1, std::llround(steps) / 1000);
}

using TraceRow = std::pair<double, lq::QueueState>;

std::vector<lq::TrajectoryStats> run_replications(const lq::ScenarioConfig& cfg, int jobs,
                                                  std::vector<TraceRow>* trace0) {
  const int reps = cfg.replications;
  std::vector<lq::TrajectoryStats> out(static_cast<std::size_t>(reps));
  lq::TraceSink sink;
  if (trace0)
    sink = [trace0](double t, const lq::QueueState& x) { trace0->emplace_back(t, x); };
  auto run_one = [&](int r) {
    const lq::TraceSink& s = (r == 0 && trace0) ? sink : lq::TraceSink{};
    out[static_cast<std::size_t>(r)] =
        cfg.time_model == lq::TimeModel::discrete
            ? lq::run_discrete(cfg, static_cast<std::uint64_t>(r), s)
            : lq::run_continuous(cfg, static_cast<std::uint64_t>(r), s);
  };
  jobs = std::min(jobs, reps);
  if (jobs <= 1) {
    for (int r = 0; r < reps; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) run_one(r);
      });
    for (auto& t : pool) t.join();
  }
  return out;
}

lq::Json estimate_json(const lq::MomentEstimate& e) {
  return lq::Json{{"point", e.point},
                  {"half_width", e.half_width},
                  {"batches", e.batches},
                  {"conclusive", e.conclusive}};
}

lq::Json pooled_stats_json(const lq::ScenarioConfig& cfg,
                           const std::vector<lq::TrajectoryStats>& reps) {
  const std::size_t n = cfg.topology.node_count();
  lq::Json j;
  j["nodes"] = n;
  j["replications"] = reps.size();
  lq::Json qs = lq::Json::array(), q2 = lq::Json::array(), sv = lq::Json::array();
  for (std::size_t i = 0; i < n; ++i) {
    qs.push_back(estimate_json(lq::pooled_node_mean(reps, &lq::TrajectoryStats::batch_x, i)));
    q2.push_back(estimate_json(lq::pooled_node_mean(reps, &lq::TrajectoryStats::batch_x2, i)));
    sv.push_back(estimate_json(lq::pooled_node_mean(reps, &lq::TrajectoryStats::batch_service, i)));
  }
  j["mean_queue"] = std::move(qs);
  j["mean_queue_sq"] = std::move(q2);
  j["service_rate"] = std::move(sv);
  j["avg_queue"] = estimate_json(lq::pooled_average(reps, &lq::TrajectoryStats::batch_x));
  double w1 = 0, w2 = 0;
  for (const auto& r : reps) {
    w1 += r.window_first;
    w2 += r.window_second;
  }
  j["window_first"] = w1 / static_cast<double>(reps.size());
  j["window_second"] = w2 / static_cast<double>(reps.size());
  return j;
}

struct CheckRow {
  std::string name;
  std::optional<lq::BoundReport> report;  // empty: inapplicable
  std::string why;                        // reason when inapplicable
};

std::vector<lq::MomentEstimate> per_node_estimates(
    const std::vector<lq::TrajectoryStats>& reps,
    const std::vector<std::vector<double>> lq::TrajectoryStats::* series, std::size_t n) {
  std::vector<lq::MomentEstimate> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(lq::pooled_node_mean(reps, series, i));
  return out;
}

// Evaluates the named checks against pooled simulation estimates. Checks
// whose premises the scenario does not meet come back without a report.
std::vector<CheckRow> evaluate_checks(const lq::LoadedConfig& lc,
                                      const std::vector<lq::TrajectoryStats>& reps) {
  const lq::ScenarioConfig& cfg = lc.scenario;
  const std::size_t n = cfg.topology.node_count();
  std::vector<CheckRow> rows;
  for (const std::string& name : lc.bound_checks) {
    CheckRow row{name, std::nullopt, ""};
    if (name == "thm22") {
      if (!cfg.lyapunov) {
        row.why = "needs a lyapunov block (nu, epsilon)";
      } else {
        auto e_g = per_node_estimates(reps, &lq::TrajectoryStats::batch_g, n);
        auto e_d = per_node_estimates(reps, &lq::TrajectoryStats::batch_delta, n);
        row.report = lq::bound_first_moment(e_g, e_d, *cfg.lyapunov);
      }
    } else if (name == "thm23") {
      if (!cfg.lyapunov) {
        row.why = "needs a lyapunov block (nu, epsilon)";
      } else if (cfg.lyapunov->utility.family() != lq::UtilityPair::Family::quadratic_inverse) {
        row.why = "stated for g=y^2, h=-1/y";
      } else if (cfg.routing.multi_hop) {
        row.why = "stated for single-hop networks";
      } else if (cfg.time_model != lq::TimeModel::discrete) {
        row.why = "stated for the slotted model";
      } else {
        auto e_x = per_node_estimates(reps, &lq::TrajectoryStats::batch_x, n);
        auto e_x2 = per_node_estimates(reps, &lq::TrajectoryStats::batch_x2, n);
        auto both = lq::bound_second_moment(cfg.arrivals, *cfg.lyapunov, e_x, e_x2);
        row.report = both.at(0);
        rows.push_back(row);
        row.name = "thm23-pernode";
        row.report = both.at(1);
      }
    } else if (name == "thm41") {
      if (!cfg.routing.multi_hop || cfg.time_model != lq::TimeModel::discrete) {
        row.why = "needs a slotted multi-hop scenario";
      } else {
        const double lambda = cfg.multihop_lambda();
        row.report = lq::bound_multihop_discrete(
            cfg.arrivals.at(0).moment(2), lambda, cfg.routing.q,
            cfg.topology.lattice_dimension(), cfg.routing.degree,
            lq::pooled_average(reps, &lq::TrajectoryStats::batch_x));
      }
    } else if (name == "thm55") {
      if (!cfg.routing.multi_hop || cfg.time_model != lq::TimeModel::continuous) {
        row.why = "needs a continuous-time multi-hop scenario";
      } else {
        row.report = lq::bound_multihop_continuous(
            cfg.multihop_lambda(), cfg.routing.q, cfg.topology.lattice_dimension(),
            lq::pooled_average(reps, &lq::TrajectoryStats::batch_x));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Bound checks evaluated on exact stationary moments: CI-free, hard verdicts.
std::vector<CheckRow> evaluate_checks_exact(const lq::LoadedConfig& lc,
                                            const lq::StationaryResult& st) {
  const lq::ScenarioConfig& cfg = lc.scenario;
  const std::size_t n = cfg.topology.node_count();
  auto exactify = [](const std::vector<double>& v) {
    std::vector<lq::MomentEstimate> out;
    for (double x : v) out.push_back(lq::exact_estimate(x));
    return out;
  };
  std::vector<CheckRow> rows;
  for (const std::string& name : lc.bound_checks) {
    CheckRow row{name, std::nullopt, ""};
    if (name == "thm22") {
      if (!cfg.lyapunov) {
        row.why = "needs a lyapunov block (nu, epsilon)";
      } else {
        row.report = lq::bound_first_moment(exactify(st.mean_g), exactify(st.mean_delta),
                                            *cfg.lyapunov);
      }
    } else if (name == "thm23") {
      if (!cfg.lyapunov ||
          cfg.lyapunov->utility.family() != lq::UtilityPair::Family::quadratic_inverse) {
        row.why = "needs a lyapunov block with g=y^2, h=-1/y";
      } else if (cfg.time_model != lq::TimeModel::discrete) {
        row.why = "stated for the slotted model";
      } else {
        auto both = lq::bound_second_moment(cfg.arrivals, *cfg.lyapunov, exactify(st.mean_x),
                                            exactify(st.mean_x2));
        row.report = both.at(0);
        rows.push_back(row);
        row.name = "thm23-pernode";
        row.report = both.at(1);
      }
    } else {
      row.why = "multi-hop checks need a simulated multi-hop scenario";
    }
    rows.push_back(std::move(row));
    (void)n;
  }
  return rows;
}

lq::Json check_row_json(const CheckRow& row) {
  lq::Json j;
  j["name"] = row.name;
  if (row.report) {
    j["empirical"] = row.report->lhs;
    j["theoretical"] = row.report->rhs;
    j["ci"] = row.report->lhs_ci + row.report->rhs_ci;
    j["verdict"] = lq::BoundReport::verdict_name(row.report->verdict);
    if (!row.report->note.empty()) j["note"] = row.report->note;
  } else {
    j["verdict"] = "inapplicable";
    j["note"] = row.why;
  }
  return j;
}

int write_bounds_csv(const std::filesystem::path& path, const std::vector<CheckRow>& rows) {
  lq::CsvWriter csv(path, {"name", "theoretical", "empirical", "ci", "verdict"});
  int violations = 0;
  for (const CheckRow& row : rows) {
    if (!row.report) {
      csv.row({row.name, "", "", "", "inapplicable"});
      continue;
    }
    const lq::BoundReport& r = *row.report;
    csv.row_of(row.name, r.rhs, r.lhs, r.lhs_ci + r.rhs_ci, lq::BoundReport::verdict_name(r.verdict));
    if (r.verdict == lq::BoundReport::Verdict::violated) ++violations;
  }
  return violations;
}

void print_check_rows(const std::vector<CheckRow>& rows) {
  for (const CheckRow& row : rows) {
    if (row.report) {
      const lq::BoundReport& r = *row.report;
      std::cout << row.name << ": " << r.lhs << " <= " << r.rhs
                << " (ci " << r.lhs_ci + r.rhs_ci << ") -> " << lq::BoundReport::verdict_name(r.verdict);
      if (!r.note.empty()) std::cout << "  [" << r.note << "]";
      std::cout << "\n";
    } else {
      std::cout << row.name << ": inapplicable (" << row.why << ")\n";
    }
  }
}

int cmd_simulate(const CommonOpts& o) {
  const auto t0 = std::chrono::steady_clock::now();
  lq::LoadedConfig lc = load_with_overrides(o);
  lq::ScenarioConfig& cfg = lc.scenario;
  const auto out = resolve_out_dir(o);

  const std::int64_t stride = effective_stride(cfg);
  std::vector<TraceRow> trace0;
  lq::ScenarioConfig run_cfg = cfg;
  run_cfg.trace_stride = stride;
  auto reps = run_replications(run_cfg, o.jobs, stride > 0 ? &trace0 : nullptr);

  lq::RunRecordWriter rec(out / (lc.digest + "_run.jsonl"), lc.digest);
  for (std::size_t r = 0; r < reps.size(); ++r) {
    lq::Json j;
    j["type"] = "replication";
    j["replication"] = r;
    j["seed"] = lq::replication_seed(cfg.master_seed, static_cast<std::uint64_t>(r));
    j["stats"] = lq::stats_to_json(reps[r]);
    rec.write(std::move(j));
  }
  auto checks = evaluate_checks(lc, reps);
  lq::Json summary;
  summary["type"] = "summary";
  summary["master_seed"] = cfg.master_seed;
  lq::Json seeds = lq::Json::array();
  for (std::size_t r = 0; r < reps.size(); ++r)
    seeds.push_back(lq::replication_seed(cfg.master_seed, static_cast<std::uint64_t>(r)));
  summary["seeds"] = std::move(seeds);
  summary["stats"] = pooled_stats_json(cfg, reps);
  lq::Json bj = lq::Json::array();
  for (const auto& row : checks) bj.push_back(check_row_json(row));
  summary["bounds"] = std::move(bj);
  summary["wall_clock_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
          .count();
  rec.write(std::move(summary));

  if (stride > 0) {
    const bool discrete = cfg.time_model == lq::TimeModel::discrete;
    lq::CsvWriter csv(out / (lc.digest + "_trace.csv"),
                      {discrete ? "slot" : "time", "node", "queue_len"});
    for (const auto& [t, x] : trace0)
      for (std::size_t i = 0; i < x.size(); ++i) csv.row_of(t, i, x[i]);
  }

  int violations = 0;
  for (const auto& row : checks)
    if (row.report && row.report->verdict == lq::BoundReport::Verdict::violated) ++violations;
  std::cout << "simulate: " << reps.size() << " replication(s), digest " << lc.digest << "\n";
  print_check_rows(checks);
  return violations ? 1 : 0;
}

int cmd_bounds(const CommonOpts& o) {
  lq::LoadedConfig lc = load_with_overrides(o);
  if (lc.bound_checks.empty())
    throw lq::ConfigError("bounds: config must name the checks to run (\"bounds\": [...])");
  const auto out = resolve_out_dir(o);
  auto reps = run_replications(lc.scenario, o.jobs, nullptr);
  auto rows = evaluate_checks(lc, reps);
  const int violations = write_bounds_csv(out / (lc.digest + "_bounds.csv"), rows);
  print_check_rows(rows);
  return violations ? 1 : 0;
}

int cmd_exact(const CommonOpts& o) {
  lq::LoadedConfig lc = load_with_overrides(o);
  const auto out = resolve_out_dir(o);
  lq::StationaryResult st = lc.exact.cap
                                ? lq::exact_stationary(lc.scenario, *lc.exact.cap)
                                : lq::exact_stationary_auto(lc.scenario, lc.exact.initial_cap,
                                                            lc.exact.tail);
  bool ok = st.residual < 1e-10;
  std::cout << "exact: cap " << st.cap << ", " << st.states << " states, residual "
            << st.residual << ", boundary mass " << st.boundary_mass << "\n";
  const std::size_t n = lc.scenario.topology.node_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = lc.scenario.arrivals[i].moment(1);
    const double balance = std::abs(st.mean_psi[i] - (lam - st.leak[i]));
    if (balance > 1e-8) ok = false;
    std::cout << "  node " << i << ": E X " << st.mean_x[i] << ", E X^2 " << st.mean_x2[i]
              << ", E rate " << st.mean_psi[i] << ", flow-balance gap " << balance << "\n";
  }

  lq::RunRecordWriter rec(out / (lc.digest + "_run.jsonl"), lc.digest);
  lq::Json j;
  j["type"] = "exact";
  j["cap"] = st.cap;
  j["states"] = st.states;
  j["residual"] = st.residual;
  j["boundary_mass"] = st.boundary_mass;
  j["stats"] = {{"mean_queue", st.mean_x},
                {"mean_queue_sq", st.mean_x2},
                {"service_rate", st.mean_psi},
                {"leak", st.leak}};

  int violations = ok ? 0 : 1;
  if (!lc.bound_checks.empty()) {
    auto rows = evaluate_checks_exact(lc, st);
    violations += write_bounds_csv(out / (lc.digest + "_bounds.csv"), rows);
    print_check_rows(rows);
    lq::Json bj = lq::Json::array();
    for (const auto& row : rows) bj.push_back(check_row_json(row));
    j["bounds"] = std::move(bj);
  }
  rec.write(std::move(j));
  if (!ok) std::cout << "exact: residual or flow-balance check failed\n";
  return violations ? 1 : 0;
}

int cmd_sweep(const CommonOpts& o) {
  lq::LoadedConfig lc = load_with_overrides(o);
  if (lc.sweep_grid.empty())
    throw lq::ConfigError("sweep: config must provide a grid (\"sweep\": {...})");
  const auto out = resolve_out_dir(o);
  auto runner = [](const lq::ScenarioConfig& cfg, std::uint64_t rep) {
    return cfg.time_model == lq::TimeModel::discrete ? lq::run_discrete(cfg, rep)
                                                     : lq::run_continuous(cfg, rep);
  };
  lq::CsvWriter csv(out / (lc.digest + "_sweep.csv"),
                    {"lambda", "verdict", "window_first", "window_second"});
  for (double lam : lc.sweep_grid) {
    lq::SweepRow row = lq::sweep_point(lc.scenario, lam, runner);
    csv.row_of(row.lambda, lq::verdict_name(row.verdict), row.window_first, row.window_second);
    std::cout << "lambda " << row.lambda << ": " << lq::verdict_name(row.verdict)
              << " (windows " << row.window_first << " -> " << row.window_second << ")\n";
  }
  return 0;
}

struct SuiteResult {
  std::string name;
  bool ran = false;
  bool pass = true;
  std::string detail;
};

void report(std::vector<SuiteResult>& all, SuiteResult r) {
  std::cout << "suite " << r.name << ": " << (!r.ran ? "SKIP" : r.pass ? "PASS" : "FAIL");
  if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
  std::cout << "\n";
  all.push_back(std::move(r));
}

bool wants(const lq::VerifyOptions& v, const std::string& suite) {
  if (v.suites.empty()) return true;
  return std::find(v.suites.begin(), v.suites.end(), suite) != v.suites.end();
}

lq::QueueState random_state(const lq::Topology& topo, std::int64_t max_q, lq::Stream& rng) {
  lq::QueueState x(topo.node_count());
  bool any = false;
  for (auto& v : x) {
    v = static_cast<std::int64_t>(rng.uniform01() * static_cast<double>(max_q + 1));
    if (v > max_q) v = max_q;
    any = any || v > 0;
  }
  if (!any) x[0] = 1;
  return x;
}

int cmd_verify(const CommonOpts& o) {
  lq::LoadedConfig lc = load_with_overrides(o);
  const lq::ScenarioConfig& cfg = lc.scenario;
  const lq::VerifyOptions& vo = lc.verify;
  std::vector<SuiteResult> results;
  lq::Stream rng(lq::stream_seed(cfg.master_seed, 0, lq::StreamTag::scheduling));

  if (wants(vo, "fairness")) {
    SuiteResult r{"fairness"};
    if (cfg.rates.tag == lq::RateFamily::Tag::sinr) {
      r.detail = "no fairness statement for noisy rates";
    } else {
      r.ran = true;
      double worst = 0, worst_gap = 0;
      for (int s = 0; s < vo.fairness_states; ++s) {
        auto x = random_state(cfg.topology, vo.fairness_max_queue, rng);
        lq::FairnessReport rep =
            cfg.rates.tag == lq::RateFamily::Tag::sir
                ? lq::verify_fairness(x, cfg.topology, vo.fairness_witnesses, rng)
                : lq::verify_shannon_fairness(x, cfg.topology, vo.fairness_witnesses, rng);
        worst = std::max(worst, rep.max_violation);
        worst_gap = std::max(worst_gap, std::abs(rep.equality_gap));
      }
      r.pass = worst <= 1e-9 && worst_gap <= 1e-9;
      r.detail = "worst violation " + std::to_string(worst) + ", proportional-witness gap " +
                 std::to_string(worst_gap);
    }
    report(results, std::move(r));
  }

  if (wants(vo, "conditions")) {
    SuiteResult r{"conditions"};
    r.ran = true;
    const lq::UtilityPair u =
        cfg.lyapunov ? cfg.lyapunov->utility : lq::UtilityPair::quadratic_inverse();
    const auto growth = lq::check_queue_weight_growth(u);
    const auto shape = lq::check_rate_score_shape(u);
    r.pass = growth.ok && shape.ok;
    r.detail = std::string(u.name()) + ": weight growth " + (growth.ok ? "ok" : growth.detail) +
               ", rate score " + (shape.ok ? "ok" : shape.detail);
    report(results, std::move(r));
  }

  if (wants(vo, "d1")) {
    SuiteResult r{"d1"};
    if (cfg.time_model != lq::TimeModel::discrete ||
        cfg.rates.tag != lq::RateFamily::Tag::sir) {
      r.detail = "needs slotted SIR rates";
    } else {
      r.ran = true;
      const std::size_t n = cfg.topology.node_count();
      auto x = random_state(cfg.topology, 6, rng);
      const auto psi = lq::sir_rates(std::span<const std::int64_t>(x), cfg.topology);
      std::vector<double> hits(n, 0);
      std::vector<double> u(n);
      for (std::int64_t k = 0; k < vo.d1_slots; ++k) {
        rng.fill_uniform01(u);
        auto served = lq::schedule_d1(x, cfg.topology, u);
        for (std::size_t i = 0; i < n; ++i) hits[i] += served[i];
      }
      double worst_sigma = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = psi[i];
        const double sd = std::sqrt(std::max(p * (1 - p), 1e-12) /
                                    static_cast<double>(vo.d1_slots));
        worst_sigma = std::max(worst_sigma,
                               std::abs(hits[i] / static_cast<double>(vo.d1_slots) - p) / sd);
      }
      bool exclusion_ok = true;
      std::int64_t checked = 0;
      bool unit_kernel = cfg.topology.kernel().has_value();
      if (unit_kernel)
        for (const auto& [off, w] : cfg.topology.kernel()->support())
          unit_kernel = unit_kernel && w == 1.0;
      if (unit_kernel) {
        lq::ScenarioConfig chain = cfg;
        chain.scheduler = lq::Scheduler::d1;
        auto streams = lq::ReplicationStreams::make(cfg.master_seed, 0);
        lq::QueueState y(n, 3);
        for (std::int64_t k = 0; k < vo.exclusion_slots && exclusion_ok; ++k) {
          auto outcome = lq::step(y, chain, streams);
          ++checked;
          for (std::size_t i = 0; i < n && exclusion_ok; ++i) {
            if (!outcome.services[i]) continue;
            for (const auto& nb : cfg.topology.neighbors(i))
              if (nb.index != i && outcome.services[nb.index]) exclusion_ok = false;
          }
        }
      }
      r.pass = worst_sigma <= 4.0 && exclusion_ok;
      r.detail = "marginal worst " + std::to_string(worst_sigma) + " sigma" +
                 (checked ? ", exclusion clean over " + std::to_string(checked) + " slots"
                          : ", exclusion skipped (weighted kernel)");
    }
    report(results, std::move(r));
  }

  if (wants(vo, "coupling")) {
    SuiteResult r{"coupling"};
    if (cfg.time_model != lq::TimeModel::discrete ||
        cfg.rates.tag != lq::RateFamily::Tag::sir || cfg.routing.multi_hop) {
      r.detail = "needs slotted single-hop SIR rates";
    } else {
      r.ran = true;
      const std::size_t n = cfg.topology.node_count();
      std::int64_t violations = 0;
      for (int pair = 0; pair < vo.coupling_pairs; ++pair) {
        auto hi = random_state(cfg.topology, 8, rng);
        lq::QueueState lo(n);
        for (std::size_t i = 0; i < n; ++i)
          lo[i] = static_cast<std::int64_t>(rng.uniform01() * static_cast<double>(hi[i] + 1));
        for (auto sched : {lq::Scheduler::d1, lq::Scheduler::d2}) {
          lq::ScenarioConfig c2 = cfg;
          c2.scheduler = sched;
          lq::QueueState a = hi, b = lo;
          auto streams = lq::ReplicationStreams::make(cfg.master_seed, 1000 + pair);
          std::vector<double> u(n);
          std::vector<std::int64_t> arr(n);
          for (std::int64_t k = 0; k < vo.coupling_slots; ++k) {
            streams.scheduling.fill_uniform01(u);
            for (std::size_t i = 0; i < n; ++i)
              arr[i] = cfg.arrivals[i].sample(streams.arrivals);
            lq::step_with_inputs(a, c2, u, arr);
            lq::step_with_inputs(b, c2, u, arr);
            for (std::size_t i = 0; i < n; ++i)
              if (b[i] > a[i]) ++violations;
          }
        }
      }
      r.pass = violations == 0;
      r.detail = std::to_string(violations) + " order violations";
    }
    report(results, std::move(r));
  }

  if (wants(vo, "feasibility")) {
    SuiteResult r{"feasibility"};
    if (vo.feasibility_cell.empty()) {
      r.detail = "no feasibility_cell configured";
    } else if (!cfg.topology.kernel()) {
      r.detail = "explicit graphs carry no lattice kernel";
    } else {
      r.ran = true;
      auto cert = lq::periodic_feasibility(
          vo.feasibility_cell, *cfg.topology.kernel(),
          {static_cast<std::int64_t>(vo.feasibility_cell.size())});
      std::cout << "  spectral radius " << cert.rho << " -> "
                << (cert.feasible ? "feasible" : "infeasible") << "\n";
      if (cert.feasible) {
        std::cout << "  witness p:";
        for (double p : cert.witness) std::cout << " " << p;
        std::cout << " (margin " << cert.margin << ")\n";
      }
      r.pass = true;
      r.detail = cert.feasible ? "feasible, witness printed" : "infeasible";
    }
    report(results, std::move(r));
  }

  bool any_fail = false;
  for (const auto& r : results) any_fail = any_fail || (r.ran && !r.pass);
  return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interacting-queue network simulator and bound verifier"};
  app.require_subcommand(1);
  CommonOpts o;
  auto* sim = app.add_subcommand("simulate", "run replications, write run records and a trace");
  auto* bounds = app.add_subcommand("bounds", "evaluate configured bound checks");
  auto* verify = app.add_subcommand("verify", "run property suites");
  auto* sweep = app.add_subcommand("sweep", "classify stability across an arrival grid");
  auto* exact = app.add_subcommand("exact", "solve the truncated chain and hard-check bounds");
  for (auto* c : {sim, bounds, verify, sweep, exact}) add_common(c, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o);
    if (bounds->parsed()) return cmd_bounds(o);
    if (verify->parsed()) return cmd_verify(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (exact->parsed()) return cmd_exact(o);
  } catch (const lq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
