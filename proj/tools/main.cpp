// chainmatch: one-way trip chains inside a round-trip car-sharing fleet.
// Subcommands: gen, ingest, enumerate, solve, simulate, sweep, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "chainmatch/ingest.hpp"
#include "chainmatch/sweep.hpp"

using namespace chainmatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitTimeout = 3;
constexpr int kExitIo = 4;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::IoError:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

struct ConfigFlags {
  IngestConfig cfg;

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", cfg.tau, "slots per horizon (default 6)");
    cmd->add_option("--slot-minutes", cfg.slot_minutes, "minutes per slot (default 10)");
    cmd->add_option("--active-fraction", cfg.active_fraction,
                    "share of users active at the base price (default 0.8)");
    cmd->add_option("--cost-factor", cfg.cost_factor, "travel cost / base price (default 0.2)");
    cmd->add_option_function<double>(
        "--sigma", [this](double v) { cfg.sigma_fixed = Money::from_dollars(v); },
        "threshold stddev for inactive users, in currency (default 2.00)");
    cmd->add_option_function<double>(
        "--fare-min", [this](double v) { cfg.fare_min = Money::from_dollars(v); },
        "minimum synthetic fare (default 5.00)");
    cmd->add_option_function<double>(
        "--fare-max", [this](double v) { cfg.fare_max = Money::from_dollars(v); },
        "maximum synthetic fare (default 25.00)");
    cmd->add_option("--regions-per-zone", cfg.regions_per_zone,
                    "stations carved out of each CSV zone (default 4)");
  }
};

Instance load_or_die(const std::string& path) { return load_instance(path); }

// A solution is priced on the costs of its own cost factor; evaluation has to
// re-derive the instance's costs the same way before loading it.
double solution_cost_factor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    return j.at("objective").at("cost_factor").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::IoError, std::string("solution parse failed: ") + e.what());
  }
}

void print_pool_stats(const ChainPool& pool) {
  auto hist = pool_stats(pool);
  std::printf("chains: %zu (depth cutoff %d)\n", pool.chains.size(), pool.depth_cutoff);
  for (const auto& [len, n] : hist) std::printf("  length %u: %zu\n", len, n);
}

int run(int argc, char** argv) {
  CLI::App app{"N-user matching for one-way trips in a round-trip car-sharing system"};
  app.require_subcommand(1);

  // ---- gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  std::int64_t gen_users = 300;
  StationId gen_stations = 10;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "instance.json";
  ConfigFlags gen_cfg;
  gen->add_option("--users", gen_users, "number of one-way trip users")->required();
  gen->add_option("--stations", gen_stations, "number of stations")->required();
  gen->add_option("--seed", gen_seed, "rng seed")->required();
  gen->add_option("--out", gen_out, "output instance path");
  gen_cfg.attach(gen);

  // ---- ingest
  auto* ingest = app.add_subcommand("ingest", "build an instance from a trip CSV");
  std::string ing_csv, ing_out = "instance.json", ing_window;
  std::uint64_t ing_seed = 0;
  ConfigFlags ing_cfg;
  ingest->add_option("--csv", ing_csv, "input CSV path")->required();
  ingest->add_option("--out", ing_out, "output instance path");
  ingest->add_option("--seed", ing_seed, "rng seed for classification and zone mapping")
      ->required();
  ingest->add_option("--window-start", ing_window,
                     "ISO-8601 window start (default: earliest pickup)");
  ing_cfg.attach(ingest);

  // ---- enumerate
  auto* enumerate = app.add_subcommand("enumerate", "enumerate feasible chains");
  std::string enum_instance, enum_dump;
  Slot enum_depth = 0;
  enumerate->add_option("--instance", enum_instance, "instance path")->required();
  enumerate->add_option("--depth", enum_depth, "depth cutoff (default tau-1)");
  enumerate->add_option("--dump", enum_dump, "write the pool as JSON lines");

  // ---- solve
  auto* solve = app.add_subcommand("solve", "select an optimal disjoint chain set");
  std::string sol_instance, sol_out = "solution.json", sol_model = "max_expected_profit";
  Slot sol_depth = 0;
  double sol_alpha = 0.5, sol_timeout = 60.0;
  std::optional<double> sol_cf;
  solve->add_option("--instance", sol_instance, "instance path")->required();
  solve->add_option("--model", sol_model, "max_service | max_profit | max_expected_profit");
  solve->add_option("--alpha", sol_alpha, "risk factor in (0, 1]");
  solve->add_option("--cost-factor", sol_cf,
                    "recompute travel costs at this cost factor before solving");
  solve->add_option("--depth", sol_depth, "depth cutoff (default tau-1)");
  solve->add_option("--timeout-s", sol_timeout, "solver wall-clock budget");
  solve->add_option("--out", sol_out, "output solution path");

  // ---- simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo evaluation of a solution");
  std::string sim_instance, sim_solution, sim_out = "sim_report.json";
  std::uint64_t sim_samples = 100000, sim_seed = 0;
  simulate->add_option("--instance", sim_instance, "instance path")->required();
  simulate->add_option("--solution", sim_solution, "solution path")->required();
  simulate->add_option("--samples", sim_samples, "number of draws");
  simulate->add_option("--seed", sim_seed, "rng seed")->required();
  simulate->add_option("--out", sim_out, "output report path");
  std::string sim_trace;
  simulate->add_option("--trace", sim_trace, "write a per-sample CSV trace here");

  // ---- sweep
  auto* sweep = app.add_subcommand("sweep", "parameter sweep over (alpha, cost factor)");
  std::string sw_instance, sw_out_dir = "sweep_out";
  SweepSpec sw_spec;
  std::vector<std::string> sw_models;
  sweep->add_option("--instance", sw_instance, "instance path")->required();
  sweep->add_option("--seed", sw_spec.seed, "master seed (required for reproducibility)")
      ->required();
  sweep->add_option("--alphas", sw_spec.alpha_grid, "risk factor grid");
  sweep->add_option("--cfs", sw_spec.cf_grid, "cost factor grid");
  sweep->add_option("--models", sw_models, "models to sweep (default: all three)");
  sweep->add_option("--depth", sw_spec.depth_cutoff, "depth cutoff (default tau-1)");
  sweep->add_option("--samples", sw_spec.mc_samples, "Monte Carlo draws per cell");
  sweep->add_option("--timeout-s", sw_spec.timeout_s, "solver budget per cell");
  sweep->add_option("--threads", sw_spec.threads, "worker threads across cells");
  sweep->add_option("--out-dir", sw_out_dir, "report directory");

  // ---- report
  auto* report = app.add_subcommand("report", "re-emit tables from a saved sweep");
  std::string rep_sweep, rep_out_dir = "report_out";
  std::vector<std::string> rep_solutions;
  std::string rep_instance;
  std::uint32_t rep_baseline = 0, rep_total = 0;
  report->add_option("--sweep", rep_sweep, "sweep.json produced by the sweep command");
  report->add_option("--out-dir", rep_out_dir, "report directory");
  report->add_option("--instance", rep_instance, "instance (for --solutions)");
  report->add_option("--solutions", rep_solutions, "solution files for a served-user summary");
  report->add_option("--baseline", rep_baseline, "round-trip demand count for the summary");
  report->add_option("--total", rep_total,
                     "total users incl. round-trip (default: instance + baseline)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (gen->parsed()) {
    gen_cfg.cfg.rng_seed = gen_seed;
    Instance inst = generate_synthetic(gen_users, gen_stations, gen_cfg.cfg);
    save_instance(inst, gen_out);
    std::printf("wrote %s: %zu users, %d stations, tau=%d\n", gen_out.c_str(),
                inst.trips.size(), inst.station_count(), inst.horizon.tau);
    return kExitOk;
  }

  if (ingest->parsed()) {
    ing_cfg.cfg.rng_seed = ing_seed;
    CsvParseResult parsed = load_trips_csv(ing_csv, ing_cfg.cfg);
    for (const auto& err : parsed.row_errors)
      std::fprintf(stderr, "line %u: %s\n", err.line_no, err.reason.c_str());

    std::int64_t window_start = 0;
    if (!ing_window.empty()) {
      auto ts = parse_iso8601(ing_window);
      if (!ts) throw Error(Errc::InvalidField, "--window-start is not ISO-8601");
      window_start = *ts;
    } else {
      bool any = false;
      for (const auto& r : parsed.records)
        if (!r.pre_discretized && (!any || r.pickup_time < window_start)) {
          window_start = r.pickup_time;
          any = true;
        }
    }

    auto trips = discretize(parsed.records, ing_cfg.cfg, window_start);
    FilterReport filtered = apply_filters(trips);
    auto classified = classify_users(filtered.kept, ing_cfg.cfg);
    Instance inst = make_instance(Horizon{ing_cfg.cfg.tau, ing_cfg.cfg.slot_minutes},
                                  ing_cfg.cfg, std::move(classified), ing_seed,
                                  Provenance::CsvImport);
    save_instance(inst, ing_out);
    std::printf("parsed %zu rows (%zu malformed)\n",
                parsed.records.size() + parsed.row_errors.size(), parsed.row_errors.size());
    std::printf("removed %zu round-trip and %zu same-slot trips; kept %zu\n",
                filtered.removed_count(RemovalReason::RoundTrip),
                filtered.removed_count(RemovalReason::NonCausal), filtered.kept.size());
    std::printf("wrote %s\n", ing_out.c_str());
    return kExitOk;
  }

  if (enumerate->parsed()) {
    Instance inst = load_or_die(enum_instance);
    Slot depth = enum_depth == 0 ? inst.horizon.tau - 1 : enum_depth;
    ChainPool pool = enumerate_chains(inst, depth);
    print_pool_stats(pool);
    if (!enum_dump.empty()) {
      dump_pool(inst, pool, enum_dump);
      std::printf("dumped pool to %s\n", enum_dump.c_str());
    }
    return kExitOk;
  }

  if (solve->parsed()) {
    Instance inst = load_or_die(sol_instance);
    double cf = sol_cf.value_or(inst.config.cost_factor);
    if (sol_cf) reprice_costs(inst, cf);
    Slot depth = sol_depth == 0 ? inst.horizon.tau - 1 : sol_depth;
    ChainPool pool = enumerate_chains(inst, depth);
    Objective obj{model_from_name(sol_model), sol_alpha, cf};
    PackingProblem prob = build_problem(pool, inst, obj);
    Solution sol = solve_exact(prob, inst, SolveOptions{sol_timeout});
    save_solution(sol, sol_out);

    std::printf("%s: objective %.2f, served %u of %zu users, %zu chains [%s]\n",
                model_name(obj.model), sol.objective_value, sol.served_user_count,
                inst.trips.size(), sol.chains.size(), solve_status_name(sol.status));
    for (const auto& [len, share] : chain_length_breakdown(sol, depth))
      std::printf("  length %u: %.1f%% of profit, %.1f%% of served users\n", len,
                  share.profit_share_pct, share.served_share_pct);
    std::printf("wrote %s\n", sol_out.c_str());
    return sol.status == SolveStatus::TimeoutIncumbent ? kExitTimeout : kExitOk;
  }

  if (simulate->parsed()) {
    Instance inst = load_or_die(sim_instance);
    reprice_costs(inst, solution_cost_factor(sim_solution));
    Solution sol = load_solution(sim_solution, inst);
    SimConfig sim_cfg{sim_samples, sim_seed};
    SimReport rep = monte_carlo(sol, inst, sim_cfg);
    save_report(rep, sim_out);
    if (!sim_trace.empty()) {
      write_sample_trace(sol, inst, sim_cfg, sim_trace);
      std::printf("wrote %s\n", sim_trace.c_str());
    }
    std::printf("realized profit %.2f +/- %.2f, service rate %.2f%%, %llu samples\n",
                rep.realized_profit_mean, rep.realized_profit_stddev,
                100.0 * rep.service_rate_mean,
                static_cast<unsigned long long>(rep.n_samples));
    std::printf("wrote %s\n", sim_out.c_str());
    return kExitOk;
  }

  if (sweep->parsed()) {
    Instance inst = load_or_die(sw_instance);
    if (!sw_models.empty()) {
      sw_spec.models.clear();
      for (const auto& name : sw_models) sw_spec.models.push_back(model_from_name(name));
    }
    SweepResult result = run_sweep(inst, sw_spec);
    emit_report(result, sw_out_dir);
    bool timed_out = false;
    for (const auto& r : result.records) {
      if (r.status == SolveStatus::TimeoutIncumbent) timed_out = true;
      std::printf("%-20s alpha=%.2f cf=%.2f profit=%10.2f service=%6.2f%% [%s] %.0f ms\n",
                  model_name(r.model), r.alpha, r.cf, r.expected_profit, r.service_rate_pct,
                  solve_status_name(r.status), r.wall_time_ms);
    }
    std::printf("wrote %s/{sweep.json,table.csv,long.csv}\n", sw_out_dir.c_str());
    return timed_out ? kExitTimeout : kExitOk;
  }

  if (report->parsed()) {
    if (rep_sweep.empty() && rep_solutions.empty())
      throw Error(Errc::InvalidField, "report needs --sweep and/or --solutions");
    std::filesystem::create_directories(rep_out_dir);
    if (!rep_sweep.empty()) {
      SweepResult result = parse_report(rep_sweep);
      emit_report(result, rep_out_dir);
      std::printf("re-emitted %zu records to %s\n", result.records.size(), rep_out_dir.c_str());
    }
    if (!rep_solutions.empty()) {
      if (rep_instance.empty())
        throw Error(Errc::InvalidField, "--solutions requires --instance");
      Instance inst = load_or_die(rep_instance);
      std::vector<std::pair<Model, Solution>> sols;
      for (const auto& path : rep_solutions) {
        Instance priced = inst;
        reprice_costs(priced, solution_cost_factor(path));
        Solution s = load_solution(path, priced);
        sols.emplace_back(s.objective.model, std::move(s));
      }
      std::uint32_t total = rep_total != 0
                                ? rep_total
                                : static_cast<std::uint32_t>(inst.trips.size()) + rep_baseline;
      auto rows = served_summary(sols, rep_baseline, total);
      std::string csv = served_summary_csv(rows);
      std::string path = rep_out_dir + "/served_summary.csv";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
      out << csv;
      std::printf("%s", csv.c_str());
      std::printf("wrote %s\n", path.c_str());
    }
    return kExitOk;
  }

  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
}
