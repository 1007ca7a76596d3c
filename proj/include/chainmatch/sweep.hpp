#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainmatch/matcher.hpp"
#include "chainmatch/simulate.hpp"

namespace chainmatch {

struct SweepSpec {
  std::vector<double> alpha_grid{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> cf_grid{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<Model> models{Model::MaxService, Model::MaxProfit, Model::MaxExpectedProfit};
  Slot depth_cutoff = 0;  // 0 = tau - 1
  std::uint64_t seed = 0;
  std::uint64_t mc_samples = 2000;
  double timeout_s = 60.0;
  int threads = 1;
};

struct SweepRecord {
  Model model = Model::MaxExpectedProfit;
  double alpha = 0.0;
  double cf = 0.0;
  double expected_profit = 0.0;
  double realized_profit_mean = 0.0;
  double service_rate_pct = 0.0;
  std::uint32_t served_count = 0;
  SolveStatus status = SolveStatus::Optimal;
  // Diagnostic only: printed, never serialized, and excluded from equality so
  // that reports stay byte-identical across runs and thread counts.
  double wall_time_ms = 0.0;

  bool operator==(const SweepRecord& o) const;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRecord> records;  // ordered by (cf, model, alpha)

  bool operator==(const SweepResult& o) const;
};

// Re-derives travel costs per cost factor, reprices per risk factor, rebuilds
// weights, solves, and evaluates every (model, alpha, cf) cell. The chain pool
// is enumerated once; cells are independent and may run on several threads
// without changing any byte of the result.
SweepResult run_sweep(const Instance& inst, const SweepSpec& spec);

struct LengthShare {
  double profit_share_pct = 0.0;
  double served_share_pct = 0.0;
};

// Contribution of each chain length to the solution's expected profit and
// served users; shares sum to 100 (all zeros for an empty solution).
std::map<std::uint32_t, LengthShare> chain_length_breakdown(const Solution& sol,
                                                            Slot depth_cutoff);

struct ServedRow {
  std::string label;
  std::uint32_t served = 0;
  double pct = 0.0;  // of all users including the round-trip baseline
};

// Model-vs-baseline served-user comparison. total_users must include the
// round-trip users that never entered the matching pool.
std::vector<ServedRow> served_summary(const std::vector<std::pair<Model, Solution>>& solutions,
                                      std::uint32_t baseline_round_trip_count,
                                      std::uint32_t total_users);

// Writes sweep.json (round-trippable), table.csv (rows cf x model, profit and
// service columns per alpha), and long.csv (model,alpha,cf,metric,value).
// Throws IoError on empty results; emits nothing in that case.
void emit_report(const SweepResult& result, const std::string& out_dir);

std::string sweep_to_json(const SweepResult& result);
SweepResult sweep_from_json(const std::string& text);
SweepResult parse_report(const std::string& json_path);

std::string table_csv(const SweepResult& result);
std::string long_csv(const SweepResult& result);
std::string served_summary_csv(const std::vector<ServedRow>& rows);

}  // namespace chainmatch
