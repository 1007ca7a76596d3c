#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainmatch/matcher.hpp"

namespace chainmatch {

struct SimConfig {
  std::uint64_t n_samples = 100000;
  std::uint64_t rng_seed = 0;
};

// One Monte Carlo draw: a sampled threshold per trip (only inactive entries
// are meaningful), indexed by trip position.
using ThresholdDraw = std::vector<double>;

// P* ~ Normal(mu, sigma) per inactive user, untruncated, matching the
// analytic activation model. Deterministic per seed.
ThresholdDraw sample_thresholds(const Instance& inst, std::uint64_t seed);

struct Realization {
  std::vector<bool> activated;  // per selected chain
  double realized_profit = 0.0;
  std::uint32_t served_users = 0;
};

// A chain executes iff every inactive member's offer is at or below their
// drawn threshold; executed chains contribute exactly the per-chain profit
// the matcher priced them with, everything else contributes 0.
Realization realize(const Solution& sol, const Instance& inst, const ThresholdDraw& draw);

struct SimReport {
  std::uint64_t n_samples = 0;
  std::uint64_t rng_seed = 0;
  double realized_profit_mean = 0.0;
  double realized_profit_stddev = 0.0;  // sample stddev
  double service_rate_mean = 0.0;       // in [0, 1]
  std::vector<double> chain_activation_freq;  // per selected chain
  std::uint32_t clamp_event_count = 0;        // served users priced at a clamp
};

// Aggregates realize over n_samples independent draws (per-sample substreams
// derived from the master seed, so the result is order-insensitive).
SimReport monte_carlo(const Solution& sol, const Instance& inst, const SimConfig& cfg);

std::string report_to_json(const SimReport& rep);
void save_report(const SimReport& rep, const std::string& path);

// Per-sample CSV trace (sample, realized_profit, served_users), replaying the
// same draws monte_carlo would make for this config.
void write_sample_trace(const Solution& sol, const Instance& inst, const SimConfig& cfg,
                        const std::string& path);

}  // namespace chainmatch
