#include "chainmatch/simulate.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "chainmatch/rng.hpp"

namespace chainmatch {

using nlohmann::json;

ThresholdDraw sample_thresholds(const Instance& inst, std::uint64_t seed) {
  ThresholdDraw draw(inst.trips.size(), 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < inst.trips.size(); ++i) {
    const auto& t = inst.trips[i];
    if (t.activity != Activity::Inactive) continue;
    // Untruncated, matching the analytic (1-alpha)^k activation model.
    draw[i] = rng.next_normal(t.threshold->mu.dollars(), t.threshold->sigma.dollars());
  }
  return draw;
}

namespace {

Realization realize_with_prices(const Solution& sol, const Instance& inst,
                                const ThresholdDraw& draw,
                                const std::vector<double>& offered_dollars) {
  const bool no_incentive = sol.objective.alpha >= 1.0;
  Realization r;
  r.activated.resize(sol.chains.size(), false);
  for (std::size_t i = 0; i < sol.chains.size(); ++i) {
    const auto& sc = sol.chains[i];
    bool active = true;
    for (std::uint32_t t : sc.trip_idx) {
      if (inst.trips[t].activity != Activity::Inactive) continue;
      // Threshold step function: the user rides iff offer <= drawn threshold.
      // At alpha == 1 no incentive is extended, so inactive members never
      // ride (their threshold sits below the base price by definition).
      if (no_incentive || offered_dollars[t] > draw[t]) {
        active = false;
        break;
      }
    }
    r.activated[i] = active;
    if (active) {
      // Same per-chain profit the matcher priced with; no second bookkeeping.
      r.realized_profit += sol.per_chain[i].profit;
      r.served_users += static_cast<std::uint32_t>(sc.trip_idx.size());
    }
  }
  return r;
}

std::vector<double> offers_in_dollars(const Solution& sol, const Instance& inst) {
  std::vector<double> offered(inst.trips.size(), 0.0);
  for (const auto& sc : sol.chains)
    for (std::uint32_t t : sc.trip_idx)
      if (inst.trips[t].activity == Activity::Inactive)
        offered[t] = offered_price(inst.trips[t], sol.objective.alpha).value.dollars();
  return offered;
}

}  // namespace

Realization realize(const Solution& sol, const Instance& inst, const ThresholdDraw& draw) {
  return realize_with_prices(sol, inst, draw, offers_in_dollars(sol, inst));
}

SimReport monte_carlo(const Solution& sol, const Instance& inst, const SimConfig& cfg) {
  if (cfg.n_samples < 1) throw Error(Errc::InvalidDimensions, "n_samples must be at least 1");
  SimReport rep;
  rep.n_samples = cfg.n_samples;
  rep.rng_seed = cfg.rng_seed;
  rep.chain_activation_freq.assign(sol.chains.size(), 0.0);
  rep.clamp_event_count = sol.clamped_user_count;

  // Welford accumulation in sample-index order, so the aggregate is a pure
  // function of (seed, n_samples) no matter how draws get scheduled, and the
  // variance of a constant stream is exactly zero.
  double mean = 0.0, m2 = 0.0;
  double served_sum = 0.0;
  const double n_users = static_cast<double>(inst.trips.size());
  const std::vector<double> offered = offers_in_dollars(sol, inst);
  for (std::uint64_t s = 0; s < cfg.n_samples; ++s) {
    ThresholdDraw draw = sample_thresholds(inst, derive_seed(cfg.rng_seed, s));
    Realization r = realize_with_prices(sol, inst, draw, offered);
    double delta = r.realized_profit - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (r.realized_profit - mean);
    served_sum += n_users > 0 ? r.served_users / n_users : 0.0;
    for (std::size_t i = 0; i < r.activated.size(); ++i)
      if (r.activated[i]) rep.chain_activation_freq[i] += 1.0;
  }
  const double n = static_cast<double>(cfg.n_samples);
  rep.realized_profit_mean = mean;
  if (cfg.n_samples > 1)
    rep.realized_profit_stddev = m2 > 0.0 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  rep.service_rate_mean = served_sum / n;
  for (auto& f : rep.chain_activation_freq) f /= n;
  return rep;
}

std::string report_to_json(const SimReport& rep) {
  json j{{"n_samples", rep.n_samples},
         {"rng_seed", rep.rng_seed},
         {"realized_profit_mean", rep.realized_profit_mean},
         {"realized_profit_stddev", rep.realized_profit_stddev},
         {"service_rate_mean", rep.service_rate_mean},
         {"chain_activation_freq", rep.chain_activation_freq},
         {"clamp_event_count", rep.clamp_event_count}};
  return j.dump(2) + "\n";
}

void write_sample_trace(const Solution& sol, const Instance& inst, const SimConfig& cfg,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  out << "sample,realized_profit,served_users\n";
  const std::vector<double> offered = offers_in_dollars(sol, inst);
  for (std::uint64_t s = 0; s < cfg.n_samples; ++s) {
    ThresholdDraw draw = sample_thresholds(inst, derive_seed(cfg.rng_seed, s));
    Realization r = realize_with_prices(sol, inst, draw, offered);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%llu,%.2f,%u\n", static_cast<unsigned long long>(s),
                  r.realized_profit, r.served_users);
    out << buf;
  }
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

void save_report(const SimReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  out << report_to_json(rep);
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

}  // namespace chainmatch
