#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainmatch/enumerate.hpp"
#include "chainmatch/pricing.hpp"

namespace chainmatch {

enum class Model { MaxService, MaxProfit, MaxExpectedProfit };

const char* model_name(Model m);
Model model_from_name(const std::string& name);  // throws InvalidField

struct Objective {
  Model model = Model::MaxExpectedProfit;
  double alpha = 0.5;        // risk factor, (0, 1]
  double cost_factor = 0.2;  // echoed for bookkeeping; costs live on the trips
};

// Per-chain weight under an objective: chain length for MaxService, chain
// profit for MaxProfit, activation-weighted profit for MaxExpectedProfit.
double chain_weight(const Instance& inst, const Chain& c, const Objective& obj,
                    std::span<const Money> offered_by_trip);

// Weighted set packing over the pool: pick user-disjoint chains maximizing
// total weight. Chains with weight <= 0 are dropped for the profit objectives
// (the constraints are all <=, so dropping never lowers the optimum).
struct PackingProblem {
  Objective objective;
  std::vector<std::uint32_t> chain_ids;  // retained chains, as pool indices
  std::vector<Chain> chains;             // copies, parallel to chain_ids
  std::vector<double> weights;           // parallel to chain_ids
  std::vector<Money> offered_by_trip;    // prices the weights were built from
  std::vector<std::vector<std::uint32_t>> chains_by_trip;  // incidence lists
  std::size_t n_trips = 0;
};

PackingProblem build_problem(const ChainPool& pool, const Instance& inst, const Objective& obj);

enum class SolveStatus { Optimal, TimeoutIncumbent, Heuristic };

const char* solve_status_name(SolveStatus s);

struct ChainEval {
  double profit = 0.0;
  double activation_probability = 1.0;
  double expected_profit = 0.0;
};

struct SelectedChain {
  std::uint32_t pool_index = 0;
  std::vector<std::uint32_t> trip_idx;
  std::vector<UserId> members;
  std::uint32_t inactive_count = 0;
};

struct Solution {
  Objective objective;
  SolveStatus status = SolveStatus::Optimal;
  double objective_value = 0.0;
  std::vector<std::uint32_t> selected;  // pool indices, ascending
  std::vector<SelectedChain> chains;    // parallel to selected
  std::vector<ChainEval> per_chain;     // parallel to selected
  std::vector<OfferedPrice> offered_prices;  // served users, sorted by user id
  std::uint32_t served_user_count = 0;
  std::uint32_t clamped_user_count = 0;
};

struct SolveOptions {
  double timeout_s = 60.0;
};

// Exact branch and bound, best-first over weight density, bounded by both the
// remaining-weight suffix sum and a per-user density cap. Ties are broken to
// the lexicographically smallest selected index set, so results do not depend
// on scheduling. On timeout returns the incumbent flagged TimeoutIncumbent.
Solution solve_exact(const PackingProblem& p, const Instance& inst,
                     const SolveOptions& opts = {});

// Weight-descending greedy respecting disjointness; flagged Heuristic.
Solution solve_greedy(const PackingProblem& p, const Instance& inst);

// Exhaustive search over all disjoint subsets, same tie-break as solve_exact.
// Test oracle; throws PoolTooLargeForOracle beyond 25 chains.
Solution brute_force_oracle(const PackingProblem& p, const Instance& inst);

// Attaches offered prices and per-chain (profit, activation, expected profit)
// for a solved selection, and re-derives the objective value as a consistency
// check (must agree within 1e-6).
void price_solution(Solution& sol, const Instance& inst, double alpha);

// Sum of expected chain profits of sol's chains when priced at alpha; used to
// compare solutions from different models on one instance.
double cross_expected_profit(const Solution& sol, const Instance& inst, double alpha);

// Throws if a user appears in two selected chains; run on every solution.
void assert_disjoint(const Solution& sol);

std::string solution_to_json(const Solution& sol);
Solution solution_from_json(const std::string& text, const Instance& inst);
void save_solution(const Solution& sol, const std::string& path);
Solution load_solution(const std::string& path, const Instance& inst);

}  // namespace chainmatch
