#pragma once

#include <span>

#include "chainmatch/instance.hpp"

namespace chainmatch {

// Phi((x - mu) / sigma). Absolute error <= 1e-12. Throws NonPositiveSigma.
double normal_cdf(double x, double mu, double sigma);

// Inverse of normal_cdf in alpha: rational approximation plus one Newton step,
// good to ~1e-15 in probability space. Throws AlphaOutOfOpenInterval unless
// alpha is in (0, 1).
double normal_quantile(double alpha, double mu, double sigma);

struct OfferedPrice {
  UserId user_id = 0;
  Money value;
  bool clamped = false;  // quantile fell outside [0, base_price]

  bool operator==(const OfferedPrice&) const = default;
};

// Risk-calibrated offer: active users pay the base price; an inactive user is
// offered the alpha-percentile of their threshold distribution, clamped into
// [0, base_price]. alpha == 1 means no incentive at all (offer stays at base;
// the activation probability (1-alpha)^k is then 0 for any inactive member).
OfferedPrice offered_price(const TripRequest& t, double alpha);

// Deterministic-threshold offer: exactly the known threshold. Throws
// ThresholdAboveBase if the claimed threshold exceeds the base price.
OfferedPrice offered_price_deterministic(const TripRequest& t, Money known_threshold);

// C = cost_factor * P, rounded to a cent. Throws CostFactorOutOfRange unless
// cost_factor is in (0, 1].
Money apply_cost_factor(Money base_price, double cost_factor);

// Re-derives every trip's travel cost at the given cost factor (sweeps and
// cross-cost evaluations share one instance this way).
void reprice_costs(Instance& inst, double cost_factor);

// Per-trip offered prices for a whole instance at one risk factor, indexed by
// trip position; the hot path for chain weights.
std::vector<Money> offered_prices_by_trip(const Instance& inst, double alpha);
std::size_t count_clamped(const Instance& inst, double alpha);

// Sum over members of offered - travel_cost, in dollars. For active members
// the offer is the base price, so this is Eq-style (1-cf)*P + (offer - cf*P).
// May be negative. offered_by_trip must cover every trip (MissingPrice).
double chain_profit(const Instance& inst, const Chain& c,
                    std::span<const Money> offered_by_trip);

// (1 - alpha)^|inactive members|; 1 for an all-active chain. alpha in [0, 1].
double activation_probability(const Chain& c, double alpha);

double expected_chain_profit(const Instance& inst, const Chain& c,
                             std::span<const Money> offered_by_trip, double alpha);

}  // namespace chainmatch
