#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "chainmatch/errors.hpp"
#include "chainmatch/money.hpp"

namespace chainmatch {

using StationId = std::int32_t;  // dense ids, 0-based, < station count
using Slot = std::int32_t;       // 1-based timeslot index in [1, tau]
using UserId = std::int64_t;

enum class Activity { Active, Inactive };

// Gaussian price-threshold parameters of an inactive user.
struct ThresholdDist {
  Money mu;
  Money sigma;  // > 0

  bool operator==(const ThresholdDist&) const = default;
};

// Planning window of tau ordered slots; chains never cross windows.
struct Horizon {
  Slot tau = 6;
  std::int32_t slot_minutes = 10;

  bool operator==(const Horizon&) const = default;
};

// Minimum tau for which any chain length is admissible (depth set {2..tau-1}).
inline constexpr Slot kMinTau = 3;

// One user's one-way trip request. threshold is present iff Inactive.
struct TripRequest {
  UserId user_id = 0;
  StationId start_station = 0;
  StationId end_station = 0;
  Slot start_slot = 0;
  Slot end_slot = 0;
  Money base_price;   // P, what an active user pays
  Money travel_cost;  // C, operator's relocation cost for this leg
  Activity activity = Activity::Active;
  std::optional<ThresholdDist> threshold;

  bool operator==(const TripRequest&) const = default;
};

struct TripValidation {
  bool ok = true;
  Errc code = Errc::InvalidField;
  std::string message;
};

// Checks all TripRequest invariants against a horizon: one-way stations,
// end slot strictly after start slot, slots inside [1, tau], sane prices,
// threshold present exactly for inactive users.
TripValidation validate_trip(const TripRequest& t, const Horizon& h);

// Station-chaining predicate: consecutive drop-off/pick-up stations match and
// the last drop-off closes the cycle back to the first pick-up.
bool station_feasible(std::span<const TripRequest> members);

// Slot-chaining predicate: consecutive drop-off/pick-up slots match. The last
// member's end slot is unconstrained; only the stations close the cycle.
bool time_feasible(std::span<const TripRequest> members);

// Both predicates. Throws ChainLengthOutOfDepth unless 2 <= d <= tau - 1.
bool chain_feasible(std::span<const TripRequest> members, const Horizon& h);

// A feasible chain over an instance's trips, in start-slot order (the slot
// chaining forces strictly increasing start slots, so this order is unique).
struct Chain {
  std::vector<std::uint32_t> trips;  // indices into Instance::trips
  std::uint32_t inactive_count = 0;

  std::uint32_t length() const { return static_cast<std::uint32_t>(trips.size()); }
  bool operator==(const Chain&) const = default;
};

}  // namespace chainmatch
