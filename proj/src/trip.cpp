#include "chainmatch/trip.hpp"

#include <string>

namespace chainmatch {

namespace {

TripValidation reject(Errc code, std::string msg) {
  return TripValidation{false, code, std::move(msg)};
}

}  // namespace

TripValidation validate_trip(const TripRequest& t, const Horizon& h) {
  if (h.tau < kMinTau || h.slot_minutes <= 0)
    return reject(Errc::InvalidField, "horizon requires tau >= 3 and positive slot duration");
  if (t.start_station < 0 || t.end_station < 0)
    return reject(Errc::InvalidField, "negative station id");
  if (t.end_station == t.start_station)
    return reject(Errc::RoundTripRejected,
                  "trip of user " + std::to_string(t.user_id) + " starts and ends at station " +
                      std::to_string(t.start_station));
  if (t.start_slot < 1 || t.start_slot > h.tau || t.end_slot < 1 || t.end_slot > h.tau)
    return reject(Errc::SlotOutOfHorizon, "slots [" + std::to_string(t.start_slot) + ", " +
                                              std::to_string(t.end_slot) + "] not within [1, " +
                                              std::to_string(h.tau) + "]");
  if (t.end_slot <= t.start_slot)
    return reject(Errc::NonCausalSlots, "end slot " + std::to_string(t.end_slot) +
                                            " not after start slot " +
                                            std::to_string(t.start_slot));
  if (t.base_price.cents < 0 || t.travel_cost.cents < 0)
    return reject(Errc::InvalidField, "negative price or cost");
  if (t.activity == Activity::Inactive) {
    if (!t.threshold) return reject(Errc::InvalidField, "inactive user lacks threshold");
    if (t.threshold->sigma.cents <= 0)
      return reject(Errc::InvalidField, "threshold sigma must be positive");
    if (t.threshold->mu.cents < 0) return reject(Errc::InvalidField, "negative threshold mean");
  } else if (t.threshold) {
    return reject(Errc::InvalidField, "active user carries a threshold");
  }
  return TripValidation{};
}

bool station_feasible(std::span<const TripRequest> members) {
  if (members.empty()) return false;
  for (std::size_t i = 0; i + 1 < members.size(); ++i)
    if (members[i].end_station != members[i + 1].start_station) return false;
  return members.back().end_station == members.front().start_station;
}

bool time_feasible(std::span<const TripRequest> members) {
  if (members.empty()) return false;
  // The last member's end slot is deliberately unconstrained.
  for (std::size_t i = 0; i + 1 < members.size(); ++i)
    if (members[i].end_slot != members[i + 1].start_slot) return false;
  return true;
}

bool chain_feasible(std::span<const TripRequest> members, const Horizon& h) {
  auto d = members.size();
  if (d < 2 || static_cast<Slot>(d) > h.tau - 1)
    throw Error(Errc::ChainLengthOutOfDepth,
                "chain length " + std::to_string(d) + " outside [2, " + std::to_string(h.tau - 1) +
                    "]");
  return station_feasible(members) && time_feasible(members);
}

}  // namespace chainmatch
