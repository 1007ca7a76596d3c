#pragma once

#include <vector>

#include "chainmatch/instance.hpp"

namespace helpers {

using namespace chainmatch;

inline TripRequest trip(UserId user, StationId from, StationId to, Slot start, Slot end,
                        std::int64_t price_cents = 1000, std::int64_t cost_cents = 200) {
  TripRequest t;
  t.user_id = user;
  t.start_station = from;
  t.end_station = to;
  t.start_slot = start;
  t.end_slot = end;
  t.base_price = Money{price_cents};
  t.travel_cost = Money{cost_cents};
  return t;
}

inline TripRequest inactive(TripRequest t, std::int64_t mu_cents, std::int64_t sigma_cents) {
  t.activity = Activity::Inactive;
  t.threshold = ThresholdDist{Money{mu_cents}, Money{sigma_cents}};
  return t;
}

inline Instance instance_of(std::vector<TripRequest> trips, Slot tau = 6) {
  IngestConfig cfg;
  cfg.tau = tau;
  return make_instance(Horizon{tau, 10}, cfg, std::move(trips), 0, Provenance::Synthetic);
}

}  // namespace helpers
