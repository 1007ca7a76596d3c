#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chainmatch/trip.hpp"

namespace chainmatch {

enum class Provenance { CsvImport, Synthetic };

// Knobs for building an instance from a CSV or a synthetic generator.
struct IngestConfig {
  std::int32_t slot_minutes = 10;
  Slot tau = 6;
  double active_fraction = 0.8;  // share of users active at the base price
  double cost_factor = 0.2;      // C = cost_factor * P, in (0, 1]
  Money sigma_fixed{200};        // one sigma for every inactive user
  std::uint64_t rng_seed = 0;
  // synthetic fares / zone splitting
  Money fare_min{500};
  Money fare_max{2500};
  std::int32_t regions_per_zone = 4;

  bool operator==(const IngestConfig&) const = default;
};

void validate_config(const IngestConfig& cfg);  // throws InvalidDimensions

// A pool of validated trips under one horizon; the unit of persistence.
struct Instance {
  Horizon horizon;
  IngestConfig config;
  std::vector<TripRequest> trips;
  std::uint64_t rng_seed = 0;
  Provenance provenance = Provenance::Synthetic;

  std::size_t user_count() const { return trips.size(); }
  StationId station_count() const;

  bool operator==(const Instance&) const = default;
};

// Validates every trip and user-id uniqueness; throws on violation.
Instance make_instance(Horizon h, IngestConfig cfg, std::vector<TripRequest> trips,
                       std::uint64_t rng_seed, Provenance provenance);

// Versioned JSON document, currency as integer minor units. load(save(i)) == i.
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

}  // namespace chainmatch
