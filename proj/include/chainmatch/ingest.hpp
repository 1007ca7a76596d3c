#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "chainmatch/instance.hpp"

namespace chainmatch {

// One parsed CSV row. Two accepted schemas:
//   user_id, pickup_zone, dropoff_zone, pickup_time, dropoff_time, fare
//   user_id, start_station, end_station, start_slot, end_slot, fare
struct RawTripRecord {
  UserId user_id = 0;
  Money fare;
  std::uint32_t line_no = 0;
  // timestamp schema
  std::string pickup_zone;
  std::string dropoff_zone;
  std::int64_t pickup_time = 0;   // epoch seconds
  std::int64_t dropoff_time = 0;  // epoch seconds
  // pre-discretized schema
  bool pre_discretized = false;
  StationId start_station = 0;
  StationId end_station = 0;
  Slot start_slot = 0;
  Slot end_slot = 0;
};

struct RowError {
  std::uint32_t line_no = 0;
  std::string reason;
};

struct CsvParseResult {
  std::vector<RawTripRecord> records;
  std::vector<RowError> row_errors;  // unparsable rows, by input line number
};

// Parses the header, then every row. Rows that fail to parse are reported in
// row_errors; rows that parse but are semantically bad (e.g. dropoff before
// pickup) are kept and fall out later in apply_filters / discretize.
// Throws MissingColumn / EmptyFile / IoError.
CsvParseResult load_trips_csv(const std::string& path, const IngestConfig& cfg);
CsvParseResult parse_trips_csv(std::istream& in, const IngestConfig& cfg);

// "2026-08-08T14:30:00" (or space separator, optional trailing Z / fraction)
// to epoch seconds. Returns nullopt on malformed input.
std::optional<std::int64_t> parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t epoch_seconds);

// Maps timestamps onto 1-based slots inside the window starting at
// window_start: slot = floor((t - window_start) / slot_minutes) + 1.
// Zone names are mapped to stations by a seeded uniform pick among the zone's
// regions_per_zone stations. Trips keep their (possibly non-causal) slots;
// apply_filters removes them. Throws TimestampOutsideWindow.
std::vector<TripRequest> discretize(const std::vector<RawTripRecord>& records,
                                    const IngestConfig& cfg, std::int64_t window_start);

enum class RemovalReason { RoundTrip, NonCausal };

struct FilterReport {
  std::vector<TripRequest> kept;
  std::vector<std::pair<TripRequest, RemovalReason>> removed;

  std::size_t removed_count(RemovalReason r) const;
};

// Drops A-to-A trips and same-slot trips; everything else passes through in
// input order. kept + removed always partition the input.
FilterReport apply_filters(const std::vector<TripRequest>& trips);

// Seeded shuffle, first round(active_fraction * n) users become active; each
// inactive user draws mu ~ Uniform{0..base_price} and sigma = sigma_fixed.
// All other trip fields are preserved.
std::vector<TripRequest> classify_users(const std::vector<TripRequest>& trips,
                                        const IngestConfig& cfg);

// Seeded random instance: station pairs uniform over s != e, slot pairs
// uniform over end > start, fares uniform in [fare_min, fare_max], then the
// usual classification. Byte-identical per seed. Throws InvalidDimensions.
Instance generate_synthetic(std::int64_t n_users, StationId n_stations, const IngestConfig& cfg);

}  // namespace chainmatch
