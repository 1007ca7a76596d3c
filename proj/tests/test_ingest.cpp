#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chainmatch/enumerate.hpp"
#include "chainmatch/ingest.hpp"
#include "helpers.hpp"

using namespace chainmatch;
using helpers::trip;

namespace {

const char* kHeader = "user_id,pickup_zone,dropoff_zone,pickup_time,dropoff_time,fare\n";

CsvParseResult parse(const std::string& body, IngestConfig cfg = {}) {
  std::istringstream in(body);
  return parse_trips_csv(in, cfg);
}

}  // namespace

TEST_CASE("parse_iso8601 accepts the usual shapes") {
  CHECK(parse_iso8601("1970-01-01T00:00:00") == 0);
  CHECK(parse_iso8601("1970-01-01 00:01:00") == 60);
  CHECK(parse_iso8601("1970-01-01T00:01") == 60);
  CHECK(parse_iso8601("1970-01-02T00:00:00Z") == 86400);
  CHECK(parse_iso8601("2016-01-01T00:00:00") == 1451606400);
  CHECK_FALSE(parse_iso8601("not a time").has_value());
  CHECK_FALSE(parse_iso8601("2016-13-01T00:00:00").has_value());
  CHECK_FALSE(parse_iso8601("2016-01-01").has_value());
}

TEST_CASE("parse_iso8601 round-trips through format_iso8601") {
  for (std::int64_t ts : {std::int64_t{0}, std::int64_t{1451606400}, std::int64_t{1754665260}}) {
    CHECK(parse_iso8601(format_iso8601(ts)) == ts);
  }
}

TEST_CASE("load_trips_csv parses well-formed rows") {
  auto res = parse(std::string(kHeader) +
                   "1,Z1,Z2,1970-01-01T00:00:00,1970-01-01T00:25:00,10.50\n"
                   "2,Z2,Z1,1970-01-01T00:10:00,1970-01-01T00:30:00,8.00\n"
                   "3,Z1,Z3,1970-01-01T00:20:00,1970-01-01T00:40:00,12.25\n");
  CHECK(res.records.size() == 3);
  CHECK(res.row_errors.empty());
  CHECK(res.records[0].fare == Money{1050});
  CHECK(res.records[2].user_id == 3);
}

TEST_CASE("load_trips_csv reports missing columns and empty files") {
  std::istringstream no_fare("user_id,pickup_zone,dropoff_zone,pickup_time,dropoff_time\n1,...\n");
  CHECK_THROWS_AS(parse_trips_csv(no_fare, IngestConfig{}), Error);

  std::istringstream empty("");
  CHECK_THROWS_AS(parse_trips_csv(empty, IngestConfig{}), Error);

  std::istringstream header_only{std::string(kHeader)};
  CHECK_THROWS_AS(parse_trips_csv(header_only, IngestConfig{}), Error);
}

TEST_CASE("malformed rows are reported with line numbers, good rows survive") {
  auto res = parse(std::string(kHeader) +
                   "1,Z1,Z2,1970-01-01T00:00:00,1970-01-01T00:25:00,10.50\n"
                   "oops,Z1,Z2,1970-01-01T00:00:00,1970-01-01T00:25:00,10.50\n"
                   "3,Z1,Z2,yesterday,1970-01-01T00:25:00,10.50\n"
                   "4,Z2,Z1,1970-01-01T00:10:00,1970-01-01T00:30:00,-3\n"
                   "5,Z2,Z1,1970-01-01T00:10:00,1970-01-01T00:30:00,8.00\n");
  CHECK(res.records.size() == 2);
  REQUIRE(res.row_errors.size() == 3);
  CHECK(res.row_errors[0].line_no == 3);
  CHECK(res.row_errors[1].line_no == 4);
  CHECK(res.row_errors[2].line_no == 5);
}

TEST_CASE("a dropoff before the pickup parses fine; semantics come later") {
  auto res = parse(std::string(kHeader) +
                   "1,Z1,Z2,1970-01-01T00:30:00,1970-01-01T00:10:00,5.00\n");
  CHECK(res.records.size() == 1);
  CHECK(res.row_errors.empty());
}

TEST_CASE("the pre-discretized schema variant is accepted") {
  IngestConfig cfg;
  std::istringstream in(
      "user_id,start_station,end_station,start_slot,end_slot,fare\n"
      "1,0,1,1,2,10.00\n"
      "2,1,0,2,3,6.00\n");
  auto res = parse_trips_csv(in, cfg);
  REQUIRE(res.records.size() == 2);
  CHECK(res.records[0].pre_discretized);
  CHECK(res.records[1].start_slot == 2);

  auto trips = discretize(res.records, cfg, 0);
  REQUIRE(trips.size() == 2);
  CHECK(trips[0].start_slot == 1);
  CHECK(trips[1].end_slot == 3);
  CHECK(trips[0].travel_cost == Money{200});  // default cost factor 0.2
}

TEST_CASE("discretize floors timestamps into 1-based slots") {
  IngestConfig cfg;  // 10-minute slots, tau 6
  auto res = parse(std::string(kHeader) +
                   "1,Z1,Z2,1970-01-01T00:00:00,1970-01-01T00:25:00,10.00\n"
                   "2,Z1,Z2,1970-01-01T00:04:00,1970-01-01T00:09:00,10.00\n");
  auto trips = discretize(res.records, cfg, 0);
  REQUIRE(trips.size() == 2);
  CHECK(trips[0].start_slot == 1);
  CHECK(trips[0].end_slot == 3);
  // sub-slot trip lands on slot 1 -> 1; the filter stage removes it
  CHECK(trips[1].start_slot == 1);
  CHECK(trips[1].end_slot == 1);

  auto filtered = apply_filters(trips);
  CHECK(filtered.kept.size() == 1);
  CHECK(filtered.removed_count(RemovalReason::NonCausal) == 1);
}

TEST_CASE("discretize rejects timestamps outside the window") {
  IngestConfig cfg;  // 60-minute window
  auto res = parse(std::string(kHeader) +
                   "1,Z1,Z2,1970-01-01T00:59:00,1970-01-01T01:01:00,10.00\n");
  CHECK_THROWS_AS(discretize(res.records, cfg, 0), Error);
}

TEST_CASE("zone-to-station assignment is seeded and in range") {
  IngestConfig cfg;
  cfg.rng_seed = 42;
  cfg.regions_per_zone = 3;
  auto res = parse(std::string(kHeader) +
                   "1,A,B,1970-01-01T00:00:00,1970-01-01T00:25:00,10.00\n"
                   "2,B,A,1970-01-01T00:10:00,1970-01-01T00:35:00,9.00\n");
  auto trips1 = discretize(res.records, cfg, 0);
  auto trips2 = discretize(res.records, cfg, 0);
  CHECK(trips1 == trips2);  // same seed, same assignment
  for (const auto& t : trips1) {
    CHECK(t.start_station >= 0);
    CHECK(t.start_station < 6);  // 2 zones x 3 regions
    CHECK(t.end_station < 6);
  }
  // zone A gets stations [0,3), zone B gets [3,6)
  CHECK(trips1[0].start_station < 3);
  CHECK(trips1[0].end_station >= 3);
}

TEST_CASE("apply_filters removes A-to-A trips and keeps the partition") {
  std::vector<TripRequest> trips{trip(1, 0, 0, 1, 2), trip(2, 0, 1, 1, 2),
                                 trip(3, 1, 0, 2, 2)};
  auto rep = apply_filters(trips);
  CHECK(rep.kept.size() == 1);
  CHECK(rep.removed_count(RemovalReason::RoundTrip) == 1);
  CHECK(rep.removed_count(RemovalReason::NonCausal) == 1);
  CHECK(rep.kept.size() + rep.removed.size() == trips.size());

  auto identity = apply_filters(rep.kept);
  CHECK(identity.kept == rep.kept);
  CHECK(identity.removed.empty());
}

TEST_CASE("filtering 2413 trips with 110 round trips keeps 2303") {
  std::vector<TripRequest> trips;
  for (int i = 0; i < 2413; ++i) {
    bool round_trip = i < 110;
    trips.push_back(trip(i + 1, 0, round_trip ? 0 : 1, 1, 2));
  }
  auto rep = apply_filters(trips);
  CHECK(rep.kept.size() == 2303);
  CHECK(rep.removed_count(RemovalReason::RoundTrip) == 110);
}

TEST_CASE("classify_users splits exactly round(active_fraction * n)") {
  std::vector<TripRequest> trips;
  for (int i = 0; i < 10; ++i) trips.push_back(trip(i + 1, 0, 1, 1, 2, 2000));
  IngestConfig cfg;
  cfg.rng_seed = 7;
  auto out = classify_users(trips, cfg);
  int active = 0, inactive = 0;
  for (const auto& t : out) (t.activity == Activity::Active ? active : inactive)++;
  CHECK(active == 8);
  CHECK(inactive == 2);

  // deterministic per seed
  CHECK(classify_users(trips, cfg) == out);
  cfg.rng_seed = 8;
  CHECK(classify_users(trips, cfg) != out);

  for (const auto& t : out) {
    if (t.activity == Activity::Inactive) {
      REQUIRE(t.threshold.has_value());
      CHECK(t.threshold->mu.cents >= 0);
      CHECK(t.threshold->mu <= t.base_price);
      CHECK(t.threshold->sigma == cfg.sigma_fixed);
    } else {
      CHECK_FALSE(t.threshold.has_value());
    }
  }
}

TEST_CASE("classification preserves every other trip field") {
  std::vector<TripRequest> trips;
  for (int i = 0; i < 25; ++i) trips.push_back(trip(i + 1, i % 5, (i + 2) % 5, 1, 2, 999 + i));
  IngestConfig cfg;
  cfg.rng_seed = 3;
  auto out = classify_users(trips, cfg);
  REQUIRE(out.size() == trips.size());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    auto stripped = out[i];
    stripped.activity = Activity::Active;
    stripped.threshold.reset();
    CHECK(stripped == trips[i]);
  }
}

TEST_CASE("generate_synthetic validates dimensions") {
  IngestConfig cfg;
  CHECK_THROWS_AS(generate_synthetic(0, 5, cfg), Error);
  CHECK_THROWS_AS(generate_synthetic(10, 1, cfg), Error);
}

TEST_CASE("generate_synthetic is byte-identical per seed") {
  IngestConfig cfg;
  cfg.rng_seed = 7;
  auto a = generate_synthetic(50, 6, cfg);
  auto b = generate_synthetic(50, 6, cfg);
  CHECK(a == b);
  CHECK(instance_to_json(a) == instance_to_json(b));

  cfg.rng_seed = 8;
  CHECK_FALSE(generate_synthetic(50, 6, cfg) == a);
}

TEST_CASE("the pinned synthetic instance has feasible 2-chains") {
  IngestConfig cfg;
  cfg.rng_seed = 1;
  auto inst = generate_synthetic(300, 10, cfg);
  auto pool = enumerate_chains(inst, 2);
  CHECK(pool.chains.size() >= 1);
}

TEST_CASE("instance save/load round-trips losslessly") {
  IngestConfig cfg;
  cfg.rng_seed = 11;
  auto inst = generate_synthetic(40, 5, cfg);
  auto path = std::filesystem::temp_directory_path() / "chainmatch_roundtrip.json";
  save_instance(inst, path.string());
  auto loaded = load_instance(path.string());
  CHECK(loaded == inst);
  std::filesystem::remove(path);
}

TEST_CASE("a 2303-trip instance persists and re-validates") {
  IngestConfig cfg;
  cfg.rng_seed = 23;
  auto inst = generate_synthetic(2303, 40, cfg);
  auto path = std::filesystem::temp_directory_path() / "chainmatch_big.json";
  save_instance(inst, path.string());
  auto loaded = load_instance(path.string());  // load_instance re-runs validation
  CHECK(loaded.trips.size() == 2303);
  CHECK(loaded == inst);
  std::filesystem::remove(path);
}

TEST_CASE("truncated or stale instance files are rejected") {
  auto path = std::filesystem::temp_directory_path() / "chainmatch_trunc.json";
  {
    std::ofstream out(path);
    out << "{\"schema_version\": 1, \"horiz";
  }
  CHECK_THROWS_AS(load_instance(path.string()), Error);
  {
    std::ofstream out(path);
    out << "{\"schema_version\": 99}";
  }
  CHECK_THROWS_AS(load_instance(path.string()), Error);
  {
    std::ofstream out(path);
    out << "{}";
  }
  CHECK_THROWS_AS(load_instance(path.string()), Error);
  std::filesystem::remove(path);
}

TEST_CASE("make_instance rejects duplicate user ids and invalid trips") {
  CHECK_THROWS_AS(helpers::instance_of({trip(1, 0, 1, 1, 2), trip(1, 1, 0, 2, 3)}), Error);
  CHECK_THROWS_AS(helpers::instance_of({trip(1, 0, 0, 1, 2)}), Error);
  CHECK_THROWS_AS(helpers::instance_of({trip(1, 0, 1, 2, 2)}), Error);
}
