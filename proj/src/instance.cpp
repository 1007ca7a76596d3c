#include "chainmatch/instance.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace chainmatch {

using nlohmann::json;

namespace {
constexpr int kSchemaVersion = 1;
}

void validate_config(const IngestConfig& cfg) {
  auto bad = [](const std::string& msg) { throw Error(Errc::InvalidDimensions, msg); };
  if (cfg.slot_minutes <= 0) bad("slot_minutes must be positive");
  if (cfg.tau < kMinTau) bad("tau must be at least 3");
  if (cfg.active_fraction < 0.0 || cfg.active_fraction > 1.0)
    bad("active_fraction must lie in [0, 1]");
  if (!(cfg.cost_factor > 0.0 && cfg.cost_factor <= 1.0)) bad("cost_factor must lie in (0, 1]");
  if (cfg.sigma_fixed.cents <= 0) bad("sigma_fixed must be positive");
  if (cfg.fare_min.cents < 0 || cfg.fare_max < cfg.fare_min) bad("bad fare range");
  if (cfg.regions_per_zone < 1) bad("regions_per_zone must be at least 1");
}

StationId Instance::station_count() const {
  StationId max_id = -1;
  for (const auto& t : trips) max_id = std::max({max_id, t.start_station, t.end_station});
  return max_id + 1;
}

Instance make_instance(Horizon h, IngestConfig cfg, std::vector<TripRequest> trips,
                       std::uint64_t rng_seed, Provenance provenance) {
  std::unordered_set<UserId> seen;
  seen.reserve(trips.size());
  for (const auto& t : trips) {
    auto v = validate_trip(t, h);
    if (!v.ok) throw Error(v.code, v.message);
    if (!seen.insert(t.user_id).second)
      throw Error(Errc::DuplicateUserId, "user " + std::to_string(t.user_id) + " appears twice");
  }
  return Instance{h, cfg, std::move(trips), rng_seed, provenance};
}

namespace {

json config_to_json(const IngestConfig& c) {
  return json{{"slot_minutes", c.slot_minutes},
              {"tau", c.tau},
              {"active_fraction", c.active_fraction},
              {"cost_factor", c.cost_factor},
              {"sigma_fixed_cents", c.sigma_fixed.cents},
              {"rng_seed", c.rng_seed},
              {"fare_min_cents", c.fare_min.cents},
              {"fare_max_cents", c.fare_max.cents},
              {"regions_per_zone", c.regions_per_zone}};
}

IngestConfig config_from_json(const json& j) {
  IngestConfig c;
  c.slot_minutes = j.at("slot_minutes").get<std::int32_t>();
  c.tau = j.at("tau").get<Slot>();
  c.active_fraction = j.at("active_fraction").get<double>();
  c.cost_factor = j.at("cost_factor").get<double>();
  c.sigma_fixed = Money{j.at("sigma_fixed_cents").get<std::int64_t>()};
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.fare_min = Money{j.at("fare_min_cents").get<std::int64_t>()};
  c.fare_max = Money{j.at("fare_max_cents").get<std::int64_t>()};
  c.regions_per_zone = j.at("regions_per_zone").get<std::int32_t>();
  return c;
}

json trip_to_json(const TripRequest& t) {
  json j{{"user_id", t.user_id},
         {"start_station", t.start_station},
         {"end_station", t.end_station},
         {"start_slot", t.start_slot},
         {"end_slot", t.end_slot},
         {"base_price_cents", t.base_price.cents},
         {"travel_cost_cents", t.travel_cost.cents},
         {"activity", t.activity == Activity::Active ? "active" : "inactive"}};
  if (t.threshold)
    j["threshold"] = json{{"mu_cents", t.threshold->mu.cents},
                          {"sigma_cents", t.threshold->sigma.cents}};
  return j;
}

TripRequest trip_from_json(const json& j) {
  TripRequest t;
  t.user_id = j.at("user_id").get<UserId>();
  t.start_station = j.at("start_station").get<StationId>();
  t.end_station = j.at("end_station").get<StationId>();
  t.start_slot = j.at("start_slot").get<Slot>();
  t.end_slot = j.at("end_slot").get<Slot>();
  t.base_price = Money{j.at("base_price_cents").get<std::int64_t>()};
  t.travel_cost = Money{j.at("travel_cost_cents").get<std::int64_t>()};
  t.activity = j.at("activity").get<std::string>() == "active" ? Activity::Active
                                                               : Activity::Inactive;
  if (j.contains("threshold"))
    t.threshold = ThresholdDist{Money{j["threshold"].at("mu_cents").get<std::int64_t>()},
                                Money{j["threshold"].at("sigma_cents").get<std::int64_t>()}};
  return t;
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  json trips = json::array();
  for (const auto& t : inst.trips) trips.push_back(trip_to_json(t));
  json j{{"schema_version", kSchemaVersion},
         {"horizon", {{"tau", inst.horizon.tau}, {"slot_minutes", inst.horizon.slot_minutes}}},
         {"config", config_to_json(inst.config)},
         {"provenance", inst.provenance == Provenance::CsvImport ? "csv_import" : "synthetic"},
         {"rng_seed", inst.rng_seed},
         {"trips", trips}};
  return j.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("instance parse failed: ") + e.what());
  }
  if (!j.contains("schema_version"))
    throw Error(Errc::SchemaVersionMismatch, "missing schema_version");
  if (j["schema_version"].get<int>() != kSchemaVersion)
    throw Error(Errc::SchemaVersionMismatch,
                "unsupported schema_version " + j["schema_version"].dump());
  try {
    Horizon h{j.at("horizon").at("tau").get<Slot>(),
              j.at("horizon").at("slot_minutes").get<std::int32_t>()};
    IngestConfig cfg = config_from_json(j.at("config"));
    std::vector<TripRequest> trips;
    for (const auto& tj : j.at("trips")) trips.push_back(trip_from_json(tj));
    Provenance prov = j.value("provenance", "synthetic") == "csv_import" ? Provenance::CsvImport
                                                                         : Provenance::Synthetic;
    return make_instance(h, cfg, std::move(trips), j.value("rng_seed", std::uint64_t{0}), prov);
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("instance fields malformed: ") + e.what());
  }
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  out << instance_to_json(inst);
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace chainmatch
