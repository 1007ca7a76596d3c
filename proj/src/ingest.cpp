#include "chainmatch/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "chainmatch/pricing.hpp"
#include "chainmatch/rng.hpp"

namespace chainmatch {

namespace {

// ---------------------------------------------------------------- CSV layer

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::string t = trim(s);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) return std::nullopt;
  return v;
}

// Fare like "12.5" or "12.50" or "12" to cents; rejects negatives and junk.
std::optional<Money> parse_fare(const std::string& s) {
  std::string t = trim(s);
  if (t.empty() || t[0] == '-') return std::nullopt;
  double d = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), d);
  if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(d)) return std::nullopt;
  return Money::from_dollars(d);
}

struct HeaderMap {
  bool pre_discretized = false;
  int user_id = -1;
  int pickup_zone = -1, dropoff_zone = -1, pickup_time = -1, dropoff_time = -1;
  int start_station = -1, end_station = -1, start_slot = -1, end_slot = -1;
  int fare = -1;
};

HeaderMap parse_header(const std::vector<std::string>& cols) {
  std::map<std::string, int> pos;
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    std::string name = trim(cols[i]);
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    pos[name] = i;
  }
  auto find = [&](const char* name) {
    auto it = pos.find(name);
    return it == pos.end() ? -1 : it->second;
  };
  HeaderMap h;
  h.user_id = find("user_id");
  h.fare = find("fare");
  if (h.user_id < 0) throw Error(Errc::MissingColumn, "user_id");
  if (h.fare < 0) throw Error(Errc::MissingColumn, "fare");
  h.start_slot = find("start_slot");
  if (h.start_slot >= 0) {
    h.pre_discretized = true;
    h.start_station = find("start_station");
    h.end_station = find("end_station");
    h.end_slot = find("end_slot");
    if (h.start_station < 0) throw Error(Errc::MissingColumn, "start_station");
    if (h.end_station < 0) throw Error(Errc::MissingColumn, "end_station");
    if (h.end_slot < 0) throw Error(Errc::MissingColumn, "end_slot");
  } else {
    h.pickup_zone = find("pickup_zone");
    h.dropoff_zone = find("dropoff_zone");
    h.pickup_time = find("pickup_time");
    h.dropoff_time = find("dropoff_time");
    if (h.pickup_zone < 0) throw Error(Errc::MissingColumn, "pickup_zone");
    if (h.dropoff_zone < 0) throw Error(Errc::MissingColumn, "dropoff_zone");
    if (h.pickup_time < 0) throw Error(Errc::MissingColumn, "pickup_time");
    if (h.dropoff_time < 0) throw Error(Errc::MissingColumn, "dropoff_time");
  }
  return h;
}

}  // namespace

// Days-from-civil calendar arithmetic; valid for the whole int64 second range
// we care about. Accepts "YYYY-MM-DD HH:MM[:SS]" with 'T' or ' ' separator,
// optional fractional seconds (ignored) and trailing 'Z'.
std::optional<std::int64_t> parse_iso8601(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && (t.back() == 'Z' || t.back() == 'z')) t.pop_back();
  int year, month, day, hour, minute;
  double sec = 0.0;
  char sep;
  int n = 0;
  int got = std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%lf%n", &year, &month, &day, &sep, &hour,
                        &minute, &sec, &n);
  if (got < 6) return std::nullopt;
  if (got == 6) {
    // no seconds field
    got = std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d%n", &year, &month, &day, &sep, &hour, &minute,
                      &n);
    sec = 0.0;
    if (got != 6 || n != static_cast<int>(t.size())) return std::nullopt;
  } else if (n != static_cast<int>(t.size())) {
    return std::nullopt;
  }
  if (sep != 'T' && sep != ' ' && sep != 't') return std::nullopt;
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  if (hour < 0 || hour > 23 || minute < 0 || minute > 59 || sec < 0.0 || sec >= 61.0)
    return std::nullopt;

  std::int64_t y = year;
  y -= month <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2u) / 5u + day - 1u;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  const std::int64_t days = era * 146097 + static_cast<std::int64_t>(doe) - 719468;
  return days * 86400 + hour * 3600 + minute * 60 + static_cast<std::int64_t>(sec);
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld",
                static_cast<long long>(y + (m <= 2)), m, d, static_cast<long long>(rem / 3600),
                static_cast<long long>((rem / 60) % 60), static_cast<long long>(rem % 60));
  return buf;
}

CsvParseResult parse_trips_csv(std::istream& in, const IngestConfig& cfg) {
  validate_config(cfg);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyFile, "no header row");
  HeaderMap header = parse_header(split_csv_line(line));

  CsvParseResult result;
  std::uint32_t line_no = 1;
  bool any_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    any_row = true;
    auto fields = split_csv_line(line);
    auto field = [&](int idx) -> std::optional<std::string> {
      if (idx < 0 || idx >= static_cast<int>(fields.size())) return std::nullopt;
      return fields[idx];
    };
    auto fail = [&](const std::string& why) {
      result.row_errors.push_back({line_no, why});
    };

    RawTripRecord rec;
    rec.line_no = line_no;
    auto uid = field(header.user_id);
    auto fare = field(header.fare);
    if (!uid || !fare) {
      fail("row has fewer fields than the header");
      continue;
    }
    auto uid_v = parse_int(*uid);
    auto fare_v = parse_fare(*fare);
    if (!uid_v) {
      fail("user_id not an integer: '" + *uid + "'");
      continue;
    }
    if (!fare_v) {
      fail("fare not a non-negative decimal: '" + *fare + "'");
      continue;
    }
    rec.user_id = *uid_v;
    rec.fare = *fare_v;

    if (header.pre_discretized) {
      rec.pre_discretized = true;
      auto ss = field(header.start_station), es = field(header.end_station);
      auto sl = field(header.start_slot), el = field(header.end_slot);
      if (!ss || !es || !sl || !el) {
        fail("row has fewer fields than the header");
        continue;
      }
      auto ssv = parse_int(*ss), esv = parse_int(*es), slv = parse_int(*sl), elv = parse_int(*el);
      if (!ssv || !esv || !slv || !elv) {
        fail("station/slot fields not integers");
        continue;
      }
      rec.start_station = static_cast<StationId>(*ssv);
      rec.end_station = static_cast<StationId>(*esv);
      rec.start_slot = static_cast<Slot>(*slv);
      rec.end_slot = static_cast<Slot>(*elv);
    } else {
      auto pz = field(header.pickup_zone), dz = field(header.dropoff_zone);
      auto pt = field(header.pickup_time), dt = field(header.dropoff_time);
      if (!pz || !dz || !pt || !dt) {
        fail("row has fewer fields than the header");
        continue;
      }
      auto ptv = parse_iso8601(*pt), dtv = parse_iso8601(*dt);
      if (!ptv) {
        fail("pickup_time not ISO-8601: '" + *pt + "'");
        continue;
      }
      if (!dtv) {
        fail("dropoff_time not ISO-8601: '" + *dt + "'");
        continue;
      }
      rec.pickup_zone = trim(*pz);
      rec.dropoff_zone = trim(*dz);
      rec.pickup_time = *ptv;
      rec.dropoff_time = *dtv;
    }
    result.records.push_back(std::move(rec));
  }
  if (!any_row) throw Error(Errc::EmptyFile, "header only, no data rows");
  return result;
}

CsvParseResult load_trips_csv(const std::string& path, const IngestConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return parse_trips_csv(in, cfg);
}

std::vector<TripRequest> discretize(const std::vector<RawTripRecord>& records,
                                    const IngestConfig& cfg, std::int64_t window_start) {
  validate_config(cfg);
  const std::int64_t slot_seconds = std::int64_t{cfg.slot_minutes} * 60;
  const std::int64_t window_len = slot_seconds * cfg.tau;

  // Zones get regions_per_zone stations each, ids assigned over the sorted
  // distinct zone names; each trip endpoint picks one of its zone's stations.
  std::map<std::string, StationId> zone_base;
  for (const auto& r : records) {
    if (r.pre_discretized) continue;
    zone_base.emplace(r.pickup_zone, 0);
    zone_base.emplace(r.dropoff_zone, 0);
  }
  StationId next = 0;
  for (auto& [zone, base] : zone_base) {
    base = next;
    next += cfg.regions_per_zone;
  }
  Rng rng(derive_seed(cfg.rng_seed, 0x7a6e65));  // zone-assignment stream

  std::vector<TripRequest> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    TripRequest t;
    t.user_id = r.user_id;
    t.base_price = r.fare;
    t.travel_cost = apply_cost_factor(r.fare, cfg.cost_factor);
    if (r.pre_discretized) {
      t.start_station = r.start_station;
      t.end_station = r.end_station;
      t.start_slot = r.start_slot;
      t.end_slot = r.end_slot;
    } else {
      auto to_slot = [&](std::int64_t ts, const char* what) {
        std::int64_t off = ts - window_start;
        if (off < 0 || off >= window_len)
          throw Error(Errc::TimestampOutsideWindow,
                      std::string(what) + " " + format_iso8601(ts) + " of user " +
                          std::to_string(r.user_id) + " outside window [" +
                          format_iso8601(window_start) + ", " +
                          format_iso8601(window_start + window_len) + ")");
        return static_cast<Slot>(off / slot_seconds + 1);
      };
      t.start_slot = to_slot(r.pickup_time, "pickup");
      t.end_slot = to_slot(r.dropoff_time, "dropoff");
      t.start_station =
          zone_base[r.pickup_zone] + static_cast<StationId>(rng.next_below(cfg.regions_per_zone));
      t.end_station =
          zone_base[r.dropoff_zone] + static_cast<StationId>(rng.next_below(cfg.regions_per_zone));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::size_t FilterReport::removed_count(RemovalReason r) const {
  std::size_t n = 0;
  for (const auto& [t, reason] : removed)
    if (reason == r) ++n;
  return n;
}

FilterReport apply_filters(const std::vector<TripRequest>& trips) {
  FilterReport rep;
  for (const auto& t : trips) {
    if (t.end_station == t.start_station)
      rep.removed.emplace_back(t, RemovalReason::RoundTrip);
    else if (t.end_slot <= t.start_slot)
      rep.removed.emplace_back(t, RemovalReason::NonCausal);
    else
      rep.kept.push_back(t);
  }
  return rep;
}

std::vector<TripRequest> classify_users(const std::vector<TripRequest>& trips,
                                        const IngestConfig& cfg) {
  validate_config(cfg);
  const std::size_t n = trips.size();
  const auto n_active =
      static_cast<std::size_t>(std::llround(cfg.active_fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng shuffle_rng(derive_seed(cfg.rng_seed, 0x636c61));  // classification stream
  fisher_yates(order, shuffle_rng);

  std::vector<bool> active(n, false);
  for (std::size_t i = 0; i < n_active && i < n; ++i) active[order[i]] = true;

  Rng mu_rng(derive_seed(cfg.rng_seed, 0x6d7531));  // threshold-mean stream
  std::vector<TripRequest> out = trips;
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i]) {
      out[i].activity = Activity::Active;
      out[i].threshold.reset();
    } else {
      out[i].activity = Activity::Inactive;
      // mu uniform over the cent grid [0, base_price]
      Money mu{static_cast<std::int64_t>(
          mu_rng.next_below(static_cast<std::uint64_t>(out[i].base_price.cents) + 1))};
      out[i].threshold = ThresholdDist{mu, cfg.sigma_fixed};
    }
  }
  return out;
}

Instance generate_synthetic(std::int64_t n_users, StationId n_stations, const IngestConfig& cfg) {
  validate_config(cfg);
  if (n_users < 1) throw Error(Errc::InvalidDimensions, "n_users must be at least 1");
  if (n_stations < 2) throw Error(Errc::InvalidDimensions, "need at least 2 stations");

  Rng rng(derive_seed(cfg.rng_seed, 0x67656e));  // trip-generation stream
  const std::uint64_t slot_pairs =
      static_cast<std::uint64_t>(cfg.tau) * (cfg.tau - 1) / 2;  // pairs with end > start

  std::vector<TripRequest> trips;
  trips.reserve(static_cast<std::size_t>(n_users));
  for (std::int64_t u = 0; u < n_users; ++u) {
    TripRequest t;
    t.user_id = u + 1;
    t.start_station = static_cast<StationId>(rng.next_below(n_stations));
    StationId other = static_cast<StationId>(rng.next_below(n_stations - 1));
    t.end_station = other >= t.start_station ? other + 1 : other;

    // uniform over { (a, b) : 1 <= a < b <= tau }
    std::uint64_t k = rng.next_below(slot_pairs);
    Slot a = 1;
    std::uint64_t remaining = static_cast<std::uint64_t>(cfg.tau) - 1;
    while (k >= remaining) {
      k -= remaining;
      --remaining;
      ++a;
    }
    t.start_slot = a;
    t.end_slot = a + static_cast<Slot>(k) + 1;

    std::uint64_t span = static_cast<std::uint64_t>(cfg.fare_max.cents - cfg.fare_min.cents) + 1;
    t.base_price = Money{cfg.fare_min.cents + static_cast<std::int64_t>(rng.next_below(span))};
    t.travel_cost = apply_cost_factor(t.base_price, cfg.cost_factor);
    trips.push_back(std::move(t));
  }

  trips = classify_users(trips, cfg);
  return make_instance(Horizon{cfg.tau, cfg.slot_minutes}, cfg, std::move(trips), cfg.rng_seed,
                       Provenance::Synthetic);
}

}  // namespace chainmatch
