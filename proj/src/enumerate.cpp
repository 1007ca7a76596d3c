#include "chainmatch/enumerate.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>

#include <json.hpp>

namespace chainmatch {

std::size_t SuccessorIndex::total_entries() const {
  std::size_t n = 0;
  for (const auto& b : buckets) n += b.size();
  return n;
}

SuccessorIndex build_index(const Instance& inst) {
  SuccessorIndex idx;
  idx.n_stations = inst.station_count();
  idx.tau = inst.horizon.tau;
  idx.buckets.assign(static_cast<std::size_t>(idx.n_stations) * idx.tau, {});
  for (std::uint32_t i = 0; i < inst.trips.size(); ++i) {
    const auto& t = inst.trips[i];
    idx.buckets[static_cast<std::size_t>(t.start_station) * idx.tau + (t.start_slot - 1)]
        .push_back(i);
  }
  return idx;
}

namespace {

struct Enumerator {
  const Instance& inst;
  const SuccessorIndex& index;
  Slot depth;
  std::size_t max_chains;
  std::vector<Chain>* out;

  std::vector<std::uint32_t> path;
  std::uint32_t path_inactive = 0;

  void emit(std::uint32_t closing_trip, std::uint32_t closing_inactive) {
    if (out->size() >= max_chains)
      throw Error(Errc::PoolOverflow,
                  "chain pool exceeded cap of " + std::to_string(max_chains));
    Chain c;
    c.trips = path;
    c.trips.push_back(closing_trip);
    c.inactive_count = path_inactive + closing_inactive;
    assert(([&] {
      std::vector<TripRequest> m;
      for (auto i : c.trips) m.push_back(inst.trips[i]);
      return chain_feasible(m, inst.horizon);
    })());
    out->push_back(std::move(c));
  }

  void extend(std::uint32_t last_trip) {
    const auto& last = inst.trips[last_trip];
    const StationId home = inst.trips[path.front()].start_station;
    for (std::uint32_t next : index.at(last.end_station, last.end_slot)) {
      const auto& nt = inst.trips[next];
      const std::uint32_t inact = nt.activity == Activity::Inactive ? 1u : 0u;
      if (nt.end_station == home && path.size() + 1 >= 2) emit(next, inact);
      if (path.size() + 1 < static_cast<std::size_t>(depth)) {
        path.push_back(next);
        path_inactive += inact;
        extend(next);
        path_inactive -= inact;
        path.pop_back();
      }
    }
  }

  void run() {
    for (std::uint32_t root = 0; root < inst.trips.size(); ++root) {
      path.clear();
      path.push_back(root);
      path_inactive = inst.trips[root].activity == Activity::Inactive ? 1u : 0u;
      extend(root);
    }
  }
};

}  // namespace

ChainPool enumerate_chains(const Instance& inst, Slot depth_cutoff,
                           const EnumerateOptions& opts) {
  if (depth_cutoff < 2 || depth_cutoff > inst.horizon.tau - 1)
    throw Error(Errc::DepthOutOfRange, "depth cutoff " + std::to_string(depth_cutoff) +
                                           " outside [2, " +
                                           std::to_string(inst.horizon.tau - 1) + "]");
  ChainPool pool;
  pool.depth_cutoff = depth_cutoff;

  SuccessorIndex index = build_index(inst);
  Enumerator e{inst, index, depth_cutoff, opts.max_chains, &pool.chains, {}, 0};
  e.run();

  // Canonical pool order: by length, then member user ids lexicographically.
  // The slot chaining already forces each chain's one valid internal order, so
  // this sort is a total order on distinct chains.
  std::sort(pool.chains.begin(), pool.chains.end(), [&](const Chain& a, const Chain& b) {
    if (a.trips.size() != b.trips.size()) return a.trips.size() < b.trips.size();
    for (std::size_t i = 0; i < a.trips.size(); ++i) {
      UserId ua = inst.trips[a.trips[i]].user_id;
      UserId ub = inst.trips[b.trips[i]].user_id;
      if (ua != ub) return ua < ub;
    }
    return false;
  });
  return pool;
}

std::map<std::uint32_t, std::size_t> pool_stats(const ChainPool& pool) {
  std::map<std::uint32_t, std::size_t> hist;
  for (Slot d = 2; d <= pool.depth_cutoff; ++d) hist[static_cast<std::uint32_t>(d)] = 0;
  for (const auto& c : pool.chains) ++hist[c.length()];
  return hist;
}

std::vector<UserId> member_ids(const Instance& inst, const Chain& c) {
  std::vector<UserId> ids;
  ids.reserve(c.trips.size());
  for (auto i : c.trips) ids.push_back(inst.trips[i].user_id);
  return ids;
}

void dump_pool(const Instance& inst, const ChainPool& pool, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  for (const auto& c : pool.chains) {
    nlohmann::json j{{"members", member_ids(inst, c)}, {"length", c.length()}};
    out << j.dump() << "\n";
  }
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

}  // namespace chainmatch
