#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chainmatch/instance.hpp"

namespace chainmatch {

// Buckets trips by (start station, start slot) so chain extension is a
// constant-time lookup instead of a scan.
struct SuccessorIndex {
  StationId n_stations = 0;
  Slot tau = 0;
  std::vector<std::vector<std::uint32_t>> buckets;  // [station * tau + slot - 1]

  const std::vector<std::uint32_t>& at(StationId s, Slot t) const {
    static const std::vector<std::uint32_t> empty;
    if (s < 0 || s >= n_stations || t < 1 || t > tau) return empty;
    return buckets[static_cast<std::size_t>(s) * tau + (t - 1)];
  }

  std::size_t total_entries() const;
};

SuccessorIndex build_index(const Instance& inst);

struct ChainPool {
  std::vector<Chain> chains;  // sorted by length, then member user ids
  Slot depth_cutoff = 0;
};

struct EnumerateOptions {
  // Hard cap: enumeration fails loudly (PoolOverflow) instead of silently
  // truncating, since the chain count can blow up on dense instances.
  std::size_t max_chains = 5'000'000;
};

// All member sequences satisfying the chain predicates with 2 <= d <= depth.
// DFS extends a path trip-by-trip through the successor index and emits a
// chain every time the next trip's end station closes the cycle; the path
// keeps extending past an emission, so one path can yield several chains.
// Throws DepthOutOfRange unless 2 <= depth_cutoff <= tau - 1.
ChainPool enumerate_chains(const Instance& inst, Slot depth_cutoff,
                           const EnumerateOptions& opts = {});

// Chain length histogram over d in [2, depth_cutoff].
std::map<std::uint32_t, std::size_t> pool_stats(const ChainPool& pool);

std::vector<UserId> member_ids(const Instance& inst, const Chain& c);

// Debug dump, one JSON object per line: {"members":[...],"length":d}.
void dump_pool(const Instance& inst, const ChainPool& pool, const std::string& path);

}  // namespace chainmatch
