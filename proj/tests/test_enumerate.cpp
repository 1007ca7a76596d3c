#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "chainmatch/enumerate.hpp"
#include "chainmatch/ingest.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace chainmatch;
using helpers::trip;

TEST_CASE("build_index buckets trips by start station and slot") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 0, 2, 1, 3),
                                    trip(3, 1, 0, 2, 3)});
  auto idx = build_index(inst);
  CHECK(idx.at(0, 1).size() == 2);
  CHECK(idx.at(1, 2).size() == 1);
  CHECK(idx.at(2, 1).size() == 0);
  CHECK(idx.total_entries() == inst.trips.size());
}

TEST_CASE("build_index of an empty instance is empty") {
  auto inst = helpers::instance_of({});
  auto idx = build_index(inst);
  CHECK(idx.total_entries() == 0);
  CHECK(enumerate_chains(inst, 2).chains.empty());
}

TEST_CASE("bucket sizes sum to the trip count on a large instance") {
  IngestConfig cfg;
  cfg.rng_seed = 23;
  auto inst = generate_synthetic(2303, 40, cfg);
  CHECK(build_index(inst).total_entries() == 2303);
}

TEST_CASE("a single 2-cycle is found") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 1, 0, 2, 3)});
  auto pool = enumerate_chains(inst, 2);
  REQUIRE(pool.chains.size() == 1);
  CHECK(member_ids(inst, pool.chains[0]) == std::vector<UserId>{1, 2});
}

TEST_CASE("a 3-cycle yields one 3-chain and no 2-chains") {
  auto inst = helpers::instance_of(
      {trip(1, 0, 1, 1, 2), trip(2, 1, 2, 2, 3), trip(3, 2, 0, 3, 4)});
  auto pool = enumerate_chains(inst, 3);
  REQUIRE(pool.chains.size() == 1);
  CHECK(pool.chains[0].length() == 3);
  auto hist = pool_stats(pool);
  CHECK(hist[2] == 0);
  CHECK(hist[3] == 1);
}

TEST_CASE("a station may repeat inside a chain; closures keep extending") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 1, 0, 2, 3),
                                    trip(3, 0, 2, 3, 4), trip(4, 2, 0, 4, 5)});
  auto pool = enumerate_chains(inst, 4);
  auto sets = oracles::pool_as_sets(inst, pool);
  CHECK(sets.count({1, 2}) == 1);
  CHECK(sets.count({3, 4}) == 1);
  CHECK(sets.count({1, 2, 3, 4}) == 1);  // passes through station 0 twice
  CHECK(pool.chains.size() == 3);
}

TEST_CASE("depth cutoff limits emitted lengths") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 1, 0, 2, 3),
                                    trip(3, 0, 2, 3, 4), trip(4, 2, 0, 4, 5)});
  auto pool = enumerate_chains(inst, 2);
  CHECK(pool.chains.size() == 2);
  for (const auto& c : pool.chains) CHECK(c.length() == 2);
}

TEST_CASE("depth cutoff is validated") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2)});
  CHECK_THROWS_AS(enumerate_chains(inst, 1), Error);
  CHECK_THROWS_AS(enumerate_chains(inst, 6), Error);  // tau - 1 == 5
}

TEST_CASE("the pool cap fails loudly") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 1, 0, 2, 3),
                                    trip(3, 0, 2, 3, 4), trip(4, 2, 0, 4, 5)});
  EnumerateOptions opts;
  opts.max_chains = 1;
  CHECK_THROWS_AS(enumerate_chains(inst, 4, opts), Error);
}

TEST_CASE("enumeration equals the factorial oracle on random 12-trip instances") {
  for (std::uint64_t seed = 100; seed < 112; ++seed) {
    IngestConfig cfg;
    cfg.rng_seed = seed;
    auto inst = generate_synthetic(12, 4, cfg);
    for (Slot depth : {2, 3, 4, 5}) {
      auto pool = enumerate_chains(inst, depth);
      auto got = oracles::pool_as_sets(inst, pool);
      auto want = oracles::enumerate_chains_oracle(inst, depth);
      CHECK(got == want);
      CHECK(pool.chains.size() == want.size());  // no duplicates either
    }
  }
}

TEST_CASE("every emitted chain is feasible and canonically ordered") {
  IngestConfig cfg;
  cfg.rng_seed = 5;
  auto inst = generate_synthetic(80, 5, cfg);
  auto pool = enumerate_chains(inst, 4);
  REQUIRE(pool.chains.size() > 0);
  for (const auto& c : pool.chains) {
    std::vector<TripRequest> members;
    for (auto t : c.trips) members.push_back(inst.trips[t]);
    CHECK(chain_feasible(members, inst.horizon));
    for (std::size_t i = 0; i + 1 < members.size(); ++i)
      CHECK(members[i].start_slot < members[i + 1].start_slot);
    std::uint32_t inact = 0;
    for (const auto& m : members)
      if (m.activity == Activity::Inactive) ++inact;
    CHECK(inact == c.inactive_count);
  }
  // pool sorted by length then member ids
  for (std::size_t i = 0; i + 1 < pool.chains.size(); ++i) {
    const auto &a = pool.chains[i], &b = pool.chains[i + 1];
    if (a.length() != b.length()) {
      CHECK(a.length() < b.length());
    } else {
      CHECK(member_ids(inst, a) < member_ids(inst, b));
    }
  }
}

TEST_CASE("enumeration is deterministic") {
  IngestConfig cfg;
  cfg.rng_seed = 9;
  auto inst = generate_synthetic(60, 5, cfg);
  auto a = enumerate_chains(inst, 5);
  auto b = enumerate_chains(inst, 5);
  CHECK(a.chains == b.chains);
}

TEST_CASE("pool_stats covers the whole depth range and recounts exactly") {
  auto empty_inst = helpers::instance_of({});
  auto empty = enumerate_chains(empty_inst, 4);
  auto hist = pool_stats(empty);
  REQUIRE(hist.size() == 3);  // lengths 2, 3, 4
  for (const auto& [len, n] : hist) CHECK(n == 0);

  IngestConfig cfg;
  cfg.rng_seed = 1;
  auto inst = generate_synthetic(300, 10, cfg);
  auto pool = enumerate_chains(inst, 5);
  auto stats = pool_stats(pool);
  std::map<std::uint32_t, std::size_t> recount;
  for (Slot d = 2; d <= 5; ++d) recount[static_cast<std::uint32_t>(d)] = 0;
  for (const auto& c : pool.chains) ++recount[c.length()];
  CHECK(stats == recount);
  std::size_t total = 0;
  for (const auto& [len, n] : stats) total += n;
  CHECK(total == pool.chains.size());
}

TEST_CASE("dump_pool writes one JSON line per chain") {
  auto inst = helpers::instance_of({trip(1, 0, 1, 1, 2), trip(2, 1, 0, 2, 3)});
  auto pool = enumerate_chains(inst, 2);
  auto path = std::filesystem::temp_directory_path() / "chainmatch_pool.jsonl";
  dump_pool(inst, pool, path.string());
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == pool.chains.size());
  std::filesystem::remove(path);
}
