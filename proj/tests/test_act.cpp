// Copyright 2026 The geojoin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "geojoin/act.hpp"
#include "geojoin/super_covering.hpp"
#include "oracles.hpp"

using namespace geojoin;
using testing::Rng;

namespace {

Covering make_covering(uint32_t id, std::vector<CellId> cells, bool interior) {
  Covering c;
  c.polygon_id = id;
  c.cells = normalize_covering(std::move(cells));
  c.interior = interior;
  return c;
}

SuperCovering single_cell_sc(CellId cell, uint32_t id = 7) {
  return build_super_covering(
      std::vector<Covering>{make_covering(id, {cell}, false)}, {});
}

// A neighborhood of overlapping polygons with real coverings and interiors.
struct Fixture {
  std::vector<Polygon> polygons;
  SuperCovering sc;
  LatLngRect region;
};

Fixture make_fixture(Rng& rng, int polygon_count, int max_level = 12) {
  Fixture f;
  f.region = {18.0, 26.0, 28.0, 36.0};
  CoveringConfig cfg;
  cfg.max_covering_cells = 48;
  cfg.max_covering_level = max_level;
  cfg.max_interior_cells = 64;
  cfg.max_interior_level = std::min(max_level, 10);
  std::vector<Covering> covs;
  std::vector<Covering> ints;
  for (int i = 0; i < polygon_count; ++i) {
    const Polygon poly = testing::random_star_polygon(
        rng, static_cast<uint32_t>(i),
        {rng.uniform(20.0, 24.0), rng.uniform(30.0, 34.0)},
        rng.uniform(0.4, 1.6), rng.uniform_int(6, 24));
    f.polygons.push_back(poly);
    covs.push_back(compute_covering(poly, cfg, false));
    ints.push_back(compute_covering(poly, cfg, true));
  }
  f.sc = build_super_covering(covs, ints);
  return f;
}

CellId center_probe(CellId cell, int level = 24) {
  const LatLngRect box = cell_box(cell);
  return cell_from_point(
      {(box.lat_lo + box.lat_hi) / 2, (box.lng_lo + box.lng_hi) / 2}, level);
}

}  // namespace

TEST_CASE("tagged entry encoding is total and self-consistent") {
  CHECK(tagged::kSentinel == 0);
  CHECK(tagged::kind(0) == tagged::kLink);
  const uint32_t p = tagged::make_payload(5, true);
  CHECK(tagged::payload_polygon(p) == 5);
  CHECK(tagged::payload_interior(p));
  CHECK(tagged::kind(tagged::make_one(p)) == tagged::kOnePayload);
  CHECK(tagged::one_payload(tagged::make_one(p)) == p);
  const uint32_t q = tagged::make_payload(kMaxPolygonId, false);
  const uint64_t two = tagged::make_two(p, q);
  CHECK(tagged::kind(two) == tagged::kTwoPayloads);
  CHECK(tagged::two_first(two) == p);
  CHECK(tagged::two_second(two) == q);
  CHECK(tagged::kind(tagged::make_offset(123)) == tagged::kOffset);
  CHECK(tagged::table_offset(tagged::make_offset(123)) == 123);

  // Every 64-bit pattern decodes to exactly one variant.
  Rng rng(0xac70001);
  bool total = true;
  for (int i = 0; i < 100000; ++i) {
    const uint64_t e = rng.u64();
    const auto k = tagged::kind(e);
    total = total && (k == tagged::kLink || k == tagged::kOnePayload ||
                      k == tagged::kTwoPayloads || k == tagged::kOffset) &&
            k == static_cast<tagged::Kind>(e & 3);
  }
  CHECK(total);
}

TEST_CASE("build: empty super covering probes false everywhere") {
  const Act act = Act::build(SuperCovering{}, ActConfig{});
  CHECK(act.node_count() == 0);
  CHECK(act.memory_usage() == 120);  // face-node bytes only
  Rng rng(0xac70002);
  for (int i = 0; i < 1000; ++i) {
    const CellId probe = testing::random_cell(rng, 24);
    CHECK(act.probe(probe) == tagged::kSentinel);
  }
  CellId batch[8];
  uint64_t out[8];
  for (int i = 0; i < 8; ++i) batch[i] = testing::random_cell(rng, 24);
  act.probe_batch(batch, out);
  for (int i = 0; i < 8; ++i) CHECK(out[i] == tagged::kSentinel);
}

TEST_CASE("build: one level-4 cell fills one slot of one root node") {
  const CellId cell = cell_from_point({42.0, 5.0}, 4);
  const Act act = Act::build(single_cell_sc(cell), ActConfig{});
  CHECK(act.node_count() == 1);
  CHECK(act.memory_usage() == 120 + 256 * 8);
  CHECK(act.lookup_table().empty());

  // Exactly one of the 256 level-4 cells hits; the rest are sentinels.
  size_t hits = 0;
  size_t sentinels = 0;
  testing::for_each_leaf(CellId{kRootCellRaw}, 4, [&](CellId c4) {
    const uint64_t e = act.probe(center_probe(c4));
    if (c4 == cell) {
      CHECK(tagged::kind(e) == tagged::kOnePayload);
      ++hits;
    } else if (e == tagged::kSentinel) {
      ++sentinels;
    }
  });
  CHECK(hits == 1);
  CHECK(sentinels == 255);
}

TEST_CASE("build: a level-2 cell is denormalized across 16 slots") {
  const CellId cell = cell_from_point({-10.0, -60.0}, 2);
  const Act act = Act::build(single_cell_sc(cell, 3), ActConfig{});
  CHECK(act.node_count() == 1);

  // All 16 level-4 cells below it resolve to the entry, every other
  // level-4 cell to the sentinel.
  size_t hits = 0;
  testing::for_each_leaf(CellId{kRootCellRaw}, 4, [&](CellId c4) {
    const uint64_t e = act.probe(center_probe(c4));
    if (cell_contains(cell, c4)) {
      CHECK(tagged::kind(e) == tagged::kOnePayload);
      CHECK(tagged::payload_polygon(tagged::one_payload(e)) == 3);
      ++hits;
    } else {
      CHECK(e == tagged::kSentinel);
    }
  });
  CHECK(hits == 16);  // 4^(4 - 2)
}

TEST_CASE("denormalization transparency: leaves of one logical cell agree") {
  // Level 5 is off the 4-level node granularity.
  const CellId cell = cell_from_point({7.0, 7.0}, 5);
  const Act act = Act::build(single_cell_sc(cell, 9), ActConfig{});
  Rng rng(0xac70003);
  const LatLngRect box = cell_box(cell);
  uint64_t first = 0;
  bool all_same = true;
  for (int i = 0; i < 2000; ++i) {
    const CellId leaf = cell_from_point(testing::random_point_in(rng, box), 24);
    REQUIRE(cell_contains(cell, cell_parent(leaf, 5)));
    const uint64_t e = act.probe(leaf);
    if (i == 0) {
      first = e;
      CHECK(tagged::kind(e) == tagged::kOnePayload);
    }
    all_same = all_same && e == first;
  }
  CHECK(all_same);
}

TEST_CASE("build rejects cells deeper than k_max/2 and bad configs") {
  ActConfig cfg;
  cfg.k_max = 24;  // max level 12
  const CellId cell = cell_from_point({1, 1}, 13);
  CHECK_THROWS_AS(Act::build(single_cell_sc(cell), cfg), BuildError);
  CHECK_THROWS_WITH_AS(Act::build(single_cell_sc(cell), cfg),
                       doctest::Contains("k_max"), BuildError);
  ActConfig bad;
  bad.k_max = 12;
  CHECK_THROWS_AS(Act::build(SuperCovering{}, bad), BuildError);
  ActConfig full;
  full.k_max = 60;  // the full key; levels up to 30
  const Act act = Act::build(single_cell_sc(cell_from_point({1, 1}, 30)), full);
  CHECK(act.probe(cell_from_point({1, 1}, 30)) != tagged::kSentinel);
}

TEST_CASE("probe equals logical lookup on random points") {
  Rng rng(0xac70004);
  const Fixture f = make_fixture(rng, 5);
  const Act act = Act::build(f.sc, ActConfig{});

  bool agree = true;
  for (int i = 0; i < 100000; ++i) {
    const LatLng p = testing::random_point_in(rng, f.region);
    const CellId leaf = cell_from_point(p, act.max_indexed_level());
    const ReferenceList* expected = f.sc.lookup(cell_from_point(p, 30));
    const ProbeResult got = act.resolve(act.probe(leaf));
    if (expected == nullptr) {
      agree = agree && got.false_hit();
    } else {
      agree = agree && got.refs == *expected;
    }
  }
  CHECK(agree);
}

TEST_CASE("probe stays within the node-access bound") {
  Rng rng(0xac70005);
  const Fixture f = make_fixture(rng, 4);
  const ActConfig cfg;
  const Act act = Act::build(f.sc, cfg);
  const int bound = 1 + cfg.k_max / 8;
  int worst = 0;
  bool within = true;
  for (int i = 0; i < 20000; ++i) {
    const LatLng p = testing::random_point_in(rng, f.region);
    int accesses = 0;
    act.probe_counting(cell_from_point(p, act.max_indexed_level()), accesses);
    within = within && accesses <= bound;
    worst = std::max(worst, accesses);
  }
  CHECK(within);
  CHECK(worst >= 2);  // face node plus at least the root
}

TEST_CASE("resolve: payload forms") {
  const Act empty = Act::build(SuperCovering{}, ActConfig{});

  // One payload.
  const uint64_t one = tagged::make_one(tagged::make_payload(5, true));
  const ProbeResult r1 = empty.resolve(one);
  REQUIRE(r1.refs.size() == 1);
  CHECK(r1.refs[0] == PolygonReference{5, true});

  // Two payloads, order-stable.
  const uint64_t two = tagged::make_two(tagged::make_payload(8, true),
                                        tagged::make_payload(2, false));
  const ProbeResult r2 = empty.resolve(two);
  REQUIRE(r2.refs.size() == 2);
  CHECK(r2.refs[0] == PolygonReference{8, true});
  CHECK(r2.refs[1] == PolygonReference{2, false});

  // Sentinel resolves to a false hit.
  CHECK(empty.resolve(tagged::kSentinel).false_hit());
}

TEST_CASE("resolve: lookup-table records, true hits before candidates") {
  // One cell referencing polygons {5 interior} and {3, 1 candidates}.
  const CellId cell = cell_from_point({12, 12}, 6);
  SuperCovering sc;
  sc.insert_resolving(cell, {{5, true}, {3, false}, {1, false}});
  const Act act = Act::build(sc, ActConfig{});

  CHECK(act.lookup_table().size() == 5);  // [1, 5, 2, 1, 3]
  const uint64_t entry = act.probe(center_probe(cell));
  REQUIRE(tagged::kind(entry) == tagged::kOffset);
  const ProbeResult result = act.resolve(entry);
  REQUIRE(result.refs.size() == 3);
  CHECK(result.refs[0] == PolygonReference{5, true});
  CHECK(result.refs[1] == PolygonReference{1, false});
  CHECK(result.refs[2] == PolygonReference{3, false});

  // Offsets past the table end are corruption.
  CHECK_THROWS_AS(act.resolve(tagged::make_offset(100)), CorruptionError);
}

TEST_CASE("lookup table deduplicates records") {
  // Two far-apart cells with identical reference lists share one record.
  SuperCovering sc;
  const ReferenceList refs = {{4, true}, {2, false}, {9, false}};
  sc.insert_resolving(cell_from_point({12, 12}, 6), refs);
  sc.insert_resolving(cell_from_point({-50, 100}, 6), refs);
  sc.insert_resolving(cell_from_point({50, -100}, 6), {{1, true}, {2, true}});
  const Act act = Act::build(sc, ActConfig{});
  CHECK(act.lookup_table().size() == 5);  // one record; 2 refs stay inline

  // Records parsed back-to-back are unique.
  const auto& lut = act.lookup_table();
  std::set<std::vector<uint32_t>> seen;
  size_t off = 0;
  while (off < lut.size()) {
    const uint32_t t = lut[off];
    const uint32_t c = lut[off + 1 + t];
    std::vector<uint32_t> record(lut.begin() + off,
                                 lut.begin() + off + 2 + t + c);
    CHECK(seen.insert(record).second);
    off += 2 + t + c;
  }
  CHECK(off == lut.size());
}

TEST_CASE("probe_batch: equals scalar probes lane by lane") {
  Rng rng(0xac70006);
  const Fixture f = make_fixture(rng, 5);
  const Act act = Act::build(f.sc, ActConfig{});

  // Identical lanes produce identical results.
  {
    const CellId c = cell_from_point({21.0, 31.0}, 24);
    CellId batch[8];
    uint64_t out[8];
    std::fill(batch, batch + 8, c);
    act.probe_batch(batch, out);
    for (int i = 0; i < 8; ++i) CHECK(out[i] == act.probe(c));
  }

  // Random batches, mixing hits at different depths and false hits.
  bool all_equal = true;
  for (int b = 0; b < 20000; ++b) {
    CellId batch[8];
    uint64_t out[8];
    for (int i = 0; i < 8; ++i) {
      const LatLng p = rng.u01() < 0.8
                           ? testing::random_point_in(rng, f.region)
                           : LatLng{rng.uniform(-90, 90), rng.uniform(-180, 180)};
      batch[i] = cell_from_point(p, act.max_indexed_level());
    }
    act.probe_batch(batch, out);
    for (int i = 0; i < 8; ++i) {
      all_equal = all_equal && out[i] == act.probe(batch[i]);
    }
  }
  CHECK(all_equal);
}

TEST_CASE("probe_batch kernels agree with each other") {
  Rng rng(0xac70007);
  const Fixture f = make_fixture(rng, 4);
  const Act act = Act::build(f.sc, ActConfig{});
  if (!detail::probe_batch_avx2_available()) {
    MESSAGE("AVX2 not available; scalar kernel only");
    return;
  }
  bool equal = true;
  for (int b = 0; b < 20000; ++b) {
    uint64_t raw[8];
    uint64_t scalar_out[8];
    uint64_t simd_out[8];
    for (int i = 0; i < 8; ++i) {
      const LatLng p = rng.u01() < 0.8
                           ? testing::random_point_in(rng, f.region)
                           : LatLng{rng.uniform(-90, 90), rng.uniform(-180, 180)};
      raw[i] = cell_from_point(p, act.max_indexed_level()).raw;
    }
    detail::probe_batch_scalar(act.view(), raw, scalar_out);
    detail::probe_batch_avx2(act.view(), raw, simd_out);
    for (int i = 0; i < 8; ++i) equal = equal && scalar_out[i] == simd_out[i];
  }
  CHECK(equal);
}

TEST_CASE("probe_batch: prefix mismatch batch is all false hits") {
  // All indexed cells live under one small region, so the face tree has a
  // deep common prefix and far-away probes fail the prefix check.
  const CellId cell = cell_from_point({10.001, 10.001}, 12);
  const Act act = Act::build(single_cell_sc(cell), ActConfig{});
  CHECK(act.view().prefix_bits[0] >= 8);
  CellId batch[8];
  uint64_t out[8];
  for (int i = 0; i < 8; ++i) {
    batch[i] = cell_from_point({-80.0 + i, 120.0}, 24);
  }
  act.probe_batch(batch, out);
  for (int i = 0; i < 8; ++i) CHECK(out[i] == tagged::kSentinel);
}

TEST_CASE("memory accounting matches a full walk, and the estimator") {
  Rng rng(0xac70008);
  for (int trial = 0; trial < 6; ++trial) {
    const Fixture f = make_fixture(rng, trial % 3 + 2);
    const ActConfig cfg;
    const size_t estimated = estimate_act_bytes(f.sc, cfg);
    const Act act = Act::build(f.sc, cfg);
    CHECK(act.memory_usage() == estimated);
    CHECK(act.recompute_memory_by_walk() == act.memory_usage());
  }
}

TEST_CASE("estimate_probe_cost") {
  // All cells at level 4: one chunk.
  {
    SuperCovering sc;
    sc.insert_resolving(cell_from_point({5, 5}, 4), {{1, false}});
    sc.insert_resolving(cell_from_point({-5, -5}, 4), {{2, false}});
    const Act act = Act::build(sc, ActConfig{});
    CHECK(act.stats().avg_key_length_bits == 8.0);
    CHECK(act.stats().estimated_cost == 1);
  }
  // All cells at level 24 with k_max 48: six node accesses.
  {
    SuperCovering sc;
    sc.insert_resolving(cell_from_point({5, 5}, 24), {{1, false}});
    sc.insert_resolving(cell_from_point({-5, -5}, 24), {{2, false}});
    const Act act = Act::build(sc, ActConfig{});
    CHECK(act.stats().avg_key_length_bits == 48.0);
    CHECK(act.stats().estimated_cost == 6);
  }
  // Mixed levels 4 and 8: ceil(12/8) = 2.
  {
    SuperCovering sc;
    sc.insert_resolving(cell_from_point({5, 5}, 4), {{1, false}});
    sc.insert_resolving(cell_from_point({-5, -5}, 8), {{2, false}});
    const Act act = Act::build(sc, ActConfig{});
    CHECK(act.stats().avg_key_length_bits == 12.0);
    CHECK(act.stats().estimated_cost == 2);
  }
}

TEST_CASE("training: splits candidate cells, not interior ones") {
  Rng rng(0xac70009);
  // A polygon whose covering is deliberately coarse.
  const Polygon poly =
      testing::random_star_polygon(rng, 1, {20.0, 30.0}, 1.0, 16);
  CoveringConfig ccfg;
  ccfg.max_covering_cells = 12;
  ccfg.max_interior_cells = 12;
  ccfg.max_interior_level = 10;
  const Covering cov = compute_covering(poly, ccfg, false);
  const Covering interior = compute_covering(poly, ccfg, true);
  const SuperCovering sc = build_super_covering({&cov, 1}, {&interior, 1});
  const std::vector<Polygon> polys{poly};

  // Points in interior cells never split anything.
  {
    Act act = Act::build(sc, ActConfig{});
    std::vector<LatLng> points;
    for (const auto& [cell, refs] : sc.entries()) {
      if (refs.size() == 1 && refs[0].interior) {
        const LatLngRect box = cell_box(cell);
        points.push_back(
            {(box.lat_lo + box.lat_hi) / 2, (box.lng_lo + box.lng_hi) / 2});
      }
    }
    REQUIRE(!points.empty());
    const TrainingStats ts = act.train(polys, points, size_t{1} << 30);
    CHECK(ts.cells_split == 0);
    CHECK(ts.points_consumed == points.size());
    CHECK(ts.expensive_fraction_before == 0.0);
    CHECK(ts.expensive_fraction_after == 0.0);
  }

  // A point on the boundary splits its cell; repeating it can split the
  // resulting child again.
  {
    Act act = Act::build(sc, ActConfig{});
    const size_t memory_before = act.memory_usage();
    const LatLng on_edge = poly.vertices.front();
    const std::vector<LatLng> once{on_edge};
    const TrainingStats first = act.train(polys, once, size_t{1} << 30);
    CHECK(first.cells_split == 1);
    CHECK(act.recompute_memory_by_walk() == act.memory_usage());
    CHECK(act.memory_usage() >= memory_before);

    const TrainingStats second = act.train(polys, once, size_t{1} << 30);
    CHECK(second.cells_split == 1);
    CHECK(act.recompute_memory_by_walk() == act.memory_usage());
  }
}

TEST_CASE("training: a whole-world candidate cell splits cleanly") {
  // A polygon whose covering is the root cell itself.
  SuperCovering sc;
  sc.insert_resolving(CellId{kRootCellRaw}, {{1, false}});
  Act act = Act::build(sc, ActConfig{});
  const Polygon triangle{1, {{-10, -10}, {-10, 10}, {30, 0}}};
  const std::vector<LatLng> pts{{0.0, 0.0}, {50.0, 50.0}};
  const TrainingStats ts =
      act.train(std::vector<Polygon>{triangle}, pts, size_t{1} << 30);
  // One split suffices: verification descends to the first level where the
  // children actually differ, which already rules out the far quadrant.
  CHECK(ts.cells_split == 1);
  CHECK(act.recompute_memory_by_walk() == act.memory_usage());
  // The quadrant around the far point verified as disjoint: a false hit.
  CHECK(act.probe(cell_from_point({50.0, 50.0}, 24)) == tagged::kSentinel);
  // The triangle is still reachable where it actually lies.
  CHECK(act.probe(cell_from_point({5.0, 0.0}, 24)) != tagged::kSentinel);
}

TEST_CASE("training: expensive fraction never increases, budget respected") {
  Rng rng(0xac7000a);
  const Fixture f = make_fixture(rng, 4, 10);
  const std::vector<Polygon>& polys = f.polygons;

  std::vector<LatLng> points;
  for (int i = 0; i < 3000; ++i) {
    points.push_back(testing::random_point_in(rng, f.region));
  }

  // Generous budget: training shrinks (or keeps) the expensive area.
  {
    Act act = Act::build(f.sc, ActConfig{});
    const TrainingStats ts = act.train(polys, points, size_t{1} << 30);
    CHECK(ts.expensive_fraction_after <= ts.expensive_fraction_before);
    CHECK(act.recompute_memory_by_walk() == act.memory_usage());
  }

  // Tight budget: training stops gracefully under the cap.
  {
    Act act = Act::build(f.sc, ActConfig{});
    const size_t budget = act.memory_usage() + 3000;
    const TrainingStats ts = act.train(polys, points, budget);
    CHECK(act.memory_usage() <= budget);
    CHECK(ts.points_consumed <= points.size());
    CHECK(act.recompute_memory_by_walk() == act.memory_usage());
  }
}

TEST_CASE("training: probe results only gain precision") {
  Rng rng(0xac7000b);
  const Fixture f = make_fixture(rng, 3, 10);
  Act act = Act::build(f.sc, ActConfig{});

  std::vector<LatLng> train_points;
  for (int i = 0; i < 2000; ++i) {
    train_points.push_back(testing::random_point_in(rng, f.region));
  }
  std::vector<LatLng> eval_points;
  for (int i = 0; i < 4000; ++i) {
    eval_points.push_back(testing::random_point_in(rng, f.region));
  }

  // Reference truth per evaluation point before training.
  std::vector<std::set<uint32_t>> members(eval_points.size());
  for (size_t i = 0; i < eval_points.size(); ++i) {
    for (const Polygon& poly : f.polygons) {
      if (pip_test(poly, eval_points[i])) members[i].insert(poly.id);
    }
  }

  act.train(f.polygons, train_points, size_t{1} << 30);

  // After training: every true member still appears (as interior or
  // candidate), and interior claims are correct.
  bool interior_wrong = false;
  bool lost = false;
  for (size_t i = 0; i < eval_points.size(); ++i) {
    const uint64_t e =
        act.probe(cell_from_point(eval_points[i], act.max_indexed_level()));
    std::set<uint32_t> seen;
    act.for_each_reference(e, [&](uint32_t pid, bool interior) {
      seen.insert(pid);
      if (interior && members[i].count(pid) == 0) interior_wrong = true;
    });
    for (const uint32_t pid : members[i]) {
      if (seen.count(pid) == 0) lost = true;
    }
  }
  CHECK_FALSE(interior_wrong);
  CHECK_FALSE(lost);
}

TEST_CASE("snapshot round trip is bitwise identical") {
  Rng rng(0xac7000c);
  const Fixture f = make_fixture(rng, 5);
  Act act = Act::build(f.sc, ActConfig{});
  // Some training so the lookup table and node arena are non-trivial.
  std::vector<LatLng> train_points;
  for (int i = 0; i < 500; ++i) {
    train_points.push_back(testing::random_point_in(rng, f.region));
  }
  act.train(f.polygons, train_points, size_t{1} << 30);

  std::stringstream buffer;
  act.save(buffer);
  const Act loaded = Act::load(buffer);

  CHECK(loaded.node_count() == act.node_count());
  CHECK(loaded.memory_usage() == act.memory_usage());
  CHECK(loaded.lookup_table() == act.lookup_table());
  CHECK(loaded.config().k_max == act.config().k_max);

  bool identical = true;
  for (int i = 0; i < 100000; ++i) {
    const LatLng p = rng.u01() < 0.8
                         ? testing::random_point_in(rng, f.region)
                         : LatLng{rng.uniform(-90, 90), rng.uniform(-180, 180)};
    const CellId c = cell_from_point(p, act.max_indexed_level());
    identical = identical && loaded.probe(c) == act.probe(c);
  }
  CHECK(identical);

  // Derived state was rebuilt: the loaded index can be trained further.
  std::stringstream again;
  act.save(again);
  Act retrained = Act::load(again);
  retrained.train(f.polygons, train_points, size_t{1} << 30);
  CHECK(retrained.recompute_memory_by_walk() == retrained.memory_usage());
}

TEST_CASE("snapshot rejects corrupt input") {
  std::stringstream empty;
  CHECK_THROWS_AS(Act::load(empty), CorruptionError);

  std::stringstream bad_magic("XXXXYYYYZZZZ");
  CHECK_THROWS_AS(Act::load(bad_magic), CorruptionError);

  // Truncated stream.
  const Act act =
      Act::build(single_cell_sc(cell_from_point({3, 3}, 8)), ActConfig{});
  std::stringstream buffer;
  act.save(buffer);
  const std::string full = buffer.str();
  std::stringstream truncated(full.substr(0, full.size() / 2));
  CHECK_THROWS_AS(Act::load(truncated), CorruptionError);
}
