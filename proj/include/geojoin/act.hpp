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

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "geojoin/cell_id.hpp"
#include "geojoin/geometry.hpp"
#include "geojoin/super_covering.hpp"

namespace geojoin {

struct ActConfig {
  /// Maximum key length in bits; cells up to level k_max/2 are indexable.
  /// One of 8, 16, ..., 56, or 60 (the full 30-level key).
  int k_max = 48;

  static constexpr int kFanout = 256;           // slots per node
  static constexpr int kGridLevelsPerNode = 4;  // log2(kFanout) / 2
  static constexpr int kBatchWidth = 8;
};

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CorruptionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tagged 64-bit node entries, discriminated by the two least significant
// bits:
//   00  link: value >> 2 is a node id, id 0 being the sentinel (false hit)
//   01  one inlined payload in bits 32..2
//   10  two inlined payloads in bits 63..33 and 32..2
//   11  lookup-table offset in bits 32..2
// A payload is a 31-bit value: (polygon_id << 1) | interior_flag.
namespace tagged {

inline constexpr uint64_t kSentinel = 0;

enum Kind : uint64_t { kLink = 0, kOnePayload = 1, kTwoPayloads = 2, kOffset = 3 };

inline Kind kind(uint64_t e) { return static_cast<Kind>(e & 3); }
inline uint64_t make_link(uint64_t node_id) { return node_id << 2; }
inline uint64_t link_target(uint64_t e) { return e >> 2; }
inline uint32_t make_payload(uint32_t polygon_id, bool interior) {
  return (polygon_id << 1) | (interior ? 1u : 0u);
}
inline uint64_t make_one(uint32_t payload) {
  return (uint64_t{payload} << 2) | kOnePayload;
}
inline uint64_t make_two(uint32_t first, uint32_t second) {
  return (uint64_t{first} << 33) | (uint64_t{second} << 2) | kTwoPayloads;
}
inline uint64_t make_offset(uint32_t off) {
  return (uint64_t{off} << 2) | kOffset;
}
inline uint32_t one_payload(uint64_t e) { return (e >> 2) & 0x7fffffffu; }
inline uint32_t two_first(uint64_t e) { return (e >> 33) & 0x7fffffffu; }
inline uint32_t two_second(uint64_t e) { return (e >> 2) & 0x7fffffffu; }
inline uint32_t table_offset(uint64_t e) { return (e >> 2) & 0x7fffffffu; }
inline uint32_t payload_polygon(uint32_t payload) { return payload >> 1; }
inline bool payload_interior(uint32_t payload) { return (payload & 1) != 0; }

}  // namespace tagged

/// Decoded probe outcome. An empty reference list is a false hit.
struct ProbeResult {
  ReferenceList refs;

  bool false_hit() const { return refs.empty(); }
};

struct ActStats {
  size_t node_count = 0;
  size_t memory_bytes = 0;
  double avg_key_length_bits = 0.0;  // over indexed logical cells
  int estimated_cost = 0;            // ceil(avg_key_length_bits / 8)
};

struct TrainingStats {
  size_t points_consumed = 0;
  size_t cells_split = 0;
  /// Fraction of the training points whose probe lands in a candidate-
  /// bearing (expensive) cell, measured before and after the splits.
  double expensive_fraction_before = 0.0;
  double expensive_fraction_after = 0.0;
};

/// Probe-path state shared with the batched kernels: the flat node arena
/// plus per-face dispatch tables (indexed by the 3 face bits; unused faces
/// hold a zero root).
struct ActProbeView {
  const uint64_t* arena = nullptr;
  std::array<uint64_t, 8> roots{};        // node ids, 0 = no tree
  std::array<uint64_t, 8> prefixes{};     // top prefix_bits of the key
  std::array<uint64_t, 8> prefix_bits{};  // multiples of 8
};

/// The Adaptive Cell Trie: a radix trie with 256-way nodes over cell-id
/// position bits (8 key bits, i.e. 4 grid levels, per node), tagged entries
/// with inlined payloads, and a deduplicated lookup table for reference
/// lists of three or more polygons. Cells whose level is not a multiple of
/// 4 are denormalized by replicating their entry across the matching slot
/// run of the final node.
///
/// Build and train are exclusive single-writer phases; between mutations the
/// index is immutable and any number of threads may probe concurrently.
class Act {
 public:
  Act() = default;
  // The probe view aliases the node arena, so the index moves but does not
  // copy.
  Act(Act&&) = default;
  Act& operator=(Act&&) = default;
  Act(const Act&) = delete;
  Act& operator=(const Act&) = delete;

  /// Requires every cell level <= k_max/2; throws BuildError otherwise.
  static Act build(const SuperCovering& sc, const ActConfig& cfg);

  /// Probe key: position bits of the id, left-aligned, face and level
  /// marker stripped.
  static uint64_t key_of(uint64_t raw) {
    const uint64_t lsb = raw & (~raw + 1);
    return (raw ^ lsb) << 3;
  }

  const ActConfig& config() const { return cfg_; }
  int max_indexed_level() const { return cfg_.k_max / 2; }

  /// Trie descent for a cell discretized at level k_max/2. Returns a tagged
  /// payload/offset entry, or the sentinel (0) for a false hit.
  uint64_t probe(CellId cell) const { return probe_impl(cell.raw, nullptr); }

  /// Same, counting face-node plus trie-node accesses.
  uint64_t probe_counting(CellId cell, int& node_accesses) const {
    return probe_impl(cell.raw, &node_accesses);
  }

  /// Lockstep batched probe over kBatchWidth cells; results are bitwise
  /// identical to scalar probes. Dispatches to a SIMD kernel when the CPU
  /// supports one.
  void probe_batch(const CellId* cells, uint64_t* entries) const;

  /// Decodes an entry returned by probe. Throws CorruptionError when an
  /// offset points outside the lookup table.
  ProbeResult resolve(uint64_t entry) const;

  /// Allocation-free decode: fn(polygon_id, interior) per reference.
  template <typename Fn>
  void for_each_reference(uint64_t entry, Fn&& fn) const {
    switch (tagged::kind(entry)) {
      case tagged::kLink:
        return;  // sentinel, false hit
      case tagged::kOnePayload: {
        const uint32_t p = tagged::one_payload(entry);
        fn(tagged::payload_polygon(p), tagged::payload_interior(p));
        return;
      }
      case tagged::kTwoPayloads: {
        const uint32_t a = tagged::two_first(entry);
        const uint32_t b = tagged::two_second(entry);
        fn(tagged::payload_polygon(a), tagged::payload_interior(a));
        fn(tagged::payload_polygon(b), tagged::payload_interior(b));
        return;
      }
      case tagged::kOffset: {
        const uint32_t off = tagged::table_offset(entry);
        check_record(off);
        const uint32_t t = lut_[off];
        const uint32_t c = lut_[off + 1 + t];
        for (uint32_t i = 0; i < t; ++i) fn(lut_[off + 1 + i], true);
        for (uint32_t i = 0; i < c; ++i) fn(lut_[off + 2 + t + i], false);
        return;
      }
    }
  }

  /// Splits candidate-bearing cells hit by the training points into their
  /// four reclassified children until the stream ends or the next split
  /// would exceed the memory budget. Exact join results are unchanged.
  TrainingStats train(std::span<const Polygon> polygons,
                      std::span<const LatLng> points,
                      size_t memory_budget_bytes);

  /// node_count*256*8 + lookup-table bytes + face-node bytes.
  size_t memory_usage() const;

  /// Recomputes memory_usage by walking the trie from the face roots;
  /// equals the tracked value when no node or record is orphaned.
  size_t recompute_memory_by_walk() const;

  ActStats stats() const;
  size_t node_count() const { return arena_.size() / ActConfig::kFanout; }
  const std::vector<uint32_t>& lookup_table() const { return lut_; }
  const ActProbeView& view() const { return view_; }

  /// Snapshot: little-endian "ACT1" header (k_max, node count, table
  /// length), face dispatch block, raw node arena, raw lookup table.
  void save(std::ostream& os) const;
  static Act load(std::istream& is);

 private:
  struct FaceRoot {
    uint64_t root_id = 0;  // 0 = face not populated
    uint64_t prefix = 0;
    uint32_t prefix_bits = 0;
  };

  struct Location {
    uint64_t entry = tagged::kSentinel;
    uint64_t node_id = 0;
    int slot = 0;
    int depth = 0;  // chunks below the root
    int face = 0;
    bool hit = false;
  };

  uint64_t probe_impl(uint64_t raw, int* node_accesses) const;
  Location locate(CellId cell) const;
  uint64_t alloc_node();
  uint64_t& slot_ref(uint64_t node_id, int slot) {
    return arena_[(node_id - 1) * ActConfig::kFanout + slot];
  }
  uint64_t slot_at(uint64_t node_id, int slot) const {
    return arena_[(node_id - 1) * ActConfig::kFanout + slot];
  }
  void check_record(uint32_t off) const;
  uint64_t encode_refs(const ReferenceList& refs);
  void insert_cell(CellId cell, uint64_t entry);
  void compact_lookup_table();
  void rebuild_derived();  // dedup map, logical counters, probe view
  void refresh_view();

  ActConfig cfg_;
  std::array<FaceRoot, 6> faces_{};
  std::vector<uint64_t> arena_;  // node id n occupies [(n-1)*256, n*256)
  std::vector<uint32_t> lut_;
  std::map<std::vector<uint32_t>, uint32_t> lut_offsets_;  // record -> offset
  uint64_t logical_cells_ = 0;
  uint64_t logical_key_bits_ = 0;
  ActProbeView view_;
};

/// Physical size (in bytes) the index built from `sc` will occupy; matches
/// Act::build + memory_usage without building nodes.
size_t estimate_act_bytes(const SuperCovering& sc, const ActConfig& cfg);

namespace detail {

using ProbeBatchFn = void (*)(const ActProbeView&, const uint64_t* raw_ids,
                              uint64_t* out);

/// Portable lockstep reference kernel (the contract all variants must
/// match bitwise).
void probe_batch_scalar(const ActProbeView& view, const uint64_t* raw_ids,
                        uint64_t* out);

bool probe_batch_avx2_available();
void probe_batch_avx2(const ActProbeView& view, const uint64_t* raw_ids,
                      uint64_t* out);

/// Picks the fastest kernel supported by this CPU.
ProbeBatchFn select_probe_batch_kernel();

}  // namespace detail

}  // namespace geojoin
