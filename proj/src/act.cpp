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

#include "geojoin/act.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

namespace geojoin {

namespace {

constexpr int kNodeSlots = ActConfig::kFanout;
constexpr size_t kNodeBytes = size_t{kNodeSlots} * 8;
// Six face records of {root id, prefix, prefix length}.
constexpr size_t kFaceNodeBytes = 6 * (8 + 8 + 4);
constexpr char kSnapshotMagic[4] = {'A', 'C', 'T', '1'};

void validate_act_config(const ActConfig& cfg) {
  const bool ok = cfg.k_max >= 8 && cfg.k_max <= 60 &&
                  (cfg.k_max % 8 == 0 || cfg.k_max == 60);
  if (!ok) throw BuildError("ACT k_max must be one of 8, 16, ..., 56, 60");
}

// Per-face key statistics used to pick the predetermined common prefix.
struct FaceAccum {
  bool any = false;
  uint64_t first_key = 0;
  int lcp = 64;
  int min_len = 64;

  void add(uint64_t key, int len) {
    if (!any) {
      any = true;
      first_key = key;
      min_len = len;
      return;
    }
    lcp = std::min(lcp, std::countl_zero(first_key ^ key));
    min_len = std::min(min_len, len);
  }

  // Common prefix skipped above the root node: a multiple of 8 bits, and at
  // least one full chunk below the shortest key so every cell occupies a
  // proper slot (or slot run) of some node.
  int prefix_len() const {
    const int l = std::min(lcp, min_len - 8);
    return l < 8 ? 0 : l & ~7;
  }
};

std::vector<uint32_t> make_record(const ReferenceList& refs) {
  std::vector<uint32_t> record;
  record.reserve(refs.size() + 2);
  uint32_t t = 0;
  for (const PolygonReference& ref : refs) {
    if (ref.interior) ++t;
  }
  record.push_back(t);
  for (const PolygonReference& ref : refs) {
    if (ref.interior) record.push_back(ref.polygon_id);
  }
  record.push_back(static_cast<uint32_t>(refs.size()) - t);
  for (const PolygonReference& ref : refs) {
    if (!ref.interior) record.push_back(ref.polygon_id);
  }
  return record;
}

void put_u32(std::ostream& os, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw CorruptionError("truncated index snapshot");
  return uint32_t{b[0]} | uint32_t{b[1]} << 8 | uint32_t{b[2]} << 16 |
         uint32_t{b[3]} << 24;
}

uint64_t get_u64(std::istream& is) {
  const uint64_t lo = get_u32(is);
  const uint64_t hi = get_u32(is);
  return lo | hi << 32;
}

template <typename T>
void read_block(std::istream& is, std::vector<T>& out, size_t count) {
  out.resize(count);
  if (count == 0) return;
  is.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (!is) throw CorruptionError("truncated index snapshot");
  if constexpr (std::endian::native == std::endian::big) {
    for (T& v : out) {
      if constexpr (sizeof(T) == 4) {
        v = __builtin_bswap32(v);
      } else {
        v = __builtin_bswap64(v);
      }
    }
  }
}

}  // namespace

uint64_t Act::alloc_node() {
  arena_.resize(arena_.size() + kNodeSlots, tagged::kSentinel);
  return arena_.size() / kNodeSlots;
}

void Act::check_record(uint32_t off) const {
  if (off >= lut_.size()) {
    throw CorruptionError("lookup-table offset past table end");
  }
  const uint64_t t = lut_[off];
  if (off + 1 + t >= lut_.size()) {
    throw CorruptionError("lookup-table record truncated");
  }
  const uint64_t c = lut_[off + 1 + t];
  if (off + 2 + t + c > lut_.size()) {
    throw CorruptionError("lookup-table record truncated");
  }
}

uint64_t Act::encode_refs(const ReferenceList& refs) {
  assert(!refs.empty());
  if (refs.size() == 1) {
    return tagged::make_one(
        tagged::make_payload(refs[0].polygon_id, refs[0].interior));
  }
  if (refs.size() == 2) {
    return tagged::make_two(
        tagged::make_payload(refs[0].polygon_id, refs[0].interior),
        tagged::make_payload(refs[1].polygon_id, refs[1].interior));
  }
  std::vector<uint32_t> record = make_record(refs);
  auto it = lut_offsets_.find(record);
  if (it != lut_offsets_.end()) return tagged::make_offset(it->second);
  if (lut_.size() + record.size() > 0x7fffffffu) {
    throw BuildError("lookup table exceeds the 31-bit offset space");
  }
  const uint32_t off = static_cast<uint32_t>(lut_.size());
  lut_.insert(lut_.end(), record.begin(), record.end());
  lut_offsets_.emplace(std::move(record), off);
  return tagged::make_offset(off);
}

void Act::insert_cell(CellId cell, uint64_t entry) {
  const int face = static_cast<int>(cell.raw >> 61);
  const FaceRoot& fr = faces_[face];
  const uint64_t key = key_of(cell.raw);
  const int len = 2 * cell_level(cell);
  const int l = static_cast<int>(fr.prefix_bits);
  assert(len >= l);

  const int d_final = len == l ? 0 : (len - l - 1) / 8;
  uint64_t node = fr.root_id;
  for (int c = 0; c < d_final; ++c) {
    const int slot = static_cast<int>((key >> (56 - l - 8 * c)) & 0xff);
    const uint64_t e = slot_at(node, slot);
    if (e == tagged::kSentinel) {
      const uint64_t child = alloc_node();
      slot_ref(node, slot) = tagged::make_link(child);
      node = child;
    } else {
      assert(tagged::kind(e) == tagged::kLink);
      node = tagged::link_target(e);
    }
  }
  const int r = len - l - 8 * d_final;  // remaining key bits, in {2,4,6,8}
  const int base = static_cast<int>((key >> (56 - l - 8 * d_final)) & 0xff);
  const int run = 1 << (8 - r);
  for (int s = base; s < base + run; ++s) {
    assert(slot_at(node, s) == tagged::kSentinel);
    slot_ref(node, s) = entry;
  }
}

Act Act::build(const SuperCovering& sc, const ActConfig& cfg) {
  validate_act_config(cfg);
  Act act;
  act.cfg_ = cfg;
  const int max_level = cfg.k_max / 2;

  std::array<FaceAccum, 6> accum{};
  for (const auto& [cell, refs] : sc.entries()) {
    const int level = cell_level(cell);
    if (level > max_level) {
      throw BuildError("cell level " + std::to_string(level) +
                       " exceeds k_max/2 = " + std::to_string(max_level) +
                       "; rebuild with a larger k_max");
    }
    const int face = static_cast<int>(cell.raw >> 61);
    if (face >= 6) throw BuildError("cell id on an invalid face");
    for (const PolygonReference& ref : refs) {
      if (ref.polygon_id > kMaxPolygonId) {
        throw BuildError("polygon id exceeds 2^30 - 1");
      }
    }
    accum[face].add(key_of(cell.raw), 2 * level);
  }
  for (int f = 0; f < 6; ++f) {
    if (!accum[f].any) continue;
    FaceRoot& fr = act.faces_[f];
    fr.prefix_bits = static_cast<uint32_t>(accum[f].prefix_len());
    fr.prefix = fr.prefix_bits ? accum[f].first_key >> (64 - fr.prefix_bits) : 0;
    fr.root_id = act.alloc_node();
  }
  for (const auto& [cell, refs] : sc.entries()) {
    act.insert_cell(cell, act.encode_refs(refs));
    act.logical_cells_ += 1;
    act.logical_key_bits_ += 2 * static_cast<uint64_t>(cell_level(cell));
  }
  act.refresh_view();
  return act;
}

uint64_t Act::probe_impl(uint64_t raw, int* node_accesses) const {
  const int face = static_cast<int>(raw >> 61);
  if (node_accesses) ++*node_accesses;  // face node
  if (face >= 6) return tagged::kSentinel;
  const FaceRoot& fr = faces_[face];
  if (fr.root_id == 0) return tagged::kSentinel;
  const uint64_t key = key_of(raw);
  if (fr.prefix_bits != 0 && (key >> (64 - fr.prefix_bits)) != fr.prefix) {
    return tagged::kSentinel;
  }
  const int l = static_cast<int>(fr.prefix_bits);
  const int max_chunks = (cfg_.k_max - l + 7) / 8;
  uint64_t node = fr.root_id;
  for (int c = 0; c < max_chunks; ++c) {
    if (node_accesses) ++*node_accesses;
    const int slot = static_cast<int>((key >> (56 - l - 8 * c)) & 0xff);
    const uint64_t e = slot_at(node, static_cast<int>(slot));
    if ((e & 3) != 0) return e;  // payload or offset
    if (e == tagged::kSentinel) return tagged::kSentinel;
    node = tagged::link_target(e);
  }
  throw CorruptionError("trie path longer than the maximum key length");
}

Act::Location Act::locate(CellId cell) const {
  Location loc;
  loc.face = static_cast<int>(cell.raw >> 61);
  if (loc.face >= 6) return loc;
  const FaceRoot& fr = faces_[loc.face];
  if (fr.root_id == 0) return loc;
  const uint64_t key = key_of(cell.raw);
  if (fr.prefix_bits != 0 && (key >> (64 - fr.prefix_bits)) != fr.prefix) {
    return loc;
  }
  const int l = static_cast<int>(fr.prefix_bits);
  const int max_chunks = (cfg_.k_max - l + 7) / 8;
  uint64_t node = fr.root_id;
  for (int c = 0; c < max_chunks; ++c) {
    const int slot = static_cast<int>((key >> (56 - l - 8 * c)) & 0xff);
    const uint64_t e = slot_at(node, slot);
    if ((e & 3) != 0) {
      loc.entry = e;
      loc.node_id = node;
      loc.slot = slot;
      loc.depth = c;
      loc.hit = true;
      return loc;
    }
    if (e == tagged::kSentinel) return loc;
    node = tagged::link_target(e);
  }
  throw CorruptionError("trie path longer than the maximum key length");
}

ProbeResult Act::resolve(uint64_t entry) const {
  ProbeResult result;
  for_each_reference(entry, [&](uint32_t polygon_id, bool interior) {
    result.refs.push_back({polygon_id, interior});
  });
  return result;
}

void Act::probe_batch(const CellId* cells, uint64_t* entries) const {
  static const detail::ProbeBatchFn kernel = detail::select_probe_batch_kernel();
  uint64_t raw[ActConfig::kBatchWidth];
  for (int i = 0; i < ActConfig::kBatchWidth; ++i) raw[i] = cells[i].raw;
  kernel(view_, raw, entries);
}

size_t Act::memory_usage() const {
  return kFaceNodeBytes + node_count() * kNodeBytes + lut_.size() * 4;
}

size_t Act::recompute_memory_by_walk() const {
  size_t nodes = 0;
  std::set<uint32_t> reachable_records;
  std::vector<uint64_t> stack;
  for (const FaceRoot& fr : faces_) {
    if (fr.root_id != 0) stack.push_back(fr.root_id);
  }
  std::set<uint64_t> seen;
  while (!stack.empty()) {
    const uint64_t node = stack.back();
    stack.pop_back();
    if (node == 0 || node > node_count()) {
      throw CorruptionError("link to a node outside the arena");
    }
    if (!seen.insert(node).second) {
      throw CorruptionError("node reachable through two paths");
    }
    ++nodes;
    for (int s = 0; s < kNodeSlots; ++s) {
      const uint64_t e = slot_at(node, s);
      switch (tagged::kind(e)) {
        case tagged::kLink:
          if (e != tagged::kSentinel) stack.push_back(tagged::link_target(e));
          break;
        case tagged::kOffset:
          reachable_records.insert(tagged::table_offset(e));
          break;
        default:
          break;
      }
    }
  }
  size_t lut_words = 0;
  for (uint32_t off : reachable_records) {
    check_record(off);
    lut_words += 2 + lut_[off] + lut_[off + 1 + lut_[off]];
  }
  return kFaceNodeBytes + nodes * kNodeBytes + lut_words * 4;
}

ActStats Act::stats() const {
  ActStats s;
  s.node_count = node_count();
  s.memory_bytes = memory_usage();
  s.avg_key_length_bits =
      logical_cells_ == 0
          ? 0.0
          : static_cast<double>(logical_key_bits_) / static_cast<double>(logical_cells_);
  s.estimated_cost = static_cast<int>(std::ceil(s.avg_key_length_bits / 8.0));
  return s;
}

void Act::refresh_view() {
  view_.arena = arena_.data();
  view_.roots.fill(0);
  view_.prefixes.fill(0);
  view_.prefix_bits.fill(0);
  for (int f = 0; f < 6; ++f) {
    view_.roots[f] = faces_[f].root_id;
    view_.prefixes[f] = faces_[f].prefix;
    view_.prefix_bits[f] = faces_[f].prefix_bits;
  }
}

// ---- training ----

namespace {

// Largest aligned run of slots around `slot` holding the same entry; the
// run identifies the logical cell the entry was denormalized from.
int uniform_run(const uint64_t* slots, int slot, uint64_t entry) {
  for (int run = 256; run > 1; run >>= 2) {
    const int base = slot & ~(run - 1);
    bool uniform = true;
    for (int s = base; s < base + run; ++s) {
      if (slots[s] != entry) {
        uniform = false;
        break;
      }
    }
    if (uniform) return run;
  }
  return 1;
}

}  // namespace

TrainingStats Act::train(std::span<const Polygon> polygons,
                         std::span<const LatLng> points,
                         size_t memory_budget_bytes) {
  std::unordered_map<uint32_t, const Polygon*> by_id;
  for (const Polygon& poly : polygons) by_id.emplace(poly.id, &poly);

  const auto expensive_fraction = [&]() {
    if (points.empty()) return 0.0;
    size_t expensive = 0;
    for (const LatLng& p : points) {
      const uint64_t e = probe(cell_from_point(p, max_indexed_level()));
      bool any_candidate = false;
      for_each_reference(e, [&](uint32_t, bool interior) {
        if (!interior) any_candidate = true;
      });
      if (any_candidate) ++expensive;
    }
    return static_cast<double>(expensive) / static_cast<double>(points.size());
  };

  TrainingStats ts;
  ts.expensive_fraction_before = expensive_fraction();

  for (const LatLng& p : points) {
    ++ts.points_consumed;
    const CellId probe_cell = cell_from_point(p, max_indexed_level());
    const Location loc = locate(probe_cell);
    if (!loc.hit) continue;
    bool any_candidate = false;
    for_each_reference(loc.entry, [&](uint32_t, bool interior) {
      if (!interior) any_candidate = true;
    });
    if (!any_candidate) continue;

    const uint64_t* node_slots = &arena_[(loc.node_id - 1) * kNodeSlots];
    int run = uniform_run(node_slots, loc.slot, loc.entry);
    int r = 8 - std::countr_zero(static_cast<unsigned>(run));
    const FaceRoot& fr = faces_[loc.face];
    int len = static_cast<int>(fr.prefix_bits) + 8 * loc.depth + r;
    const int recovered_level = len / 2;
    const uint64_t key = key_of(probe_cell.raw);
    const ReferenceList parent_refs = resolve(loc.entry).refs;

    // Verify the four children of the recovered logical cell. When every
    // child keeps exactly the parent's list an in-node rewrite would not
    // change any slot (four equal runs are indistinguishable from their
    // parent), so the verification descends into the child holding the
    // training point until a split has an effect.
    CellId logical;
    std::array<ReferenceList, 4> child_refs;
    bool splittable = false;
    while (true) {
      const int level = len / 2;
      if (level >= max_indexed_level() || level >= kMaxCellLevel) break;
      const uint64_t key_trunc =
          len == 0 ? 0 : (key >> (64 - len)) << (64 - len);
      logical = CellId{(key_trunc >> 3) |
                       (static_cast<uint64_t>(loc.face) << 61) |
                       (uint64_t{1} << (60 - len))};
      bool all_match_parent = true;
      const auto children = cell_children(logical);
      for (int q = 0; q < 4; ++q) {
        child_refs[q].clear();
        for (const PolygonReference& ref : parent_refs) {
          if (ref.interior) {
            child_refs[q].push_back(ref);
            continue;
          }
          auto it = by_id.find(ref.polygon_id);
          if (it == by_id.end()) {
            throw std::invalid_argument("train: missing polygon " +
                                        std::to_string(ref.polygon_id));
          }
          switch (cell_polygon_relation(children[q], *it->second)) {
            case CellRelation::kDisjoint:
              break;
            case CellRelation::kContainedInPolygon:
              child_refs[q].push_back({ref.polygon_id, true});
              break;
            case CellRelation::kIntersectsBoundary:
              child_refs[q].push_back(ref);
              break;
          }
        }
        std::sort(child_refs[q].begin(), child_refs[q].end(),
                  [](const PolygonReference& a, const PolygonReference& b) {
                    if (a.interior != b.interior) return a.interior;
                    return a.polygon_id < b.polygon_id;
                  });
        all_match_parent = all_match_parent && child_refs[q] == parent_refs;
      }
      if (r == 8 || !all_match_parent) {
        splittable = true;
        break;
      }
      run >>= 2;  // narrow to the child run around the training point
      r += 2;
      len += 2;
    }
    if (!splittable) continue;
    const int level = cell_level(logical);

    // Exact memory delta of this split.
    size_t delta = (r == 8) ? kNodeBytes : 0;
    std::set<std::vector<uint32_t>> pending;
    for (const ReferenceList& refs : child_refs) {
      if (refs.size() < 3) continue;
      std::vector<uint32_t> record = make_record(refs);
      if (lut_offsets_.count(record) == 0 && pending.count(record) == 0) {
        delta += record.size() * 4;
        pending.insert(std::move(record));
      }
    }
    if (memory_usage() + delta > memory_budget_bytes) break;

    if (r == 8) {
      const uint64_t child_node = alloc_node();
      slot_ref(loc.node_id, loc.slot) = tagged::make_link(child_node);
      for (int q = 0; q < 4; ++q) {
        if (child_refs[q].empty()) continue;
        const uint64_t e = encode_refs(child_refs[q]);
        for (int s = q << 6; s < (q + 1) << 6; ++s) slot_ref(child_node, s) = e;
      }
    } else {
      const int base = loc.slot & ~(run - 1);
      const int quarter = run / 4;
      for (int q = 0; q < 4; ++q) {
        const uint64_t e =
            child_refs[q].empty() ? tagged::kSentinel : encode_refs(child_refs[q]);
        for (int s = base + q * quarter; s < base + (q + 1) * quarter; ++s) {
          slot_ref(loc.node_id, s) = e;
        }
      }
    }
    // The recovered cell is gone; each level skipped while descending
    // leaves three uniform sibling runs behind, then the written children.
    logical_cells_ -= 1;
    logical_key_bits_ -= 2 * static_cast<uint64_t>(recovered_level);
    for (int j = recovered_level + 1; j <= level; ++j) {
      logical_cells_ += 3;
      logical_key_bits_ += 3 * 2 * static_cast<uint64_t>(j);
    }
    for (const ReferenceList& refs : child_refs) {
      if (refs.empty()) continue;
      logical_cells_ += 1;
      logical_key_bits_ += 2 * static_cast<uint64_t>(level + 1);
    }
    ++ts.cells_split;
  }

  compact_lookup_table();
  refresh_view();
  ts.expensive_fraction_after = expensive_fraction();
  return ts;
}

void Act::compact_lookup_table() {
  std::vector<uint32_t> new_lut;
  new_lut.reserve(lut_.size());
  std::map<std::vector<uint32_t>, uint32_t> new_offsets;
  std::unordered_map<uint32_t, uint32_t> remap;
  for (uint64_t& e : arena_) {
    if (tagged::kind(e) != tagged::kOffset) continue;
    const uint32_t off = tagged::table_offset(e);
    auto it = remap.find(off);
    uint32_t new_off;
    if (it != remap.end()) {
      new_off = it->second;
    } else {
      check_record(off);
      const uint32_t t = lut_[off];
      const uint32_t c = lut_[off + 1 + t];
      std::vector<uint32_t> record(lut_.begin() + off,
                                   lut_.begin() + off + 2 + t + c);
      auto dedup = new_offsets.find(record);
      if (dedup != new_offsets.end()) {
        new_off = dedup->second;
      } else {
        new_off = static_cast<uint32_t>(new_lut.size());
        new_lut.insert(new_lut.end(), record.begin(), record.end());
        new_offsets.emplace(std::move(record), new_off);
      }
      remap.emplace(off, new_off);
    }
    e = tagged::make_offset(new_off);
  }
  lut_ = std::move(new_lut);
  lut_offsets_ = std::move(new_offsets);
}

// ---- snapshot ----

void Act::save(std::ostream& os) const {
  os.write(kSnapshotMagic, 4);
  put_u32(os, static_cast<uint32_t>(cfg_.k_max));
  put_u64(os, node_count());
  put_u64(os, lut_.size());
  for (const FaceRoot& fr : faces_) {
    put_u64(os, fr.root_id);
    put_u64(os, fr.prefix);
    put_u32(os, fr.prefix_bits);
  }
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(arena_.data()),
             static_cast<std::streamsize>(arena_.size() * 8));
    os.write(reinterpret_cast<const char*>(lut_.data()),
             static_cast<std::streamsize>(lut_.size() * 4));
  } else {
    for (uint64_t v : arena_) put_u64(os, v);
    for (uint32_t v : lut_) put_u32(os, v);
  }
  if (!os) throw std::runtime_error("failed to write index snapshot");
}

Act Act::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kSnapshotMagic, 4) != 0) {
    throw CorruptionError("not an ACT1 index snapshot");
  }
  Act act;
  act.cfg_.k_max = static_cast<int>(get_u32(is));
  try {
    validate_act_config(act.cfg_);
  } catch (const BuildError& e) {
    throw CorruptionError(e.what());
  }
  const uint64_t nodes = get_u64(is);
  const uint64_t lut_len = get_u64(is);
  if (nodes > (uint64_t{1} << 32) || lut_len > 0x7fffffffu) {
    throw CorruptionError("snapshot header sizes out of range");
  }
  for (FaceRoot& fr : act.faces_) {
    fr.root_id = get_u64(is);
    fr.prefix = get_u64(is);
    fr.prefix_bits = get_u32(is);
    if (fr.root_id > nodes || fr.prefix_bits > 56 || fr.prefix_bits % 8 != 0) {
      throw CorruptionError("snapshot face block out of range");
    }
  }
  read_block(is, act.arena_, nodes * kNodeSlots);
  read_block(is, act.lut_, lut_len);
  act.rebuild_derived();
  return act;
}

void Act::rebuild_derived() {
  lut_offsets_.clear();
  logical_cells_ = 0;
  logical_key_bits_ = 0;
  std::set<uint64_t> seen;
  for (const FaceRoot& fr : faces_) {
    if (fr.root_id == 0) continue;
    std::vector<std::pair<uint64_t, int>> stack{{fr.root_id, 0}};
    while (!stack.empty()) {
      const auto [node, depth] = stack.back();
      stack.pop_back();
      if (node == 0 || node > node_count() || !seen.insert(node).second) {
        throw CorruptionError("snapshot node graph is not a forest");
      }
      int pos = 0;
      while (pos < kNodeSlots) {
        const uint64_t e = slot_at(node, pos);
        if (e == tagged::kSentinel) {
          ++pos;
          continue;
        }
        if (tagged::kind(e) == tagged::kLink) {
          stack.emplace_back(tagged::link_target(e), depth + 1);
          ++pos;
          continue;
        }
        int run = 1;
        for (int candidate = 256; candidate > 1; candidate >>= 2) {
          if (pos % candidate != 0) continue;
          bool uniform = true;
          for (int s = pos; s < pos + candidate; ++s) {
            if (slot_at(node, s) != e) {
              uniform = false;
              break;
            }
          }
          if (uniform) {
            run = candidate;
            break;
          }
        }
        const int r = 8 - std::countr_zero(static_cast<unsigned>(run));
        const int len = static_cast<int>(fr.prefix_bits) + 8 * depth + r;
        if (len > cfg_.k_max) {
          throw CorruptionError("snapshot entry deeper than k_max");
        }
        logical_cells_ += 1;
        logical_key_bits_ += static_cast<uint64_t>(len);
        if (tagged::kind(e) == tagged::kOffset) {
          const uint32_t off = tagged::table_offset(e);
          check_record(off);
          const uint32_t t = lut_[off];
          const uint32_t c = lut_[off + 1 + t];
          std::vector<uint32_t> record(lut_.begin() + off,
                                       lut_.begin() + off + 2 + t + c);
          lut_offsets_.emplace(std::move(record), off);
        }
        pos += run;
      }
    }
  }
  refresh_view();
}

size_t estimate_act_bytes(const SuperCovering& sc, const ActConfig& cfg) {
  validate_act_config(cfg);
  std::array<FaceAccum, 6> accum{};
  for (const auto& [cell, refs] : sc.entries()) {
    const int face = static_cast<int>(cell.raw >> 61);
    if (face >= 6) throw BuildError("cell id on an invalid face");
    accum[face].add(Act::key_of(cell.raw), 2 * cell_level(cell));
  }
  size_t nodes = 0;
  for (const FaceAccum& a : accum) {
    if (a.any) ++nodes;  // root
  }
  std::set<std::tuple<int, int, uint64_t>> chain_nodes;
  std::set<std::vector<uint32_t>> records;
  for (const auto& [cell, refs] : sc.entries()) {
    const int face = static_cast<int>(cell.raw >> 61);
    const int l = accum[face].prefix_len();
    const uint64_t key = Act::key_of(cell.raw);
    const int len = 2 * cell_level(cell);
    const int d_final = (len - l - 1) / 8;
    for (int c = 1; c <= d_final; ++c) {
      chain_nodes.emplace(face, c, key >> (64 - l - 8 * c));
    }
    if (refs.size() >= 3) records.insert(make_record(refs));
  }
  nodes += chain_nodes.size();
  size_t lut_words = 0;
  for (const auto& record : records) lut_words += record.size();
  return kFaceNodeBytes + nodes * kNodeBytes + lut_words * 4;
}

}  // namespace geojoin
