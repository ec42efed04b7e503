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

#include "geojoin/super_covering.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace geojoin {

namespace {

void canonicalize(ReferenceList& refs) {
  std::sort(refs.begin(), refs.end(),
            [](const PolygonReference& a, const PolygonReference& b) {
              if (a.interior != b.interior) return a.interior;
              return a.polygon_id < b.polygon_id;
            });
}

// Per-polygon dedup; interior wins when both flags are seen.
void merge_references(ReferenceList& dst, const ReferenceList& src) {
  for (const PolygonReference& ref : src) {
    bool found = false;
    for (PolygonReference& existing : dst) {
      if (existing.polygon_id == ref.polygon_id) {
        existing.interior = existing.interior || ref.interior;
        found = true;
        break;
      }
    }
    if (!found) dst.push_back(ref);
  }
  canonicalize(dst);
}

}  // namespace

const ReferenceList* SuperCovering::lookup(CellId leaf) const {
  auto it = entries_.lower_bound(leaf);
  if (it != entries_.end() && cell_contains(it->first, leaf)) {
    return &it->second;
  }
  if (it != entries_.begin()) {
    --it;
    if (cell_contains(it->first, leaf)) return &it->second;
  }
  return nullptr;
}

void SuperCovering::insert_resolving(CellId cell, const ReferenceList& refs) {
  if (refs.empty()) return;

  auto exact = entries_.find(cell);
  if (exact != entries_.end()) {
    merge_references(exact->second, refs);
    return;
  }

  // An existing ancestor can sort on either side of the new cell.
  auto succ = entries_.lower_bound(cell);
  auto ancestor = entries_.end();
  if (succ != entries_.end() && cell_contains(succ->first, cell)) {
    ancestor = succ;
  } else if (succ != entries_.begin()) {
    auto pred = std::prev(succ);
    if (cell_contains(pred->first, cell)) ancestor = pred;
  }
  if (ancestor != entries_.end()) {
    // The existing cell is the ascendant: replace it by the new cell plus
    // the difference, all carrying the ascendant's references.
    const CellId c1 = ancestor->first;
    const ReferenceList c1_refs = std::move(ancestor->second);
    entries_.erase(ancestor);
    const CellDifference diff = cell_difference(c1, cell);
    ReferenceList merged = c1_refs;
    merge_references(merged, refs);
    insert_resolving(cell, merged);
    for (CellId d : diff.cells) insert_resolving(d, c1_refs);
    return;
  }

  // Existing descendants all lie in the new cell's id range.
  const uint64_t lsb = cell.raw & (~cell.raw + 1);
  auto first_desc = entries_.lower_bound(CellId{cell.raw - (lsb - 1)});
  if (first_desc != entries_.end() &&
      first_desc->first.raw <= cell.raw + (lsb - 1)) {
    // The new cell is the ascendant: push its references down onto the
    // descendant and the difference cells; the new cell itself is dropped.
    // Difference cells may conflict with further descendants, which the
    // recursive insert resolves to a fixpoint.
    const CellId c2 = first_desc->first;
    merge_references(first_desc->second, refs);
    const CellDifference diff = cell_difference(cell, c2);
    for (CellId d : diff.cells) insert_resolving(d, refs);
    return;
  }

  ReferenceList canonical = refs;
  canonicalize(canonical);
  entries_.emplace(cell, std::move(canonical));
}

void SuperCovering::dump(std::ostream& os) const {
  for (const auto& [cell, refs] : entries_) {
    os << cell_to_hex(cell) << ' ' << cell_level(cell) << ' ';
    for (const PolygonReference& ref : refs) os << (ref.interior ? 'i' : 'c');
    for (const PolygonReference& ref : refs) os << ' ' << ref.polygon_id;
    os << '\n';
  }
}

SuperCovering build_super_covering(std::span<const Covering> coverings,
                                   std::span<const Covering> interiors) {
  const auto check_normalized = [](const Covering& covering) {
    std::vector<CellId> normalized = normalize_covering(covering.cells);
    if (normalized != covering.cells) {
      throw std::invalid_argument("build_super_covering: covering for polygon " +
                                  std::to_string(covering.polygon_id) +
                                  " is not normalized");
    }
  };
  SuperCovering sc;
  for (const Covering& covering : coverings) {
    check_normalized(covering);
    for (CellId cell : covering.cells) {
      sc.insert_resolving(cell, {{covering.polygon_id, false}});
    }
  }
  for (const Covering& covering : interiors) {
    check_normalized(covering);
    for (CellId cell : covering.cells) {
      sc.insert_resolving(cell, {{covering.polygon_id, true}});
    }
  }
  return sc;
}

struct SuperCoveringMutator {
  static SuperCovering::EntryMap& entries(SuperCovering& sc) {
    return sc.entries_;
  }
};

namespace {

bool has_candidate(const ReferenceList& refs) {
  for (const PolygonReference& ref : refs) {
    if (!ref.interior) return true;
  }
  return false;
}

}  // namespace

PrecisionReport refine_to_precision(
    SuperCovering& sc, std::span<const Polygon> polygons, double precision_m,
    const std::function<size_t(const SuperCovering&)>& physical_size_estimator,
    size_t memory_budget_bytes, int max_split_level) {
  if (precision_m <= 0.0) {
    throw std::invalid_argument("refine_to_precision: precision must be > 0");
  }
  auto& entries = SuperCoveringMutator::entries(sc);

  std::unordered_map<uint32_t, const Polygon*> by_id;
  for (const Polygon& poly : polygons) by_id.emplace(poly.id, &poly);

  // Candidate-bearing cells above the precision bound, largest diagonal
  // first, ties by ascending raw id.
  struct QueueOrder {
    bool operator()(const std::pair<double, uint64_t>& a,
                    const std::pair<double, uint64_t>& b) const {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    }
  };
  std::set<std::pair<double, uint64_t>, QueueOrder> queue;
  double blocked_max = 0.0;  // over-bound cells that can no longer split
  const auto enqueue = [&](CellId cell, const ReferenceList& refs) {
    if (!has_candidate(refs)) return;
    const double diag = cell_diagonal_meters(cell);
    if (diag <= precision_m) return;
    if (cell_level(cell) >= max_split_level) {
      blocked_max = std::max(blocked_max, diag);
      return;
    }
    queue.emplace(diag, cell.raw);
  };
  for (const auto& [cell, refs] : entries) enqueue(cell, refs);

  // Exact physical size is only re-evaluated near the budget; in between,
  // each split is charged a per-split upper bound (at most one new tree
  // node plus up to four new lookup-table records).
  size_t bytes_bound = physical_size_estimator(sc);
  bool budget_hit = false;

  while (!queue.empty()) {
    const auto [diag, raw] = *queue.begin();
    const CellId cell{raw};
    auto it = entries.find(cell);
    assert(it != entries.end());
    const ReferenceList parent_refs = it->second;

    size_t delta_bound = 256 * 8;
    delta_bound += 4 * (2 + parent_refs.size()) * sizeof(uint32_t);
    if (bytes_bound + delta_bound > memory_budget_bytes) {
      bytes_bound = physical_size_estimator(sc);
      if (bytes_bound + delta_bound > memory_budget_bytes) {
        budget_hit = true;
        break;
      }
    }

    queue.erase(queue.begin());
    entries.erase(it);
    for (CellId child : cell_children(cell)) {
      ReferenceList child_refs;
      child_refs.reserve(parent_refs.size());
      for (const PolygonReference& ref : parent_refs) {
        if (ref.interior) {
          child_refs.push_back(ref);
          continue;
        }
        auto poly_it = by_id.find(ref.polygon_id);
        if (poly_it == by_id.end()) {
          throw std::invalid_argument(
              "refine_to_precision: missing polygon " +
              std::to_string(ref.polygon_id));
        }
        switch (cell_polygon_relation(child, *poly_it->second)) {
          case CellRelation::kDisjoint:
            break;
          case CellRelation::kContainedInPolygon:
            child_refs.push_back({ref.polygon_id, true});
            break;
          case CellRelation::kIntersectsBoundary:
            child_refs.push_back(ref);
            break;
        }
      }
      if (child_refs.empty()) continue;
      canonicalize(child_refs);
      auto [pos, inserted] = entries.emplace(child, std::move(child_refs));
      enqueue(child, pos->second);
    }
    bytes_bound += delta_bound;
  }

  PrecisionReport report;
  report.cell_count = entries.size();
  report.max_candidate_cell_diagonal = blocked_max;
  if (!queue.empty()) {
    report.max_candidate_cell_diagonal =
        std::max(report.max_candidate_cell_diagonal, queue.begin()->first);
  }
  if (report.max_candidate_cell_diagonal == 0.0) {
    // No candidate cell above the bound remains: report the largest one
    // left anywhere (all are within precision).
    for (const auto& [cell, refs] : entries) {
      if (has_candidate(refs)) {
        report.max_candidate_cell_diagonal = std::max(
            report.max_candidate_cell_diagonal, cell_diagonal_meters(cell));
      }
    }
  }
  report.achieved =
      !budget_hit && report.max_candidate_cell_diagonal <= precision_m;
  return report;
}

}  // namespace geojoin
