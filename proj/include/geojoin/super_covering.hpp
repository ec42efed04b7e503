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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "geojoin/cell_id.hpp"
#include "geojoin/geometry.hpp"

namespace geojoin {

/// One cell-to-polygon association. interior=true means the cell lies fully
/// inside the polygon, so hitting it proves membership without geometry.
struct PolygonReference {
  uint32_t polygon_id = 0;
  bool interior = false;

  friend bool operator==(const PolygonReference& a, const PolygonReference& b) {
    return a.polygon_id == b.polygon_id && a.interior == b.interior;
  }
};

using ReferenceList = std::vector<PolygonReference>;

/// The logical index: an overlap-free map from cells to polygon references.
/// No key contains another key, so a point lookup returns at most one entry.
/// Reference lists are canonical: interior references first, then candidates,
/// each sorted by polygon id, one entry per polygon.
class SuperCovering {
 public:
  using EntryMap = std::map<CellId, ReferenceList>;

  const EntryMap& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  /// Unique entry containing the leaf, or nullptr.
  const ReferenceList* lookup(CellId leaf) const;

  /// Inserts a cell, resolving duplicate and containment conflicts against
  /// existing keys so the overlap-free invariant is preserved. Conflicts are
  /// resolved precision-preservingly: the ancestor is replaced by the
  /// descendant plus the cell difference, never the other way around.
  void insert_resolving(CellId cell, const ReferenceList& refs);

  /// One line per entry: `cell_hex level flags polygon_ids...` where flags
  /// holds one character per reference ('i' interior, 'c' candidate).
  void dump(std::ostream& os) const;

 private:
  friend struct SuperCoveringMutator;

  EntryMap entries_;
};

/// Builds the super covering from per-polygon coverings followed by the
/// interior coverings. Inputs must be individually normalized.
SuperCovering build_super_covering(std::span<const Covering> coverings,
                                   std::span<const Covering> interiors);

struct PrecisionReport {
  double max_candidate_cell_diagonal = 0.0;  // meters
  size_t cell_count = 0;
  bool achieved = false;
};

/// Splits the candidate-bearing cell with the largest diagonal into its four
/// children (reclassifying each child against the referenced polygons) until
/// every candidate cell's diagonal is at or below `precision_m`, no cell can
/// be split further (level cap), or the estimated physical index size would
/// exceed `memory_budget_bytes`. Deterministic: largest diagonal first, ties
/// by ascending raw id.
PrecisionReport refine_to_precision(
    SuperCovering& sc, std::span<const Polygon> polygons, double precision_m,
    const std::function<size_t(const SuperCovering&)>& physical_size_estimator,
    size_t memory_budget_bytes, int max_split_level = kMaxCellLevel);

}  // namespace geojoin
