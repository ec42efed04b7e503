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
#include <vector>

#include "geojoin/cell_id.hpp"
#include "geojoin/latlng.hpp"

namespace geojoin {

inline constexpr uint32_t kMaxPolygonId = (uint32_t{1} << 30) - 1;

/// A simple polygon: one closed outer ring, first vertex not repeated.
/// Geometry is planar in lat/lng degree space (edges are straight lines in
/// degrees). Vertex count equals edge count.
struct Polygon {
  uint32_t id = 0;
  std::vector<LatLng> vertices;
};

/// Throws std::invalid_argument unless the ring is usable: at least three
/// vertices, finite in-range coordinates, no repeated consecutive vertices,
/// no self-intersection, id below 2^30.
void validate_polygon(const Polygon& poly);

LatLngRect polygon_bbox(const Polygon& poly);

enum class CellRelation {
  kDisjoint,
  kIntersectsBoundary,
  kContainedInPolygon,
};

struct Covering {
  uint32_t polygon_id = 0;
  std::vector<CellId> cells;  // sorted, normalized
  bool interior = false;
};

/// Per-polygon approximation budgets. Defaults: up to 128 covering cells at
/// levels <= 30 and up to 256 interior cells at levels <= 20.
struct CoveringConfig {
  int max_covering_cells = 128;
  int max_covering_level = 30;
  int max_interior_cells = 256;
  int max_interior_level = 20;
};

/// Point-in-polygon with ST_Covers semantics: points on an edge or vertex
/// (within 1e-12 degrees, planar) count as inside; elsewhere the crossing
/// number decides.
bool pip_test(const Polygon& poly, const LatLng& p);

/// Classifies a cell box against a polygon. kContainedInPolygon and
/// kDisjoint are certain; anything unclear is kIntersectsBoundary.
CellRelation cell_polygon_relation(CellId c, const Polygon& poly);

/// Best-first subdivision covering. For interior=false the cell union
/// contains the polygon; for interior=true every cell lies fully inside the
/// polygon (possibly empty for degenerate polygons). Deterministic: the
/// largest frontier cell splits first, ties by ascending raw id.
Covering compute_covering(const Polygon& poly, const CoveringConfig& cfg,
                          bool interior);

/// Sorted, duplicates removed, cells contained in another removed (the
/// ancestor is kept).
std::vector<CellId> normalize_covering(std::vector<CellId> cells);

/// 0 when the point is covered; otherwise the distance in meters to the
/// nearest boundary point, via a local equirectangular projection.
double distance_point_polygon(const LatLng& p, const Polygon& poly);

}  // namespace geojoin
