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
#include <string>
#include <vector>

#include "geojoin/latlng.hpp"

namespace geojoin {

// A CellId identifies one cell of a hierarchical planar quadtree over the
// lat/lng rectangle [-90,90] x [-180,180). The 64-bit layout is:
//
//   bits 63..61   face (3 bits, reserved; always 0 in this planar scheme)
//   next 2*L bits quadrant pairs, most significant pair first; in each pair
//                 the high bit selects the upper half (latitude), the low
//                 bit the right half (longitude)
//   next 1 bit    level marker (always set)
//   low bits      zero
//
// for a level L in [0, 30]. The marker therefore sits at bit 60 - 2*L, and
// the root cell is 1 << 60. Children extend their parent's quadrant-pair
// prefix, so ancestry tests reduce to bit arithmetic: the descendants of a
// cell are exactly the well-formed ids in [raw - (lsb-1), raw + (lsb-1)]
// where lsb is the marker bit value.
//
// Quadrant pairs are enumerated in Z-order (y bit above x bit), which keeps
// the parent-prefix property without any curve-orientation state.
struct CellId {
  uint64_t raw = 0;

  friend bool operator==(CellId a, CellId b) { return a.raw == b.raw; }
  friend bool operator!=(CellId a, CellId b) { return a.raw != b.raw; }
  friend bool operator<(CellId a, CellId b) { return a.raw < b.raw; }
  friend bool operator>(CellId a, CellId b) { return a.raw > b.raw; }
  friend bool operator<=(CellId a, CellId b) { return a.raw <= b.raw; }
};

inline constexpr int kMaxCellLevel = 30;
inline constexpr uint64_t kRootCellRaw = uint64_t{1} << 60;

/// Geodetic bounding box of a cell. Edges are grid-aligned; all four bounds
/// are exactly representable doubles.
struct LatLngRect {
  double lat_lo = 0.0;
  double lat_hi = 0.0;
  double lng_lo = 0.0;
  double lng_hi = 0.0;

  bool contains(const LatLng& p) const {
    return p.lat >= lat_lo && p.lat <= lat_hi && p.lng >= lng_lo &&
           p.lng <= lng_hi;
  }
  bool contains(const LatLngRect& o) const {
    return o.lat_lo >= lat_lo && o.lat_hi <= lat_hi && o.lng_lo >= lng_lo &&
           o.lng_hi <= lng_hi;
  }
};

/// The set difference ancestor \ descendant, tiled with 3 cells per level
/// step. Cells are pairwise disjoint and none contains the descendant.
struct CellDifference {
  std::vector<CellId> cells;
};

bool cell_well_formed(CellId c);

/// Discretizes a point at the given level. Floor discretization: cell boxes
/// are half-open, except that lat = 90 and lng = 180 clamp into the last
/// row/column. Throws std::invalid_argument for non-finite or out-of-range
/// coordinates or a level outside [0, 30].
CellId cell_from_point(const LatLng& p, int level);

/// Level encoded by the trailing marker bit. Throws on malformed ids.
int cell_level(CellId c);

/// Ancestor at target_level (<= cell_level(c)); identity at the same level.
CellId cell_parent(CellId c, int target_level);

/// The four children, quadrant pairs 00..11, ascending raw order.
std::array<CellId, 4> cell_children(CellId c);

/// True iff b is a descendant of a (or equal).
inline bool cell_contains(CellId a, CellId b) {
  const uint64_t lsb = a.raw & (~a.raw + 1);
  return b.raw >= a.raw - (lsb - 1) && b.raw <= a.raw + (lsb - 1);
}

LatLngRect cell_box(CellId c);

/// Great-circle distance between the SW and NE box corners.
double cell_diagonal_meters(CellId c);

/// Requires cell_contains(ancestor, descendant) and ancestor != descendant.
CellDifference cell_difference(CellId ancestor, CellId descendant);

/// Fixed-width 16-digit lowercase hex, the stable external form.
std::string cell_to_hex(CellId c);

/// Parses the 16-digit hex form. Throws std::invalid_argument if the text
/// is not a well-formed cell id.
CellId cell_from_hex(const std::string& s);

/// Convenience parser accepting the hex form or an unsigned decimal id.
/// All-digit 16-character strings are ambiguous between the two encodings;
/// the hex reading wins when both are well-formed.
CellId cell_from_string(const std::string& s);

}  // namespace geojoin
