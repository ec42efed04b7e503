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

#include "geojoin/cell_id.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace geojoin {

namespace {

constexpr uint64_t kFaceMask = uint64_t{7} << 61;
constexpr uint32_t kGridSize = uint32_t{1} << 30;  // cells per axis at level 30

// Spreads the low 30 bits of v so that bit i moves to bit 2*i.
uint64_t spread_bits(uint64_t v) {
  v = (v | (v << 16)) & 0x0000ffff0000ffffULL;
  v = (v | (v << 8)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v << 2)) & 0x3333333333333333ULL;
  v = (v | (v << 1)) & 0x5555555555555555ULL;
  return v;
}

// Inverse of spread_bits: collects the even bits of v.
uint32_t compact_bits(uint64_t v) {
  v &= 0x5555555555555555ULL;
  v = (v | (v >> 1)) & 0x3333333333333333ULL;
  v = (v | (v >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v >> 4)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v >> 8)) & 0x0000ffff0000ffffULL;
  v = (v | (v >> 16)) & 0x00000000ffffffffULL;
  return static_cast<uint32_t>(v);
}

uint32_t grid_coord(double value, double lo, double span) {
  double scaled = (value - lo) / span * static_cast<double>(kGridSize);
  if (scaled < 0.0) scaled = 0.0;
  uint64_t i = static_cast<uint64_t>(scaled);
  if (i >= kGridSize) i = kGridSize - 1;  // clamp the upper edge
  return static_cast<uint32_t>(i);
}

uint64_t marker_for_level(int level) { return uint64_t{1} << (60 - 2 * level); }

}  // namespace

double haversine_meters(const LatLng& a, const LatLng& b) {
  const double deg = std::acos(-1.0) / 180.0;
  const double phi1 = a.lat * deg;
  const double phi2 = b.lat * deg;
  const double dphi = (b.lat - a.lat) * deg;
  const double dlam = (b.lng - a.lng) * deg;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  if (h > 1.0) h = 1.0;
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(h));
}

bool cell_well_formed(CellId c) {
  const uint64_t pos = c.raw & ~kFaceMask;
  if (pos == 0) return false;
  const int tz = std::countr_zero(pos);
  return (tz & 1) == 0 && tz <= 60;
}

CellId cell_from_point(const LatLng& p, int level) {
  if (!latlng_valid(p)) {
    throw std::invalid_argument("cell_from_point: invalid coordinate");
  }
  if (level < 0 || level > kMaxCellLevel) {
    throw std::invalid_argument("cell_from_point: level out of range");
  }
  const uint32_t x = grid_coord(p.lng, -180.0, 360.0);
  const uint32_t y = grid_coord(p.lat, -90.0, 180.0);
  const uint64_t pos60 = (spread_bits(y) << 1) | spread_bits(x);
  const uint64_t leaf = (pos60 << 1) | 1;
  const uint64_t marker = marker_for_level(level);
  return CellId{(leaf & ~(marker - 1) & ~marker) | marker};
}

int cell_level(CellId c) {
  const uint64_t pos = c.raw & ~kFaceMask;
  if (pos == 0) throw std::invalid_argument("cell_level: malformed cell id");
  const int tz = std::countr_zero(pos);
  if ((tz & 1) != 0) throw std::invalid_argument("cell_level: malformed cell id");
  return (60 - tz) / 2;
}

CellId cell_parent(CellId c, int target_level) {
  const int level = cell_level(c);
  if (target_level < 0 || target_level > level) {
    throw std::invalid_argument("cell_parent: target level below cell");
  }
  const uint64_t marker = marker_for_level(target_level);
  return CellId{(c.raw & ~(marker - 1) & ~marker) | marker};
}

std::array<CellId, 4> cell_children(CellId c) {
  const int level = cell_level(c);
  if (level >= kMaxCellLevel) {
    throw std::invalid_argument("cell_children: cell is at the maximum level");
  }
  const uint64_t marker = marker_for_level(level);
  const uint64_t base = c.raw - marker;
  const uint64_t child_marker = marker >> 2;
  std::array<CellId, 4> out;
  for (uint64_t i = 0; i < 4; ++i) {
    out[i] = CellId{base | (i << (std::countr_zero(marker) - 1)) | child_marker};
  }
  return out;
}

LatLngRect cell_box(CellId c) {
  const int level = cell_level(c);
  const uint64_t marker = c.raw & (~c.raw + 1);
  const uint64_t pos60 = (c.raw ^ marker) >> 1;  // SW leaf position
  const uint32_t x = compact_bits(pos60);
  const uint32_t y = compact_bits(pos60 >> 1);
  const uint32_t size = kGridSize >> level;
  const double lat_step = 180.0 / static_cast<double>(kGridSize);
  const double lng_step = 360.0 / static_cast<double>(kGridSize);
  LatLngRect box;
  box.lat_lo = -90.0 + static_cast<double>(y) * lat_step;
  box.lat_hi = -90.0 + static_cast<double>(y + static_cast<uint64_t>(size)) * lat_step;
  box.lng_lo = -180.0 + static_cast<double>(x) * lng_step;
  box.lng_hi = -180.0 + static_cast<double>(x + static_cast<uint64_t>(size)) * lng_step;
  return box;
}

double cell_diagonal_meters(CellId c) {
  const LatLngRect box = cell_box(c);
  return haversine_meters(LatLng{box.lat_lo, box.lng_lo},
                          LatLng{box.lat_hi, box.lng_hi});
}

CellDifference cell_difference(CellId ancestor, CellId descendant) {
  if (!cell_contains(ancestor, descendant) || ancestor == descendant) {
    throw std::invalid_argument(
        "cell_difference: descendant must be a proper descendant");
  }
  const int from = cell_level(ancestor);
  const int to = cell_level(descendant);
  CellDifference diff;
  diff.cells.reserve(3 * static_cast<size_t>(to - from));
  for (int level = from + 1; level <= to; ++level) {
    const CellId on_path = cell_parent(descendant, level);
    for (CellId child : cell_children(cell_parent(descendant, level - 1))) {
      if (child != on_path) diff.cells.push_back(child);
    }
  }
  return diff;
}

std::string cell_to_hex(CellId c) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(c.raw));
  return std::string(buf, 16);
}

namespace {

bool parse_cell(const std::string& s, int base, CellId& out) {
  uint64_t raw = 0;
  size_t consumed = 0;
  try {
    raw = std::stoull(s, &consumed, base);
  } catch (const std::exception&) {
    return false;
  }
  if (consumed != s.size()) return false;
  out = CellId{raw};
  return cell_well_formed(out);
}

}  // namespace

CellId cell_from_hex(const std::string& s) {
  CellId c;
  if (s.size() != 16 || !parse_cell(s, 16, c)) {
    throw std::invalid_argument("cell_from_hex: malformed cell id: " + s);
  }
  return c;
}

CellId cell_from_string(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("cell_from_string: empty input");
  CellId c;
  if (s.size() == 16 && parse_cell(s, 16, c)) return c;
  if (parse_cell(s, 10, c)) return c;
  throw std::invalid_argument("cell_from_string: malformed cell id: " + s);
}

}  // namespace geojoin
