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

#include "geojoin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace geojoin {

namespace {

constexpr double kBoundaryEpsDeg = 1e-12;
constexpr double kBoundaryEpsSq = kBoundaryEpsDeg * kBoundaryEpsDeg;

struct Vec2 {
  double x, y;
};

Vec2 to_xy(const LatLng& p) { return Vec2{p.lng, p.lat}; }

double cross(Vec2 o, Vec2 a, Vec2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment_collinear(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Inclusive segment intersection (touching endpoints count).
bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(a, b, c);
  const double d2 = cross(a, b, d);
  const double d3 = cross(c, d, a);
  const double d4 = cross(c, d, b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && on_segment_collinear(a, b, c)) return true;
  if (d2 == 0 && on_segment_collinear(a, b, d)) return true;
  if (d3 == 0 && on_segment_collinear(c, d, a)) return true;
  if (d4 == 0 && on_segment_collinear(c, d, b)) return true;
  return false;
}

double point_segment_dist_sq(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = a.x + t * dx - p.x;
  const double cy = a.y + t * dy - p.y;
  return cx * cx + cy * cy;
}

// True if the open interior of the box is crossed by segment ab; contact
// limited to the box boundary does not count.
bool segment_crosses_open_box(Vec2 a, Vec2 b, const LatLngRect& box) {
  // Clip ab to the box with the Liang-Barsky parameter interval; the
  // segment meets the interior iff the clipped span is non-degenerate and
  // not confined to one box edge.
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double pq[4][2] = {{-dx, a.x - box.lng_lo},
                           {dx, box.lng_hi - a.x},
                           {-dy, a.y - box.lat_lo},
                           {dy, box.lat_hi - a.y}};
  for (const auto& e : pq) {
    const double p = e[0], q = e[1];
    if (p == 0.0) {
      if (q < 0.0) return false;  // parallel and outside
      continue;
    }
    const double r = q / p;
    if (p < 0.0) {
      if (r > t1) return false;
      if (r > t0) t0 = r;
    } else {
      if (r < t0) return false;
      if (r < t1) t1 = r;
    }
  }
  if (t0 >= t1) return false;  // touches at most a point
  // The clipped span lies inside the closed box; it misses the interior
  // only when it runs along one of the four edges.
  const double mx = a.x + 0.5 * (t0 + t1) * dx;
  const double my = a.y + 0.5 * (t0 + t1) * dy;
  return mx > box.lng_lo && mx < box.lng_hi && my > box.lat_lo &&
         my < box.lat_hi;
}

bool segment_meets_closed_box(Vec2 a, Vec2 b, const LatLngRect& box) {
  const auto inside = [&](Vec2 p) {
    return p.x >= box.lng_lo && p.x <= box.lng_hi && p.y >= box.lat_lo &&
           p.y <= box.lat_hi;
  };
  if (inside(a) || inside(b)) return true;
  const Vec2 sw{box.lng_lo, box.lat_lo};
  const Vec2 se{box.lng_hi, box.lat_lo};
  const Vec2 ne{box.lng_hi, box.lat_hi};
  const Vec2 nw{box.lng_lo, box.lat_hi};
  return segments_intersect(a, b, sw, se) || segments_intersect(a, b, se, ne) ||
         segments_intersect(a, b, ne, nw) || segments_intersect(a, b, nw, sw);
}

}  // namespace

void validate_polygon(const Polygon& poly) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  const std::string tag = "polygon " + std::to_string(poly.id) + ": ";
  if (poly.id > kMaxPolygonId) {
    throw std::invalid_argument(tag + "id exceeds 2^30 - 1");
  }
  if (n < 3) throw std::invalid_argument(tag + "fewer than 3 vertices");
  for (const LatLng& p : v) {
    if (!latlng_valid(p)) {
      throw std::invalid_argument(tag + "vertex out of range or non-finite");
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const LatLng& a = v[i];
    const LatLng& b = v[(i + 1) % n];
    if (a.lat == b.lat && a.lng == b.lng) {
      throw std::invalid_argument(tag + "repeated consecutive vertex");
    }
  }
  // Spikes: consecutive edges folding back onto each other.
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = to_xy(v[i]);
    const Vec2 b = to_xy(v[(i + 1) % n]);
    const Vec2 c = to_xy(v[(i + 2) % n]);
    const double turn = cross(a, b, c);
    const double along = (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y);
    if (turn == 0.0 && along < 0.0) {
      throw std::invalid_argument(tag + "ring folds back on itself");
    }
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(to_xy(v[i]), to_xy(v[(i + 1) % n]), to_xy(v[j]),
                             to_xy(v[(j + 1) % n]))) {
        throw std::invalid_argument(tag + "ring is self-intersecting");
      }
    }
  }
}

LatLngRect polygon_bbox(const Polygon& poly) {
  LatLngRect box{90.0, -90.0, 180.0, -180.0};
  for (const LatLng& p : poly.vertices) {
    box.lat_lo = std::min(box.lat_lo, p.lat);
    box.lat_hi = std::max(box.lat_hi, p.lat);
    box.lng_lo = std::min(box.lng_lo, p.lng);
    box.lng_hi = std::max(box.lng_hi, p.lng);
  }
  return box;
}

bool pip_test(const Polygon& poly, const LatLng& p) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  const Vec2 q = to_xy(p);
  for (size_t i = 0; i < n; ++i) {
    if (point_segment_dist_sq(q, to_xy(v[i]), to_xy(v[(i + 1) % n])) <=
        kBoundaryEpsSq) {
      return true;  // on an edge or vertex
    }
  }
  bool inside = false;
  for (size_t i = 0; i < n; ++i) {
    const Vec2 a = to_xy(v[i]);
    const Vec2 b = to_xy(v[(i + 1) % n]);
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x_cross = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (q.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

CellRelation cell_polygon_relation(CellId c, const Polygon& poly) {
  const LatLngRect box = cell_box(c);
  const auto& v = poly.vertices;
  const size_t n = v.size();

  bool edge_in_open_box = false;
  bool edge_meets_closed_box = false;
  for (size_t i = 0; i < n && !edge_in_open_box; ++i) {
    const Vec2 a = to_xy(v[i]);
    const Vec2 b = to_xy(v[(i + 1) % n]);
    if (segment_crosses_open_box(a, b, box)) edge_in_open_box = true;
    if (!edge_meets_closed_box && segment_meets_closed_box(a, b, box)) {
      edge_meets_closed_box = true;
    }
  }
  if (edge_in_open_box) return CellRelation::kIntersectsBoundary;

  bool vertex_strictly_inside = false;
  bool vertex_in_closed = false;
  for (const LatLng& p : v) {
    if (p.lng > box.lng_lo && p.lng < box.lng_hi && p.lat > box.lat_lo &&
        p.lat < box.lat_hi) {
      vertex_strictly_inside = true;
    }
    if (box.contains(p)) vertex_in_closed = true;
  }

  const LatLng corners[4] = {{box.lat_lo, box.lng_lo},
                             {box.lat_lo, box.lng_hi},
                             {box.lat_hi, box.lng_lo},
                             {box.lat_hi, box.lng_hi}};
  int corners_inside = 0;
  for (const LatLng& corner : corners) {
    if (pip_test(poly, corner)) ++corners_inside;
  }

  if (corners_inside == 4 && !vertex_strictly_inside) {
    return CellRelation::kContainedInPolygon;
  }
  if (!edge_meets_closed_box && corners_inside == 0 && !vertex_in_closed) {
    const LatLng center{(box.lat_lo + box.lat_hi) / 2.0,
                        (box.lng_lo + box.lng_hi) / 2.0};
    if (!pip_test(poly, center)) return CellRelation::kDisjoint;
  }
  return CellRelation::kIntersectsBoundary;
}

Covering compute_covering(const Polygon& poly, const CoveringConfig& cfg,
                          bool interior) {
  const int max_cells = interior ? cfg.max_interior_cells : cfg.max_covering_cells;
  const int max_level = std::min(
      interior ? cfg.max_interior_level : cfg.max_covering_level, kMaxCellLevel);
  if (max_cells < 1 || max_level < 0) {
    throw std::invalid_argument("compute_covering: invalid config");
  }

  // Seed with the smallest single cell containing the polygon's bbox.
  const LatLngRect bbox = polygon_bbox(poly);
  CellId seed{kRootCellRaw};
  while (cell_level(seed) < max_level) {
    bool descended = false;
    for (CellId child : cell_children(seed)) {
      if (cell_box(child).contains(bbox)) {
        seed = child;
        descended = true;
        break;
      }
    }
    if (!descended) break;
  }

  std::vector<CellId> contained;
  // Frontier of boundary-intersecting cells, largest (lowest level) first.
  std::set<std::pair<int, uint64_t>> frontier;
  const auto classify = [&](CellId c) {
    switch (cell_polygon_relation(c, poly)) {
      case CellRelation::kContainedInPolygon:
        contained.push_back(c);
        break;
      case CellRelation::kIntersectsBoundary:
        frontier.emplace(cell_level(c), c.raw);
        break;
      case CellRelation::kDisjoint:
        break;
    }
  };
  classify(seed);

  // Boundary cells count against the budget of a covering (they are part
  // of its output) but not of an interior covering, where only contained
  // cells are emitted; there the frontier is capped separately so thin
  // polygons cannot blow up the subdivision.
  const size_t frontier_cap =
      interior ? std::max<size_t>(4096, 64 * static_cast<size_t>(max_cells))
               : static_cast<size_t>(max_cells);
  while (!frontier.empty()) {
    const auto [level, raw] = *frontier.begin();
    if (level >= max_level) break;  // ordered by level, all are at max
    const auto children = cell_children(CellId{raw});
    CellRelation rel[4];
    int kept = 0;
    int kept_contained = 0;
    for (int i = 0; i < 4; ++i) {
      rel[i] = cell_polygon_relation(children[i], poly);
      if (rel[i] != CellRelation::kDisjoint) ++kept;
      if (rel[i] == CellRelation::kContainedInPolygon) ++kept_contained;
    }
    if (interior) {
      if (contained.size() + static_cast<size_t>(kept_contained) >
          static_cast<size_t>(max_cells)) {
        break;
      }
      if (frontier.size() - 1 + static_cast<size_t>(kept - kept_contained) >
          frontier_cap) {
        break;
      }
    } else {
      const size_t projected = contained.size() + frontier.size() - 1 +
                               static_cast<size_t>(kept);
      if (projected > static_cast<size_t>(max_cells)) break;
    }
    frontier.erase(frontier.begin());
    for (int i = 0; i < 4; ++i) {
      if (rel[i] == CellRelation::kContainedInPolygon) {
        contained.push_back(children[i]);
      } else if (rel[i] == CellRelation::kIntersectsBoundary) {
        frontier.emplace(level + 1, children[i].raw);
      }
    }
  }

  Covering out;
  out.polygon_id = poly.id;
  out.interior = interior;
  out.cells = std::move(contained);
  if (!interior) {
    for (const auto& [level, raw] : frontier) out.cells.push_back(CellId{raw});
  }
  out.cells = normalize_covering(std::move(out.cells));
  return out;
}

std::vector<CellId> normalize_covering(std::vector<CellId> cells) {
  std::sort(cells.begin(), cells.end());
  std::vector<CellId> out;
  out.reserve(cells.size());
  for (CellId c : cells) {
    if (!out.empty() && cell_contains(out.back(), c)) continue;  // covers dups
    while (!out.empty() && cell_contains(c, out.back())) out.pop_back();
    out.push_back(c);
  }
  return out;
}

double distance_point_polygon(const LatLng& p, const Polygon& poly) {
  if (pip_test(poly, p)) return 0.0;
  const double deg = std::acos(-1.0) / 180.0;
  const auto& v = poly.vertices;
  const size_t n = v.size();
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const LatLng& a = v[i];
    const LatLng& b = v[(i + 1) % n];
    // Equirectangular projection around the point fixes the parameter of
    // the nearest segment point; the reported distance is great-circle.
    const double mid_lat = (p.lat + (a.lat + b.lat) / 2.0) / 2.0;
    const double scale = std::cos(mid_lat * deg);
    const double ax = (a.lng - p.lng) * scale, ay = a.lat - p.lat;
    const double bx = (b.lng - p.lng) * scale, by = b.lat - p.lat;
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(-(ax * dx + ay * dy) / len2, 0.0, 1.0);
    const LatLng nearest{a.lat + t * (b.lat - a.lat),
                         a.lng + t * (b.lng - a.lng)};
    best = std::min(best, haversine_meters(p, nearest));
  }
  return best;
}

}  // namespace geojoin
