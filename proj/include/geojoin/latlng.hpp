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

#include <cmath>

namespace geojoin {

inline constexpr double kEarthRadiusMeters = 6371000.0;

/// A point on the (planar) lat/lng grid. Latitude in [-90, 90] degrees,
/// longitude in [-180, 180) degrees; the upper edges (lat = 90, lng = 180)
/// are accepted and clamp to the last grid row/column.
struct LatLng {
  double lat = 0.0;
  double lng = 0.0;
};

inline bool latlng_valid(const LatLng& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lng) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lng >= -180.0 && p.lng <= 180.0;
}

/// Great-circle distance in meters on the spherical earth model.
double haversine_meters(const LatLng& a, const LatLng& b);

}  // namespace geojoin
