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

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "geojoin/geometry.hpp"
#include "geojoin/latlng.hpp"

namespace geojoin {

/// Invalid or unreadable input data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Loads a GeoJSON FeatureCollection of Polygon features (outer ring only;
/// MultiPolygon and holes are rejected naming the offending feature). The
/// polygon id comes from the numeric feature id, the numeric "id" property,
/// or the feature position as a fallback; ids must be unique and < 2^30.
std::vector<Polygon> load_geojson(const std::string& path);
std::vector<Polygon> parse_geojson(const std::string& text);

void write_geojson(std::span<const Polygon> polygons, std::ostream& os);

/// Streaming CSV point source: a header row naming the latitude/longitude
/// columns, decimal-degree values, other columns ignored. Invalid rows are
/// counted and skipped unless strict mode is on.
class CsvPointReader {
 public:
  struct Options {
    std::string lat_column = "lat";
    std::string lng_column = "lng";
    bool strict = false;
  };

  /// Parses the header; throws DataError when a column is missing.
  explicit CsvPointReader(std::istream& is) : CsvPointReader(is, Options{}) {}
  CsvPointReader(std::istream& is, Options options);

  /// Next valid point; false at end of input.
  bool next(LatLng& out);

  size_t skipped_rows() const { return skipped_; }

 private:
  std::istream& is_;
  Options options_;
  size_t lat_index_ = 0;
  size_t lng_index_ = 0;
  size_t line_number_ = 1;
  size_t skipped_ = 0;
};

std::vector<LatLng> load_points_csv(const std::string& path,
                                    CsvPointReader::Options options = CsvPointReader::Options());

}  // namespace geojoin
