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

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "geojoin/io.hpp"
#include "json.hpp"

namespace geojoin {

namespace {

using nlohmann::json;

bool numeric_id(const json& value, uint32_t& out) {
  if (!value.is_number_integer() && !value.is_number_unsigned()) return false;
  const int64_t v = value.get<int64_t>();
  if (v < 0 || v > static_cast<int64_t>(kMaxPolygonId)) return false;
  out = static_cast<uint32_t>(v);
  return true;
}

std::string feature_name(size_t index, const json& feature) {
  std::string name = "feature " + std::to_string(index);
  if (feature.contains("id")) name += " (id " + feature["id"].dump() + ")";
  return name;
}

Polygon parse_feature(size_t index, const json& feature, uint32_t fallback_id) {
  if (!feature.is_object() || feature.value("type", "") != "Feature") {
    throw DataError(feature_name(index, feature) + ": not a Feature object");
  }
  const auto geom_it = feature.find("geometry");
  if (geom_it == feature.end() || !geom_it->is_object()) {
    throw DataError(feature_name(index, feature) + ": missing geometry");
  }
  const std::string type = geom_it->value("type", "");
  if (type != "Polygon") {
    throw DataError(feature_name(index, feature) + ": geometry type '" + type +
                    "' not supported, only Polygon");
  }
  const auto coords_it = geom_it->find("coordinates");
  if (coords_it == geom_it->end() || !coords_it->is_array() ||
      coords_it->empty()) {
    throw DataError(feature_name(index, feature) + ": missing coordinates");
  }
  if (coords_it->size() > 1) {
    throw DataError(feature_name(index, feature) +
                    ": polygons with holes not supported");
  }

  Polygon poly;
  poly.id = fallback_id;
  if (feature.contains("id")) {
    if (!numeric_id(feature["id"], poly.id)) {
      throw DataError(feature_name(index, feature) +
                      ": id is not an integer in [0, 2^30)");
    }
  } else if (feature.contains("properties") &&
             feature["properties"].is_object() &&
             feature["properties"].contains("id")) {
    if (!numeric_id(feature["properties"]["id"], poly.id)) {
      throw DataError(feature_name(index, feature) +
                      ": properties.id is not an integer in [0, 2^30)");
    }
  }

  const json& ring = (*coords_it)[0];
  if (!ring.is_array()) {
    throw DataError(feature_name(index, feature) + ": ring is not an array");
  }
  for (const json& position : ring) {
    if (!position.is_array() || position.size() < 2 ||
        !position[0].is_number() || !position[1].is_number()) {
      throw DataError(feature_name(index, feature) +
                      ": position is not [lng, lat]");
    }
    poly.vertices.push_back(
        {position[1].get<double>(), position[0].get<double>()});
  }
  // GeoJSON rings repeat the first vertex; we store it once.
  if (poly.vertices.size() >= 2 &&
      poly.vertices.front().lat == poly.vertices.back().lat &&
      poly.vertices.front().lng == poly.vertices.back().lng) {
    poly.vertices.pop_back();
  }
  try {
    validate_polygon(poly);
  } catch (const std::invalid_argument& e) {
    throw DataError(feature_name(index, feature) + ": " + e.what());
  }
  return poly;
}

}  // namespace

std::vector<Polygon> parse_geojson(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed GeoJSON: ") + e.what());
  }
  if (!root.is_object() || root.value("type", "") != "FeatureCollection" ||
      !root.contains("features") || !root["features"].is_array()) {
    throw DataError("expected a GeoJSON FeatureCollection");
  }
  std::vector<Polygon> polygons;
  std::set<uint32_t> ids;
  size_t index = 0;
  for (const json& feature : root["features"]) {
    Polygon poly =
        parse_feature(index, feature, static_cast<uint32_t>(index));
    if (!ids.insert(poly.id).second) {
      throw DataError(feature_name(index, feature) + ": duplicate polygon id " +
                      std::to_string(poly.id));
    }
    polygons.push_back(std::move(poly));
    ++index;
  }
  return polygons;
}

std::vector<Polygon> load_geojson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open polygon file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_geojson(buffer.str());
}

void write_geojson(std::span<const Polygon> polygons, std::ostream& os) {
  json features = json::array();
  for (const Polygon& poly : polygons) {
    json ring = json::array();
    for (const LatLng& v : poly.vertices) {
      ring.push_back(json::array({v.lng, v.lat}));
    }
    ring.push_back(
        json::array({poly.vertices.front().lng, poly.vertices.front().lat}));
    features.push_back({{"type", "Feature"},
                        {"id", poly.id},
                        {"properties", json::object()},
                        {"geometry",
                         {{"type", "Polygon"},
                          {"coordinates", json::array({ring})}}}});
  }
  os << json{{"type", "FeatureCollection"}, {"features", features}}.dump(2)
     << '\n';
}

}  // namespace geojoin
