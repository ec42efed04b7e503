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

#include <charconv>
#include <fstream>
#include <istream>

#include "geojoin/io.hpp"

namespace geojoin {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

bool read_line(std::istream& is, std::string& line) {
  if (!std::getline(is, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

CsvPointReader::CsvPointReader(std::istream& is, Options options)
    : is_(is), options_(std::move(options)) {
  std::string header;
  if (!read_line(is_, header)) {
    throw DataError("point file is empty, expected a CSV header");
  }
  const std::vector<std::string> columns = split_row(header);
  bool lat_found = false;
  bool lng_found = false;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == options_.lat_column) {
      lat_index_ = i;
      lat_found = true;
    } else if (columns[i] == options_.lng_column) {
      lng_index_ = i;
      lng_found = true;
    }
  }
  if (!lat_found || !lng_found) {
    throw DataError("CSV header is missing column '" +
                    (lat_found ? options_.lng_column : options_.lat_column) +
                    "'");
  }
}

bool CsvPointReader::next(LatLng& out) {
  std::string line;
  while (read_line(is_, line)) {
    ++line_number_;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_row(line);
    LatLng p;
    const bool ok = fields.size() > std::max(lat_index_, lng_index_) &&
                    parse_double(fields[lat_index_], p.lat) &&
                    parse_double(fields[lng_index_], p.lng) && latlng_valid(p);
    if (!ok) {
      if (options_.strict) {
        throw DataError("line " + std::to_string(line_number_) +
                        ": invalid point row: " + line);
      }
      ++skipped_;
      continue;
    }
    out = p;
    return true;
  }
  return false;
}

std::vector<LatLng> load_points_csv(const std::string& path,
                                    CsvPointReader::Options options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open point file: " + path);
  CsvPointReader reader(in, std::move(options));
  std::vector<LatLng> points;
  LatLng p;
  while (reader.next(p)) points.push_back(p);
  return points;
}

}  // namespace geojoin
