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

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "geojoin/io.hpp"
#include "geojoin/join.hpp"
#include "oracles.hpp"

using namespace geojoin;
using testing::Rng;

namespace {

const char* kSquareGeojson = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "id": 3, "properties": {},
     "geometry": {"type": "Polygon",
       "coordinates": [[[10.0, 20.0], [11.0, 20.0], [11.0, 21.0], [10.0, 21.0], [10.0, 20.0]]]}}
  ]
})";

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string temp_dir() {
  static const std::string dir = [] {
    std::string tmpl = "/tmp/geojoin_cli_XXXXXX";
    const char* made = mkdtemp(tmpl.data());
    REQUIRE(made != nullptr);
    return std::string(made);
  }();
  return dir;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
  REQUIRE(out.good());
}

CliResult run_cli(const std::string& args) {
  const std::string out_path = temp_dir() + "/stdout.txt";
  const std::string err_path = temp_dir() + "/stderr.txt";
  const std::string cmd = std::string(GEOJOIN_CLI_PATH) + " " + args + " >" +
                          out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

}  // namespace

TEST_CASE("parse_geojson: single square feature") {
  const std::vector<Polygon> polygons = parse_geojson(kSquareGeojson);
  REQUIRE(polygons.size() == 1);
  CHECK(polygons[0].id == 3);
  REQUIRE(polygons[0].vertices.size() == 4);  // closing vertex dropped
  CHECK(polygons[0].vertices[0].lat == 20.0);
  CHECK(polygons[0].vertices[0].lng == 10.0);
}

TEST_CASE("parse_geojson: errors name the feature") {
  CHECK_THROWS_AS(parse_geojson("{"), DataError);
  CHECK_THROWS_AS(parse_geojson(R"({"type": "Feature"})"), DataError);

  const char* multi = R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "id": 1, "geometry": {"type": "MultiPolygon", "coordinates": []}}
    ]
  })";
  CHECK_THROWS_WITH_AS(parse_geojson(multi),
                       doctest::Contains("MultiPolygon"), DataError);

  const char* holes = R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "id": 1, "geometry": {"type": "Polygon",
        "coordinates": [
          [[0.0,0.0],[4.0,0.0],[4.0,4.0],[0.0,4.0],[0.0,0.0]],
          [[1.0,1.0],[2.0,1.0],[2.0,2.0],[1.0,2.0],[1.0,1.0]]
        ]}}
    ]
  })";
  CHECK_THROWS_WITH_AS(parse_geojson(holes), doctest::Contains("holes"),
                       DataError);

  const char* dup = R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "id": 1, "geometry": {"type": "Polygon",
        "coordinates": [[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,0.0]]]}},
      {"type": "Feature", "id": 1, "geometry": {"type": "Polygon",
        "coordinates": [[[5.0,5.0],[6.0,5.0],[6.0,6.0],[5.0,5.0]]]}}
    ]
  })";
  CHECK_THROWS_WITH_AS(parse_geojson(dup), doctest::Contains("duplicate"),
                       DataError);
}

TEST_CASE("parse_geojson: sequential id fallback and properties id") {
  const char* text = R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "geometry": {"type": "Polygon",
        "coordinates": [[[0.0,0.0],[1.0,0.0],[1.0,1.0],[0.0,0.0]]]}},
      {"type": "Feature", "properties": {"id": 42}, "geometry": {"type": "Polygon",
        "coordinates": [[[5.0,5.0],[6.0,5.0],[6.0,6.0],[5.0,5.0]]]}}
    ]
  })";
  const std::vector<Polygon> polygons = parse_geojson(text);
  REQUIRE(polygons.size() == 2);
  CHECK(polygons[0].id == 0);
  CHECK(polygons[1].id == 42);
}

TEST_CASE("geojson round trip") {
  Rng rng(0xc110001);
  std::vector<Polygon> polygons;
  for (uint32_t i = 0; i < 5; ++i) {
    polygons.push_back(testing::random_star_polygon(
        rng, i * 7 + 1, {rng.uniform(-50, 50), rng.uniform(-100, 100)},
        rng.uniform(0.1, 2.0), rng.uniform_int(3, 20)));
  }
  std::ostringstream os;
  write_geojson(polygons, os);
  const std::vector<Polygon> reloaded = parse_geojson(os.str());
  REQUIRE(reloaded.size() == polygons.size());
  for (size_t i = 0; i < polygons.size(); ++i) {
    CHECK(reloaded[i].id == polygons[i].id);
    REQUIRE(reloaded[i].vertices.size() == polygons[i].vertices.size());
    for (size_t v = 0; v < polygons[i].vertices.size(); ++v) {
      CHECK(reloaded[i].vertices[v].lat == polygons[i].vertices[v].lat);
      CHECK(reloaded[i].vertices[v].lng == polygons[i].vertices[v].lng);
    }
  }
}

TEST_CASE("csv reader") {
  // Header only.
  {
    std::istringstream in("lat,lng\n");
    CsvPointReader reader(in);
    LatLng p;
    CHECK_FALSE(reader.next(p));
    CHECK(reader.skipped_rows() == 0);
  }
  // One point.
  {
    std::istringstream in("lat,lng\n40.7,-74.0\n");
    CsvPointReader reader(in);
    LatLng p;
    REQUIRE(reader.next(p));
    CHECK(p.lat == 40.7);
    CHECK(p.lng == -74.0);
    CHECK_FALSE(reader.next(p));
  }
  // Extra columns, custom names, \r\n endings.
  {
    std::istringstream in(
        "id,latitude,longitude,fare\r\n1,40.7,-74.0,12.5\r\n2,41.0,-73.5,3\r\n");
    CsvPointReader reader(in, {"latitude", "longitude", false});
    LatLng p;
    REQUIRE(reader.next(p));
    CHECK(p.lat == 40.7);
    REQUIRE(reader.next(p));
    CHECK(p.lng == -73.5);
    CHECK_FALSE(reader.next(p));
  }
  // Bad rows are counted and skipped.
  {
    std::istringstream in("lat,lng\nx,y\n91.0,0.0\n40.0,-74.0\n1.0\n");
    CsvPointReader reader(in);
    LatLng p;
    REQUIRE(reader.next(p));
    CHECK(p.lat == 40.0);
    CHECK_FALSE(reader.next(p));
    CHECK(reader.skipped_rows() == 3);
  }
  // Strict mode aborts with the line number.
  {
    std::istringstream in("lat,lng\nx,y\n");
    CsvPointReader reader(in, {"lat", "lng", true});
    LatLng p;
    CHECK_THROWS_WITH_AS(reader.next(p), doctest::Contains("line 2"),
                         DataError);
  }
  // Missing columns.
  {
    std::istringstream in("a,b\n1,2\n");
    CHECK_THROWS_AS(CsvPointReader{in}, DataError);
  }
}

TEST_CASE("csv reader streams a million rows in constant memory") {
  const std::string path = temp_dir() + "/million.csv";
  {
    std::ofstream out(path);
    out << "lat,lng\n";
    Rng rng(0xc11000f);
    out.precision(9);
    for (int i = 0; i < 1000000; ++i) {
      out << rng.uniform(-90, 90) << ',' << rng.uniform(-180, 180) << '\n';
    }
    REQUIRE(out.good());
  }
  const auto resident_kb = [] {
    std::ifstream status("/proc/self/status");
    std::string key;
    long kb = 0;
    while (status >> key) {
      if (key == "VmRSS:") {
        status >> kb;
        return kb;
      }
      status.ignore(256, '\n');
    }
    return kb;
  };

  std::ifstream in(path);
  CsvPointReader reader(in);
  const long before_kb = resident_kb();
  long peak_kb = before_kb;
  size_t rows = 0;
  LatLng p;
  while (reader.next(p)) {
    ++rows;
    if (rows % 100000 == 0) peak_kb = std::max(peak_kb, resident_kb());
  }
  CHECK(rows == 1000000);
  CHECK(reader.skipped_rows() == 0);
#if defined(__SANITIZE_ADDRESS__)
  (void)peak_kb;
  (void)before_kb;  // sanitizer redzones dominate RSS; size check is void
#else
  if (before_kb > 0) {
    // The reader keeps one line in memory; allow generous allocator noise.
    CHECK(peak_kb - before_kb < 16 * 1024);
  }
#endif
  std::remove(path.c_str());
}

TEST_CASE("cli: build, join, stats, bench end to end") {
  Rng rng(0xc110002);
  const std::string dir = temp_dir();

  // A three-polygon toy set around (20, 30).
  std::vector<Polygon> polygons;
  for (uint32_t i = 0; i < 3; ++i) {
    polygons.push_back(testing::random_star_polygon(
        rng, i, {20.0 + 0.8 * i, 30.0 + 0.5 * i}, 0.6, 12));
  }
  std::ostringstream geo;
  write_geojson(polygons, geo);
  spit(dir + "/polys.geojson", geo.str());

  const LatLngRect region{18.5, 23.0, 28.5, 32.5};
  std::ostringstream csv;
  csv.precision(17);
  csv << "lat,lng\n";
  for (int i = 0; i < 4000; ++i) {
    const LatLng p = testing::random_point_in(rng, region);
    csv << p.lat << ',' << p.lng << '\n';
  }
  spit(dir + "/points.csv", csv.str());
  // The parsed file is the canonical point set for every comparison.
  const std::vector<LatLng> points = load_points_csv(dir + "/points.csv");
  REQUIRE(points.size() == 4000);

  // build
  const CliResult build = run_cli("build --polygons " + dir +
                                  "/polys.geojson --mode exact --train " + dir +
                                  "/points.csv --out " + dir + "/toy.idx");
  CHECK(build.exit_code == 0);

  // join: counts equal the brute-force oracle.
  const CliResult join =
      run_cli("join --index " + dir + "/toy.idx --points " + dir +
              "/points.csv --pairs-out " + dir + "/pairs.csv");
  CHECK(join.exit_code == 0);
  std::map<uint32_t, uint64_t> expected;
  for (const JoinPair& pair : testing::brute_force_join(polygons, points)) {
    ++expected[pair.polygon_id];
  }
  std::ostringstream expected_csv;
  expected_csv << "polygon_id,count\n";
  for (const auto& [id, count] : expected) {
    expected_csv << id << ',' << count << '\n';
  }
  CHECK(join.out == expected_csv.str());

  // pairs file matches the library join exactly.
  {
    JoinConfig cfg;
    cfg.mode = JoinMode::kExact;
    const IndexBundle bundle = build_index(polygons, cfg, points);
    const std::vector<JoinPair> pairs = join_exact(bundle, points);
    std::ostringstream pairs_csv;
    pairs_csv << "point_index,polygon_id\n";
    for (const JoinPair& pair : pairs) {
      pairs_csv << pair.point_index << ',' << pair.polygon_id << '\n';
    }
    CHECK(slurp(dir + "/pairs.csv") == pairs_csv.str());

    // stats: the snapshot metrics equal the in-memory metrics.
    const CliResult stats = run_cli("stats --index " + dir +
                                    "/toy.idx --points " + dir + "/points.csv");
    CHECK(stats.exit_code == 0);
    const IndexMetrics metrics = collect_metrics(bundle, points);
    std::ostringstream tree_nodes;
    tree_nodes << "\"tree_nodes\": " << metrics.tree_nodes;
    CHECK(stats.out.find(tree_nodes.str()) != std::string::npos);
    std::ostringstream solely;
    solely << "\"solely_true_hits\": " << metrics.solely_true_hit_fraction;
    CHECK(stats.out.find(solely.str()) != std::string::npos);
  }

  // bench runs and reports a rate.
  const CliResult bench = run_cli("bench --index " + dir + "/toy.idx --points " +
                                  dir + "/points.csv --threads 2 --batch");
  CHECK(bench.exit_code == 0);
  CHECK(bench.out.find("points_per_s") != std::string::npos);
}

TEST_CASE("cli: stats reports 1.0 solely-true on an all-interior workload") {
  const std::string dir = temp_dir();
  const CellId cell = cell_from_point({20.0, 30.0}, 8);
  const LatLngRect box = cell_box(cell);
  const Polygon poly{1,
                     {{box.lat_lo, box.lng_lo},
                      {box.lat_lo, box.lng_hi},
                      {box.lat_hi, box.lng_hi},
                      {box.lat_hi, box.lng_lo}}};
  std::ostringstream geo;
  write_geojson({&poly, 1}, geo);
  spit(dir + "/box.geojson", geo.str());

  Rng rng(0xc110003);
  std::ostringstream csv;
  csv << "lat,lng\n";
  const LatLngRect inner{box.lat_lo + 1e-6, box.lat_hi - 1e-6,
                         box.lng_lo + 1e-6, box.lng_hi - 1e-6};
  for (int i = 0; i < 200; ++i) {
    const LatLng p = testing::random_point_in(rng, inner);
    csv << p.lat << ',' << p.lng << '\n';
  }
  spit(dir + "/inner.csv", csv.str());

  CHECK(run_cli("build --polygons " + dir + "/box.geojson --mode exact --out " +
                dir + "/box.idx")
            .exit_code == 0);
  const CliResult stats =
      run_cli("stats --index " + dir + "/box.idx --points " + dir + "/inner.csv");
  CHECK(stats.exit_code == 0);
  CHECK(stats.out.find("\"solely_true_hits\": 1.0") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
  const std::string dir = temp_dir();
  CHECK(run_cli("--definitely-not-a-flag").exit_code == 1);
  CHECK(run_cli("build").exit_code == 1);  // missing required options
  CHECK(run_cli("join --index /nonexistent.idx --points /nonexistent.csv")
            .exit_code == 2);
  spit(dir + "/garbage.geojson", "this is not json");
  CHECK(run_cli("build --polygons " + dir + "/garbage.geojson --out " + dir +
                "/x.idx")
            .exit_code == 2);
}
