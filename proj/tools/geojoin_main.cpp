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

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "geojoin/act.hpp"
#include "geojoin/io.hpp"
#include "geojoin/join.hpp"
#include "json.hpp"

namespace {

using namespace geojoin;

constexpr size_t kStreamChunk = 8192;

struct PointOptions {
  std::string path;
  std::string lat_column = "lat";
  std::string lng_column = "lng";
  bool strict = false;
};

void add_point_options(CLI::App* cmd, PointOptions& opts) {
  cmd->add_option("--points", opts.path, "CSV point file")->required();
  cmd->add_option("--lat-col", opts.lat_column, "latitude column name");
  cmd->add_option("--lng-col", opts.lng_column, "longitude column name");
  cmd->add_flag("--strict", opts.strict, "abort on the first invalid row");
}

CsvPointReader::Options reader_options(const PointOptions& opts) {
  return {opts.lat_column, opts.lng_column, opts.strict};
}

IndexBundle load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index file: " + path);
  return IndexBundle::load(in);
}

// Streams the point file through the join in fixed-size chunks: counts are
// aggregated without materializing pairs, pair output is written as it is
// produced.
int run_join_cmd(const std::string& index_path, const PointOptions& points,
                 const std::string& counts_path, const std::string& pairs_path) {
  const IndexBundle bundle = load_bundle(index_path);
  const bool approx = bundle.report().mode == JoinMode::kApprox;

  std::ofstream pairs_file;
  if (!pairs_path.empty()) {
    pairs_file.open(pairs_path);
    if (!pairs_file) throw DataError("cannot write pairs file: " + pairs_path);
    pairs_file << "point_index,polygon_id\n";
  }

  std::ifstream in(points.path);
  if (!in) throw DataError("cannot open point file: " + points.path);
  CsvPointReader reader(in, reader_options(points));

  std::map<uint32_t, uint64_t> counts;
  std::vector<LatLng> chunk;
  chunk.reserve(kStreamChunk);
  size_t base_index = 0;
  LatLng p;
  bool more = true;
  while (more) {
    chunk.clear();
    while (chunk.size() < kStreamChunk && (more = reader.next(p))) {
      chunk.push_back(p);
    }
    if (chunk.empty()) break;
    const std::vector<JoinPair> pairs =
        approx ? join_approx(bundle, chunk) : join_exact(bundle, chunk);
    for (const JoinPair& pair : pairs) {
      ++counts[pair.polygon_id];
      if (pairs_file.is_open()) {
        pairs_file << base_index + pair.point_index << ',' << pair.polygon_id
                   << '\n';
      }
    }
    base_index += chunk.size();
  }
  if (reader.skipped_rows() > 0) {
    std::cerr << "warning: skipped " << reader.skipped_rows()
              << " invalid point rows\n";
  }

  std::ofstream counts_file;
  std::ostream* out = &std::cout;
  if (!counts_path.empty()) {
    counts_file.open(counts_path);
    if (!counts_file) throw DataError("cannot write counts file: " + counts_path);
    out = &counts_file;
  }
  *out << "polygon_id,count\n";
  for (const auto& [id, count] : counts) *out << id << ',' << count << '\n';
  return 0;
}

int run_build_cmd(const std::string& polygons_path, const std::string& mode,
                  double precision, size_t memory_budget,
                  const std::string& train_path, size_t train_limit,
                  const PointOptions& train_cols, int k_max,
                  const CoveringConfig& covering, const std::string& out_path) {
  JoinConfig cfg;
  cfg.mode = mode == "exact" ? JoinMode::kExact : JoinMode::kApprox;
  cfg.precision_m = precision;
  cfg.memory_budget_bytes = memory_budget;
  cfg.covering = covering;
  cfg.training_point_limit = train_limit;
  cfg.act.k_max = k_max;

  std::vector<Polygon> polygons = load_geojson(polygons_path);
  std::vector<LatLng> training;
  if (!train_path.empty()) {
    PointOptions opts = train_cols;
    opts.path = train_path;
    training = load_points_csv(train_path, reader_options(opts));
    if (training.size() > train_limit) training.resize(train_limit);
  }

  const IndexBundle bundle = build_index(std::move(polygons), cfg, training);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw DataError("cannot write index file: " + out_path);
  bundle.save(out);

  const BuildReport& report = bundle.report();
  std::cerr << "mode: "
            << (report.mode == JoinMode::kApprox ? "approx" : "exact")
            << "\nprecision bound: " << report.achieved_precision_m
            << " m\nmemory: " << report.memory_bytes << " bytes\ntree nodes: "
            << bundle.act().node_count() << "\n";
  if (report.mode == JoinMode::kExact && report.training.points_consumed > 0) {
    std::cerr << "training: " << report.training.cells_split << " splits from "
              << report.training.points_consumed << " points\n";
  }
  return 0;
}

int run_stats_cmd(const std::string& index_path, const PointOptions& points) {
  const IndexBundle bundle = load_bundle(index_path);
  std::ifstream in(points.path);
  if (!in) throw DataError("cannot open point file: " + points.path);
  CsvPointReader reader(in, reader_options(points));

  JoinStats stats;
  std::vector<LatLng> chunk;
  chunk.reserve(kStreamChunk);
  LatLng p;
  bool more = true;
  while (more) {
    chunk.clear();
    while (chunk.size() < kStreamChunk && (more = reader.next(p))) {
      chunk.push_back(p);
    }
    if (chunk.empty()) break;
    accumulate_probe_stats(bundle, chunk, stats);
  }

  const IndexMetrics metrics =
      metrics_from_stats(stats, bundle.act().node_count());
  nlohmann::json report = {
      {"tree_nodes", metrics.tree_nodes},
      {"false_hits", metrics.false_hit_fraction},
      {"solely_true_hits", metrics.solely_true_hit_fraction},
      {"avg_candidates", metrics.avg_candidates},
  };
  std::cout << report.dump(2) << '\n';
  return 0;
}

int run_bench_cmd(const std::string& index_path, const PointOptions& points,
                  int threads, bool batch, int repeat) {
  const IndexBundle bundle = load_bundle(index_path);
  const std::vector<LatLng> pts = load_points_csv(points.path, reader_options(points));
  if (pts.empty()) throw DataError("no points to benchmark");

  uint64_t pair_count = 0;
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r) {
    if (batch) {
      const auto counts = join_count_per_polygon(bundle, pts, threads);
      for (const auto& [id, count] : counts) pair_count += count;
    } else {
      // Scalar probe path, for comparison with the batched kernel.
      const Act& act = bundle.act();
      const int level = act.max_indexed_level();
      const bool approx = bundle.report().mode == JoinMode::kApprox;
      for (const LatLng& pt : pts) {
        const uint64_t e = act.probe(cell_from_point(pt, level));
        act.for_each_reference(e, [&](uint32_t polygon_id, bool interior) {
          if (interior || approx) {
            ++pair_count;
          } else if (pip_test(*bundle.polygon_by_id(polygon_id), pt)) {
            ++pair_count;
          }
        });
      }
    }
  }
  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  const double rate = static_cast<double>(pts.size()) * repeat / elapsed;
  std::cout << "points: " << pts.size() << "\nrepeat: " << repeat
            << "\nthreads: " << threads << "\nkernel: "
            << (batch ? "batched" : "scalar") << "\npairs: " << pair_count
            << "\nelapsed_s: " << elapsed << "\npoints_per_s: " << rate << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geojoin: adaptive in-memory point-polygon join"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "build an index from polygons");
  std::string polygons_path, mode = "approx", train_path, out_path;
  double precision = 10.0;
  size_t memory_budget = size_t{1} << 30;
  size_t train_limit = 1'000'000;
  int k_max = 48;
  CoveringConfig covering;
  PointOptions train_cols;
  build->add_option("--polygons", polygons_path, "GeoJSON polygon file")
      ->required();
  build->add_option("--mode", mode, "join mode")
      ->check(CLI::IsMember({"exact", "approx"}));
  build->add_option("--precision", precision, "precision bound in meters");
  build->add_option("--memory-budget", memory_budget, "budget in bytes");
  build->add_option("--train", train_path, "CSV of historical points");
  build->add_option("--train-limit", train_limit, "max training points");
  build->add_option("--lat-col", train_cols.lat_column, "latitude column");
  build->add_option("--lng-col", train_cols.lng_column, "longitude column");
  build->add_option("--k-max", k_max, "maximum key length in bits");
  build->add_option("--max-covering-cells", covering.max_covering_cells);
  build->add_option("--max-covering-level", covering.max_covering_level);
  build->add_option("--max-interior-cells", covering.max_interior_cells);
  build->add_option("--max-interior-level", covering.max_interior_level);
  build->add_option("--out", out_path, "index output file")->required();

  // join
  auto* join = app.add_subcommand("join", "join points against an index");
  std::string join_index, counts_out, pairs_out;
  PointOptions join_points;
  join->add_option("--index", join_index, "index file")->required();
  add_point_options(join, join_points);
  join->add_option("--counts-out", counts_out, "per-polygon counts CSV");
  join->add_option("--pairs-out", pairs_out, "join pairs CSV");

  // stats
  auto* stats = app.add_subcommand("stats", "index metrics over a point set");
  std::string stats_index;
  PointOptions stats_points;
  stats->add_option("--index", stats_index, "index file")->required();
  add_point_options(stats, stats_points);

  // bench
  auto* bench = app.add_subcommand("bench", "probe throughput");
  std::string bench_index;
  PointOptions bench_points;
  int threads = 1, repeat = 1;
  bool batch = false;
  bench->add_option("--index", bench_index, "index file")->required();
  add_point_options(bench, bench_points);
  bench->add_option("--threads", threads, "worker threads");
  bench->add_flag("--batch", batch, "use the batched probe kernel");
  bench->add_option("--repeat", repeat, "passes over the points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors exit 1
  }

  try {
    if (build->parsed()) {
      return run_build_cmd(polygons_path, mode, precision, memory_budget,
                           train_path, train_limit, train_cols, k_max,
                           covering, out_path);
    }
    if (join->parsed()) {
      return run_join_cmd(join_index, join_points, counts_out, pairs_out);
    }
    if (stats->parsed()) {
      return run_stats_cmd(stats_index, stats_points);
    }
    if (bench->parsed()) {
      return run_bench_cmd(bench_index, bench_points, threads, batch, repeat);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
