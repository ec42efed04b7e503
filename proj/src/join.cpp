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

#include "geojoin/join.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

namespace geojoin {

namespace {

constexpr char kBundleMagic[4] = {'G', 'J', 'X', '1'};

void put_u32(std::ostream& os, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, uint64_t v) {
  put_u32(os, static_cast<uint32_t>(v));
  put_u32(os, static_cast<uint32_t>(v >> 32));
}

void put_f64(std::ostream& os, double v) {
  put_u64(os, std::bit_cast<uint64_t>(v));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw CorruptionError("truncated index file");
  return uint32_t{b[0]} | uint32_t{b[1]} << 8 | uint32_t{b[2]} << 16 |
         uint32_t{b[3]} << 24;
}

uint64_t get_u64(std::istream& is) {
  const uint64_t lo = get_u32(is);
  const uint64_t hi = get_u32(is);
  return lo | hi << 32;
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

// Probes `points` in batches and hands each (point index, tagged entry)
// pair to `process`; point indices are offset by `base_index` so workers
// can share one index space.
template <typename Process>
void probe_points(const Act& act, std::span<const LatLng> points,
                  size_t base_index, Process&& process) {
  constexpr int kW = ActConfig::kBatchWidth;
  const int level = act.max_indexed_level();
  CellId cells[kW];
  uint64_t entries[kW];
  size_t i = 0;
  for (; i + kW <= points.size(); i += kW) {
    for (int k = 0; k < kW; ++k) {
      cells[k] = cell_from_point(points[i + k], level);
    }
    act.probe_batch(cells, entries);
    for (int k = 0; k < kW; ++k) process(base_index + i + k, entries[k]);
  }
  for (; i < points.size(); ++i) {  // scalar tail
    process(base_index + i, act.probe(cell_from_point(points[i], level)));
  }
}

template <typename Emit>
void run_join(const IndexBundle& bundle, std::span<const LatLng> points,
              size_t base_index, bool approx, JoinStats* stats, Emit&& emit) {
  const Act& act = bundle.act();
  probe_points(
      act, points, base_index, [&](size_t point_index, uint64_t entry) {
        if (stats) ++stats->probes;
        if (entry == tagged::kSentinel) {
          if (stats) ++stats->false_hits;
          return;
        }
        size_t candidates = 0;
        act.for_each_reference(entry, [&](uint32_t polygon_id, bool interior) {
          if (interior) {
            emit(point_index, polygon_id);  // true hit, no refinement
            return;
          }
          ++candidates;
          if (approx) {
            emit(point_index, polygon_id);
            return;
          }
          const Polygon* poly = bundle.polygon_by_id(polygon_id);
          if (poly == nullptr) {
            throw CorruptionError("index references unknown polygon " +
                                  std::to_string(polygon_id));
          }
          if (stats) ++stats->pip_tests;
          if (pip_test(*poly, points[point_index - base_index])) {
            emit(point_index, polygon_id);
          }
        });
        if (stats) {
          if (candidates == 0) {
            ++stats->solely_true_hits;
          } else {
            ++stats->refinement_entered;
            stats->candidate_refs += candidates;
          }
        }
      });
}

std::vector<JoinPair> run_join_pairs(const IndexBundle& bundle,
                                     std::span<const LatLng> points,
                                     bool approx, JoinStats* stats) {
  std::vector<JoinPair> pairs;
  run_join(bundle, points, 0, approx, stats,
           [&](size_t point_index, uint32_t polygon_id) {
             pairs.push_back({point_index, polygon_id});
           });
  return pairs;
}

}  // namespace

void IndexBundle::rebuild_polygon_index() {
  polygon_index_.clear();
  polygon_index_.reserve(polygons_.size());
  for (size_t i = 0; i < polygons_.size(); ++i) {
    polygon_index_.emplace(polygons_[i].id, i);
  }
}

IndexBundle build_index(std::vector<Polygon> polygons, const JoinConfig& cfg,
                        std::span<const LatLng> training_points) {
  if (cfg.memory_budget_bytes == 0) {
    throw std::invalid_argument("build_index: memory budget must be > 0");
  }
  if (cfg.mode == JoinMode::kApprox && cfg.precision_m <= 0.0) {
    throw std::invalid_argument(
        "build_index: approximate mode needs a positive precision");
  }
  if (polygons.size() > size_t{1} << 30) {
    throw std::invalid_argument("build_index: more than 2^30 polygons");
  }
  std::set<uint32_t> ids;
  for (const Polygon& poly : polygons) {
    validate_polygon(poly);
    if (!ids.insert(poly.id).second) {
      throw std::invalid_argument("build_index: duplicate polygon id " +
                                  std::to_string(poly.id));
    }
  }

  const int max_level = cfg.act.k_max / 2;
  CoveringConfig base = cfg.covering;
  base.max_covering_level = std::min(base.max_covering_level, max_level);
  base.max_interior_level = std::min(base.max_interior_level, max_level);

  // Shrink the per-polygon cell budgets until the base index fits the
  // memory budget.
  SuperCovering sc;
  int shrink = 0;
  for (;; ++shrink) {
    CoveringConfig cur = base;
    cur.max_covering_cells = std::max(1, base.max_covering_cells >> shrink);
    cur.max_interior_cells = base.max_interior_cells >> shrink;
    std::vector<Covering> coverings;
    std::vector<Covering> interiors;
    coverings.reserve(polygons.size());
    for (const Polygon& poly : polygons) {
      coverings.push_back(compute_covering(poly, cur, false));
      if (cur.max_interior_cells > 0) {
        interiors.push_back(compute_covering(poly, cur, true));
      }
    }
    sc = build_super_covering(coverings, interiors);
    if (estimate_act_bytes(sc, cfg.act) <= cfg.memory_budget_bytes) break;
    if (cur.max_covering_cells == 1 && cur.max_interior_cells == 0) {
      throw BuildError(
          "memory budget cannot fit a one-cell-per-polygon index");
    }
  }

  BuildReport report;
  report.covering_shrink_steps = shrink;
  const auto estimator = [&cfg](const SuperCovering& s) {
    return estimate_act_bytes(s, cfg.act);
  };

  JoinMode mode = JoinMode::kExact;
  if (cfg.mode == JoinMode::kApprox) {
    const PrecisionReport prec =
        refine_to_precision(sc, polygons, cfg.precision_m, estimator,
                            cfg.memory_budget_bytes, max_level);
    report.precision_achieved = prec.achieved;
    report.achieved_precision_m = prec.max_candidate_cell_diagonal;
    if (prec.achieved) mode = JoinMode::kApprox;
  }

  IndexBundle bundle;
  bundle.act_ = Act::build(sc, cfg.act);
  if (mode == JoinMode::kExact) {
    const size_t limit =
        std::min(training_points.size(), cfg.training_point_limit);
    report.training = bundle.act_.train(polygons, training_points.first(limit),
                                        cfg.memory_budget_bytes);
  }
  report.mode = mode;
  report.memory_bytes = bundle.act_.memory_usage();

  bundle.polygons_ = std::move(polygons);
  bundle.cfg_ = cfg;
  bundle.report_ = report;
  bundle.rebuild_polygon_index();
  return bundle;
}

std::vector<JoinPair> join_exact(const IndexBundle& bundle,
                                 std::span<const LatLng> points,
                                 JoinStats* stats) {
  return run_join_pairs(bundle, points, /*approx=*/false, stats);
}

std::vector<JoinPair> join_approx(const IndexBundle& bundle,
                                  std::span<const LatLng> points,
                                  JoinStats* stats) {
  return run_join_pairs(bundle, points, /*approx=*/true, stats);
}

std::map<uint32_t, uint64_t> count_per_polygon(std::span<const JoinPair> pairs) {
  std::map<uint32_t, uint64_t> counts;
  for (const JoinPair& pair : pairs) ++counts[pair.polygon_id];
  return counts;
}

std::map<uint32_t, uint64_t> join_count_per_polygon(
    const IndexBundle& bundle, std::span<const LatLng> points, int threads) {
  const bool approx = bundle.report().mode == JoinMode::kApprox;
  if (threads < 1) threads = 1;
  const size_t n = points.size();
  const size_t workers = std::min<size_t>(threads, std::max<size_t>(n, 1));

  std::vector<std::map<uint32_t, uint64_t>> partial(workers);
  const auto worker = [&](size_t w) {
    const size_t begin = n * w / workers;
    const size_t end = n * (w + 1) / workers;
    auto& counts = partial[w];
    run_join(bundle, points.subspan(begin, end - begin), begin, approx,
             nullptr,
             [&](size_t, uint32_t polygon_id) { ++counts[polygon_id]; });
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    for (std::thread& t : pool) t.join();
  }

  std::map<uint32_t, uint64_t> merged;
  for (const auto& counts : partial) {
    for (const auto& [id, count] : counts) merged[id] += count;
  }
  return merged;
}

void accumulate_probe_stats(const IndexBundle& bundle,
                            std::span<const LatLng> points, JoinStats& stats) {
  run_join(bundle, points, 0, /*approx=*/true, &stats, [](size_t, uint32_t) {});
}

IndexMetrics metrics_from_stats(const JoinStats& stats, size_t tree_nodes) {
  IndexMetrics metrics;
  metrics.tree_nodes = tree_nodes;
  if (stats.probes > 0) {
    metrics.false_hit_fraction =
        static_cast<double>(stats.false_hits) / static_cast<double>(stats.probes);
    metrics.solely_true_hit_fraction =
        static_cast<double>(stats.solely_true_hits) /
        static_cast<double>(stats.probes);
  }
  if (stats.refinement_entered > 0) {
    metrics.avg_candidates = static_cast<double>(stats.candidate_refs) /
                             static_cast<double>(stats.refinement_entered);
  }
  return metrics;
}

IndexMetrics collect_metrics(const IndexBundle& bundle,
                             std::span<const LatLng> points) {
  JoinStats stats;
  accumulate_probe_stats(bundle, points, stats);
  return metrics_from_stats(stats, bundle.act().node_count());
}

void IndexBundle::save(std::ostream& os) const {
  os.write(kBundleMagic, 4);
  put_u32(os, 1);  // version
  put_u32(os, report_.mode == JoinMode::kApprox ? 1 : 0);
  put_u32(os, report_.precision_achieved ? 1 : 0);
  put_f64(os, cfg_.precision_m);
  put_f64(os, report_.achieved_precision_m);
  put_u64(os, cfg_.memory_budget_bytes);
  put_u32(os, static_cast<uint32_t>(cfg_.covering.max_covering_cells));
  put_u32(os, static_cast<uint32_t>(cfg_.covering.max_covering_level));
  put_u32(os, static_cast<uint32_t>(cfg_.covering.max_interior_cells));
  put_u32(os, static_cast<uint32_t>(cfg_.covering.max_interior_level));
  act_.save(os);
  put_u64(os, polygons_.size());
  for (const Polygon& poly : polygons_) {
    put_u32(os, poly.id);
    put_u64(os, poly.vertices.size());
    for (const LatLng& v : poly.vertices) {
      put_f64(os, v.lat);
      put_f64(os, v.lng);
    }
  }
  if (!os) throw std::runtime_error("failed to write index file");
}

IndexBundle IndexBundle::load(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kBundleMagic, 4) != 0) {
    throw CorruptionError("not a geojoin index file");
  }
  if (get_u32(is) != 1) throw CorruptionError("unsupported index version");
  IndexBundle bundle;
  bundle.report_.mode = get_u32(is) != 0 ? JoinMode::kApprox : JoinMode::kExact;
  bundle.report_.precision_achieved = get_u32(is) != 0;
  bundle.cfg_.mode = bundle.report_.mode;
  bundle.cfg_.precision_m = get_f64(is);
  bundle.report_.achieved_precision_m = get_f64(is);
  bundle.cfg_.memory_budget_bytes = get_u64(is);
  bundle.cfg_.covering.max_covering_cells = static_cast<int>(get_u32(is));
  bundle.cfg_.covering.max_covering_level = static_cast<int>(get_u32(is));
  bundle.cfg_.covering.max_interior_cells = static_cast<int>(get_u32(is));
  bundle.cfg_.covering.max_interior_level = static_cast<int>(get_u32(is));
  bundle.act_ = Act::load(is);
  bundle.cfg_.act.k_max = bundle.act_.config().k_max;
  const uint64_t polygon_count = get_u64(is);
  if (polygon_count > uint64_t{1} << 30) {
    throw CorruptionError("index polygon count out of range");
  }
  bundle.polygons_.resize(polygon_count);
  for (Polygon& poly : bundle.polygons_) {
    poly.id = get_u32(is);
    const uint64_t n = get_u64(is);
    if (n > uint64_t{1} << 24) {
      throw CorruptionError("polygon vertex count out of range");
    }
    poly.vertices.resize(n);
    for (LatLng& v : poly.vertices) {
      v.lat = get_f64(is);
      v.lng = get_f64(is);
    }
  }
  bundle.report_.memory_bytes = bundle.act_.memory_usage();
  bundle.rebuild_polygon_index();
  return bundle;
}

}  // namespace geojoin
