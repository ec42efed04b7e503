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

#include <cstdint>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "geojoin/act.hpp"
#include "geojoin/geometry.hpp"
#include "geojoin/latlng.hpp"
#include "geojoin/super_covering.hpp"

namespace geojoin {

enum class JoinMode { kExact, kApprox };

struct JoinConfig {
  JoinMode mode = JoinMode::kApprox;
  double precision_m = 10.0;  // approximate mode only
  size_t memory_budget_bytes = size_t{1} << 30;
  CoveringConfig covering;
  size_t training_point_limit = 1'000'000;
  ActConfig act;
};

struct JoinPair {
  size_t point_index = 0;
  uint32_t polygon_id = 0;

  friend bool operator==(const JoinPair& a, const JoinPair& b) {
    return a.point_index == b.point_index && a.polygon_id == b.polygon_id;
  }
  friend bool operator<(const JoinPair& a, const JoinPair& b) {
    if (a.point_index != b.point_index) return a.point_index < b.point_index;
    return a.polygon_id < b.polygon_id;
  }
};

/// Index-quality metrics over a probed point set. solely_true_hit_fraction
/// is the share of all points that skipped the refinement phase (at least
/// one hit, none of them candidates); avg_candidates averages the candidate
/// references over the points that entered refinement.
struct IndexMetrics {
  size_t tree_nodes = 0;
  double false_hit_fraction = 0.0;
  double solely_true_hit_fraction = 0.0;
  double avg_candidates = 0.0;
};

struct BuildReport {
  JoinMode mode = JoinMode::kExact;
  bool precision_achieved = false;
  /// Largest candidate-cell diagonal after refinement: the hard bound on
  /// the distance of an approximate false positive to its polygon.
  double achieved_precision_m = 0.0;
  size_t memory_bytes = 0;
  int covering_shrink_steps = 0;
  TrainingStats training;
};

/// Probe-phase instrumentation for one join run.
struct JoinStats {
  size_t probes = 0;
  size_t pip_tests = 0;
  size_t false_hits = 0;
  size_t solely_true_hits = 0;
  size_t refinement_entered = 0;
  size_t candidate_refs = 0;
};

/// The built index plus everything the probe and refinement phases need:
/// the polygon set and the negotiated mode. Immutable after build; safe for
/// any number of concurrent join workers.
class IndexBundle {
 public:
  const std::vector<Polygon>& polygons() const { return polygons_; }
  const Polygon* polygon_by_id(uint32_t id) const {
    auto it = polygon_index_.find(id);
    return it == polygon_index_.end() ? nullptr : &polygons_[it->second];
  }
  const Act& act() const { return act_; }
  const JoinConfig& config() const { return cfg_; }
  const BuildReport& report() const { return report_; }

  void save(std::ostream& os) const;
  static IndexBundle load(std::istream& is);

 private:
  friend IndexBundle build_index(std::vector<Polygon> polygons,
                                 const JoinConfig& cfg,
                                 std::span<const LatLng> training_points);

  void rebuild_polygon_index();

  std::vector<Polygon> polygons_;
  std::unordered_map<uint32_t, size_t> polygon_index_;
  Act act_;
  JoinConfig cfg_;
  BuildReport report_;
};

/// Five-phase build with parameter negotiation: coverings and interior
/// coverings (shrunk stepwise if the base index would blow the budget), the
/// super covering, then either refinement to the precision bound (approx
/// mode) or, when the budget does not allow it, the exact mode with index
/// training on the supplied historical points.
IndexBundle build_index(std::vector<Polygon> polygons, const JoinConfig& cfg,
                        std::span<const LatLng> training_points);

/// Probe + refine: true hits join directly, candidate hits pass an exact
/// PIP test. Output order: ascending point index, references in index
/// order.
std::vector<JoinPair> join_exact(const IndexBundle& bundle,
                                 std::span<const LatLng> points,
                                 JoinStats* stats = nullptr);

/// Probe only: candidate hits are treated as true hits. A superset of the
/// exact join; every extra pair lies within the achieved precision bound of
/// its polygon.
std::vector<JoinPair> join_approx(const IndexBundle& bundle,
                                  std::span<const LatLng> points,
                                  JoinStats* stats = nullptr);

std::map<uint32_t, uint64_t> count_per_polygon(std::span<const JoinPair> pairs);

/// Streaming group-by count in the bundle's mode, without materializing
/// pairs. Points may be fanned out over `threads` workers; the merged
/// counts are independent of the partitioning.
std::map<uint32_t, uint64_t> join_count_per_polygon(
    const IndexBundle& bundle, std::span<const LatLng> points,
    int threads = 1);

IndexMetrics collect_metrics(const IndexBundle& bundle,
                             std::span<const LatLng> points);

/// Probe-only pass adding into `stats`; lets callers stream points in
/// chunks and derive metrics at the end.
void accumulate_probe_stats(const IndexBundle& bundle,
                            std::span<const LatLng> points, JoinStats& stats);

IndexMetrics metrics_from_stats(const JoinStats& stats, size_t tree_nodes);

}  // namespace geojoin
