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

#include <cassert>
#include <cstdint>

#include "geojoin/act.hpp"

namespace geojoin::detail {

// Portable lockstep traversal over eight lanes. The three stages mirror the
// vectorized kernels exactly: (1) tree-root determination and common-prefix
// check producing the active mask, (2) masked gather loop over tree levels
// with traverse/output/done bookkeeping, (3) per-lane output. Lane i of the
// result is bitwise identical to a scalar probe of raw_ids[i].
void probe_batch_scalar(const ActProbeView& v, const uint64_t* raw_ids,
                        uint64_t* out) {
  constexpr int kW = ActConfig::kBatchWidth;
  uint64_t keys[kW];
  uint64_t nodes[kW];
  uint64_t values[kW];
  int shifts[kW];

  // Stage 1: determine tree roots.
  unsigned m = 0;
  for (int i = 0; i < kW; ++i) {
    const unsigned face = static_cast<unsigned>(raw_ids[i] >> 61);
    keys[i] = Act::key_of(raw_ids[i]);
    nodes[i] = v.roots[face];
    const uint64_t plen = v.prefix_bits[face];
    shifts[i] = 56 - static_cast<int>(plen);
    const uint64_t actual = plen ? keys[i] >> (64 - plen) : 0;
    if (nodes[i] != 0 && actual == v.prefixes[face]) m |= 1u << i;
    values[i] = tagged::kSentinel;
  }

  // Stage 2: tree traversal.
  unsigned m_traverse = m;
  unsigned m_output = 0;
  unsigned m_done = ~m & 0xffu;
  while (m_traverse != 0) {
    for (int i = 0; i < kW; ++i) {  // masked gather
      if (!(m_traverse >> i & 1)) continue;
      assert(shifts[i] >= 0);
      const uint64_t slot = (keys[i] >> shifts[i]) & 0xff;
      values[i] = v.arena[(nodes[i] - 1) * ActConfig::kFanout + slot];
    }
    unsigned m_ptr = 0;
    unsigned m_sentinel = 0;
    for (int i = 0; i < kW; ++i) {
      if ((m_traverse >> i & 1) && (values[i] & 3) == 0) m_ptr |= 1u << i;
    }
    for (int i = 0; i < kW; ++i) {
      if ((m_ptr >> i & 1) && values[i] == tagged::kSentinel) {
        m_sentinel |= 1u << i;
      }
    }
    for (int i = 0; i < kW; ++i) {
      if (m_ptr >> i & 1) nodes[i] = tagged::link_target(values[i]);
    }
    m_output |= m_traverse & ~m_ptr;
    m_done |= m_output | m_sentinel;
    m_traverse &= ~m_done;
    for (int i = 0; i < kW; ++i) shifts[i] -= 8;
  }

  // Stage 3: produce output.
  for (int i = 0; i < kW; ++i) {
    out[i] = (m_output >> i & 1) ? values[i] : tagged::kSentinel;
  }
}

ProbeBatchFn select_probe_batch_kernel() {
  if (probe_batch_avx2_available()) return &probe_batch_avx2;
  return &probe_batch_scalar;
}

}  // namespace geojoin::detail
