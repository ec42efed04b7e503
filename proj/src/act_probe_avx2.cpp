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

#include "geojoin/act.hpp"

#if (defined(__x86_64__) || defined(_M_X64)) && defined(__AVX2__)
#define GEOJOIN_HAVE_AVX2_KERNEL 1
#include <immintrin.h>
#else
#define GEOJOIN_HAVE_AVX2_KERNEL 0
#endif

namespace geojoin::detail {

#if GEOJOIN_HAVE_AVX2_KERNEL

bool probe_batch_avx2_available() {
  return __builtin_cpu_supports("avx2") != 0;
}

namespace {

inline __m256i gather_u64(const uint64_t* table, __m256i idx) {
  return _mm256_i64gather_epi64(reinterpret_cast<const long long*>(table), idx,
                                8);
}

// Four lanes of the eight-wide batch; two invocations cover a batch.
inline void probe4(const ActProbeView& v, const uint64_t* raw_ids,
                   uint64_t* out) {
  const __m256i zero = _mm256_setzero_si256();
  const __m256i ids =
      _mm256_loadu_si256(reinterpret_cast<const __m256i*>(raw_ids));

  // Stage 1: root, prefix and prefix length per lane via the face bits.
  const __m256i faces = _mm256_srli_epi64(ids, 61);
  const __m256i lsb = _mm256_and_si256(ids, _mm256_sub_epi64(zero, ids));
  const __m256i keys = _mm256_slli_epi64(_mm256_xor_si256(ids, lsb), 3);
  __m256i nodes = gather_u64(v.roots.data(), faces);
  const __m256i prefixes = gather_u64(v.prefixes.data(), faces);
  const __m256i plens = gather_u64(v.prefix_bits.data(), faces);
  // keys >> (64 - plen); a shift count of 64 (plen = 0) yields 0.
  const __m256i actual =
      _mm256_srlv_epi64(keys, _mm256_sub_epi64(_mm256_set1_epi64x(64), plens));
  const __m256i m = _mm256_andnot_si256(
      _mm256_cmpeq_epi64(nodes, zero), _mm256_cmpeq_epi64(actual, prefixes));

  // Stage 2: lockstep traversal.
  __m256i values = zero;
  __m256i m_traverse = m;
  __m256i m_output = zero;
  __m256i shift = _mm256_sub_epi64(_mm256_set1_epi64x(56), plens);
  while (!_mm256_testz_si256(m_traverse, m_traverse)) {
    const __m256i slots = _mm256_and_si256(_mm256_srlv_epi64(keys, shift),
                                           _mm256_set1_epi64x(0xff));
    const __m256i idx = _mm256_add_epi64(
        _mm256_slli_epi64(_mm256_sub_epi64(nodes, _mm256_set1_epi64x(1)), 8),
        slots);
    values = _mm256_mask_i64gather_epi64(
        values, reinterpret_cast<const long long*>(v.arena), idx, m_traverse,
        8);
    // Pointers carry zero in the two LSBs; the sentinel is the zero pointer.
    const __m256i m_ptr = _mm256_and_si256(
        _mm256_cmpeq_epi64(_mm256_and_si256(values, _mm256_set1_epi64x(3)),
                           zero),
        m_traverse);
    const __m256i m_sentinel =
        _mm256_and_si256(_mm256_cmpeq_epi64(values, zero), m_ptr);
    nodes = _mm256_blendv_epi8(nodes, _mm256_srli_epi64(values, 2), m_ptr);
    m_output = _mm256_or_si256(m_output, _mm256_andnot_si256(m_ptr, m_traverse));
    const __m256i m_done = _mm256_or_si256(m_output, m_sentinel);
    m_traverse = _mm256_andnot_si256(m_done, m_traverse);
    shift = _mm256_sub_epi64(shift, _mm256_set1_epi64x(8));
  }

  // Stage 3: lanes that never produced an output stay at the sentinel.
  _mm256_storeu_si256(reinterpret_cast<__m256i*>(out),
                      _mm256_and_si256(values, m_output));
}

}  // namespace

void probe_batch_avx2(const ActProbeView& v, const uint64_t* raw_ids,
                      uint64_t* out) {
  probe4(v, raw_ids, out);
  probe4(v, raw_ids + 4, out + 4);
}

#else  // !GEOJOIN_HAVE_AVX2_KERNEL

bool probe_batch_avx2_available() { return false; }

void probe_batch_avx2(const ActProbeView& v, const uint64_t* raw_ids,
                      uint64_t* out) {
  probe_batch_scalar(v, raw_ids, out);
}

#endif

}  // namespace geojoin::detail
