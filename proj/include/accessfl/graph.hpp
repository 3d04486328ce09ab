/*
 * Copyright 2026 The accessfl-lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef ACCESSFL_GRAPH_HPP_
#define ACCESSFL_GRAPH_HPP_

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"

namespace accessfl {
namespace graph {

// Random k-regular graph on `count` vertices: a seeded permutation of a
// circulant graph (chords at offsets 1..k/2, plus the diameter matching for
// odd k). Requires k < count and k * count even.
inline std::vector<std::vector<uint32_t>> k_regular_graph(
    uint32_t count, uint32_t k, const Bytes& seed, const std::string& label) {
  if (k == 0 || k >= count) {
    throw ConfigError("k-regular graph needs 0 < k < |C|");
  }
  if ((uint64_t{k} * count) % 2 != 0) {
    throw ConfigError("k-regular graph needs k*|C| even");
  }
  if (k % 2 == 1 && count % 2 != 0) {
    throw ConfigError("odd degree needs an even vertex count");
  }

  // Fisher-Yates permutation from the seeded stream.
  std::vector<uint32_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  crypto::SeededStream stream(seed, "kreg|" + label);
  for (uint32_t i = count - 1; i > 0; --i) {
    uint32_t j = stream.next_u32() % (i + 1);
    std::swap(perm[i], perm[j]);
  }

  std::vector<std::vector<uint32_t>> adj(count);
  auto connect = [&](uint32_t a, uint32_t b) {
    adj[perm[a]].push_back(perm[b]);
    adj[perm[b]].push_back(perm[a]);
  };
  for (uint32_t offset = 1; offset <= k / 2; ++offset) {
    for (uint32_t i = 0; i < count; ++i) connect(i, (i + offset) % count);
  }
  if (k % 2 == 1) {
    for (uint32_t i = 0; i < count / 2; ++i) connect(i, i + count / 2);
  }
  for (auto& nbrs : adj) std::sort(nbrs.begin(), nbrs.end());
  return adj;
}

// Degree used by the log-neighborhood protocol: floor(log2 |C|).
inline uint32_t log_degree(uint32_t count) {
  uint32_t k = 0;
  while ((uint64_t{1} << (k + 1)) <= count) ++k;
  return k;
}

}  // namespace graph
}  // namespace accessfl

#endif  // ACCESSFL_GRAPH_HPP_
