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

#include "accessfl/pairing.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <set>
#include <string>

using namespace accessfl;
using namespace accessfl::pairing;

namespace {

PairingContext make_ctx(uint32_t count, uint32_t round = 1) {
  PairingContext ctx;
  ctx.participant_count = count;
  ctx.round_number = round;
  ctx.pairing_seed = Bytes{'p', 'a', 'i', 'r', '-', 's', 'e', 'e', 'd'};
  return ctx;
}

}  // namespace

TEST_CASE("derived distance lies inside the allowed range") {
  PairingContext ctx = make_ctx(100);
  for (uint32_t round = 1; round <= 30; ++round) {
    ctx.round_number = round;
    ctx.distance_history.clear();
    DistanceDraw d = derive_distance(ctx);
    CHECK(d.distance >= 1);
    CHECK(d.distance <= 49);
    CHECK(d.updated.distance_history.count(d.distance) == 1);
  }
}

TEST_CASE("identical contexts derive identical distances") {
  PairingContext a = make_ctx(20, 7);
  PairingContext b = make_ctx(20, 7);
  CHECK(derive_distance(a).distance == derive_distance(b).distance);

  b.retry_counter = 1;  // a re-pair attempt draws a fresh stream
  PairingContext c = make_ctx(20, 7);
  c.retry_counter = 1;
  CHECK(derive_distance(b).distance == derive_distance(c).distance);
}

TEST_CASE("an exhausted allowed set raises ExhaustionError") {
  PairingContext ctx = make_ctx(6);
  ctx.distance_history = {1, 2};  // allowed set [1, 2] fully excluded
  CHECK_THROWS_AS(derive_distance(ctx), ExhaustionError);
}

TEST_CASE("excluded distances are never drawn") {
  PairingContext ctx = make_ctx(8);
  ctx.distance_history = {1, 3};
  for (uint32_t round = 1; round <= 20; ++round) {
    ctx.round_number = round;
    CHECK(derive_distance(ctx).distance == 2);
  }
}

TEST_CASE("pair indices follow the ring formulas") {
  PairAssignment a = pair_indices(2, 3, 8);
  CHECK(a.first_pair == 5);
  CHECK(a.second_pair == 7);

  PairAssignment b = pair_indices(0, 1, 6);
  CHECK(b.first_pair == 1);
  CHECK(b.second_pair == 5);

  CHECK_THROWS_AS(pair_indices(5, 3, 6), DomainError);  // 3 > floor(5/2)
  CHECK_THROWS_AS(pair_indices(9, 1, 6), DomainError);
}

TEST_CASE("mask sign is antisymmetric") {
  CHECK(mask_sign(2, 5) == 1);
  CHECK(mask_sign(5, 2) == -1);
  CHECK_THROWS_AS(mask_sign(4, 4), DomainError);
  for (uint32_t i = 0; i < 12; ++i) {
    for (uint32_t j = 0; j < 12; ++j) {
      if (i == j) continue;
      CHECK(mask_sign(i, j) + mask_sign(j, i) == 0);
    }
  }
}

TEST_CASE("pair map is a bijection covering every client twice") {
  for (uint32_t count = 6; count <= 64; ++count) {
    for (uint32_t d = 1; d <= (count - 1) / 2; ++d) {
      std::set<uint32_t> fp_targets;
      std::map<std::pair<uint32_t, uint32_t>, int> unordered;
      for (uint32_t i = 0; i < count; ++i) {
        PairAssignment a = pair_indices(i, d, count);
        CHECK(a.first_pair != i);
        CHECK(a.second_pair != i);
        CHECK(a.first_pair != a.second_pair);
        fp_targets.insert(a.first_pair);
        // sp of my fp is me again.
        CHECK(pair_indices(a.first_pair, d, count).second_pair == i);
        unordered[{std::min(i, a.first_pair), std::max(i, a.first_pair)}]++;
        unordered[{std::min(i, a.second_pair), std::max(i, a.second_pair)}]++;
      }
      CHECK(fp_targets.size() == count);  // i -> fp_i is a bijection
      for (const auto& [pair, times] : unordered) CHECK(times == 2);
    }
  }
}

TEST_CASE("consecutive rounds never reuse the previous distance") {
  PairingContext ctx = make_ctx(10);
  uint32_t prev = 0;
  for (uint32_t round = 1; round <= 50; ++round) {
    ctx.round_number = round;
    ctx.distance_history.clear();
    if (round > 1) ctx.distance_history.insert(prev);
    DistanceDraw d = derive_distance(ctx);
    if (round > 1) CHECK(d.distance != prev);
    prev = d.distance;
  }
}

TEST_CASE("repair after dropout shrinks the ring and bounds retries") {
  PairingContext ctx = make_ctx(8, 3);
  DistanceDraw first = derive_distance(ctx);
  ctx = first.updated;

  PairingContext repaired = repair_after_dropout(ctx, 7);
  CHECK(repaired.participant_count == 7);
  CHECK(repaired.max_distance() == 3);
  CHECK(repaired.retry_counter == 1);
  // Both the previous round's and this round's distances stay excluded.
  CHECK(repaired.distance_history.count(first.distance) == 1);

  DistanceDraw second = derive_distance(repaired);
  CHECK(second.distance != first.distance);
  CHECK(second.distance >= 1);
  CHECK(second.distance <= 3);

  CHECK_THROWS_AS(repair_after_dropout(ctx, 5), AbortRoundError);

  PairingContext exhausted = ctx;
  exhausted.retry_counter = exhausted.retry_limit;
  CHECK_THROWS_AS(repair_after_dropout(exhausted, 7), AbortRoundError);
}

TEST_CASE("all survivors compute the same repaired assignment") {
  PairingContext ctx = make_ctx(8, 5);
  ctx = derive_distance(ctx).updated;
  PairingContext a = repair_after_dropout(ctx, 7);
  PairingContext b = repair_after_dropout(ctx, 7);
  CHECK(derive_distance(a).distance == derive_distance(b).distance);
}

TEST_CASE("history values above the shrunk domain are ignored") {
  PairingContext ctx = make_ctx(12, 2);
  ctx.distance_history = {5};  // valid for |C|=12 (max 5)
  PairingContext repaired = repair_after_dropout(ctx, 7);  // max now 3
  DistanceDraw d = derive_distance(repaired);
  CHECK(d.distance <= 3);
}
