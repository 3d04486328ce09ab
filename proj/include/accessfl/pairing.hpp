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

#ifndef ACCESSFL_PAIRING_HPP_
#define ACCESSFL_PAIRING_HPP_

#include <cstdint>
#include <set>
#include <string>

#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"

namespace accessfl {
namespace pairing {

constexpr uint32_t kMinParticipants = 6;
constexpr uint32_t kDefaultRetryLimit = 3;

// Which past distances are excluded when drawing a new one. The one-round
// window is the default; the all-history variant exhausts the domain after
// floor((|C|-1)/2) rounds and surfaces that as ExhaustionError.
enum class HistoryPolicy { kPreviousRoundOnly, kAllHistory };

// Everything a client needs to derive this round's pairing distance. The
// pairing seed comes from out-of-band configuration shared by all clients
// and withheld from the server.
struct PairingContext {
  uint32_t participant_count = 0;
  uint32_t round_number = 1;
  Bytes pairing_seed;
  std::set<uint32_t> distance_history;  // excluded distances
  uint32_t retry_counter = 0;
  uint32_t retry_limit = kDefaultRetryLimit;

  uint32_t max_distance() const { return (participant_count - 1) / 2; }
};

struct PairAssignment {
  uint32_t own_index = 0;
  uint32_t first_pair = 0;   // (i + d) mod |C|
  uint32_t second_pair = 0;  // (i - d + |C|) mod |C|
  uint32_t distance = 0;
};

struct DistanceDraw {
  uint32_t distance = 0;
  PairingContext updated;  // history extended with the drawn distance
};

// Draws this round's distance from the keyed stream, rejection-sampled into
// [1, floor((|C|-1)/2)] minus the excluded history. Any client evaluating
// the same context gets the same value.
inline DistanceDraw derive_distance(const PairingContext& ctx) {
  if (ctx.participant_count < kMinParticipants) {
    throw ConfigError("pairing needs at least 6 participants");
  }
  const uint32_t hi = ctx.max_distance();
  uint32_t allowed = 0;
  for (uint32_t d = 1; d <= hi; ++d) {
    if (!ctx.distance_history.count(d)) ++allowed;
  }
  if (allowed == 0) {
    throw ExhaustionError("no unused pairing distance remains");
  }
  const std::string label = "pairdist|r" + std::to_string(ctx.round_number) +
                            "|a" + std::to_string(ctx.retry_counter) + "|c" +
                            std::to_string(ctx.participant_count);
  crypto::SeededStream stream(ctx.pairing_seed, label);
  // Rejection sampling: first reject the modulo-biased tail of the 32-bit
  // word, then reject excluded values.
  const uint32_t limit = UINT32_MAX - (UINT32_MAX % hi + 1) % hi;
  for (;;) {
    uint32_t word = stream.next_u32();
    if (word > limit) continue;
    uint32_t candidate = 1 + word % hi;
    if (ctx.distance_history.count(candidate)) continue;
    DistanceDraw draw{candidate, ctx};
    draw.updated.distance_history.insert(candidate);
    return draw;
  }
}

inline PairAssignment pair_indices(uint32_t own_index, uint32_t distance,
                                   uint32_t participant_count) {
  if (own_index >= participant_count) {
    throw DomainError("own index outside the participant list");
  }
  const uint32_t hi = (participant_count - 1) / 2;
  if (distance < 1 || distance > hi) {
    throw DomainError("distance outside [1, floor((|C|-1)/2)]");
  }
  return PairAssignment{
      own_index, (own_index + distance) % participant_count,
      (own_index + participant_count - distance) % participant_count,
      distance};
}

// -1 toward a partner with a smaller index, +1 otherwise; antisymmetric by
// construction, which is what makes paired masks cancel.
inline int mask_sign(uint32_t own_index, uint32_t partner_index) {
  if (own_index == partner_index) {
    throw DomainError("a client cannot pair with itself");
  }
  return partner_index < own_index ? -1 : 1;
}

// Rebuilds the context after a dropout: survivor count replaces |C|, the
// history keeps the previous round's and this round's used distances (values
// above the new maximum simply have no effect), and the retry counter is
// bumped against its bound.
inline PairingContext repair_after_dropout(const PairingContext& ctx,
                                           uint32_t survivor_count) {
  if (survivor_count < kMinParticipants) {
    throw AbortRoundError("fewer than 6 survivors");
  }
  PairingContext updated = ctx;
  updated.participant_count = survivor_count;
  updated.retry_counter = ctx.retry_counter + 1;
  if (updated.retry_counter > updated.retry_limit) {
    throw AbortRoundError("re-pairing retry bound exceeded");
  }
  return updated;
}

}  // namespace pairing
}  // namespace accessfl

#endif  // ACCESSFL_PAIRING_HPP_
