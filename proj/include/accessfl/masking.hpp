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

#ifndef ACCESSFL_MASKING_HPP_
#define ACCESSFL_MASKING_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"
#include "accessfl/pairing.hpp"

namespace accessfl {
namespace masking {

// Weights live in the ring Z_{2^32} as fixed-point values. All mask algebra
// is exact there; floats only appear at the quantize/dequantize boundary.
constexpr uint64_t kModulus = uint64_t{1} << 32;

struct QuantizationConfig {
  double scale = 65536.0;     // ring units per weight unit (2^16)
  double clip_range = 64.0;   // weights clipped to [-clip_range, clip_range]

  // The summed aggregate of `participant_count` clipped models must stay in
  // the signed half of the ring or cancellation stops being decodable.
  void validate_for(uint32_t participant_count) const {
    if (scale <= 0 || clip_range <= 0) {
      throw ConfigError("scale and clip_range must be positive");
    }
    if (scale * clip_range * participant_count >=
        static_cast<double>(kModulus / 2)) {
      throw ConfigError("scale * clip_range * clients would wrap the ring");
    }
  }
};

struct QuantizedModel {
  std::vector<uint32_t> elements;

  size_t dimension() const { return elements.size(); }
  bool operator==(const QuantizedModel&) const = default;
};

struct MaskedModel {
  std::vector<uint32_t> elements;
  uint32_t round_number = 0;
  uint32_t sender_id = 0;
};

struct QuantizeStats {
  uint64_t clipped = 0;
};

inline QuantizedModel quantize(std::span<const double> weights,
                               const QuantizationConfig& cfg,
                               QuantizeStats* stats = nullptr) {
  QuantizedModel out;
  out.elements.reserve(weights.size());
  for (double w : weights) {
    if (!std::isfinite(w)) throw DataError("non-finite weight");
    double clipped = w;
    if (clipped > cfg.clip_range) clipped = cfg.clip_range;
    if (clipped < -cfg.clip_range) clipped = -cfg.clip_range;
    if (clipped != w && stats != nullptr) ++stats->clipped;
    // std::round is round-half-away-from-zero, identical on all platforms.
    int64_t fixed = static_cast<int64_t>(std::round(clipped * cfg.scale));
    out.elements.push_back(static_cast<uint32_t>(fixed));  // two's complement
  }
  return out;
}

// Centers ring values into the signed range and divides by scale * divisor;
// divisor = |C| turns an aggregated sum into an average.
inline std::vector<double> dequantize(const QuantizedModel& model,
                                      const QuantizationConfig& cfg,
                                      uint64_t divisor = 1) {
  if (divisor < 1) throw DomainError("divisor must be >= 1");
  std::vector<double> out;
  out.reserve(model.elements.size());
  for (uint32_t v : model.elements) {
    int64_t centered = static_cast<int64_t>(v);
    if (centered >= static_cast<int64_t>(kModulus / 2)) {
      centered -= static_cast<int64_t>(kModulus);
    }
    out.push_back(static_cast<double>(centered) /
                  (cfg.scale * static_cast<double>(divisor)));
  }
  return out;
}

inline void add_in_place(std::vector<uint32_t>& acc,
                         std::span<const uint32_t> v) {
  if (acc.size() != v.size()) throw DomainError("dimension mismatch");
  for (size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];  // wraps mod 2^32
}

inline void sub_in_place(std::vector<uint32_t>& acc,
                         std::span<const uint32_t> v) {
  if (acc.size() != v.size()) throw DomainError("dimension mismatch");
  for (size_t i = 0; i < acc.size(); ++i) acc[i] -= v[i];
}

struct SignedMask {
  int sign = 1;
  std::vector<uint32_t> elements;
};

inline std::vector<uint32_t> apply_signed_masks(
    const QuantizedModel& w, std::span<const SignedMask> masks) {
  std::vector<uint32_t> out = w.elements;
  for (const SignedMask& m : masks) {
    if (m.sign >= 0) {
      add_in_place(out, m.elements);
    } else {
      sub_in_place(out, m.elements);
    }
  }
  return out;
}

// One partner as seen by the masking client: ring index for the sign rule,
// stable identifier for the mask stream label, public key for agreement.
struct Partner {
  uint32_t index = 0;
  uint32_t id = 0;
  Bignum public_key;
  bool has_key = false;
};

// w + sign_fp * m(i,fp) + sign_sp * m(i,sp) over the ring. Both members of a
// pair expand the identical stream (shared secret and label are symmetric),
// so the signed contributions cancel in the aggregate.
inline MaskedModel build_masked_model(
    const QuantizedModel& w, const pairing::PairAssignment& assignment,
    uint32_t own_id, const crypto::KeyPair& own_keys, const Partner& first,
    const Partner& second, const crypto::DhParams& params,
    crypto::PrgProfile profile, uint32_t round,
    OpCounters* counters = nullptr) {
  if (!first.has_key || !second.has_key) {
    throw ProtocolError("missing peer public key");
  }
  SignedMask masks[2];
  const Partner* partners[2] = {&first, &second};
  for (int k = 0; k < 2; ++k) {
    crypto::SharedSecret s = crypto::key_agree(
        own_keys.private_key, partners[k]->public_key, params, counters);
    masks[k].sign = pairing::mask_sign(assignment.own_index,
                                       partners[k]->index);
    masks[k].elements = crypto::prg_expand(
        s.byte_encoding, w.dimension(),
        crypto::pair_mask_label(own_id, partners[k]->id, round, profile),
        counters);
  }
  MaskedModel out;
  out.elements = apply_signed_masks(w, masks);
  out.round_number = round;
  out.sender_id = own_id;
  return out;
}

// Fixed serialization: 8-byte header (round, sender), then 4 bytes per
// element big-endian. Ledger byte totals depend on this layout.
inline Bytes serialize_model(std::span<const uint32_t> elements,
                             uint32_t round, uint32_t sender) {
  Bytes out(8 + 4 * elements.size());
  uint8_t* p = out.data();
  auto write32 = [&p](uint32_t v) {
    p[0] = static_cast<uint8_t>(v >> 24);
    p[1] = static_cast<uint8_t>(v >> 16);
    p[2] = static_cast<uint8_t>(v >> 8);
    p[3] = static_cast<uint8_t>(v);
    p += 4;
  };
  write32(round);
  write32(sender);
  for (uint32_t v : elements) write32(v);
  return out;
}

inline MaskedModel deserialize_model(std::span<const uint8_t> payload) {
  if (payload.size() < 8 || (payload.size() - 8) % 4 != 0) {
    throw DataError("malformed model payload");
  }
  MaskedModel out;
  out.round_number = get_be32(payload, 0);
  out.sender_id = get_be32(payload, 4);
  size_t n = (payload.size() - 8) / 4;
  out.elements.resize(n);
  const uint8_t* p = payload.data() + 8;
  for (size_t i = 0; i < n; ++i, p += 4) {
    out.elements[i] = (uint32_t{p[0]} << 24) | (uint32_t{p[1]} << 16) |
                      (uint32_t{p[2]} << 8) | uint32_t{p[3]};
  }
  return out;
}

}  // namespace masking
}  // namespace accessfl

#endif  // ACCESSFL_MASKING_HPP_
