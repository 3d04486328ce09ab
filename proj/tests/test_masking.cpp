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

#include "accessfl/masking.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

using namespace accessfl;
using namespace accessfl::masking;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

struct Cohort {
  crypto::DhParams params;
  std::vector<crypto::KeyPair> keys;
};

Cohort make_cohort(uint32_t count, const std::string& tag) {
  Cohort c{crypto::param_gen(5), {}};
  for (uint32_t i = 0; i < count; ++i) {
    c.keys.push_back(
        crypto::key_gen(c.params, bytes_of(tag + std::to_string(i))));
  }
  return c;
}

Partner partner_for(const Cohort& c, uint32_t index) {
  return Partner{index, index, c.keys[index].public_key, true};
}

// Builds every client's masked model for one (|C|, d) configuration.
std::vector<MaskedModel> mask_all(const Cohort& c,
                                  const std::vector<QuantizedModel>& models,
                                  uint32_t distance, uint32_t round) {
  std::vector<MaskedModel> out;
  const uint32_t count = static_cast<uint32_t>(models.size());
  for (uint32_t i = 0; i < count; ++i) {
    pairing::PairAssignment a = pairing::pair_indices(i, distance, count);
    out.push_back(build_masked_model(
        models[i], a, i, c.keys[i], partner_for(c, a.first_pair),
        partner_for(c, a.second_pair), c.params,
        crypto::PrgProfile::kStrictPaper, round));
  }
  return out;
}

}  // namespace

TEST_CASE("quantize maps the documented fixed-point examples") {
  QuantizationConfig cfg;
  std::vector<double> w = {0.0, 1.5, -1.0};
  QuantizedModel q = quantize(w, cfg);
  CHECK(q.elements[0] == 0u);
  CHECK(q.elements[1] == 98304u);                 // 1.5 * 2^16
  CHECK(q.elements[2] == 4294901760u);            // 2^32 - 2^16
  CHECK(dequantize(q, cfg)[2] == -1.0);
}

TEST_CASE("quantize clips and counts out-of-range weights") {
  QuantizationConfig cfg;
  QuantizeStats stats;
  std::vector<double> w = {100.0, -200.0, 1.0};
  QuantizedModel q = quantize(w, cfg, &stats);
  CHECK(stats.clipped == 2);
  CHECK(q.elements[0] == 64u * 65536u);
  CHECK_THROWS_AS(
      quantize(std::vector<double>{std::numeric_limits<double>::infinity()},
               cfg),
      DataError);
}

TEST_CASE("rounding is half away from zero") {
  QuantizationConfig cfg{2.0, 64.0};
  std::vector<double> w = {0.25, -0.25, 0.75};
  QuantizedModel q = quantize(w, cfg);
  CHECK(q.elements[0] == 1u);
  CHECK(q.elements[1] == 0xFFFFFFFFu);  // -1
  CHECK(q.elements[2] == 2u);
}

TEST_CASE("dequantize(quantize(x)) stays within half a quantum") {
  QuantizationConfig cfg;
  crypto::SeededStream rng(bytes_of("roundtrip"), "t");
  std::vector<double> w;
  for (int i = 0; i < 1000; ++i) {
    w.push_back((static_cast<double>(rng.next_u32()) / 4294967296.0 - 0.5) *
                100.0);
  }
  std::vector<double> back = dequantize(quantize(w, cfg), cfg);
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(back[i] - w[i]) <= 0.5 / cfg.scale + 1e-12);
  }
}

TEST_CASE("averaging |C| copies recovers the weights") {
  QuantizationConfig cfg;
  const uint32_t count = 6;
  std::vector<double> w = {0.5, -2.25, 31.0};
  QuantizedModel q = quantize(w, cfg);
  std::vector<uint32_t> sum(q.elements.size(), 0);
  for (uint32_t i = 0; i < count; ++i) add_in_place(sum, q.elements);
  std::vector<double> avg =
      dequantize(QuantizedModel{sum}, cfg, count);
  for (size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(avg[i] - w[i]) <= 0.5 / cfg.scale);
  }
}

TEST_CASE("config validation rejects aggregates that would wrap") {
  QuantizationConfig cfg;
  cfg.validate_for(500);
  CHECK_THROWS_AS(cfg.validate_for(600), ConfigError);
}

TEST_CASE("zeroed masks leave the model unchanged") {
  QuantizedModel w{{1, 2, 3}};
  std::vector<SignedMask> none;
  CHECK(apply_signed_masks(w, none) == w.elements);

  std::vector<SignedMask> zeros = {{1, {0, 0, 0}}, {-1, {0, 0, 0}}};
  CHECK(apply_signed_masks(w, zeros) == w.elements);
}

TEST_CASE("paired mask streams are identical and signed sums cancel") {
  Cohort c = make_cohort(8, "pairwise");
  const size_t dim = 17;
  for (uint32_t i = 0; i < 8; ++i) {
    for (uint32_t j = 0; j < 8; ++j) {
      if (i == j) continue;
      auto s_ij = crypto::key_agree(c.keys[i].private_key,
                                    c.keys[j].public_key, c.params);
      auto s_ji = crypto::key_agree(c.keys[j].private_key,
                                    c.keys[i].public_key, c.params);
      std::string label =
          crypto::pair_mask_label(i, j, 1, crypto::PrgProfile::kStrictPaper);
      auto m_ij = crypto::prg_expand(s_ij.byte_encoding, dim, label);
      auto m_ji = crypto::prg_expand(s_ji.byte_encoding, dim, label);
      REQUIRE(m_ij == m_ji);
      std::vector<uint32_t> sum(dim, 0);
      int sign_i = pairing::mask_sign(i, j);
      int sign_j = pairing::mask_sign(j, i);
      for (size_t e = 0; e < dim; ++e) {
        sum[e] = static_cast<uint32_t>(sign_i) * m_ij[e] +
                 static_cast<uint32_t>(sign_j) * m_ji[e];
      }
      for (uint32_t v : sum) CHECK(v == 0u);
    }
  }
}

TEST_CASE("six masked unit models aggregate to six units") {
  QuantizationConfig cfg;
  Cohort c = make_cohort(6, "unit");
  std::vector<QuantizedModel> models(
      6, quantize(std::vector<double>{1.0}, cfg));
  auto masked = mask_all(c, models, 1, 1);
  uint64_t total = 0;
  std::vector<uint32_t> sum(1, 0);
  for (const auto& m : masked) add_in_place(sum, m.elements);
  total = sum[0];
  CHECK(total == 6u * 65536u);
}

TEST_CASE("aggregate of masked models equals aggregate of plain models") {
  // Randomized cancellation across sizes, distances and dimensions.
  crypto::SeededStream rng(bytes_of("cancel"), "t");
  QuantizationConfig cfg;
  for (int trial = 0; trial < 12; ++trial) {
    uint32_t count = 6 + rng.next_u32() % 15;          // [6, 20]
    uint32_t dmax = (count - 1) / 2;
    uint32_t distance = 1 + rng.next_u32() % dmax;
    size_t dim = 1 + rng.next_u32() % 400;
    Cohort c = make_cohort(count, "c" + std::to_string(trial));

    std::vector<QuantizedModel> models;
    std::vector<uint32_t> plain_sum(dim, 0);
    for (uint32_t i = 0; i < count; ++i) {
      std::vector<double> w(dim);
      for (auto& x : w) {
        x = (static_cast<double>(rng.next_u32()) / 4294967296.0 - 0.5) * 8.0;
      }
      models.push_back(quantize(w, cfg));
      add_in_place(plain_sum, models.back().elements);
    }
    auto masked = mask_all(c, models, distance, trial + 1);
    std::vector<uint32_t> masked_sum(dim, 0);
    for (const auto& m : masked) add_in_place(masked_sum, m.elements);
    CHECK(masked_sum == plain_sum);
  }
}

TEST_CASE("a single masked model looks uniform over the ring") {
  QuantizationConfig cfg;
  const size_t dim = 10000;
  Cohort c = make_cohort(6, "smoke");
  std::vector<QuantizedModel> models(
      6, quantize(std::vector<double>(dim, 0.125), cfg));
  auto masked = mask_all(c, models, 2, 1);
  double mean = 0;
  for (uint32_t v : masked[0].elements) {
    mean += static_cast<double>(v) / dim;
  }
  const double sigma = (4294967296.0 / std::sqrt(12.0)) / std::sqrt(1.0 * dim);
  CHECK(std::abs(mean - 2147483648.0) < 3 * sigma);
}

TEST_CASE("missing peer key is a protocol error") {
  QuantizationConfig cfg;
  Cohort c = make_cohort(6, "missing");
  QuantizedModel w = quantize(std::vector<double>{1.0}, cfg);
  pairing::PairAssignment a = pairing::pair_indices(0, 1, 6);
  Partner absent;
  CHECK_THROWS_AS(
      build_masked_model(w, a, 0, c.keys[0], absent, partner_for(c, 5),
                         c.params, crypto::PrgProfile::kStrictPaper, 1),
      ProtocolError);
}

TEST_CASE("model serialization round-trips and has fixed size") {
  std::vector<uint32_t> elems = {1, 0xFFFFFFFF, 42};
  Bytes payload = serialize_model(elems, 9, 3);
  CHECK(payload.size() == 8 + 4 * elems.size());
  MaskedModel back = deserialize_model(payload);
  CHECK(back.round_number == 9);
  CHECK(back.sender_id == 3);
  CHECK(back.elements == elems);
  CHECK_THROWS_AS(deserialize_model(Bytes{1, 2, 3}), DataError);
}
