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

#ifndef ACCESSFL_SHAMIR_HPP_
#define ACCESSFL_SHAMIR_HPP_

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "accessfl/bignum.hpp"
#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"

namespace accessfl {
namespace crypto {

struct Share {
  uint32_t index;  // evaluation point x >= 1
  Bignum value;
};

struct SecretShares {
  std::vector<Share> shares;
  uint32_t threshold_t = 0;
  Bignum field_prime;
};

// Field used by the test profile; large enough for toy-group secrets.
inline const Bignum& shamir_test_field() {
  static const Bignum kField(257);
  return kField;
}

// Default production field for 128-bit secrets: smallest prime above 2^127.
inline const Bignum& shamir_field_128() {
  static const Bignum kField = pow2(127) + 29;
  return kField;
}

// Smallest prime exceeding the group modulus; the field used when whole
// group elements (private keys, random elements) are shared.
inline const Bignum& shamir_field_for_group(const DhParams& params) {
  static const Bignum kFieldTest = next_prime(Bignum(23));
  static const Bignum kFieldProd = next_prime(from_hex(kModp2048Hex));
  if (params.key_size_bits == 5) return kFieldTest;
  if (params.key_size_bits == 2048) return kFieldProd;
  throw ConfigError("no share field for this group");
}

// Shares of `secret` at the given distinct evaluation points: a
// degree-(t-1) polynomial with constant term `secret` and coefficients drawn
// from the seeded stream.
inline SecretShares shamir_split_at(const Bignum& secret,
                                    const std::vector<uint32_t>& points,
                                    uint32_t t, const Bignum& field_prime,
                                    const Bytes& seed,
                                    OpCounters* counters = nullptr) {
  if (t < 1 || t > points.size()) {
    throw ConfigError("shamir threshold must be in [1, n]");
  }
  if (secret < 0 || secret >= field_prime) {
    throw ConfigError("secret outside the share field");
  }
  std::vector<Bignum> coeffs;
  coeffs.reserve(t);
  coeffs.push_back(secret);
  SeededStream stream(seed, "shamir-coeffs");
  for (uint32_t i = 1; i < t; ++i) {
    coeffs.push_back(stream.next_below(field_prime));
  }
  SecretShares out;
  out.threshold_t = t;
  out.field_prime = field_prime;
  out.shares.reserve(points.size());
  for (uint32_t x : points) {
    if (x == 0 || Bignum(x) >= field_prime) {
      throw ConfigError("evaluation point outside the field");
    }
    if (counters != nullptr) ++counters->shamir_evals;
    // Horner evaluation mod p.
    Bignum acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
      acc = (acc * x + *it) % field_prime;
    }
    out.shares.push_back(Share{x, acc});
  }
  return out;
}

// Classic form: evaluation points 1..n.
inline SecretShares shamir_split(const Bignum& secret, uint32_t n, uint32_t t,
                                 const Bignum& field_prime, const Bytes& seed,
                                 OpCounters* counters = nullptr) {
  std::vector<uint32_t> points(n);
  for (uint32_t x = 1; x <= n; ++x) points[x - 1] = x;
  return shamir_split_at(secret, points, t, field_prime, seed, counters);
}

// Lagrange interpolation at x = 0. Any >= t consistent shares with distinct
// indices reconstruct the secret exactly.
inline Bignum shamir_reconstruct(const std::vector<Share>& shares, uint32_t t,
                                 const Bignum& field_prime,
                                 OpCounters* counters = nullptr) {
  if (shares.size() < t) {
    throw InsufficientSharesError("need at least t shares");
  }
  std::set<uint32_t> seen;
  for (const Share& s : shares) {
    if (!seen.insert(s.index).second) {
      throw DomainError("duplicate share index");
    }
  }
  Bignum result = 0;
  for (size_t i = 0; i < shares.size(); ++i) {
    if (counters != nullptr) ++counters->shamir_evals;
    Bignum num = 1;
    Bignum den = 1;
    Bignum xi(shares[i].index);
    for (size_t j = 0; j < shares.size(); ++j) {
      if (i == j) continue;
      Bignum xj(shares[j].index);
      num = (num * xj) % field_prime;
      den = (den * ((xj - xi) % field_prime + field_prime)) % field_prime;
    }
    Bignum li = (num * mod_inverse(den, field_prime)) % field_prime;
    result = (result + shares[i].value * li) % field_prime;
  }
  return result;
}

}  // namespace crypto
}  // namespace accessfl

#endif  // ACCESSFL_SHAMIR_HPP_
