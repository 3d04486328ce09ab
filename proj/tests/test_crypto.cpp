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

#include "accessfl/crypto.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

using namespace accessfl;
using namespace accessfl::crypto;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

// Published constants for the 2048-bit MODP group (generator 2), transcribed
// here independently of the library's copy so the two must agree.
const char* kPublished2048 =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

}  // namespace

TEST_CASE("param_gen returns the toy group for the test profile") {
  const DhParams& p = param_gen(5);
  CHECK(p.prime_p == 23);
  CHECK(p.generator_g == 5);
  CHECK(p.element_width() == 1);
}

TEST_CASE("param_gen returns the published 2048-bit MODP group") {
  const DhParams& p = param_gen(2048);
  CHECK(p.prime_p == from_hex(kPublished2048));
  CHECK(p.generator_g == 2);
  CHECK(bit_length(p.prime_p) == 2048);
  CHECK(probable_prime(p.prime_p));
  // Safe prime: (p-1)/2 is prime as well.
  CHECK(probable_prime((p.prime_p - 1) / 2));
}

TEST_CASE("param_gen rejects unsupported sizes") {
  CHECK_THROWS_AS(param_gen(7), ConfigError);
  CHECK_THROWS_AS(param_gen(1024), ConfigError);
}

TEST_CASE("public keys are modular powers of the generator") {
  const DhParams& p = param_gen(5);
  // 5^6 mod 23 and 5^15 mod 23 by repeated squaring.
  CHECK(modexp(Bignum(5), Bignum(6), Bignum(23)) == 8);
  CHECK(modexp(Bignum(5), Bignum(15), Bignum(23)) == 19);
  // Identity exponent.
  CHECK(modexp(p.generator_g, Bignum(1), p.prime_p) == p.generator_g);

  KeyPair kp = key_gen(p, bytes_of("seed-a"));
  CHECK(kp.private_key >= 1);
  CHECK(kp.private_key <= p.prime_p - 1);
  CHECK(kp.public_key == modexp(p.generator_g, kp.private_key, p.prime_p));

  KeyPair again = key_gen(p, bytes_of("seed-a"));
  CHECK(again.private_key == kp.private_key);
  CHECK(key_gen(p, bytes_of("seed-b")).public_key != kp.public_key);
}

TEST_CASE("key agreement is symmetric") {
  const DhParams& p = param_gen(5);
  // SK_a = 6 -> PK_a = 8, SK_b = 15 -> PK_b = 19.
  SharedSecret ab = key_agree(Bignum(6), Bignum(19), p);
  SharedSecret ba = key_agree(Bignum(15), Bignum(8), p);
  CHECK(ab.value == 2);  // 19^6 mod 23 = 5^90 mod 23 = 2
  CHECK(ba.value == ab.value);
  CHECK(ab.byte_encoding == ba.byte_encoding);

  // Property over seeded pairs, both group profiles.
  for (int bits : {5, 2048}) {
    const DhParams& params = param_gen(bits);
    for (int trial = 0; trial < (bits == 5 ? 20 : 2); ++trial) {
      KeyPair a = key_gen(params, bytes_of("a" + std::to_string(trial)));
      KeyPair b = key_gen(params, bytes_of("b" + std::to_string(trial)));
      CHECK(key_agree(a.private_key, b.public_key, params).value ==
            key_agree(b.private_key, a.public_key, params).value);
    }
  }
}

TEST_CASE("key agreement rejects out-of-range keys") {
  const DhParams& p = param_gen(5);
  CHECK_THROWS_AS(key_agree(Bignum(6), Bignum(0), p), InvalidKeyError);
  CHECK_THROWS_AS(key_agree(Bignum(6), p.prime_p, p), InvalidKeyError);
}

TEST_CASE("prg_expand is deterministic") {
  Bytes seed = bytes_of("S");
  auto a = prg_expand(seed, 3, "L");
  auto b = prg_expand(seed, 3, "L");
  CHECK(a == b);
  CHECK(a.size() == 3);
  CHECK(prg_expand(seed, 3, "M") != a);
  CHECK(prg_expand(bytes_of("T"), 3, "L") != a);
}

TEST_CASE("prg_expand is prefix-consistent") {
  Bytes seed = bytes_of("S");
  auto longer = prg_expand(seed, 5, "L");
  auto shorter = prg_expand(seed, 3, "L");
  longer.resize(3);
  CHECK(longer == shorter);

  // Randomized lengths.
  crypto::SeededStream rng(bytes_of("lengths"), "test");
  for (int i = 0; i < 20; ++i) {
    size_t n1 = 1 + rng.next_u32() % 200;
    size_t n2 = 1 + rng.next_u32() % 200;
    if (n1 > n2) std::swap(n1, n2);
    auto big = prg_expand(seed, n2, "P" + std::to_string(i));
    auto small = prg_expand(seed, n1, "P" + std::to_string(i));
    big.resize(n1);
    CHECK(big == small);
  }
}

TEST_CASE("prg_expand output passes the coarse uniformity check") {
  const size_t n = 10000;
  auto v = prg_expand(bytes_of("S"), n, "L");
  double mean = 0;
  for (uint32_t x : v) mean += static_cast<double>(x) / n;
  // Mean of n uniform words: sigma = (2^32 / sqrt(12)) / sqrt(n).
  const double sigma = (4294967296.0 / std::sqrt(12.0)) / std::sqrt(1.0 * n);
  CHECK(std::abs(mean - 2147483648.0) < 3 * sigma);
}

TEST_CASE("prg block counter tracks keystream length") {
  OpCounters c;
  prg_expand(bytes_of("S"), 3, "L", &c);  // 12 bytes -> 1 block
  CHECK(c.prg_blocks == 1);
  prg_expand(bytes_of("S"), 5, "L", &c);  // 20 bytes -> 2 blocks
  CHECK(c.prg_blocks == 3);
}

TEST_CASE("seal/open round-trips and authenticates") {
  const DhParams& p = param_gen(5);
  KeyPair a = key_gen(p, bytes_of("a"));
  KeyPair b = key_gen(p, bytes_of("b"));
  SharedSecret k = key_agree(a.private_key, b.public_key, p);
  Bytes nonce = message_nonce(1, 2, 7);
  Bytes msg = bytes_of("1||2||share-payload");

  Bytes ct = seal(k, msg, nonce);
  CHECK(open(k, ct, nonce) == msg);

  Bytes flipped = ct;
  flipped[3] ^= 0x01;
  CHECK_THROWS_AS(open(k, flipped, nonce), TamperError);

  SharedSecret wrong = key_agree(a.private_key, a.public_key, p);
  if (wrong.value != k.value) {
    CHECK_THROWS_AS(open(wrong, ct, nonce), TamperError);
  }
}

TEST_CASE("mask labels are symmetric in the pair and salted by profile") {
  CHECK(pair_mask_label(3, 9, 4, PrgProfile::kStrictPaper) ==
        pair_mask_label(9, 3, 4, PrgProfile::kStrictPaper));
  CHECK(pair_mask_label(3, 9, 4, PrgProfile::kStrictPaper) ==
        pair_mask_label(3, 9, 5, PrgProfile::kStrictPaper));
  CHECK(pair_mask_label(3, 9, 4, PrgProfile::kRoundSalted) !=
        pair_mask_label(3, 9, 5, PrgProfile::kRoundSalted));
}

TEST_CASE("seeded stream bignum draws are unbiased at the edges") {
  SeededStream s(bytes_of("draws"), "t");
  for (int i = 0; i < 200; ++i) {
    Bignum v = s.next_below(Bignum(23 - 1)) + 1;
    CHECK(v >= 1);
    CHECK(v <= 22);
  }
  SeededStream one(bytes_of("draws"), "t2");
  CHECK(one.next_below(Bignum(1)) == 0);
}
