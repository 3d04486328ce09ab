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

#ifndef ACCESSFL_BIGNUM_HPP_
#define ACCESSFL_BIGNUM_HPP_

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>

#include "accessfl/common.hpp"

namespace accessfl {

// Multi-precision integers are GMP throughout; this header keeps all direct
// mpz calls in one place.
using Bignum = mpz_class;

inline Bignum modexp(const Bignum& base, const Bignum& exp, const Bignum& mod,
                     OpCounters* counters = nullptr) {
  if (counters != nullptr) ++counters->modexp;
  Bignum r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

inline Bignum mod_inverse(const Bignum& a, const Bignum& mod) {
  Bignum r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    throw DomainError("value has no modular inverse");
  }
  return r;
}

inline bool probable_prime(const Bignum& n) {
  return mpz_probab_prime_p(n.get_mpz_t(), 30) != 0;
}

inline Bignum next_prime(const Bignum& n) {
  Bignum r;
  mpz_nextprime(r.get_mpz_t(), n.get_mpz_t());
  return r;
}

inline Bignum pow2(unsigned bits) {
  Bignum r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, bits);
  return r;
}

inline size_t bit_length(const Bignum& n) {
  return mpz_sizeinbase(n.get_mpz_t(), 2);
}

inline Bignum from_hex(const std::string& hex) { return Bignum(hex, 16); }

// Fixed-width big-endian byte encoding; width must cover the value.
inline Bytes to_bytes_be(const Bignum& n, size_t width) {
  size_t count = 0;
  Bytes tmp((bit_length(n) + 7) / 8, 0);
  if (n != 0) {
    // mpz_export writes most-significant-first with order=1, size=1.
    mpz_export(tmp.data(), &count, 1, 1, 1, 0, n.get_mpz_t());
  }
  if (count > width) throw DomainError("value does not fit encoding width");
  Bytes res(width, 0);
  std::copy(tmp.begin(), tmp.begin() + count, res.begin() + (width - count));
  return res;
}

inline Bignum from_bytes_be(std::span<const uint8_t> bytes) {
  Bignum r;
  mpz_import(r.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return r;
}

// Number of decimal digits needed for values in [0, max_value].
inline size_t decimal_width(const Bignum& max_value) {
  return mpz_sizeinbase(max_value.get_mpz_t(), 10);
}

// Zero-padded decimal rendering, the transport form for group and field
// elements (see wire.hpp for why transport uses text).
inline std::string to_fixed_decimal(const Bignum& n, size_t width) {
  std::string s = n.get_str();
  if (s.size() > width) throw DomainError("value does not fit decimal width");
  return std::string(width - s.size(), '0') + s;
}

inline Bignum from_decimal(const std::string& s) { return Bignum(s, 10); }

}  // namespace accessfl

#endif  // ACCESSFL_BIGNUM_HPP_
