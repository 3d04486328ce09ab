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

#ifndef ACCESSFL_COMMON_HPP_
#define ACCESSFL_COMMON_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace accessfl {

using Bytes = std::vector<uint8_t>;

// Error taxonomy shared across modules. Everything is derived from Error so
// callers can catch the whole family at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment/protocol configuration (unsupported key size, t > n, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside its documented domain (distance out of range, i == j).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A public key outside [1, p-1].
class InvalidKeyError : public Error {
 public:
  using Error::Error;
};

// Authenticated decryption failed.
class TamperError : public Error {
 public:
  using Error::Error;
};

class InsufficientSharesError : public Error {
 public:
  using Error::Error;
};

// The allowed pairing-distance set is empty.
class ExhaustionError : public Error {
 public:
  using Error::Error;
};

// A state machine operation was invoked out of phase.
class ProtocolOrderError : public Error {
 public:
  using Error::Error;
};

// A required protocol input (e.g. a peer public key) is missing.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The current round cannot complete and is abandoned.
class AbortRoundError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// Fatal failure of a whole experiment run; carries the offending round.
class ExperimentError : public Error {
 public:
  ExperimentError(const std::string& what, uint32_t round)
      : Error(what + " (round " + std::to_string(round) + ")"),
        round_(round) {}
  uint32_t round() const { return round_; }

 private:
  uint32_t round_;
};

inline void put_be32(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline uint32_t get_be32(std::span<const uint8_t> in, size_t offset) {
  if (offset + 4 > in.size()) throw DataError("truncated 32-bit field");
  return (uint32_t{in[offset]} << 24) | (uint32_t{in[offset + 1]} << 16) |
         (uint32_t{in[offset + 2]} << 8) | uint32_t{in[offset + 3]};
}

inline void put_be64(Bytes& out, uint64_t v) {
  put_be32(out, static_cast<uint32_t>(v >> 32));
  put_be32(out, static_cast<uint32_t>(v));
}

// FNV-1a, used for trace hashing; stable across platforms.
inline uint64_t fnv1a64(std::span<const uint8_t> data,
                        uint64_t seed = 0xcbf29ce484222325ull) {
  uint64_t h = seed;
  for (uint8_t b : data) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s,
                        uint64_t seed = 0xcbf29ce484222325ull) {
  return fnv1a64(
      std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(s.data()),
                               s.size()),
      seed);
}

// Per-entity tallies of the expensive primitives, reported per protocol and
// round in experiment summaries.
struct OpCounters {
  uint64_t modexp = 0;
  uint64_t prg_blocks = 0;
  uint64_t shamir_evals = 0;
  uint64_t seals = 0;
  uint64_t opens = 0;

  OpCounters& operator+=(const OpCounters& o) {
    modexp += o.modexp;
    prg_blocks += o.prg_blocks;
    shamir_evals += o.shamir_evals;
    seals += o.seals;
    opens += o.opens;
    return *this;
  }
  OpCounters operator-(const OpCounters& o) const {
    return OpCounters{modexp - o.modexp, prg_blocks - o.prg_blocks,
                      shamir_evals - o.shamir_evals, seals - o.seals,
                      opens - o.opens};
  }
};

}  // namespace accessfl

#endif  // ACCESSFL_COMMON_HPP_
