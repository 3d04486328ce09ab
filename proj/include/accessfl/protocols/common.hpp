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

#ifndef ACCESSFL_PROTOCOLS_COMMON_HPP_
#define ACCESSFL_PROTOCOLS_COMMON_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "accessfl/common.hpp"
#include "accessfl/crypto.hpp"
#include "accessfl/masking.hpp"
#include "accessfl/pairing.hpp"
#include "accessfl/shamir.hpp"
#include "accessfl/simnet.hpp"
#include "accessfl/wire.hpp"

namespace accessfl {
namespace protocols {

enum class ProtocolKind { kAccessFl, kSecAgg, kSecAggPlus, kFedAvg };

inline const char* protocol_name(ProtocolKind k) {
  switch (k) {
    case ProtocolKind::kAccessFl: return "accessfl";
    case ProtocolKind::kSecAgg: return "secagg";
    case ProtocolKind::kSecAggPlus: return "secaggplus";
    case ProtocolKind::kFedAvg: return "fedavg";
  }
  return "unknown";
}

inline ProtocolKind parse_protocol(const std::string& name) {
  if (name == "accessfl") return ProtocolKind::kAccessFl;
  if (name == "secagg") return ProtocolKind::kSecAgg;
  if (name == "secaggplus") return ProtocolKind::kSecAggPlus;
  if (name == "fedavg") return ProtocolKind::kFedAvg;
  throw UsageError("unknown protocol: " + name);
}

// Stable client identifiers in ascending order; a client's index is its
// position in this list.
struct ParticipantList {
  std::vector<uint32_t> ids;

  explicit ParticipantList(std::vector<uint32_t> sorted_ids = {})
      : ids(std::move(sorted_ids)) {
    if (!std::is_sorted(ids.begin(), ids.end())) {
      throw DomainError("participant ids must be sorted");
    }
  }

  uint32_t size() const { return static_cast<uint32_t>(ids.size()); }

  uint32_t id_of(uint32_t index) const {
    if (index >= ids.size()) throw DomainError("index outside list");
    return ids[index];
  }

  // Returns the dense index of `id`, or size() when absent.
  uint32_t index_of(uint32_t id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return size();
    return static_cast<uint32_t>(it - ids.begin());
  }

  bool contains(uint32_t id) const { return index_of(id) != size(); }
};

struct RunConfig {
  ProtocolKind protocol = ProtocolKind::kAccessFl;
  uint32_t client_count = 0;
  uint32_t rounds = 0;
  uint32_t dimension = 0;
  uint64_t seed = 1;

  // Crypto profile used for actual computation (5 = toy group, 2048 = MODP).
  int dh_bits = 5;
  // Profile whose element widths the transport encodes at; fixed-width text
  // makes ledger bytes independent of which crypto profile computed the run.
  int wire_bits = 5;

  crypto::PrgProfile prg_profile = crypto::PrgProfile::kStrictPaper;
  pairing::HistoryPolicy history_policy =
      pairing::HistoryPolicy::kPreviousRoundOnly;
  uint32_t retry_limit = pairing::kDefaultRetryLimit;
  masking::QuantizationConfig quant;
  bool freeze_keys = false;       // test hook reproducing key-reuse hazards
  bool parallel_clients = false;  // parallel stepping; identical trace

  const crypto::DhParams& params() const { return crypto::param_gen(dh_bits); }

  const Bignum& share_field() const {
    return crypto::shamir_field_for_group(params());
  }

  wire::WireProfile wire_profile() const {
    const crypto::DhParams& wp = crypto::param_gen(wire_bits);
    return wire::WireProfile::for_groups(
        wp, crypto::shamir_field_for_group(wp));
  }

  Bytes master_seed() const {
    Bytes out;
    put_be64(out, seed);
    return out;
  }

  // Out-of-band secret shared by all clients and withheld from the server.
  Bytes pairing_seed() const {
    crypto::SeededStream s(master_seed(), "pairing-seed");
    return s.next_bytes(32);
  }

  Bytes entity_seed(const std::string& purpose, uint32_t id,
                    uint32_t round = 0) const {
    crypto::SeededStream s(master_seed(), purpose + "|" + std::to_string(id) +
                                              "|" + std::to_string(round));
    return s.next_bytes(32);
  }

  void validate() const {
    if (client_count == 0 || rounds == 0 || dimension == 0) {
      throw ConfigError("clients, rounds and dimension must be positive");
    }
    if (protocol == ProtocolKind::kAccessFl && client_count < 6) {
      throw ConfigError("this protocol needs at least 6 clients");
    }
    quant.validate_for(client_count);
  }
};

using WeightsProvider = std::function<const masking::QuantizedModel&(
    uint32_t round, uint32_t client_id)>;

// Per-round snapshot of primitive-operation tallies.
struct RoundOps {
  uint32_t round = 0;
  uint32_t active_clients = 0;
  OpCounters client0;        // one representative client
  OpCounters clients_total;  // summed over clients
  OpCounters server;
};

struct RunResult {
  masking::QuantizedModel final_aggregate;
  std::vector<RoundOps> round_ops;
  std::vector<uint32_t> aborted_rounds;
  uint64_t late_messages_ignored = 0;
};

inline std::vector<uint32_t> sum_models(
    const std::vector<const std::vector<uint32_t>*>& models, size_t dim) {
  std::vector<uint32_t> acc(dim, 0);
  for (const auto* m : models) {
    if (m->size() != dim) throw DomainError("dimension mismatch in sum");
    for (size_t i = 0; i < dim; ++i) acc[i] += (*m)[i];
  }
  return acc;
}

}  // namespace protocols
}  // namespace accessfl

#endif  // ACCESSFL_PROTOCOLS_COMMON_HPP_
