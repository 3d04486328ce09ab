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

#ifndef ACCESSFL_PROTOCOLS_ACCESSFL_HPP_
#define ACCESSFL_PROTOCOLS_ACCESSFL_HPP_

#include <array>
#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "accessfl/protocols/common.hpp"

namespace accessfl {
namespace protocols {

// Pairwise-masking protocol with client-side pair selection. Clients create
// one key pair in the first round and afterwards send exactly one masked
// model per round; the server only sums what it receives and never holds
// unmasking material.
class AccessFlClient {
 public:
  AccessFlClient(uint32_t id, const RunConfig& cfg)
      : id_(id), cfg_(cfg) {}

  // First-round setup; generating a second key pair is a protocol error.
  wire::Message init(const masking::QuantizedModel& initial_global,
                     const crypto::DhParams& params) {
    if (phase_ != Phase::kFresh) {
      throw ProtocolOrderError("client key pair already generated");
    }
    (void)initial_global;  // the starting point for local training
    keys_ = crypto::key_gen(params, cfg_.entity_seed("dh", id_), &ops_);
    phase_ = Phase::kAwaitKeyList;
    wire::Message msg;
    msg.kind = wire::MsgKind::kPublicKey;
    msg.round = 1;
    msg.sender = id_;
    msg.payload =
        wire::encode_public_keys({keys_.public_key}, cfg_.wire_profile());
    return msg;
  }

  void receive_key_list(const wire::Message& msg) {
    if (phase_ != Phase::kAwaitKeyList) {
      throw ProtocolOrderError("unexpected key list");
    }
    wire::KeyList list = wire::decode_key_list(msg.payload,
                                               cfg_.wire_profile());
    for (const wire::KeyListEntry& e : list.entries) {
      peer_keys_[e.id] = e.keys.at(0);
    }
    phase_ = Phase::kReady;
  }

  // Regular per-round update (first delivery attempt).
  wire::Message masked_update(uint32_t round,
                              const masking::QuantizedModel& weights,
                              const ParticipantList& list) {
    if (phase_ != Phase::kReady) {
      throw ProtocolOrderError("public key list not yet received");
    }
    pairing::PairingContext ctx = context_for(round, list.size(), 0);
    pairing::DistanceDraw draw = pairing::derive_distance(ctx);
    used_this_round_ = {draw.distance};
    return build(round, weights, list, draw.distance);
  }

  // Re-pair after the server announced survivors; excludes both the previous
  // round's distance and every distance already used this round.
  wire::Message repaired_update(uint32_t round,
                                const masking::QuantizedModel& weights,
                                const ParticipantList& survivors,
                                uint32_t attempt) {
    if (phase_ != Phase::kReady) {
      throw ProtocolOrderError("public key list not yet received");
    }
    pairing::PairingContext ctx = context_for(round, survivors.size(),
                                              attempt - 1);
    ctx = pairing::repair_after_dropout(ctx, survivors.size());
    pairing::DistanceDraw draw = pairing::derive_distance(ctx);
    used_this_round_.insert(draw.distance);
    return build(round, weights, survivors, draw.distance);
  }

  // Stand-in for hearing the round's closing broadcast: every client tracks
  // the distance the group ended the round with, so next round's exclusion
  // set agrees network-wide even for clients whose upload was lost. An
  // aborted round carries no distance.
  void sync_round_end(uint32_t round,
                      std::optional<uint32_t> final_distance) {
    (void)round;
    if (final_distance) {
      prev_distance_ = *final_distance;
      if (cfg_.history_policy == pairing::HistoryPolicy::kAllHistory) {
        all_history_.insert(used_this_round_.begin(), used_this_round_.end());
        all_history_.insert(*final_distance);
      }
    }
    used_this_round_.clear();
  }

  uint32_t last_used_distance() const {
    if (used_this_round_.empty()) throw ProtocolOrderError("no distance yet");
    return *used_this_round_.rbegin();
  }

  uint32_t id() const { return id_; }
  const crypto::KeyPair& keys() const { return keys_; }
  OpCounters& ops() { return ops_; }
  const OpCounters& ops() const { return ops_; }

 private:
  enum class Phase { kFresh, kAwaitKeyList, kReady };

  pairing::PairingContext context_for(uint32_t round, uint32_t count,
                                      uint32_t retries_so_far) {
    pairing::PairingContext ctx;
    ctx.participant_count = count;
    ctx.round_number = round;
    ctx.pairing_seed = cfg_.pairing_seed();
    ctx.retry_counter = retries_so_far;
    ctx.retry_limit = cfg_.retry_limit;
    if (cfg_.history_policy == pairing::HistoryPolicy::kAllHistory) {
      ctx.distance_history = all_history_;
      // Reset-on-exhaustion: when every distance has been used at some point,
      // fall back to excluding only the previous round's.
      bool any_left = false;
      for (uint32_t d = 1; d <= ctx.max_distance(); ++d) {
        if (!ctx.distance_history.count(d)) any_left = true;
      }
      if (!any_left) {
        ctx.distance_history.clear();
        all_history_.clear();
        if (prev_distance_) ctx.distance_history.insert(*prev_distance_);
      }
    } else if (prev_distance_) {
      ctx.distance_history.insert(*prev_distance_);
    }
    ctx.distance_history.insert(used_this_round_.begin(),
                                used_this_round_.end());
    return ctx;
  }

  wire::Message build(uint32_t round, const masking::QuantizedModel& weights,
                      const ParticipantList& list, uint32_t distance) {
    uint32_t own_index = list.index_of(id_);
    if (own_index == list.size()) {
      throw ProtocolError("client not in the participant list");
    }
    pairing::PairAssignment assign =
        pairing::pair_indices(own_index, distance, list.size());
    masking::MaskedModel masked = masking::build_masked_model(
        weights, assign, id_, keys_, partner(list, assign.first_pair),
        partner(list, assign.second_pair), cfg_.params(), cfg_.prg_profile,
        round, &ops_);
    wire::Message msg;
    msg.kind = wire::MsgKind::kMaskedModel;
    msg.round = round;
    msg.sender = id_;
    msg.payload = masking::serialize_model(masked.elements, round, id_);
    return msg;
  }

  masking::Partner partner(const ParticipantList& list, uint32_t index) const {
    uint32_t pid = list.id_of(index);
    auto it = peer_keys_.find(pid);
    if (it == peer_keys_.end()) return masking::Partner{};
    return masking::Partner{index, pid, it->second, true};
  }

  uint32_t id_;
  const RunConfig& cfg_;
  Phase phase_ = Phase::kFresh;
  crypto::KeyPair keys_;
  std::map<uint32_t, Bignum> peer_keys_;
  std::optional<uint32_t> prev_distance_;
  std::set<uint32_t> used_this_round_;
  std::set<uint32_t> all_history_;
  OpCounters ops_;
};

// Server state machine: collects public keys once, then sums masked models.
// There is no unmasking path; the only kinds it consumes are listed in
// kAcceptedKinds.
class AccessFlServer {
 public:
  static constexpr std::array<wire::MsgKind, 2> kAcceptedKinds = {
      wire::MsgKind::kPublicKey, wire::MsgKind::kMaskedModel};

  AccessFlServer(const RunConfig& cfg, masking::QuantizedModel initial_global)
      : cfg_(cfg), global_(std::move(initial_global)) {}

  void receive(const wire::Message& msg) {
    switch (msg.kind) {
      case wire::MsgKind::kPublicKey: {
        auto keys = wire::decode_public_keys(msg.payload, cfg_.wire_profile());
        key_list_.push_back(wire::KeyListEntry{msg.sender, keys});
        break;
      }
      case wire::MsgKind::kMaskedModel: {
        masking::MaskedModel m = masking::deserialize_model(msg.payload);
        received_.emplace(msg.sender, std::move(m.elements));
        break;
      }
      default:
        throw ProtocolError("server does not consume this message kind");
    }
  }

  wire::Message key_list_broadcast() {
    std::sort(key_list_.begin(), key_list_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    wire::Message msg;
    msg.kind = wire::MsgKind::kPublicKeyList;
    msg.round = 1;
    msg.sender = wire::kServerId;
    msg.payload = wire::encode_key_list(key_list_, cfg_.wire_profile());
    return msg;
  }

  void begin_collection() { received_.clear(); }

  std::vector<uint32_t> received_senders() const {
    std::vector<uint32_t> out;
    out.reserve(received_.size());
    for (const auto& [id, m] : received_) out.push_back(id);
    return out;  // std::map keeps them sorted
  }

  wire::Message participant_update(uint32_t round) const {
    wire::Message msg;
    msg.kind = wire::MsgKind::kParticipantUpdate;
    msg.round = round;
    msg.sender = wire::kServerId;
    msg.payload = wire::encode_participants(received_senders());
    return msg;
  }

  // Plain modular sum of whatever arrived; masks cancel on their own.
  void aggregate(uint32_t round) {
    std::vector<const std::vector<uint32_t>*> models;
    models.reserve(received_.size());
    for (const auto& [id, m] : received_) models.push_back(&m);
    global_.elements = sum_models(models, cfg_.dimension);
    (void)round;
  }

  wire::Message global_broadcast(uint32_t round) const {
    wire::Message msg;
    msg.kind = wire::MsgKind::kGlobalModel;
    msg.round = round;
    msg.sender = wire::kServerId;
    msg.payload =
        masking::serialize_model(global_.elements, round, wire::kServerId);
    return msg;
  }

  const masking::QuantizedModel& global() const { return global_; }
  size_t received_count() const { return received_.size(); }

 private:
  const RunConfig& cfg_;
  masking::QuantizedModel global_;
  std::vector<wire::KeyListEntry> key_list_;
  std::map<uint32_t, std::vector<uint32_t>> received_;
};

// Drives one full experiment: setup round, then per-round update/aggregate
// with scripted dropouts, re-pairing and aborts.
class AccessFlRunner {
 public:
  AccessFlRunner(const RunConfig& cfg, simnet::Network& net,
                 WeightsProvider weights)
      : cfg_(cfg),
        net_(net),
        weights_(std::move(weights)),
        server_(cfg, masking::QuantizedModel{
                         std::vector<uint32_t>(cfg.dimension, 0)}) {
    cfg_.validate();
    net_.schedule().validate(cfg_.client_count);
    std::vector<uint32_t> ids(cfg_.client_count);
    for (uint32_t i = 0; i < cfg_.client_count; ++i) ids[i] = i;
    roster_ = ParticipantList(ids);
    clients_.reserve(cfg_.client_count);
    for (uint32_t i = 0; i < cfg_.client_count; ++i) {
      clients_.emplace_back(i, cfg_);
    }
  }

  RunResult run() {
    setup();
    for (uint32_t round = 1; round <= cfg_.rounds; ++round) {
      step_round(round);
    }
    RunResult out;
    out.final_aggregate = server_.global();
    out.round_ops = std::move(round_ops_);
    out.aborted_rounds = std::move(aborted_);
    out.late_messages_ignored = late_ignored_;
    return out;
  }

  const AccessFlServer& server() const { return server_; }

 private:
  void setup() {
    // Initial global model, one public key per client, key list back.
    net_.server_broadcast(server_.global_broadcast(1));
    for (AccessFlClient& c : clients_) {
      wire::Message msg = c.init(server_.global(), cfg_.params());
      if (net_.client_send(msg)) server_.receive(msg);
    }
    wire::Message key_list = server_.key_list_broadcast();
    net_.server_broadcast(key_list);
    for (AccessFlClient& c : clients_) c.receive_key_list(key_list);
  }

  void step_round(uint32_t round) {
    OpCounters client0_before = clients_[0].ops();
    OpCounters clients_before = total_client_ops();

    for (const wire::Message& late : net_.take_late(round)) {
      (void)late;  // stale masked models are ignored, but accounted
      ++late_ignored_;
    }

    ParticipantList expected = roster_;
    try {
      server_.begin_collection();
      send_updates(round, expected, 0);

      uint32_t attempt = 0;
      while (server_.received_count() < expected.size()) {
        std::vector<uint32_t> survivors = server_.received_senders();
        ++attempt;
        if (survivors.size() < pairing::kMinParticipants ||
            attempt > cfg_.retry_limit) {
          throw AbortRoundError("round cannot complete");
        }
        net_.server_broadcast(server_.participant_update(round));
        expected = ParticipantList(survivors);
        server_.begin_collection();
        send_updates(round, expected, attempt);
      }
    } catch (const AbortRoundError&) {
      abort_round(round, expected.size(), client0_before, clients_before);
      return;
    } catch (const ExhaustionError&) {
      abort_round(round, expected.size(), client0_before, clients_before);
      return;
    }

    server_.aggregate(round);
    net_.server_broadcast(server_.global_broadcast(round));

    // Everyone observed the closing broadcasts; align distance history.
    uint32_t final_distance =
        clients_[expected.id_of(0)].last_used_distance();
    finish_round_state(round, final_distance);
    record_ops(round, expected.size(), client0_before, clients_before);
    apply_permanent_dropouts(round);
  }

  // Previous global model is re-broadcast unchanged and the round's pairing
  // state is discarded.
  void abort_round(uint32_t round, uint32_t active,
                   const OpCounters& client0_before,
                   const OpCounters& clients_before) {
    aborted_.push_back(round);
    net_.server_broadcast(server_.global_broadcast(round));
    finish_round_state(round, std::nullopt);
    record_ops(round, active, client0_before, clients_before);
    apply_permanent_dropouts(round);
  }

  void send_updates(uint32_t round, const ParticipantList& list,
                    uint32_t attempt) {
    std::set<uint32_t> dropped = net_.schedule().dropped(round, attempt);
    std::vector<uint32_t> senders;
    for (uint32_t id : list.ids) {
      if (!dropped.count(id)) senders.push_back(id);
    }
    std::vector<wire::Message> prepared(senders.size());
    auto build = [&](size_t slot) {
      uint32_t id = senders[slot];
      const masking::QuantizedModel& w = weights_(round, id);
      prepared[slot] =
          attempt == 0
              ? clients_[id].masked_update(round, w, list)
              : clients_[id].repaired_update(round, w, list, attempt);
    };
    if (cfg_.parallel_clients && senders.size() > 1) {
      // Parallel stepping: build in worker threads, send in index order so
      // the trace is identical to the sequential mode.
      const size_t workers =
          std::min<size_t>(std::thread::hardware_concurrency(),
                           senders.size());
      std::vector<std::thread> pool;
      std::atomic<size_t> next{0};
      for (size_t wkr = 0; wkr < workers; ++wkr) {
        pool.emplace_back([&] {
          for (size_t slot = next.fetch_add(1); slot < senders.size();
               slot = next.fetch_add(1)) {
            build(slot);
          }
        });
      }
      for (auto& t : pool) t.join();
    } else {
      for (size_t slot = 0; slot < senders.size(); ++slot) build(slot);
    }
    for (const wire::Message& msg : prepared) {
      if (net_.client_send(msg)) server_.receive(msg);
    }
  }

  void finish_round_state(uint32_t round,
                          std::optional<uint32_t> final_distance) {
    for (AccessFlClient& c : clients_) {
      c.sync_round_end(round, final_distance);
    }
  }

  void apply_permanent_dropouts(uint32_t round) {
    std::vector<uint32_t> keep;
    for (uint32_t id : roster_.ids) {
      bool leaves = false;
      for (const simnet::DropoutEvent& e : net_.schedule().events) {
        if (e.round == round && e.client == id &&
            e.mode == simnet::DropoutMode::kPermanent) {
          leaves = true;
        }
      }
      if (!leaves) keep.push_back(id);
    }
    if (keep.size() < pairing::kMinParticipants) {
      throw ExperimentError("participants fell below the minimum", round);
    }
    roster_ = ParticipantList(keep);
  }

  OpCounters total_client_ops() const {
    OpCounters total;
    for (const AccessFlClient& c : clients_) total += c.ops();
    return total;
  }

  void record_ops(uint32_t round, uint32_t active,
                  const OpCounters& client0_before,
                  const OpCounters& clients_before) {
    RoundOps ops;
    ops.round = round;
    ops.active_clients = active;
    ops.client0 = clients_[0].ops() - client0_before;
    ops.clients_total = total_client_ops() - clients_before;
    round_ops_.push_back(ops);
  }

  RunConfig cfg_;
  simnet::Network& net_;
  WeightsProvider weights_;
  AccessFlServer server_;
  std::vector<AccessFlClient> clients_;
  ParticipantList roster_{std::vector<uint32_t>{}};
  std::vector<RoundOps> round_ops_;
  std::vector<uint32_t> aborted_;
  uint64_t late_ignored_ = 0;
};

}  // namespace protocols
}  // namespace accessfl

#endif  // ACCESSFL_PROTOCOLS_ACCESSFL_HPP_
