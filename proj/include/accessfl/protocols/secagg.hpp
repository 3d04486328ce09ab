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

#ifndef ACCESSFL_PROTOCOLS_SECAGG_HPP_
#define ACCESSFL_PROTOCOLS_SECAGG_HPP_

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "accessfl/graph.hpp"
#include "accessfl/protocols/common.hpp"

namespace accessfl {
namespace protocols {

// Double-masking secure aggregation: per-round fresh key pairs, a self-mask
// from a random element b, pairwise shared masks, both threshold-shared so
// the server can unmask around dropouts. kFull pairs every client with every
// other; kGraph pairs over a fresh random k-regular neighbor graph with
// k = floor(log2 |C|).
enum class SecAggVariant { kFull, kGraph };

namespace detail {

struct HeldShare {
  Bignum b_share;
  Bignum sk_share;
};

}  // namespace detail

class SecAggClient {
 public:
  SecAggClient(uint32_t id, const RunConfig& cfg) : id_(id), cfg_(cfg) {}

  // Fresh key pairs each round (one for masking, one for share encryption);
  // the freeze_keys hook reuses round-1 pairs to reproduce the key-reuse
  // hazard.
  wire::Message round_begin(uint32_t round) {
    if (!cfg_.freeze_keys || round == 1) {
      mask_keys_ = crypto::key_gen(cfg_.params(),
                                   cfg_.entity_seed("sa-kp1", id_, round),
                                   &ops_);
      enc_keys_ = crypto::key_gen(cfg_.params(),
                                  cfg_.entity_seed("sa-kp2", id_, round),
                                  &ops_);
    } else {
      ops_.modexp += 2;  // a frozen client still reports key work as done
    }
    held_.clear();
    own_b_share_ = Bignum(0);
    wire::Message msg;
    msg.kind = wire::MsgKind::kPublicKey;
    msg.round = round;
    msg.sender = id_;
    msg.payload = wire::encode_public_keys(
        {mask_keys_.public_key, enc_keys_.public_key}, cfg_.wire_profile());
    return msg;
  }

  void receive_key_list(const wire::Message& msg, const ParticipantList& list,
                        SecAggVariant variant) {
    wire::KeyList kl = wire::decode_key_list(msg.payload, cfg_.wire_profile());
    peer_mask_pk_.clear();
    peer_enc_pk_.clear();
    for (const wire::KeyListEntry& e : kl.entries) {
      peer_mask_pk_[e.id] = e.keys.at(0);
      peer_enc_pk_[e.id] = e.keys.at(1);
    }
    uint32_t own_index = list.index_of(id_);
    partners_.clear();
    if (variant == SecAggVariant::kFull) {
      for (uint32_t idx = 0; idx < list.size(); ++idx) {
        if (idx != own_index) partners_.push_back(list.id_of(idx));
      }
    } else {
      if (!kl.adjacency) throw ProtocolError("missing neighbor graph");
      for (uint32_t idx : kl.adjacency->at(own_index)) {
        partners_.push_back(list.id_of(idx));
      }
    }
  }

  // Draws b, splits b and the masking private key among self + partners, and
  // seals one share pair per partner for routing through the server.
  std::vector<wire::Message> share_uploads(uint32_t round,
                                           const ParticipantList& list) {
    const Bignum& field = cfg_.share_field();
    b_ = crypto::SeededStream(cfg_.entity_seed("sa-b", id_, round), "b")
             .next_below(field);
    uint32_t own_index = list.index_of(id_);
    std::vector<uint32_t> points;
    points.push_back(own_index + 1);
    for (uint32_t pid : partners_) points.push_back(list.index_of(pid) + 1);
    uint32_t t = threshold(static_cast<uint32_t>(points.size()));
    crypto::SecretShares b_shares = crypto::shamir_split_at(
        b_, points, t, field, cfg_.entity_seed("sa-bsplit", id_, round),
        &ops_);
    crypto::SecretShares sk_shares = crypto::shamir_split_at(
        mask_keys_.private_key, points, t, field,
        cfg_.entity_seed("sa-sksplit", id_, round), &ops_);
    own_b_share_ = b_shares.shares[0].value;

    std::vector<wire::Message> out;
    for (size_t k = 0; k < partners_.size(); ++k) {
      uint32_t pid = partners_[k];
      wire::SharePlaintext sp;
      sp.from = id_;
      sp.to = pid;
      sp.b_x = b_shares.shares[k + 1].index;
      sp.b_y = b_shares.shares[k + 1].value;
      sp.sk_x = sk_shares.shares[k + 1].index;
      sp.sk_y = sk_shares.shares[k + 1].value;
      Bytes plaintext = wire::encode_share_plaintext(sp, cfg_.wire_profile());
      crypto::SharedSecret key = enc_secret(pid);
      Bytes ct = crypto::seal(key, plaintext,
                              crypto::message_nonce(id_, pid, round), &ops_);
      wire::Message msg;
      msg.kind = wire::MsgKind::kCipherShares;
      msg.round = round;
      msg.sender = id_;
      msg.payload = wire::encode_cipher_upload(pid, ct);
      out.push_back(std::move(msg));
    }
    return out;
  }

  void receive_bundle(const wire::Message& msg, uint32_t round) {
    for (const wire::CipherItem& item :
         wire::decode_cipher_bundle(msg.payload)) {
      crypto::SharedSecret key = enc_secret(item.peer);
      Bytes plaintext =
          crypto::open(key, item.ciphertext,
                       crypto::message_nonce(item.peer, id_, round), &ops_);
      wire::SharePlaintext sp =
          wire::decode_share_plaintext(plaintext, cfg_.wire_profile());
      if (sp.to != id_) throw ProtocolError("misrouted share");
      held_[sp.from] = detail::HeldShare{sp.b_y, sp.sk_y};
    }
  }

  wire::Message masked_update(uint32_t round,
                              const masking::QuantizedModel& weights,
                              const ParticipantList& list) {
    uint32_t own_index = list.index_of(id_);
    std::vector<uint32_t> acc = weights.elements;
    const Bignum& field = cfg_.share_field();
    std::vector<uint32_t> self = crypto::prg_expand(
        to_bytes_be(b_, (bit_length(field) + 7) / 8), cfg_.dimension,
        crypto::self_mask_label(id_, round, cfg_.prg_profile), &ops_);
    masking::add_in_place(acc, self);
    for (uint32_t pid : partners_) {
      crypto::SharedSecret s = crypto::key_agree(
          mask_keys_.private_key, peer_mask_pk_.at(pid), cfg_.params(), &ops_);
      std::vector<uint32_t> m = crypto::prg_expand(
          s.byte_encoding, cfg_.dimension,
          crypto::pair_mask_label(id_, pid, round, cfg_.prg_profile), &ops_);
      if (pairing::mask_sign(own_index, list.index_of(pid)) > 0) {
        masking::add_in_place(acc, m);
      } else {
        masking::sub_in_place(acc, m);
      }
    }
    wire::Message msg;
    msg.kind = wire::MsgKind::kMaskedModel;
    msg.round = round;
    msg.sender = id_;
    msg.payload = masking::serialize_model(acc, round, id_);
    return msg;
  }

  // Participants reveal the b-shares they hold for everyone still standing,
  // plus (in a separate message) sk-shares for dropped partners.
  std::vector<wire::Message> reveal_messages(
      uint32_t round, const std::set<uint32_t>& participants,
      const std::set<uint32_t>& dropped, const ParticipantList& list) {
    std::vector<wire::RevealEntry> b_entries;
    uint32_t own_x = list.index_of(id_) + 1;
    if (participants.count(id_)) {
      b_entries.push_back(wire::RevealEntry{id_, own_x, own_b_share_});
    }
    for (uint32_t pid : partners_) {
      if (participants.count(pid) && held_.count(pid)) {
        b_entries.push_back(
            wire::RevealEntry{pid, own_x, held_.at(pid).b_share});
      }
    }
    std::vector<wire::RevealEntry> sk_entries;
    for (uint32_t pid : partners_) {
      if (dropped.count(pid) && held_.count(pid)) {
        sk_entries.push_back(
            wire::RevealEntry{pid, own_x, held_.at(pid).sk_share});
      }
    }
    std::vector<wire::Message> out;
    wire::Message b_msg;
    b_msg.kind = wire::MsgKind::kShareReveal;
    b_msg.round = round;
    b_msg.sender = id_;
    b_msg.payload = wire::encode_reveal(wire::RevealKind::kB, b_entries,
                                        cfg_.wire_profile());
    out.push_back(std::move(b_msg));
    if (!sk_entries.empty()) {
      wire::Message sk_msg;
      sk_msg.kind = wire::MsgKind::kShareReveal;
      sk_msg.round = round;
      sk_msg.sender = id_;
      sk_msg.payload = wire::encode_reveal(wire::RevealKind::kSk, sk_entries,
                                           cfg_.wire_profile());
      out.push_back(std::move(sk_msg));
    }
    return out;
  }

  const std::vector<uint32_t>& partners() const { return partners_; }
  OpCounters& ops() { return ops_; }
  const OpCounters& ops() const { return ops_; }
  uint32_t threshold(uint32_t holders) const { return holders / 2 + 1; }

 private:
  crypto::SharedSecret enc_secret(uint32_t pid) {
    return crypto::key_agree(enc_keys_.private_key, peer_enc_pk_.at(pid),
                             cfg_.params(), &ops_);
  }

  uint32_t id_;
  const RunConfig& cfg_;
  crypto::KeyPair mask_keys_;
  crypto::KeyPair enc_keys_;
  std::map<uint32_t, Bignum> peer_mask_pk_;
  std::map<uint32_t, Bignum> peer_enc_pk_;
  std::vector<uint32_t> partners_;  // stable ids
  Bignum b_;
  Bignum own_b_share_;
  std::map<uint32_t, detail::HeldShare> held_;
  OpCounters ops_;
};

class SecAggServer {
 public:
  SecAggServer(const RunConfig& cfg, SecAggVariant variant)
      : cfg_(cfg), variant_(variant) {
    global_.elements.assign(cfg.dimension, 0);
  }

  void round_reset(uint32_t round, const ParticipantList& list) {
    round_ = round;
    list_ = list;
    key_entries_.clear();
    uploads_.clear();
    received_.clear();
    b_reveals_.clear();
    sk_reveals_.clear();
    adjacency_.reset();
  }

  void receive_public_key(const wire::Message& msg) {
    key_entries_.push_back(wire::KeyListEntry{
        msg.sender,
        wire::decode_public_keys(msg.payload, cfg_.wire_profile())});
  }

  wire::Message key_list_broadcast() {
    std::sort(key_entries_.begin(), key_entries_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    if (variant_ == SecAggVariant::kGraph) {
      uint32_t k = graph::log_degree(list_.size());
      adjacency_ = graph::k_regular_graph(
          list_.size(), k, cfg_.entity_seed("graph", wire::kServerId, round_),
          "r" + std::to_string(round_));
    }
    wire::Message msg;
    msg.kind = wire::MsgKind::kPublicKeyList;
    msg.round = round_;
    msg.sender = wire::kServerId;
    msg.payload = wire::encode_key_list(
        key_entries_, cfg_.wire_profile(),
        adjacency_ ? &*adjacency_ : nullptr);
    key_history_[round_] = key_entries_;
    return msg;
  }

  void receive_cipher_upload(const wire::Message& msg) {
    wire::CipherItem item = wire::decode_cipher_upload(msg.payload);
    uploads_[item.peer].push_back(
        wire::CipherItem{msg.sender, std::move(item.ciphertext)});
  }

  // One individualized bundle per client: everything addressed to it.
  std::vector<std::pair<uint32_t, wire::Message>> cipher_bundles() {
    std::vector<std::pair<uint32_t, wire::Message>> out;
    for (uint32_t id : list_.ids) {
      wire::Message msg;
      msg.kind = wire::MsgKind::kCipherShares;
      msg.round = round_;
      msg.sender = wire::kServerId;
      auto it = uploads_.find(id);
      static const std::vector<wire::CipherItem> kNone;
      msg.payload =
          wire::encode_cipher_bundle(it == uploads_.end() ? kNone
                                                          : it->second);
      out.emplace_back(id, std::move(msg));
    }
    return out;
  }

  void receive_masked(const wire::Message& msg) {
    received_[msg.sender] =
        masking::deserialize_model(msg.payload).elements;
  }

  void receive_late(const wire::Message& msg) {
    late_models_.push_back(masking::deserialize_model(msg.payload));
  }

  std::set<uint32_t> participants() const {
    std::set<uint32_t> out;
    for (const auto& [id, m] : received_) out.insert(id);
    return out;
  }

  wire::Message participant_broadcast() const {
    wire::Message msg;
    msg.kind = wire::MsgKind::kParticipantUpdate;
    msg.round = round_;
    msg.sender = wire::kServerId;
    std::vector<uint32_t> ids(participants().begin(), participants().end());
    msg.payload = wire::encode_participants(ids);
    return msg;
  }

  void receive_reveal(const wire::Message& msg) {
    wire::Reveal r = wire::decode_reveal(msg.payload, cfg_.wire_profile());
    auto& sink =
        r.kind == wire::RevealKind::kB ? b_reveals_ : sk_reveals_;
    for (const wire::RevealEntry& e : r.entries) {
      sink[e.owner].push_back(crypto::Share{e.x, e.y});
    }
  }

  // Reconstructs self-masks of participants and shared masks of dropped
  // clients, then opens the aggregate.
  void unmask_and_aggregate(const std::set<uint32_t>& dropped, uint32_t t) {
    const Bignum& field = cfg_.share_field();
    std::vector<const std::vector<uint32_t>*> models;
    for (const auto& [id, m] : received_) models.push_back(&m);
    std::vector<uint32_t> acc = sum_models(models, cfg_.dimension);

    for (const auto& [id, m] : received_) {
      Bignum b = reconstruct_from(b_reveals_, id, t, field);
      reconstructed_b_[round_][id] = b;
      std::vector<uint32_t> self = crypto::prg_expand(
          to_bytes_be(b, (bit_length(field) + 7) / 8), cfg_.dimension,
          crypto::self_mask_label(id, round_, cfg_.prg_profile), &ops_);
      masking::sub_in_place(acc, self);
    }

    for (uint32_t d : dropped) {
      Bignum sk = reconstruct_from(sk_reveals_, d, t, field);
      reconstructed_sk_[round_][d] = sk;
      for (const auto& [jid, m] : received_) {
        if (!are_partners(d, jid)) continue;
        Bignum pk_j = mask_pk(round_, jid);
        Bignum s = modexp(pk_j, sk, cfg_.params().prime_p, &ops_);
        std::vector<uint32_t> mask = crypto::prg_expand(
            to_bytes_be(s, cfg_.params().element_width()), cfg_.dimension,
            crypto::pair_mask_label(d, jid, round_, cfg_.prg_profile), &ops_);
        if (pairing::mask_sign(list_.index_of(jid), list_.index_of(d)) > 0) {
          masking::sub_in_place(acc, mask);
        } else {
          masking::add_in_place(acc, mask);
        }
      }
    }
    global_.elements = std::move(acc);
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

  bool are_partners(uint32_t a, uint32_t b) const {
    if (a == b) return false;
    if (variant_ == SecAggVariant::kFull) return true;
    if (!adjacency_) return false;
    uint32_t ia = list_.index_of(a);
    uint32_t ib = list_.index_of(b);
    const auto& nbrs = (*adjacency_)[ia];
    return std::find(nbrs.begin(), nbrs.end(), ib) != nbrs.end();
  }

  const masking::QuantizedModel& global() const { return global_; }
  OpCounters& ops() { return ops_; }
  const OpCounters& ops() const { return ops_; }

  // Round artifacts the server legitimately holds; the key-reuse hazard
  // harness reads these.
  const std::map<uint32_t, std::vector<uint32_t>>& last_received() const {
    return received_;
  }
  const std::vector<masking::MaskedModel>& late_models() const {
    return late_models_;
  }
  const std::map<uint32_t, Bignum>& reconstructed_sk(uint32_t round) const {
    static const std::map<uint32_t, Bignum> kEmpty;
    auto it = reconstructed_sk_.find(round);
    return it == reconstructed_sk_.end() ? kEmpty : it->second;
  }
  const std::map<uint32_t, Bignum>& reconstructed_b(uint32_t round) const {
    static const std::map<uint32_t, Bignum> kEmpty;
    auto it = reconstructed_b_.find(round);
    return it == reconstructed_b_.end() ? kEmpty : it->second;
  }
  Bignum mask_pk(uint32_t round, uint32_t id) const {
    for (const wire::KeyListEntry& e : key_history_.at(round)) {
      if (e.id == id) return e.keys.at(0);
    }
    throw ProtocolError("no key recorded for client");
  }
  const ParticipantList& list() const { return list_; }

 private:
  Bignum reconstruct_from(
      const std::map<uint32_t, std::vector<crypto::Share>>& reveals,
      uint32_t owner, uint32_t t, const Bignum& field) {
    auto it = reveals.find(owner);
    if (it == reveals.end() || it->second.size() < t) {
      throw InsufficientSharesError("cannot reconstruct for client " +
                                    std::to_string(owner));
    }
    std::vector<crypto::Share> shares = it->second;
    std::sort(shares.begin(), shares.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    shares.resize(t);  // t consistent shares suffice
    return crypto::shamir_reconstruct(shares, t, field, &ops_);
  }

  const RunConfig& cfg_;
  SecAggVariant variant_;
  uint32_t round_ = 0;
  ParticipantList list_{std::vector<uint32_t>{}};
  masking::QuantizedModel global_;
  std::vector<wire::KeyListEntry> key_entries_;
  std::map<uint32_t, std::vector<wire::KeyListEntry>> key_history_;
  std::map<uint32_t, std::vector<wire::CipherItem>> uploads_;
  std::map<uint32_t, std::vector<uint32_t>> received_;
  std::map<uint32_t, std::vector<crypto::Share>> b_reveals_;
  std::map<uint32_t, std::vector<crypto::Share>> sk_reveals_;
  std::optional<std::vector<std::vector<uint32_t>>> adjacency_;
  std::map<uint32_t, std::map<uint32_t, Bignum>> reconstructed_sk_;
  std::map<uint32_t, std::map<uint32_t, Bignum>> reconstructed_b_;
  std::vector<masking::MaskedModel> late_models_;
  OpCounters ops_;
};

class SecAggRunner {
 public:
  SecAggRunner(const RunConfig& cfg, simnet::Network& net,
               WeightsProvider weights, SecAggVariant variant)
      : cfg_(cfg),
        net_(net),
        weights_(std::move(weights)),
        variant_(variant),
        server_(cfg_, variant) {
    cfg_.validate();
    net_.schedule().validate(cfg_.client_count);
    if (variant_ == SecAggVariant::kGraph) {
      // Fail early on infeasible (k, |C|).
      graph::k_regular_graph(cfg_.client_count,
                             graph::log_degree(cfg_.client_count),
                             cfg_.master_seed(), "probe");
    }
    std::vector<uint32_t> ids(cfg_.client_count);
    for (uint32_t i = 0; i < cfg_.client_count; ++i) ids[i] = i;
    roster_ = ParticipantList(ids);
    for (uint32_t i = 0; i < cfg_.client_count; ++i) {
      clients_.emplace_back(i, cfg_);
    }
  }

  RunResult run() {
    RunResult out;
    for (uint32_t round = 1; round <= cfg_.rounds; ++round) {
      step_round(round, out);
    }
    out.final_aggregate = server_.global();
    return out;
  }

  const SecAggServer& server() const { return server_; }

 private:
  void step_round(uint32_t round, RunResult& out) {
    OpCounters client0_before = clients_[0].ops();
    OpCounters clients_before = total_client_ops();
    OpCounters server_before = server_.ops();

    for (const wire::Message& late : net_.take_late(round)) {
      server_.receive_late(late);
      ++out.late_messages_ignored;
    }

    ParticipantList list = roster_;
    server_.round_reset(round, list);
    net_.server_broadcast(server_.global_broadcast(round));

    // Fresh keys and the key list.
    for (uint32_t id : list.ids) {
      wire::Message key_msg = clients_[id].round_begin(round);
      if (net_.client_send(key_msg)) server_.receive_public_key(key_msg);
    }
    wire::Message key_list = server_.key_list_broadcast();
    net_.server_broadcast(key_list);
    for (uint32_t id : list.ids) {
      clients_[id].receive_key_list(key_list, list, variant_);
    }

    // Share routing: uploads, then one bundle per client.
    for (uint32_t id : list.ids) {
      for (const wire::Message& up : clients_[id].share_uploads(round, list)) {
        if (net_.client_send(up)) server_.receive_cipher_upload(up);
      }
    }
    for (auto& [receiver, bundle] : server_.cipher_bundles()) {
      net_.server_send(receiver, bundle);
      clients_[receiver].receive_bundle(bundle, round);
    }

    // Masked models; scheduled dropouts fail here, delayed ones miss the
    // barrier and surface next round.
    std::set<uint32_t> scheduled = net_.schedule().dropped(round, 0);
    for (uint32_t id : list.ids) {
      if (scheduled.count(id)) continue;
      const masking::QuantizedModel& w = weights_(round, id);
      wire::Message masked = clients_[id].masked_update(round, w, list);
      if (net_.client_send(masked)) server_.receive_masked(masked);
    }

    std::set<uint32_t> c2 = server_.participants();
    uint32_t t = clients_[list.id_of(0)].threshold(
        variant_ == SecAggVariant::kFull
            ? list.size()
            : graph::log_degree(list.size()) + 1);
    if (c2.size() < t) {
      throw ExperimentError("participants fell below the share threshold",
                            round);
    }
    net_.server_broadcast(server_.participant_broadcast());

    std::set<uint32_t> dropped;
    for (uint32_t id : list.ids) {
      if (!c2.count(id)) dropped.insert(id);
    }
    for (uint32_t id : list.ids) {
      if (!c2.count(id)) continue;  // only participants reveal
      for (const wire::Message& r :
           clients_[id].reveal_messages(round, c2, dropped, list)) {
        if (net_.client_send(r)) server_.receive_reveal(r);
      }
    }

    server_.unmask_and_aggregate(dropped, t);

    RoundOps ops;
    ops.round = round;
    ops.active_clients = static_cast<uint32_t>(c2.size());
    ops.client0 = clients_[0].ops() - client0_before;
    ops.clients_total = total_client_ops() - clients_before;
    ops.server = server_.ops() - server_before;
    out.round_ops.push_back(ops);

    apply_permanent_dropouts(round);
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
    if (keep.size() < 2) {
      throw ExperimentError("not enough clients remain", round);
    }
    roster_ = ParticipantList(keep);
  }

  OpCounters total_client_ops() const {
    OpCounters total;
    for (const SecAggClient& c : clients_) total += c.ops();
    return total;
  }

  RunConfig cfg_;
  simnet::Network& net_;
  WeightsProvider weights_;
  SecAggVariant variant_;
  SecAggServer server_;
  std::vector<SecAggClient> clients_;
  ParticipantList roster_{std::vector<uint32_t>{}};
};

}  // namespace protocols
}  // namespace accessfl

#endif  // ACCESSFL_PROTOCOLS_SECAGG_HPP_
