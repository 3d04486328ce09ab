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

#ifndef ACCESSFL_SIMNET_HPP_
#define ACCESSFL_SIMNET_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "accessfl/common.hpp"
#include "accessfl/wire.hpp"

namespace accessfl {
namespace simnet {

// --------------------------------------------------------------------------
// Dropout and delay scripting.
// --------------------------------------------------------------------------

// Transient: the client misses this round's delivery barrier and rejoins the
// next round. Permanent: the client leaves the participant list for good.
enum class DropoutMode { kTransient, kPermanent };

struct DropoutEvent {
  uint32_t round = 0;
  uint32_t client = 0;
  DropoutMode mode = DropoutMode::kTransient;
  uint32_t attempt = 0;  // 0 = first delivery, 1+ = re-send attempts
};

struct DropoutSchedule {
  std::vector<DropoutEvent> events;
  std::set<std::pair<uint32_t, uint32_t>> delays;  // (round, client)

  std::set<uint32_t> dropped(uint32_t round, uint32_t attempt) const {
    std::set<uint32_t> out;
    for (const DropoutEvent& e : events) {
      if (e.round == round && e.attempt == attempt) out.insert(e.client);
    }
    return out;
  }

  bool is_delayed(uint32_t round, uint32_t client) const {
    return delays.count({round, client}) > 0;
  }

  bool empty() const { return events.empty() && delays.empty(); }

  void validate(uint32_t client_count) const {
    for (const DropoutEvent& e : events) {
      if (e.client >= client_count) {
        throw ConfigError("dropout schedule references unknown client " +
                          std::to_string(e.client));
      }
    }
    for (const auto& [round, client] : delays) {
      if (client >= client_count) {
        throw ConfigError("delay schedule references unknown client " +
                          std::to_string(client));
      }
    }
  }

  // Text form: comma-separated entries "round:client[:t|:p]" for dropouts
  // and "round:client:d" for delays. Example: "3:1,5:0:p,7:2:d".
  static DropoutSchedule parse(const std::string& text) {
    DropoutSchedule out;
    if (text.empty() || text == "none") return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      std::stringstream fields(item);
      std::string r, c, m;
      if (!std::getline(fields, r, ':') || !std::getline(fields, c, ':')) {
        throw ConfigError("bad schedule entry: " + item);
      }
      std::getline(fields, m, ':');
      uint32_t round = static_cast<uint32_t>(std::stoul(r));
      uint32_t client = static_cast<uint32_t>(std::stoul(c));
      if (m == "d") {
        out.delays.insert({round, client});
      } else if (m == "p") {
        out.events.push_back({round, client, DropoutMode::kPermanent, 0});
      } else if (m.empty() || m == "t") {
        out.events.push_back({round, client, DropoutMode::kTransient, 0});
      } else {
        throw ConfigError("bad schedule mode: " + item);
      }
    }
    return out;
  }
};

// --------------------------------------------------------------------------
// Ledger: per-round, per-direction message counts and byte totals.
// --------------------------------------------------------------------------

enum class Direction { kClientToServer = 0, kServerToClient = 1 };

inline const char* direction_name(Direction d) {
  return d == Direction::kClientToServer ? "client_to_server"
                                         : "server_to_client";
}

struct LedgerCell {
  uint64_t messages = 0;
  uint64_t bytes = 0;

  LedgerCell& operator+=(const LedgerCell& o) {
    messages += o.messages;
    bytes += o.bytes;
    return *this;
  }
  bool operator==(const LedgerCell&) const = default;
};

class MessageLedger {
 public:
  void record(uint32_t round, Direction dir, size_t bytes) {
    if (round == 0) throw DomainError("rounds are 1-based");
    if (rows_.size() < round) rows_.resize(round);
    LedgerCell& cell = rows_[round - 1].dir[static_cast<int>(dir)];
    cell.messages += 1;
    cell.bytes += bytes;
  }

  uint32_t rounds() const { return static_cast<uint32_t>(rows_.size()); }

  LedgerCell per_round(uint32_t round, Direction dir) const {
    if (round == 0 || round > rows_.size()) {
      throw DomainError("round outside ledger");
    }
    return rows_[round - 1].dir[static_cast<int>(dir)];
  }

  LedgerCell cumulative(Direction dir, uint32_t through_round) const {
    LedgerCell out;
    uint32_t upto = std::min<uint32_t>(through_round, rounds());
    for (uint32_t r = 1; r <= upto; ++r) out += per_round(r, dir);
    return out;
  }

  LedgerCell total(Direction dir) const { return cumulative(dir, rounds()); }

  // CSV schema: round, protocol, direction, messages_cum, bytes_cum.
  std::string to_csv(const std::string& protocol) const {
    std::ostringstream out;
    out << "round,protocol,direction,messages_cum,bytes_cum\n";
    LedgerCell cum[2];
    for (uint32_t r = 1; r <= rounds(); ++r) {
      for (Direction dir :
           {Direction::kClientToServer, Direction::kServerToClient}) {
        cum[static_cast<int>(dir)] += per_round(r, dir);
        const LedgerCell& c = cum[static_cast<int>(dir)];
        out << r << ',' << protocol << ',' << direction_name(dir) << ','
            << c.messages << ',' << c.bytes << '\n';
      }
    }
    return out.str();
  }

 private:
  struct Row {
    LedgerCell dir[2];
  };
  std::vector<Row> rows_;
};

struct LedgerDiffRow {
  uint32_t round = 0;
  Direction direction = Direction::kClientToServer;
  int64_t d_messages = 0;
  int64_t d_bytes = 0;
};

struct LedgerDiff {
  std::vector<LedgerDiffRow> rows;

  bool all_zero() const {
    for (const auto& r : rows) {
      if (r.d_messages != 0 || r.d_bytes != 0) return false;
    }
    return true;
  }
};

inline LedgerDiff ledger_diff(const MessageLedger& a, const MessageLedger& b) {
  if (a.rounds() != b.rounds()) {
    throw UsageError("ledgers cover different round counts");
  }
  LedgerDiff out;
  for (uint32_t r = 1; r <= a.rounds(); ++r) {
    for (Direction dir :
         {Direction::kClientToServer, Direction::kServerToClient}) {
      LedgerCell ca = a.per_round(r, dir);
      LedgerCell cb = b.per_round(r, dir);
      out.rows.push_back(LedgerDiffRow{
          r, dir, static_cast<int64_t>(ca.messages) -
                      static_cast<int64_t>(cb.messages),
          static_cast<int64_t>(ca.bytes) - static_cast<int64_t>(cb.bytes)});
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Trace: replayable ordered event log.
// --------------------------------------------------------------------------

enum class DeliveryStatus { kDelivered, kDelayed };

struct TraceEvent {
  uint64_t step = 0;
  uint32_t round = 0;
  uint32_t sender = 0;
  uint32_t receiver = 0;
  wire::MsgKind kind = wire::MsgKind::kPublicKey;
  size_t size = 0;

  std::string to_line() const {
    std::ostringstream out;
    out << step << ' ' << round << ' ';
    if (sender == wire::kServerId) {
      out << "server";
    } else {
      out << sender;
    }
    out << ' ';
    if (receiver == wire::kServerId) {
      out << "server";
    } else if (receiver == wire::kBroadcastId) {
      out << "broadcast";
    } else {
      out << receiver;
    }
    out << ' ' << wire::kind_name(kind) << ' ' << size;
    return out.str();
  }
};

class RoundTrace {
 public:
  void append(uint32_t round, uint32_t sender, uint32_t receiver,
              wire::MsgKind kind, size_t size) {
    events_.push_back(TraceEvent{next_step_++, round, sender, receiver, kind,
                                 size});
  }

  const std::vector<TraceEvent>& events() const { return events_; }

  std::string to_lines() const {
    std::ostringstream out;
    for (const TraceEvent& e : events_) out << e.to_line() << '\n';
    return out.str();
  }

  uint64_t hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const TraceEvent& e : events_) h = fnv1a64(e.to_line() + "\n", h);
    return h;
  }

 private:
  std::vector<TraceEvent> events_;
  uint64_t next_step_ = 0;
};

// --------------------------------------------------------------------------
// Network: records sends, applies the delay script, buffers late arrivals.
// --------------------------------------------------------------------------

class Network {
 public:
  Network(const DropoutSchedule& schedule) : schedule_(schedule) {}

  // Retains serialized copies of everything sent; for tests that scan the
  // traffic for values that must never appear on the wire.
  void enable_capture() { capture_ = true; }

  // A client upload. True when it makes this round's barrier; false when the
  // schedule delays it (a copy then surfaces via take_late).
  bool client_send(const wire::Message& msg) {
    ledger_.record(msg.round, Direction::kClientToServer, msg.wire_size());
    trace_.append(msg.round, msg.sender, wire::kServerId, msg.kind,
                  msg.wire_size());
    if (capture_) captured_.push_back(msg.serialize());
    ++sent_;
    bool delayed = msg.kind == wire::MsgKind::kMaskedModel &&
                   schedule_.is_delayed(msg.round, msg.sender);
    if (delayed) {
      late_box_[msg.round + 1].push_back(msg);
      ++delayed_;
      return false;
    }
    ++delivered_;
    return true;
  }

  void server_broadcast(const wire::Message& msg) {
    ledger_.record(msg.round, Direction::kServerToClient, msg.wire_size());
    trace_.append(msg.round, wire::kServerId, wire::kBroadcastId, msg.kind,
                  msg.wire_size());
    if (capture_) captured_.push_back(msg.serialize());
    ++sent_;
    ++delivered_;
  }

  void server_send(uint32_t receiver, const wire::Message& msg) {
    ledger_.record(msg.round, Direction::kServerToClient, msg.wire_size());
    trace_.append(msg.round, wire::kServerId, receiver, msg.kind,
                  msg.wire_size());
    if (capture_) captured_.push_back(msg.serialize());
    ++sent_;
    ++delivered_;
  }

  const std::vector<Bytes>& captured() const { return captured_; }

  // Messages that missed an earlier barrier and surface at `round`.
  std::vector<wire::Message> take_late(uint32_t round) {
    auto it = late_box_.find(round);
    if (it == late_box_.end()) return {};
    std::vector<wire::Message> out = std::move(it->second);
    late_box_.erase(it);
    delivered_ += out.size();
    return out;
  }

  // Every send is delivered, delivered late, or still waiting in the late
  // box; nothing vanishes.
  bool conservation_ok() const {
    uint64_t pending = 0;
    for (const auto& [round, msgs] : late_box_) pending += msgs.size();
    return sent_ == delivered_ + pending && delayed_ >= pending;
  }

  const MessageLedger& ledger() const { return ledger_; }
  const RoundTrace& trace() const { return trace_; }
  const DropoutSchedule& schedule() const { return schedule_; }
  uint64_t sent() const { return sent_; }
  uint64_t delivered() const { return delivered_; }

 private:
  DropoutSchedule schedule_;
  MessageLedger ledger_;
  RoundTrace trace_;
  std::map<uint32_t, std::vector<wire::Message>> late_box_;
  std::vector<Bytes> captured_;
  bool capture_ = false;
  uint64_t sent_ = 0;
  uint64_t delivered_ = 0;
  uint64_t delayed_ = 0;
};

}  // namespace simnet
}  // namespace accessfl

#endif  // ACCESSFL_SIMNET_HPP_
