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

#ifndef ACCESSFL_PROTOCOLS_FEDAVG_HPP_
#define ACCESSFL_PROTOCOLS_FEDAVG_HPP_

#include <map>
#include <vector>

#include "accessfl/protocols/common.hpp"

namespace accessfl {
namespace protocols {

// Plain federated averaging over the quantized ring: unmasked model up,
// aggregated model down. The byte/count baseline for everything else.
class FedAvgRunner {
 public:
  FedAvgRunner(const RunConfig& cfg, simnet::Network& net,
               WeightsProvider weights)
      : cfg_(cfg), net_(net), weights_(std::move(weights)) {
    cfg_.validate();
    net_.schedule().validate(cfg_.client_count);
    global_.elements.assign(cfg_.dimension, 0);
    for (uint32_t i = 0; i < cfg_.client_count; ++i) active_.push_back(i);
  }

  RunResult run() {
    net_.server_broadcast(global_broadcast(1));
    RunResult out;
    for (uint32_t round = 1; round <= cfg_.rounds; ++round) {
      step_round(round, out);
    }
    out.final_aggregate = global_;
    return out;
  }

 private:
  void step_round(uint32_t round, RunResult& out) {
    for (const wire::Message& late : net_.take_late(round)) {
      (void)late;
      ++out.late_messages_ignored;
    }
    std::set<uint32_t> dropped = net_.schedule().dropped(round, 0);
    std::map<uint32_t, std::vector<uint32_t>> received;
    for (uint32_t id : active_) {
      if (dropped.count(id)) continue;
      const masking::QuantizedModel& w = weights_(round, id);
      wire::Message msg;
      msg.kind = wire::MsgKind::kMaskedModel;  // unmasked contents
      msg.round = round;
      msg.sender = id;
      msg.payload = masking::serialize_model(w.elements, round, id);
      if (net_.client_send(msg)) {
        received.emplace(id,
                         masking::deserialize_model(msg.payload).elements);
      }
    }
    std::vector<const std::vector<uint32_t>*> models;
    for (const auto& [id, m] : received) models.push_back(&m);
    global_.elements = sum_models(models, cfg_.dimension);
    net_.server_broadcast(global_broadcast(round));

    RoundOps ops;
    ops.round = round;
    ops.active_clients = static_cast<uint32_t>(received.size());
    out.round_ops.push_back(ops);

    std::vector<uint32_t> keep;
    for (uint32_t id : active_) {
      bool leaves = false;
      for (const simnet::DropoutEvent& e : net_.schedule().events) {
        if (e.round == round && e.client == id &&
            e.mode == simnet::DropoutMode::kPermanent) {
          leaves = true;
        }
      }
      if (!leaves) keep.push_back(id);
    }
    active_ = keep;
    if (active_.empty()) {
      throw ExperimentError("all clients departed", round);
    }
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

  RunConfig cfg_;
  simnet::Network& net_;
  WeightsProvider weights_;
  masking::QuantizedModel global_;
  std::vector<uint32_t> active_;
};

}  // namespace protocols
}  // namespace accessfl

#endif  // ACCESSFL_PROTOCOLS_FEDAVG_HPP_
