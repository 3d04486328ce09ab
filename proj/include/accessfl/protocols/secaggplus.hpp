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

#ifndef ACCESSFL_PROTOCOLS_SECAGGPLUS_HPP_
#define ACCESSFL_PROTOCOLS_SECAGGPLUS_HPP_

#include "accessfl/protocols/secagg.hpp"

namespace accessfl {
namespace protocols {

// The graph variant: identical message flow, but shares and masks only with
// the floor(log2 |C|) neighbors of a per-round random regular graph the
// server generates and ships inside the key-list broadcast.
class SecAggPlusRunner : public SecAggRunner {
 public:
  SecAggPlusRunner(const RunConfig& cfg, simnet::Network& net,
                   WeightsProvider weights)
      : SecAggRunner(cfg, net, std::move(weights), SecAggVariant::kGraph) {}
};

}  // namespace protocols
}  // namespace accessfl

#endif  // ACCESSFL_PROTOCOLS_SECAGGPLUS_HPP_
