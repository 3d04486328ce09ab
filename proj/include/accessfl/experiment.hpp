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

#ifndef ACCESSFL_EXPERIMENT_HPP_
#define ACCESSFL_EXPERIMENT_HPP_

#include <array>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "accessfl/protocols/accessfl.hpp"
#include "accessfl/protocols/fedavg.hpp"
#include "accessfl/protocols/secagg.hpp"
#include "accessfl/protocols/secaggplus.hpp"
#include "accessfl/simnet.hpp"

namespace accessfl {
namespace experiment {

// Parameter count of the benchmark dense network shape (784-200-200-10).
constexpr uint32_t kBenchModelDimension = 199210;

inline uint32_t parse_model_dimension(const std::string& spec) {
  if (spec == "2nn-mnist-shape") return kBenchModelDimension;
  if (spec.rfind("synthetic:", 0) == 0) {
    uint32_t dim = static_cast<uint32_t>(std::stoul(spec.substr(10)));
    if (dim == 0) throw ConfigError("model dimension must be positive");
    return dim;
  }
  throw ConfigError("unknown model spec: " + spec);
}

// Fixed per-client models for accounting runs: drawn once per client from
// the run seed, reused every round. Values are irrelevant to ledgers but the
// protocols still execute on real data.
class StaticWeights {
 public:
  StaticWeights(const protocols::RunConfig& cfg) {
    models_.reserve(cfg.client_count);
    for (uint32_t id = 0; id < cfg.client_count; ++id) {
      crypto::SeededStream stream(cfg.entity_seed("weights", id), "w");
      std::vector<double> w(cfg.dimension);
      for (double& x : w) {
        x = (static_cast<double>(stream.next_u32()) / 4294967296.0 - 0.5) *
            4.0;
      }
      models_.push_back(masking::quantize(w, cfg.quant));
    }
  }

  const masking::QuantizedModel& operator()(uint32_t round,
                                            uint32_t id) const {
    (void)round;
    return models_.at(id);
  }

  const std::vector<masking::QuantizedModel>& models() const {
    return models_;
  }

 private:
  std::vector<masking::QuantizedModel> models_;
};

struct ExperimentOutput {
  protocols::RunResult run;
  simnet::MessageLedger ledger;
  uint64_t trace_hash = 0;
  // Keeps trace and schedule alive for dumping / diffing.
  std::shared_ptr<simnet::Network> net;

  std::string summary(const protocols::RunConfig& cfg) const {
    std::ostringstream out;
    out << "protocol=" << protocols::protocol_name(cfg.protocol)
        << " clients=" << cfg.client_count << " rounds=" << cfg.rounds
        << " dimension=" << cfg.dimension << " seed=" << cfg.seed << "\n";
    simnet::LedgerCell c =
        ledger.total(simnet::Direction::kClientToServer);
    simnet::LedgerCell s =
        ledger.total(simnet::Direction::kServerToClient);
    out << "client_to_server messages=" << c.messages << " bytes=" << c.bytes
        << "\n";
    out << "server_to_client messages=" << s.messages << " bytes=" << s.bytes
        << "\n";
    OpCounters clients, server;
    for (const protocols::RoundOps& r : run.round_ops) {
      clients += r.clients_total;
      server += r.server;
    }
    out << "client_ops modexp=" << clients.modexp
        << " prg_blocks=" << clients.prg_blocks
        << " shamir_evals=" << clients.shamir_evals
        << " seals=" << clients.seals << " opens=" << clients.opens << "\n";
    out << "server_ops modexp=" << server.modexp
        << " prg_blocks=" << server.prg_blocks
        << " shamir_evals=" << server.shamir_evals << "\n";
    out << "aborted_rounds=" << run.aborted_rounds.size()
        << " late_ignored=" << run.late_messages_ignored
        << " trace_hash=" << trace_hash << "\n";
    return out.str();
  }
};

inline ExperimentOutput run_experiment(
    const protocols::RunConfig& cfg,
    const simnet::DropoutSchedule& schedule = {},
    bool capture_payloads = false) {
  cfg.validate();
  auto net = std::make_shared<simnet::Network>(schedule);
  if (capture_payloads) net->enable_capture();
  StaticWeights weights(cfg);
  protocols::WeightsProvider provider =
      [&weights](uint32_t round, uint32_t id)
      -> const masking::QuantizedModel& { return weights(round, id); };

  ExperimentOutput out;
  switch (cfg.protocol) {
    case protocols::ProtocolKind::kAccessFl: {
      protocols::AccessFlRunner runner(cfg, *net, provider);
      out.run = runner.run();
      break;
    }
    case protocols::ProtocolKind::kFedAvg: {
      protocols::FedAvgRunner runner(cfg, *net, provider);
      out.run = runner.run();
      break;
    }
    case protocols::ProtocolKind::kSecAgg: {
      protocols::SecAggRunner runner(cfg, *net, provider,
                                     protocols::SecAggVariant::kFull);
      out.run = runner.run();
      break;
    }
    case protocols::ProtocolKind::kSecAggPlus: {
      protocols::SecAggPlusRunner runner(cfg, *net, provider);
      out.run = runner.run();
      break;
    }
  }
  if (!net->conservation_ok()) {
    throw Error("message conservation violated");
  }
  out.ledger = net->ledger();
  out.trace_hash = net->trace().hash();
  out.net = net;
  return out;
}

// --------------------------------------------------------------------------
// Reference accounting totals for the 100-client benchmark, cumulative at
// rounds 10/30/50/70/100 with no dropout. Count cells must match exactly;
// byte cells carry a 5% tolerance plus ordering constraints, since they
// depend on element encodings the reference tables do not disclose.
// --------------------------------------------------------------------------

constexpr uint32_t kBenchClients = 100;
constexpr std::array<uint32_t, 5> kCheckpoints = {10, 30, 50, 70, 100};

struct ReferenceRow {
  uint32_t round;
  uint64_t accessfl;
  uint64_t secagg;
  uint64_t secaggplus;
  uint64_t fedavg;
};

// Total messages sent from clients (no-dropout column).
constexpr std::array<ReferenceRow, 5> kReferenceClientTotals = {{
    {10, 1100, 102000, 9000, 1000},
    {30, 3100, 306000, 27000, 3000},
    {50, 5100, 510000, 45000, 5000},
    {70, 7100, 714000, 63000, 7000},
    {100, 10100, 1020000, 90000, 10000},
}};

// Total messages sent from the server (no-dropout column).
constexpr std::array<ReferenceRow, 5> kReferenceServerTotals = {{
    {10, 12, 1030, 1030, 11},
    {30, 32, 3090, 3090, 31},
    {50, 52, 5150, 5150, 51},
    {70, 72, 7210, 7210, 71},
    {100, 102, 10300, 10300, 101},
}};

// Server byte totals (decimal MB) at round 100 for the two protocols whose
// payloads are fully pinned by the wire format.
constexpr double kReferenceAccessFlServerMb = 78.615;
constexpr double kReferenceFedAvgServerMb = 78.594;
constexpr double kByteTolerance = 0.05;
constexpr double kOrderingFactor = 2.0;

struct CellVerdict {
  std::string table;
  uint32_t round = 0;
  std::string protocol;
  double expected = 0;
  double measured = 0;
  bool pass = false;
  std::string note;
};

struct VerifyReport {
  std::vector<CellVerdict> cells;

  bool all_pass() const {
    for (const CellVerdict& c : cells) {
      if (!c.pass) return false;
    }
    return true;
  }

  std::vector<std::string> failing_cells() const {
    std::vector<std::string> out;
    for (const CellVerdict& c : cells) {
      if (!c.pass) {
        out.push_back(c.table + "/round" + std::to_string(c.round) + "/" +
                      c.protocol);
      }
    }
    return out;
  }

  std::string to_text() const {
    std::ostringstream out;
    for (const CellVerdict& c : cells) {
      out << (c.pass ? "PASS" : "FAIL") << ' ' << c.table << " round "
          << std::setw(3) << c.round << ' ' << std::setw(10) << c.protocol
          << " expected " << c.expected << " measured " << c.measured;
      if (!c.note.empty()) out << "  (" << c.note << ")";
      out << '\n';
    }
    return out.str();
  }
};

// Measured cumulative message totals, keyed by protocol then round.
struct MeasuredCounts {
  std::map<std::string, std::map<uint32_t, uint64_t>> client_totals;
  std::map<std::string, std::map<uint32_t, uint64_t>> server_totals;
};

inline MeasuredCounts measure_counts(uint64_t seed = 7,
                                     std::ostream* progress = nullptr) {
  MeasuredCounts out;
  for (protocols::ProtocolKind kind :
       {protocols::ProtocolKind::kAccessFl, protocols::ProtocolKind::kSecAgg,
        protocols::ProtocolKind::kSecAggPlus,
        protocols::ProtocolKind::kFedAvg}) {
    protocols::RunConfig cfg;
    cfg.protocol = kind;
    cfg.client_count = kBenchClients;
    cfg.rounds = 100;
    cfg.dimension = 4;  // counts are dimension-independent
    cfg.seed = seed;
    if (progress != nullptr) {
      *progress << "counting " << protocols::protocol_name(kind) << "...\n";
    }
    ExperimentOutput run = run_experiment(cfg);
    for (uint32_t cp : kCheckpoints) {
      out.client_totals[protocols::protocol_name(kind)][cp] =
          run.ledger.cumulative(simnet::Direction::kClientToServer, cp)
              .messages;
      out.server_totals[protocols::protocol_name(kind)][cp] =
          run.ledger.cumulative(simnet::Direction::kServerToClient, cp)
              .messages;
    }
  }
  return out;
}

inline void compare_counts(const MeasuredCounts& m, VerifyReport& report) {
  auto check = [&report](const std::string& table, uint32_t round,
                         const std::string& protocol, uint64_t expected,
                         uint64_t measured) {
    CellVerdict v;
    v.table = table;
    v.round = round;
    v.protocol = protocol;
    v.expected = static_cast<double>(expected);
    v.measured = static_cast<double>(measured);
    v.pass = expected == measured;
    report.cells.push_back(v);
  };
  for (const ReferenceRow& row : kReferenceClientTotals) {
    check("client-messages", row.round, "accessfl", row.accessfl,
          m.client_totals.at("accessfl").at(row.round));
    check("client-messages", row.round, "secagg", row.secagg,
          m.client_totals.at("secagg").at(row.round));
    check("client-messages", row.round, "secaggplus", row.secaggplus,
          m.client_totals.at("secaggplus").at(row.round));
    check("client-messages", row.round, "fedavg", row.fedavg,
          m.client_totals.at("fedavg").at(row.round));
  }
  for (const ReferenceRow& row : kReferenceServerTotals) {
    check("server-messages", row.round, "accessfl", row.accessfl,
          m.server_totals.at("accessfl").at(row.round));
    check("server-messages", row.round, "secagg", row.secagg,
          m.server_totals.at("secagg").at(row.round));
    check("server-messages", row.round, "secaggplus", row.secaggplus,
          m.server_totals.at("secaggplus").at(row.round));
    check("server-messages", row.round, "fedavg", row.fedavg,
          m.server_totals.at("fedavg").at(row.round));
  }
}

struct MeasuredBytes {
  double accessfl_mb = 0;
  double fedavg_mb = 0;
  double secagg_mb = 0;      // scaled to 100 rounds
  double secaggplus_mb = 0;  // scaled to 100 rounds
  bool secagg_constant_rate = false;
  bool secaggplus_constant_rate = false;
};

// Byte totals at the benchmark shape. The two heavyweight baselines repeat
// the identical message pattern every no-dropout round, so they are measured
// over a few rounds, the per-round rate is asserted constant, and the
// round-100 figure is the exact linear extension.
inline MeasuredBytes measure_bytes(uint64_t seed = 7,
                                   std::ostream* progress = nullptr,
                                   uint32_t short_rounds = 3) {
  MeasuredBytes out;
  auto base_cfg = [&](protocols::ProtocolKind kind, uint32_t rounds) {
    protocols::RunConfig cfg;
    cfg.protocol = kind;
    cfg.client_count = kBenchClients;
    cfg.rounds = rounds;
    cfg.dimension = kBenchModelDimension;
    cfg.seed = seed;
    cfg.dh_bits = 5;      // toy group computes the run...
    cfg.wire_bits = 2048; // ...at production transport widths
    return cfg;
  };
  auto mb = [](uint64_t bytes) { return static_cast<double>(bytes) / 1e6; };

  if (progress != nullptr) *progress << "byte run: accessfl (100 rounds)\n";
  ExperimentOutput a =
      run_experiment(base_cfg(protocols::ProtocolKind::kAccessFl, 100));
  out.accessfl_mb =
      mb(a.ledger.total(simnet::Direction::kServerToClient).bytes);

  if (progress != nullptr) *progress << "byte run: fedavg (100 rounds)\n";
  ExperimentOutput f =
      run_experiment(base_cfg(protocols::ProtocolKind::kFedAvg, 100));
  out.fedavg_mb = mb(f.ledger.total(simnet::Direction::kServerToClient).bytes);

  auto rate_run = [&](protocols::ProtocolKind kind, double* total_mb,
                      bool* constant) {
    if (progress != nullptr) {
      *progress << "byte run: " << protocols::protocol_name(kind) << " ("
                << short_rounds << " rounds, per-round rate)\n";
    }
    ExperimentOutput run = run_experiment(base_cfg(kind, short_rounds));
    uint64_t first =
        run.ledger.per_round(1, simnet::Direction::kServerToClient).bytes;
    *constant = true;
    for (uint32_t r = 2; r <= short_rounds; ++r) {
      if (run.ledger.per_round(r, simnet::Direction::kServerToClient).bytes !=
          first) {
        *constant = false;
      }
    }
    *total_mb = mb(first * 100);
  };
  rate_run(protocols::ProtocolKind::kSecAgg, &out.secagg_mb,
           &out.secagg_constant_rate);
  rate_run(protocols::ProtocolKind::kSecAggPlus, &out.secaggplus_mb,
           &out.secaggplus_constant_rate);
  return out;
}

inline void compare_bytes(const MeasuredBytes& m, VerifyReport& report) {
  auto within = [](double measured, double expected, double tol) {
    return measured >= expected * (1 - tol) && measured <= expected * (1 + tol);
  };
  report.cells.push_back(CellVerdict{
      "server-megabytes", 100, "accessfl", kReferenceAccessFlServerMb,
      m.accessfl_mb,
      within(m.accessfl_mb, kReferenceAccessFlServerMb, kByteTolerance),
      "within 5%"});
  report.cells.push_back(CellVerdict{
      "server-megabytes", 100, "fedavg", kReferenceFedAvgServerMb,
      m.fedavg_mb,
      within(m.fedavg_mb, kReferenceFedAvgServerMb, kByteTolerance),
      "within 5%"});
  report.cells.push_back(CellVerdict{
      "server-megabytes", 100, "secagg-vs-secaggplus",
      kOrderingFactor * m.secaggplus_mb, m.secagg_mb,
      m.secagg_constant_rate && m.secagg_mb >= kOrderingFactor *
                                                   m.secaggplus_mb,
      "ordering >= 2x, constant per-round rate"});
  report.cells.push_back(CellVerdict{
      "server-megabytes", 100, "secaggplus-vs-accessfl",
      kOrderingFactor * m.accessfl_mb, m.secaggplus_mb,
      m.secaggplus_constant_rate && m.secaggplus_mb >= kOrderingFactor *
                                                           m.accessfl_mb,
      "ordering >= 2x, constant per-round rate"});
}

inline VerifyReport verify_tables(bool include_bytes = true,
                                  std::ostream* progress = nullptr,
                                  uint64_t seed = 7) {
  VerifyReport report;
  compare_counts(measure_counts(seed, progress), report);
  if (include_bytes) {
    compare_bytes(measure_bytes(seed, progress), report);
  }
  return report;
}

// --------------------------------------------------------------------------
// Side-by-side protocol comparison.
// --------------------------------------------------------------------------

struct CompareResult {
  std::string csv;      // ledger rows for every protocol, shared schema
  std::string summary;  // totals, per-client rates, ratios
};

inline CompareResult compare_protocols(
    const std::vector<protocols::ProtocolKind>& kinds,
    protocols::RunConfig base, const simnet::DropoutSchedule& schedule = {}) {
  if (kinds.size() < 2) {
    throw UsageError("compare needs at least two protocols");
  }
  CompareResult out;
  std::ostringstream csv;
  std::ostringstream summary;
  csv << "round,protocol,direction,messages_cum,bytes_cum\n";
  std::vector<std::pair<std::string, simnet::LedgerCell>> client_totals;
  for (protocols::ProtocolKind kind : kinds) {
    protocols::RunConfig cfg = base;
    cfg.protocol = kind;
    ExperimentOutput run = run_experiment(cfg, schedule);
    std::string body = run.ledger.to_csv(protocols::protocol_name(kind));
    csv << body.substr(body.find('\n') + 1);  // drop repeated header
    simnet::LedgerCell c =
        run.ledger.total(simnet::Direction::kClientToServer);
    simnet::LedgerCell s =
        run.ledger.total(simnet::Direction::kServerToClient);
    client_totals.emplace_back(protocols::protocol_name(kind), c);
    OpCounters clients;
    for (const protocols::RoundOps& r : run.run.round_ops) {
      clients += r.clients_total;
    }
    summary << protocols::protocol_name(kind) << ": client messages "
            << c.messages << " (bytes " << c.bytes << "), server messages "
            << s.messages << " (bytes " << s.bytes << "), client modexp "
            << clients.modexp << ", client prg_blocks " << clients.prg_blocks
            << "\n";
  }
  for (size_t i = 1; i < client_totals.size(); ++i) {
    summary << "client-message ratio " << client_totals[i].first << "/"
            << client_totals[0].first << " = "
            << static_cast<double>(client_totals[i].second.messages) /
                   static_cast<double>(client_totals[0].second.messages)
            << "\n";
  }
  out.csv = csv.str();
  out.summary = summary.str();
  return out;
}

}  // namespace experiment
}  // namespace accessfl

#endif  // ACCESSFL_EXPERIMENT_HPP_
