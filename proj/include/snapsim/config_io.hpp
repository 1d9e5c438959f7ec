#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "snapsim/simnet.hpp"
#include "snapsim/workload.hpp"

namespace snapsim {

//! Experiment description: one simulation/workload shape swept over a
//! protocol list and a seed list.
struct experiment_config {
  sim_config sim;
  workload_config workload;
  std::uint32_t clients = 16;
  std::vector<protocol> protocols{protocol::cv, protocol::op, protocol::av,
                                  protocol::cure};
  std::vector<std::uint64_t> seeds{1};
};

namespace detail {

inline latency_range parse_range(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("config: latency ranges are [lo, hi]");
  return latency_range{j[0].get<tick>(), j[1].get<tick>()};
}

}  // namespace detail

inline experiment_config parse_experiment(const nlohmann::json& j) {
  experiment_config out;
  if (j.contains("sim")) {
    const auto& s = j["sim"];
    sim_config& c = out.sim;
    c.sites = s.value("sites", c.sites);
    c.partitions = s.value("partitions", c.partitions);
    c.seed = s.value("seed", c.seed);
    if (s.contains("protocol"))
      c.proto = protocol_from_string(s["protocol"].get<std::string>());
    if (s.contains("intra_site")) c.intra_site = detail::parse_range(s["intra_site"]);
    if (s.contains("cross_site")) c.cross_site = detail::parse_range(s["cross_site"]);
    if (s.contains("client_server"))
      c.client_server = detail::parse_range(s["client_server"]);
    if (s.contains("clock_offsets"))
      c.clock_offsets = s["clock_offsets"].get<std::vector<tick>>();
    c.clock_jitter = s.value("clock_jitter", c.clock_jitter);
    c.stabilisation_period =
        s.value("stabilisation_period", c.stabilisation_period);
    c.gc.trigger = s.value("gc_trigger", c.gc.trigger);
    c.gc.keep = s.value("gc_keep", c.gc.keep);
    c.gc_guard_lag = s.value("gc_guard_lag", c.gc_guard_lag);
    c.session_cache = s.value("session_cache", c.session_cache);
    c.session_catchup = s.value("session_catchup", c.session_catchup);
    c.max_ticks = s.value("max_ticks", c.max_ticks);
    c.quiet_limit = s.value("quiet_limit", c.quiet_limit);
  }
  if (j.contains("workload")) {
    const auto& w = j["workload"];
    workload_config& c = out.workload;
    c.keys = w.value("keys", c.keys);
    c.value_size = w.value("value_size", c.value_size);
    c.reads_per_round = w.value("reads_per_round", c.reads_per_round);
    c.rounds_per_txn = w.value("rounds_per_txn", c.rounds_per_txn);
    c.updates_per_txn = w.value("updates_per_txn", c.updates_per_txn);
    c.txn_pairs_per_client =
        w.value("txn_pairs_per_client", c.txn_pairs_per_client);
    c.hot_key_fraction = w.value("hot_key_fraction", c.hot_key_fraction);
    c.hot_op_fraction = w.value("hot_op_fraction", c.hot_op_fraction);
    c.warmup_fraction = w.value("warmup_fraction", c.warmup_fraction);
  }
  out.clients = j.value("clients", out.clients);
  if (j.contains("protocols")) {
    out.protocols.clear();
    for (const auto& p : j["protocols"])
      out.protocols.push_back(protocol_from_string(p.get<std::string>()));
  }
  if (j.contains("seeds"))
    out.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  return out;
}

inline experiment_config load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_experiment(j);
}

}  // namespace snapsim
