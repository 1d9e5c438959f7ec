#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "snapsim/net.hpp"
#include "snapsim/store.hpp"
#include "snapsim/types.hpp"
#include "snapsim/version_vector.hpp"

namespace snapsim {

using update_list = std::vector<std::pair<key_id, std::string>>;

// ---- client -> coordinator --------------------------------------------

struct op_read {
  std::vector<key_id> keys;
  std::uint32_t round = 0;
  // Scenario hook: fixed read latency per touched partition index; empty
  // for normal runs.
  std::vector<std::pair<partition_id, tick>> latency_plan;
};

struct op_update {
  update_list pairs;
};

struct op_commit {};

struct client_request {
  client_id client = 0;
  txn_id txn = 0;
  protocol proto = protocol::cv;
  site_id site = 0;
  std::variant<op_read, op_update, op_commit> op;
};

// ---- coordinator -> client --------------------------------------------

struct served_version {
  object_version version;
  std::uint32_t skips = 0;
  bool from_cache = false;
};

struct client_reply {
  txn_id txn = 0;
  ack_kind kind = ack_kind::read_round;
  std::uint32_t round = 0;
  std::vector<served_version> values;  // read replies
  version_vector cv;                   // commit replies
};

// ---- coordinator <-> partition ------------------------------------------

struct read_request {
  txn_id txn = 0;
  std::uint64_t request = 0;
  protocol proto = protocol::cv;
  version_vector ss;
  std::vector<key_id> keys;
  std::uint32_t round = 0;
};

struct read_reply {
  txn_id txn = 0;
  std::uint64_t request = 0;
  partition_addr from;
  std::vector<served_version> versions;
};

struct prepare_request {
  txn_id txn = 0;
  protocol proto = protocol::cv;
  update_list updates;
  version_vector dep;
  tick ct = 0;
  bool also_commit = false;  // single-partition collapse
};

struct prepare_reply {
  txn_id txn = 0;
  partition_addr from;
  tick time = 0;
  bool committed = false;  // set when the prepare was collapsed
};

struct commit_request {
  txn_id txn = 0;
  tick ct = 0;
};

struct abort_request {
  txn_id txn = 0;
};

//! Bounce delivered to the sender when the target partition is down.
struct unreachable {
  txn_id txn = 0;
  partition_addr target;
};

// ---- stabilisation traffic ----------------------------------------------

struct stable_broadcast {
  partition_addr from;
  std::uint32_t round = 0;
  version_vector vec;
};

struct remote_updates {
  partition_addr from;
  txn_id txn = 0;
  update_list updates;
  version_vector dep;
  tick ct = 0;
};

struct remote_heartbeat {
  partition_addr from;
  tick stable = 0;
};

// ---- timers ---------------------------------------------------------------

struct stab_tick {
  std::uint32_t round = 0;
};

struct blocked_read_recheck {};

struct client_wake {};  // starts a client / resumes a scripted step

struct catchup_check {};  // home SV advanced; re-test the catch-up wait

struct message {
  std::variant<client_request, client_reply, read_request, read_reply,
               prepare_request, prepare_reply, commit_request, abort_request,
               unreachable, stable_broadcast, remote_updates, remote_heartbeat,
               stab_tick, blocked_read_recheck, client_wake, catchup_check>
      body;
};

}  // namespace snapsim
