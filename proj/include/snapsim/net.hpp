#pragma once

#include <cstdint>
#include <random>

#include "snapsim/clock.hpp"
#include "snapsim/history.hpp"
#include "snapsim/types.hpp"

namespace snapsim {

// Actor addresses. Partitions are fixed (site, index); a coordinator is
// addressed by the transaction it runs; clients by id.
struct partition_addr {
  site_id site = 0;
  partition_id part = 0;
  bool operator==(const partition_addr&) const = default;
};

struct coordinator_addr {
  txn_id txn = 0;
  bool operator==(const coordinator_addr&) const = default;
};

struct client_addr {
  client_id client = 0;
  bool operator==(const client_addr&) const = default;
};

struct message;  // defined in messages.hpp

/*! Services the simulation engine offers to the actor state machines:
 * message delivery over reliable FIFO links, timers, the shared history
 * log, simulation time and the seeded RNG used for latency and clock
 * jitter draws. */
class net {
 public:
  virtual ~net() = default;

  virtual tick now() const = 0;
  virtual std::mt19937_64& rng() = 0;

  //! Globally unique id pairing a read request with its response.
  virtual std::uint64_t next_request_id() = 0;

  //! Fresh transaction id (coordinators are spawned on first contact).
  virtual txn_id alloc_txn() = 0;

  //! Timer for a scripted client step at absolute time `at`.
  virtual void schedule_client_wake(client_id id, tick at) = 0;

  //! Send over the link class inferred from the endpoints. A negative
  //! `latency_override` means "draw from the configured range".
  virtual void send_to_partition(partition_addr dst, message msg,
                                 tick latency_override = -1) = 0;
  virtual void send_to_coordinator(txn_id txn, message msg,
                                   tick latency_override = -1) = 0;
  virtual void send_to_client(client_id dst, message msg,
                              tick latency_override = -1) = 0;

  //! Schedule a timer event at absolute time `at` for a partition.
  virtual void schedule_partition_timer(partition_addr dst, message msg,
                                        tick at) = 0;

  //! A partition's stable vector advanced; wakes coordinators blocked on
  //! the monotonic-reads catch-up.
  virtual void sv_updated(partition_addr at) = 0;

  virtual void log(history_event ev) = 0;
};

}  // namespace snapsim
