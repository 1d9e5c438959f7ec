#pragma once

// Minimal net implementation for driving one state machine by hand.

#include <utility>
#include <vector>

#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"

namespace snapsim::test {

struct sent_to_partition {
  partition_addr dst;
  message msg;
  tick latency;
};

struct sent_to_coordinator {
  txn_id txn;
  message msg;
};

class fake_net final : public net {
 public:
  tick time = 0;
  std::mt19937_64 generator{12345};
  std::vector<sent_to_partition> to_partitions;
  std::vector<sent_to_coordinator> to_coordinators;
  std::vector<std::pair<client_id, message>> to_clients;
  std::vector<history_event> events;
  std::vector<partition_addr> sv_updates;
  std::uint64_t requests = 0;
  txn_id txns = 0;

  tick now() const override { return time; }
  std::mt19937_64& rng() override { return generator; }
  std::uint64_t next_request_id() override { return ++requests; }
  txn_id alloc_txn() override { return ++txns; }

  void send_to_partition(partition_addr dst, message msg,
                         tick latency) override {
    to_partitions.push_back({dst, std::move(msg), latency});
  }
  void send_to_coordinator(txn_id txn, message msg, tick) override {
    to_coordinators.push_back({txn, std::move(msg)});
  }
  void send_to_client(client_id dst, message msg, tick) override {
    to_clients.emplace_back(dst, std::move(msg));
  }
  void schedule_partition_timer(partition_addr, message, tick) override {}
  void schedule_client_wake(client_id, tick) override {}
  void sv_updated(partition_addr at) override { sv_updates.push_back(at); }
  void log(history_event ev) override {
    ev.time = time;
    events.push_back(std::move(ev));
  }

  template <typename T>
  std::vector<T> sent_of() const {
    std::vector<T> out;
    for (const auto& s : to_partitions)
      if (const T* m = std::get_if<T>(&s.msg.body)) out.push_back(*m);
    return out;
  }
};

}  // namespace snapsim::test
