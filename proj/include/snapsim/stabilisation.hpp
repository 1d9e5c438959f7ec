#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"
#include "snapsim/partition.hpp"

namespace snapsim {

/*! \brief Periodic stable-time computation and update propagation.
 *
 * Every stabilisation period each partition computes its local stable
 * time, exchanges delivery vectors with the other partitions of its site,
 * ships committed updates to sibling partitions at remote sites in commit
 * timestamp order, and falls back to heartbeats when it has nothing to
 * send. Channels are reliable FIFO; the handlers fail fast if the
 * ct-order contract is ever violated.
 */
class stabiliser {
 public:
  explicit stabiliser(partition_server& p) : p_(p) {}

  //! Timer handler: one stabilisation round at this partition.
  void run_tick(net& n, std::uint32_t round, tick period) {
    tick stable_n;
    if (!p_.prepared.empty()) {
      tick min_time = std::numeric_limits<tick>::max();
      for (const prepared_txn& e : p_.prepared)
        min_time = std::min(min_time, e.time);
      stable_n = min_time - 1;
    } else {
      stable_n = p_.clock().read(n.now(), n.rng());
    }
    // vec_p never regresses; a raw stable_n below the previous round's
    // value (stalled clock, fresh low proposal) is simply not announced.
    p_.vec_p.advance(p_.self.site, stable_n);
    ++p_.rounds_ticked;

    history_event ev;
    ev.kind = event_kind::stable_tick;
    ev.site = p_.self.site;
    ev.part = p_.self.part;
    ev.round = round;
    ev.stable = stable_n;
    ev.vec = p_.vec_p;
    ev.sv = p_.sv;
    n.log(std::move(ev));

    // Intra-site stable-vector exchange.
    if (p_.partitions() == 1) {
      update_sv(n, p_.vec_p);
    } else {
      p_.stab_own_vec[round] = p_.vec_p;
      try_complete_round(n, round);
      stable_broadcast msg;
      msg.from = p_.self;
      msg.round = round;
      msg.vec = p_.vec_p;
      for (partition_id m = 0; m < p_.partitions(); ++m) {
        if (m == p_.self.part) continue;
        n.send_to_partition(partition_addr{p_.self.site, m}, message{msg});
      }
    }

    // Cross-site propagation: everything committed up to stable_n, in ct
    // order. Heartbeat the siblings when there is nothing to ship.
    bool sent = false;
    while (!p_.to_send.empty() && p_.to_send.front().ct <= stable_n) {
      outbound_updates out = std::move(p_.to_send.front());
      p_.to_send.pop_front();
      sent = true;
      remote_updates msg;
      msg.from = p_.self;
      msg.txn = out.txn;
      msg.updates = out.updates;
      msg.dep = out.dep;
      msg.ct = out.ct;
      for (site_id j = 0; j < p_.sites(); ++j) {
        if (j == p_.self.site) continue;
        n.send_to_partition(partition_addr{j, p_.self.part}, message{msg});
      }
    }
    if (!sent) {
      remote_heartbeat hb;
      hb.from = p_.self;
      hb.stable = stable_n;
      for (site_id j = 0; j < p_.sites(); ++j) {
        if (j == p_.self.site) continue;
        n.send_to_partition(partition_addr{j, p_.self.part}, message{hb});
      }
    }

    // Refresh the GC guard with a stale-enough stable vector: any
    // snapshot still in flight is at least this fresh.
    p_.sv_history.push_back(p_.sv);
    while (p_.sv_history.size() > p_.gc_guard_lag()) p_.sv_history.pop_front();
    p_.store().set_gc_guard(p_.sv_history.front());

    n.schedule_partition_timer(p_.self, message{stab_tick{round + 1}},
                               n.now() + period);
  }

  //! A sibling partition of the same site reported its vec_p.
  void on_stable(net& n, const stable_broadcast& msg) {
    if (msg.from.site != p_.self.site)
      throw std::logic_error("stabiliser: stable broadcast crossed sites");
    partition_server::stab_round& r = p_.stab_rounds[msg.round];
    r.received += 1;
    if (r.received == 1)
      r.min_vec = msg.vec;
    else
      r.min_vec = componentwise_min(r.min_vec, msg.vec);
    try_complete_round(n, msg.round);
  }

  //! Remote updates from the sibling at site j: apply, advance watermark.
  void on_remote_updates(net& n, const remote_updates& msg) {
    if (msg.from.site == p_.self.site)
      throw std::logic_error("stabiliser: remote updates from own site");
    tick& last = p_.last_remote_ct[msg.from.site];
    if (msg.ct < last)
      throw std::logic_error(
          "stabiliser: cross-site stream out of ct order (" +
          std::to_string(msg.ct) + " after " + std::to_string(last) + ")");
    last = msg.ct;

    p_.store().update_versions(msg.updates, msg.dep, msg.ct, msg.from.site,
                               msg.txn, p_.proto());
    p_.vec_p.advance(msg.from.site, msg.ct);

    history_event ev;
    ev.kind = event_kind::deliver;
    ev.txn = msg.txn;
    ev.site = p_.self.site;
    ev.part = p_.self.part;
    ev.from_site = msg.from.site;
    ev.from_part = msg.from.part;
    ev.ct = msg.ct;
    ev.dep = msg.dep;
    ev.cv = msg.dep;
    ev.cv.set(msg.from.site, msg.ct);
    for (const auto& [k, v] : msg.updates) ev.keys.push_back(k);
    n.log(std::move(ev));
  }

  //! Heartbeat from the sibling at site j; max-guarded against timer
  //! interleavings with in-flight update batches.
  void on_heartbeat(const remote_heartbeat& msg) {
    if (msg.from.site == p_.self.site) return;  // own site: ignore
    p_.vec_p.advance(msg.from.site, msg.stable);
  }

 private:
  static version_vector componentwise_min(const version_vector& a,
                                          const version_vector& b) {
    version_vector out = a;
    for (std::size_t i = 0; i < out.size(); ++i)
      out.set(i, std::min(a[i], b[i]));
    return out;
  }

  //! SV = componentwise min over every local partition's vec_p for the
  //! round, own vector included. Incomplete rounds leave sv unchanged.
  void try_complete_round(net& n, std::uint32_t round) {
    auto own = p_.stab_own_vec.find(round);
    auto rs = p_.stab_rounds.find(round);
    if (own == p_.stab_own_vec.end()) return;
    if (rs == p_.stab_rounds.end() || rs->second.received + 1 < p_.partitions())
      return;
    version_vector next = componentwise_min(own->second, rs->second.min_vec);
    p_.stab_own_vec.erase(own);
    p_.stab_rounds.erase(rs);
    update_sv(n, next);
  }

  void update_sv(net& n, const version_vector& next) {
    if (!vv_leq(p_.sv, next))
      throw std::logic_error("stabiliser: stable vector regressed");
    if (next == p_.sv) return;
    p_.sv = next;
    n.sv_updated(p_.self);
  }

  partition_server& p_;
};

}  // namespace snapsim
