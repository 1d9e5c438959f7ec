#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "snapsim/clock.hpp"
#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"
#include "snapsim/store.hpp"

namespace snapsim {

//! A transaction sitting in the prepared set, between the prepare and the
//! commit/abort message.
struct prepared_txn {
  txn_id txn = 0;
  update_list updates;
  version_vector dep;
  tick time = 0;  // proposed commit timestamp
};

//! A committed transaction queued for cross-site propagation.
struct outbound_updates {
  txn_id txn = 0;
  update_list updates;
  version_vector dep;
  tick ct = 0;
};

//! A Cure read parked until its wake predicate holds.
struct blocked_read {
  read_request request;
  tick arrived = 0;
  wait_cause cause = wait_cause::none;
};

/*! \brief Partition server state machine.
 *
 * One instance per (site, partition index). Serves reads per the
 * protocol's COND predicate, participates in presumed-commit 2PC, and
 * carries the stabilisation state (vec_p, SV, to_send). The stabilisation
 * handlers themselves live in stabilisation.hpp.
 */
class partition_server {
 public:
  partition_server() = default;

  partition_server(site_id site, partition_id part, std::uint32_t sites,
                   std::uint32_t partitions, protocol proto, site_clock clock,
                   gc_config gc, std::uint32_t gc_guard_lag)
      : self{site, part},
        vec_p(version_vector::zero(sites)),
        sv(version_vector::zero(sites)),
        sites_(sites),
        partitions_(partitions),
        proto_(proto),
        clock_(clock),
        store_(sites, gc),
        gc_guard_lag_(gc_guard_lag) {
    last_remote_ct.assign(sites, -1);
  }

  partition_addr self;

  void handle_read(net& n, const read_request& r) {
    if (down) return;  // the engine bounces for us; defensive only
    if (r.proto != protocol::cure) {
      serve(n, r, /*wait=*/0, wait_cause::none);
      return;
    }
    wait_cause cause = defer_cause(n, r);
    if (cause == wait_cause::none) {
      serve(n, r, 0, wait_cause::none);
      return;
    }
    blocked.push_back(blocked_read{r, n.now(), cause});
    ensure_recheck(n);
  }

  void handle_prepare(net& n, const prepare_request& r) {
    // Replayed prepare: reply with the identical proposal.
    auto existing = find_prepared(r.txn);
    tick time;
    if (existing) {
      time = existing->time;
    } else {
      if (r.proto == protocol::cv) {
        time = r.ct;
      } else {
        // The proposal must exceed the stable time this partition last
        // announced (vec_p[n]); otherwise a stalled clock could let a
        // transaction commit inside an already-published stable snapshot.
        time = std::max({clock_.read(n.now(), n.rng()), r.ct,
                         vec_p[self.site] + 1});
      }
      prepared.push_back(prepared_txn{r.txn, r.updates, r.dep, time});

      history_event ev;
      ev.kind = event_kind::prepare;
      ev.txn = r.txn;
      ev.site = self.site;
      ev.part = self.part;
      ev.ct = r.ct;
      ev.collapsed = r.also_commit;
      ev.dep = r.dep;
      for (const auto& [k, v] : r.updates) ev.keys.push_back(k);
      n.log(std::move(ev));
    }

    history_event pv;
    pv.kind = event_kind::prepared;
    pv.txn = r.txn;
    pv.site = self.site;
    pv.part = self.part;
    pv.ct = time;
    n.log(std::move(pv));

    bool committed = false;
    if (r.also_commit) {
      // Single-partition transaction: prepare and commit collapse into
      // one message; the final ct is this partition's own proposal.
      apply_commit(n, r.txn, time);
      committed = true;
    }

    prepare_reply reply;
    reply.txn = r.txn;
    reply.from = self;
    reply.time = time;
    reply.committed = committed;
    n.send_to_coordinator(r.txn, message{reply});
  }

  void handle_commit(net& n, const commit_request& r) {
    apply_commit(n, r.txn, r.ct);
  }

  void handle_abort(net& n, const abort_request& r) {
    auto it = std::find_if(prepared.begin(), prepared.end(),
                           [&](const prepared_txn& p) { return p.txn == r.txn; });
    if (it == prepared.end()) return;  // late duplicate
    prepared.erase(it);

    history_event ev;
    ev.kind = event_kind::abort;
    ev.txn = r.txn;
    ev.site = self.site;
    ev.part = self.part;
    n.log(std::move(ev));

    wake_blocked(n);
  }

  //! Re-evaluate parked Cure reads (timer driven while any are parked).
  void handle_recheck(net& n) {
    recheck_scheduled_ = false;
    wake_blocked(n);
    ensure_recheck(n);
  }

  site_clock& clock() { return clock_; }
  version_store& store() { return store_; }
  protocol proto() const { return proto_; }
  std::uint32_t sites() const { return sites_; }
  std::uint32_t partitions() const { return partitions_; }

  bool drained() const {
    return prepared.empty() && to_send.empty() && blocked.empty();
  }

  // -- state shared with the stabilisation handlers ------------------------
  std::vector<prepared_txn> prepared;
  std::deque<outbound_updates> to_send;  // kept sorted by (ct, txn)
  version_vector vec_p;                  // per-site delivery watermark
  version_vector sv;                     // latest stable snapshot known
  std::deque<blocked_read> blocked;      // FIFO among woken reads
  bool down = false;

  std::uint32_t rounds_ticked = 0;
  std::deque<version_vector> sv_history;  // lagged SVs for the GC guard

  //! Intra-site stable-exchange bookkeeping, keyed by round.
  struct stab_round {
    std::uint32_t received = 0;
    version_vector min_vec;
  };
  std::map<std::uint32_t, version_vector> stab_own_vec;
  std::map<std::uint32_t, stab_round> stab_rounds;

  //! Watermark of the cross-site stream from each site (ct-order check).
  std::vector<tick> last_remote_ct;

  //! Transactions whose coordinators wait for this partition's SV to
  //! advance (monotonic-reads catch-up).
  std::vector<txn_id> sv_waiters;

  std::uint32_t gc_guard_lag() const { return gc_guard_lag_; }

  //! Commit a prepared transaction: store the versions, queue them for
  //! replication, wake parked reads.
  void apply_commit(net& n, txn_id txn, tick final_ct) {
    auto it = std::find_if(prepared.begin(), prepared.end(),
                           [&](const prepared_txn& p) { return p.txn == txn; });
    if (it == prepared.end()) return;  // unknown or duplicate commit
    prepared_txn entry = std::move(*it);
    prepared.erase(it);

    store_.update_versions(entry.updates, entry.dep, final_ct, self.site, txn,
                           proto_);

    // Insert in ct order; the protocol guarantees new commits never sort
    // before anything already propagated.
    auto pos = std::find_if(to_send.begin(), to_send.end(),
                            [&](const outbound_updates& o) {
                              return o.ct > final_ct ||
                                     (o.ct == final_ct && o.txn > txn);
                            });
    to_send.insert(pos, outbound_updates{txn, entry.updates, entry.dep,
                                         final_ct});

    history_event ev;
    ev.kind = event_kind::commit;
    ev.txn = txn;
    ev.site = self.site;
    ev.part = self.part;
    ev.ct = final_ct;
    ev.from_site = self.site;  // origin
    ev.dep = entry.dep;
    ev.cv = entry.dep;
    ev.cv.set(self.site, final_ct);
    for (const auto& [k, v] : entry.updates) ev.keys.push_back(k);
    n.log(std::move(ev));

    wake_blocked(n);
  }

 private:
  std::optional<prepared_txn> find_prepared(txn_id txn) const {
    for (const prepared_txn& p : prepared)
      if (p.txn == txn) return p;
    return std::nullopt;
  }

  //! Cure's two deferral conditions, in the order the base protocol
  //! encounters them: a lagging clock, then a 2PC that may still commit
  //! into the snapshot.
  wait_cause defer_cause(net& n, const read_request& r) {
    tick c = clock_.read(n.now(), n.rng());
    if (r.ss.at(self.site) > c) return wait_cause::clock_skew;
    for (const prepared_txn& p : prepared)
      if (p.time <= r.ss.at(self.site)) return wait_cause::pending_commit;
    return wait_cause::none;
  }

  void serve(net& n, const read_request& r, tick wait, wait_cause cause) {
    read_reply reply;
    reply.txn = r.txn;
    reply.request = r.request;
    reply.from = self;

    history_event ev;
    ev.kind = event_kind::read_resp;
    ev.txn = r.txn;
    ev.request = r.request;
    ev.site = self.site;
    ev.part = self.part;
    ev.wait = wait;
    ev.cause = cause;

    for (key_id k : r.keys) {
      read_result res = store_.read_version(k, r.ss, r.proto);
      served_version sv_out;
      sv_out.version = *res.version;
      sv_out.skips = res.skips;
      reply.versions.push_back(std::move(sv_out));

      read_record rec;
      rec.key = k;
      rec.writer = res.version->writer;
      rec.origin = res.version->origin;
      rec.ct = res.version->ct;
      rec.skips = res.skips;
      ev.reads.push_back(rec);
    }
    n.log(std::move(ev));
    n.send_to_coordinator(r.txn, message{std::move(reply)});
  }

  void wake_blocked(net& n) {
    // FIFO fairness: serve ready reads in arrival order.
    std::deque<blocked_read> still;
    for (blocked_read& b : blocked) {
      if (defer_cause(n, b.request) == wait_cause::none) {
        serve(n, b.request, n.now() - b.arrived, b.cause);
      } else {
        still.push_back(std::move(b));
      }
    }
    blocked = std::move(still);
  }

  void ensure_recheck(net& n) {
    if (blocked.empty() || recheck_scheduled_) return;
    recheck_scheduled_ = true;
    n.schedule_partition_timer(self, message{blocked_read_recheck{}},
                               n.now() + 1);
  }

  std::uint32_t sites_ = 1;
  std::uint32_t partitions_ = 1;
  protocol proto_ = protocol::cv;
  site_clock clock_;
  version_store store_;
  std::uint32_t gc_guard_lag_ = 32;
  bool recheck_scheduled_ = false;
};

}  // namespace snapsim
