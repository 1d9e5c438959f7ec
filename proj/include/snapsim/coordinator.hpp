#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"
#include "snapsim/partition.hpp"

namespace snapsim {

//! Client-side session state (read-your-writes cache plus the snapshot of
//! the last finished transaction, for monotonic reads).
struct client_session {
  client_id id = 0;
  site_id sticky_site = 0;
  std::unordered_map<key_id, object_version> cache;  // own recent writes
  version_vector last_ss;
  site_id last_site = 0;
  bool has_last = false;

  //! Updates whose cv is covered by `sv_now` are stable everywhere the
  //! client can read, so the cached copies are no longer needed.
  void invalidate(const version_vector& sv_now) {
    for (auto it = cache.begin(); it != cache.end();) {
      if (vv_leq(it->second.cv, sv_now))
        it = cache.erase(it);
      else
        ++it;
    }
  }
};

enum class txn_phase : std::uint8_t { active, preparing, committed, aborted };

struct txn_record {
  txn_id id = 0;
  client_id client = 0;
  protocol proto = protocol::cv;
  site_id site = 0;
  partition_id home = 0;
  version_vector ss;
  version_vector dep;
  tick ct = 0;
  update_list ws;
  txn_phase phase = txn_phase::active;
};

//! Deterministic hash partitioning, identical at every site.
inline partition_id partition_of(key_id key, std::uint32_t partitions) {
  return static_cast<partition_id>(mix64(key) % partitions);
}

//! Group keys by partition (ascending id), preserving submission order
//! within each group.
inline std::vector<std::pair<partition_id, std::vector<key_id>>> get_parts(
    const std::vector<key_id>& keys, std::uint32_t partitions) {
  std::map<partition_id, std::vector<key_id>> groups;
  for (key_id k : keys) groups[partition_of(k, partitions)].push_back(k);
  return {groups.begin(), groups.end()};
}

struct coordinator_config {
  std::uint32_t sites = 1;
  std::uint32_t partitions = 1;
  bool session_cache = false;
  bool session_catchup = false;
};

/*! \brief Transaction coordinator.
 *
 * One instance per transaction, colocated with its home partition (whose
 * stable vector and clock it reads directly, the way a TC runs on a
 * storage server). Reads fan out in parallel and complete in one round;
 * commits run presumed-commit 2PC: the client is acknowledged as soon as
 * every participant has prepared, and commit messages go out afterwards.
 */
class coordinator {
 public:
  coordinator(txn_id id, client_id cl, protocol proto, partition_server* home,
              client_session* session, coordinator_config cfg)
      : home_(home), session_(session), cfg_(cfg) {
    t_.id = id;
    t_.client = cl;
    t_.proto = proto;
    t_.site = home->self.site;
    t_.home = home->self.part;
  }

  const txn_record& record() const { return t_; }
  bool finished() const {
    return t_.phase == txn_phase::committed || t_.phase == txn_phase::aborted;
  }

  void handle_client(net& n, const client_request& req) {
    if (!initiated_) {
      pending_op_ = req;
      if (try_begin(n)) run_pending_op(n);
      return;
    }
    dispatch_op(n, req);
  }

  //! Wake-up after the home partition's SV advanced (catch-up wait).
  void handle_catchup_check(net& n) {
    if (initiated_ || !waiting_catchup_) return;
    if (!vv_leq(session_->last_ss, home_->sv)) return;  // keep waiting
    waiting_catchup_ = false;
    deregister_waiter();
    begin(n, home_->sv);
    run_pending_op(n);
  }

  void handle_read_reply(net& n, const read_reply& r) {
    if (t_.phase != txn_phase::active || !fetch_) return;
    auto out = fetch_->outstanding.find(r.request);
    if (out == fetch_->outstanding.end()) return;
    fetch_->outstanding.erase(out);
    for (const served_version& v : r.versions)
      fetch_->fetched.emplace(v.version.key, v);
    if (fetch_->outstanding.empty()) finish_read_round(n);
  }

  void handle_prepare_reply(net& n, const prepare_reply& r) {
    if (t_.phase != txn_phase::preparing) return;
    if (!awaiting_.erase(r.from.part)) return;
    if (t_.proto != protocol::cv) t_.ct = std::max(t_.ct, r.time);
    if (!awaiting_.empty()) return;

    // Presumed commit: every participant prepared, so the transaction is
    // committed; the client hears back before the commit fan-out.
    version_vector cv = t_.dep;
    cv.set(t_.site, t_.ct);
    if (t_.ct <= t_.dep[t_.site])
      throw std::logic_error("coordinator: ct must exceed dep[site]");
    t_.phase = txn_phase::committed;

    ack_client(n, ack_kind::committed, cv);

    if (!collapsed_) {
      for (partition_id m : participants_)
        n.send_to_partition(partition_addr{t_.site, m},
                            message{commit_request{t_.id, t_.ct}});
    }

    if (session_ && cfg_.session_cache) absorb_writes(cv);
    finalize_session();
  }

  void handle_unreachable(net& n, const unreachable&) { abort_txn(n); }

 private:
  struct fetch_state {
    std::uint32_t round = 0;
    std::vector<key_id> submitted;  // original order, duplicates included
    std::vector<key_id> requested;  // deduped keys actually fetched
    std::unordered_set<std::uint64_t> outstanding;  // request ids
    std::unordered_map<key_id, served_version> fetched;
    std::unordered_map<key_id, served_version> cached;  // read-once hits
  };

  bool try_begin(net& n) {
    // Monotonic-reads catch-up; only runs when sessions are enabled.
    if (t_.proto != protocol::cv && session_ && cfg_.session_catchup &&
        session_->has_last && !vv_leq(session_->last_ss, home_->sv)) {
      if (session_->last_site == t_.site) {
        // The snapshot was already observed stable at this site; adopt it.
        begin(n, session_->last_ss);
        return true;
      }
      waiting_catchup_ = true;
      catchup_from_ = n.now();
      home_->sv_waiters.push_back(t_.id);
      return false;
    }
    begin(n, home_->sv);
    return true;
  }

  void begin(net& n, const version_vector& base) {
    switch (t_.proto) {
      case protocol::cv:
        t_.ss = version_vector::zero(cfg_.sites);
        t_.dep = version_vector::zero(cfg_.sites);
        break;
      case protocol::op:
      case protocol::av:
      case protocol::latest_always:
        t_.ss = base;
        t_.dep = base;
        break;
      case protocol::cure:
        // Cure's snapshot is not necessarily stable: the local entry is
        // the coordinator's clock, everything else the stable vector.
        t_.ss = base;
        t_.ss.set(t_.site, home_->clock().read(n.now(), n.rng()));
        t_.dep = t_.ss;
        break;
    }
    initiated_ = true;

    history_event ev;
    ev.kind = event_kind::txn_begin;
    ev.txn = t_.id;
    ev.client = t_.client;
    ev.proto = t_.proto;
    ev.site = t_.site;
    ev.part = t_.home;
    ev.ss = t_.ss;
    ev.dep = t_.dep;
    ev.wait = catchup_from_ ? n.now() - *catchup_from_ : 0;
    n.log(std::move(ev));
  }

  void run_pending_op(net& n) {
    if (!pending_op_) return;
    client_request req = std::move(*pending_op_);
    pending_op_.reset();
    dispatch_op(n, req);
  }

  void dispatch_op(net& n, const client_request& req) {
    if (std::holds_alternative<op_read>(req.op))
      do_read(n, std::get<op_read>(req.op));
    else if (std::holds_alternative<op_update>(req.op))
      do_update(n, std::get<op_update>(req.op));
    else
      do_commit(n);
  }

  void do_read(net& n, const op_read& op) {
    if (t_.phase != txn_phase::active)
      throw std::logic_error("coordinator: read after commit");
    fetch_.emplace();
    fetch_->round = op.round;
    fetch_->submitted = op.keys;

    // Read-once: repeats within the transaction come from the local copy.
    std::vector<key_id> to_fetch;
    for (key_id k : op.keys) {
      if (auto it = txn_reads_.find(k); it != txn_reads_.end()) {
        fetch_->cached.emplace(k, it->second);
      } else if (std::find(to_fetch.begin(), to_fetch.end(), k) ==
                 to_fetch.end()) {
        to_fetch.push_back(k);
      }
    }

    fetch_->requested = to_fetch;
    if (to_fetch.empty()) {
      finish_read_round(n);
      return;
    }

    for (auto& [part, keys] : get_parts(to_fetch, cfg_.partitions)) {
      read_request r;
      r.txn = t_.id;
      r.request = n.next_request_id();
      r.proto = t_.proto;
      r.ss = t_.ss;
      r.keys = keys;
      r.round = op.round;
      fetch_->outstanding.insert(r.request);

      history_event ev;
      ev.kind = event_kind::read_req;
      ev.txn = t_.id;
      ev.request = r.request;
      ev.site = t_.site;
      ev.part = part;
      ev.round = op.round;
      ev.ss = t_.ss;
      ev.keys = keys;
      n.log(std::move(ev));

      tick latency = -1;
      for (const auto& [m, l] : op.latency_plan)
        if (m == part) latency = l;
      n.send_to_partition(partition_addr{t_.site, part},
                          message{std::move(r)}, latency);
    }
  }

  void finish_read_round(net& n) {
    // Causal dependency fold: OP transactions may read versions ahead of
    // ss, so dep must absorb the commit vectors actually observed.
    if (t_.proto == protocol::op || t_.proto == protocol::latest_always) {
      for (key_id k : fetch_->requested)
        t_.dep.merge(fetch_->fetched.at(k).version.cv);
    }

    // Session cache: a fresher own write shadows the server's version.
    if (session_ && cfg_.session_cache) {
      for (key_id k : fetch_->requested) {
        auto it = session_->cache.find(k);
        if (it == session_->cache.end()) continue;
        served_version& v = fetch_->fetched.at(k);
        if (recency_less(v.version, it->second)) {
          v.version = it->second;
          v.skips = 0;
          v.from_cache = true;

          history_event ev;
          ev.kind = event_kind::read_resp;
          ev.txn = t_.id;
          ev.request = 0;  // coordinator-side record, no wire pairing
          ev.site = t_.site;
          ev.part = t_.home;
          read_record rec;
          rec.key = k;
          rec.writer = it->second.writer;
          rec.origin = it->second.origin;
          rec.ct = it->second.ct;
          rec.from_cache = true;
          ev.reads.push_back(rec);
          n.log(std::move(ev));
        }
      }
    }

    for (key_id k : fetch_->requested)
      txn_reads_.emplace(k, fetch_->fetched.at(k));

    client_reply reply;
    reply.txn = t_.id;
    reply.kind = ack_kind::read_round;
    reply.round = fetch_->round;
    for (key_id k : fetch_->submitted) {
      auto it = fetch_->fetched.find(k);
      if (it == fetch_->fetched.end()) it = fetch_->cached.find(k);
      reply.values.push_back(it->second);
    }

    ack_client(n, ack_kind::read_round, version_vector(), fetch_->round);
    fetch_.reset();
    n.send_to_client(t_.client, message{std::move(reply)});
  }

  void do_update(net& n, const op_update& op) {
    if (t_.phase != txn_phase::active)
      throw std::logic_error("coordinator: update after commit");
    for (const auto& p : op.pairs) t_.ws.push_back(p);
    client_reply reply;
    reply.txn = t_.id;
    reply.kind = ack_kind::update_ok;
    n.send_to_client(t_.client, message{std::move(reply)});
  }

  void do_commit(net& n) {
    if (t_.phase != txn_phase::active)
      throw std::logic_error("coordinator: double commit");
    if (t_.ws.empty()) {
      // Read-only: nothing to prepare, committed on the spot.
      t_.phase = txn_phase::committed;
      ack_client(n, ack_kind::committed, version_vector());
      finalize_session();
      return;
    }

    t_.phase = txn_phase::preparing;
    t_.ct = t_.dep[t_.site] + 1;

    std::vector<key_id> keys;
    for (const auto& [k, v] : t_.ws) keys.push_back(k);
    auto groups = get_parts(keys, cfg_.partitions);
    collapsed_ = groups.size() == 1;

    for (auto& [part, part_keys] : groups) {
      prepare_request r;
      r.txn = t_.id;
      r.proto = t_.proto;
      r.dep = t_.dep;
      r.ct = t_.ct;
      r.also_commit = collapsed_;
      for (const auto& [k, v] : t_.ws)
        if (partition_of(k, cfg_.partitions) == part) r.updates.emplace_back(k, v);
      participants_.push_back(part);
      awaiting_.insert(part);
      n.send_to_partition(partition_addr{t_.site, part}, message{std::move(r)});
    }
  }

  void abort_txn(net& n) {
    if (finished()) return;
    for (partition_id m : participants_)
      n.send_to_partition(partition_addr{t_.site, m},
                          message{abort_request{t_.id}});
    t_.phase = txn_phase::aborted;
    ack_client(n, ack_kind::aborted, version_vector());
  }

  void ack_client(net& n, ack_kind kind, const version_vector& cv,
                  std::uint32_t round = 0) {
    history_event ev;
    ev.kind = event_kind::client_ack;
    ev.txn = t_.id;
    ev.client = t_.client;
    ev.ack = kind;
    ev.round = round;
    ev.cv = cv;
    n.log(std::move(ev));

    if (kind == ack_kind::committed || kind == ack_kind::aborted) {
      client_reply reply;
      reply.txn = t_.id;
      reply.kind = kind;
      reply.cv = cv;
      n.send_to_client(t_.client, message{std::move(reply)});
    }
  }

  void absorb_writes(const version_vector& cv) {
    for (const auto& [k, value] : t_.ws) {
      object_version v;
      v.key = k;
      v.value = value;
      v.dep = t_.dep;
      v.cv = cv;
      v.ct = t_.ct;
      v.origin = t_.site;
      v.writer = t_.id;
      session_->cache[k] = std::move(v);  // later submission wins
    }
  }

  void finalize_session() {
    if (!session_) return;
    session_->invalidate(home_->sv);
    session_->last_ss = t_.ss;
    session_->last_site = t_.site;
    session_->has_last = true;
  }

  void deregister_waiter() {
    auto& w = home_->sv_waiters;
    w.erase(std::remove(w.begin(), w.end(), t_.id), w.end());
  }

  txn_record t_;
  partition_server* home_;
  client_session* session_;
  coordinator_config cfg_;

  bool initiated_ = false;
  bool waiting_catchup_ = false;
  std::optional<tick> catchup_from_;
  std::optional<client_request> pending_op_;
  std::optional<fetch_state> fetch_;
  std::unordered_map<key_id, served_version> txn_reads_;
  std::vector<partition_id> participants_;
  std::unordered_set<partition_id> awaiting_;
  bool collapsed_ = false;
};

}  // namespace snapsim
