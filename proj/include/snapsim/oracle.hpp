#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "snapsim/history.hpp"
#include "snapsim/store.hpp"
#include "snapsim/types.hpp"
#include "snapsim/version_vector.hpp"

namespace snapsim::oracle {

/*! \brief All committed versions of a run, with the causal precedence
 * reconstructed from commit metadata alone.
 *
 * u precedes v iff u's commit vector is covered by v's dependency vector;
 * the initial versions (cv = dep = 0) precede every committed version and
 * are mutually unordered. The relation is a strict partial order because
 * every committed version has cv > dep.
 */
class version_graph {
 public:
  struct version {
    key_id key = 0;
    txn_id writer = initial_txn;
    site_id origin = 0;
    tick ct = 0;
    version_vector dep;
    version_vector cv;
    tick commit_time = -1;  // origin commit event time; -1 for initials
    bool initial = false;
  };

  explicit version_graph(const history_log& log) : sites_(log.info.sites) {
    for (const history_event& e : log.events) {
      if (e.kind == event_kind::commit)
        record(e, /*origin_commit=*/true);
      else if (e.kind == event_kind::deliver)
        record(e, false);
    }
  }

  const version* find(txn_id writer, key_id key) const {
    if (writer == initial_txn) return nullptr;  // use initial_of
    auto it = index_.find(version_key{writer, key});
    return it == index_.end() ? nullptr : it->second;
  }

  //! The x_bot every key starts with, synthesised on first use.
  const version* initial_of(key_id key) {
    auto it = initials_.find(key);
    if (it != initials_.end()) return it->second;
    version v;
    v.key = key;
    v.dep = version_vector::zero(sites_);
    v.cv = version_vector::zero(sites_);
    v.initial = true;
    versions_.push_back(std::move(v));
    version* p = &versions_.back();
    initials_.emplace(key, p);
    by_key_[key].push_back(p);
    return p;
  }

  //! Every version of one key (committed plus initial) in no particular
  //! order; the gap-witness domain of Definitions 2 and 4.
  const std::vector<const version*>& of_key(key_id key) {
    initial_of(key);
    return by_key_[key];
  }

  const std::vector<const version*>& writes_of(txn_id t) const {
    static const std::vector<const version*> none;
    auto it = by_writer_.find(t);
    return it == by_writer_.end() ? none : it->second;
  }

  bool precedes(const version& u, const version& v) const {
    if (u.initial && v.initial) return false;
    return vv_leq(u.cv, v.dep);
  }

  std::size_t committed_count() const { return index_.size(); }

  //! Every version materialised so far (committed plus touched initials).
  std::vector<const version*> all_versions() const {
    std::vector<const version*> out;
    out.reserve(versions_.size());
    for (const version& v : versions_) out.push_back(&v);
    return out;
  }

  const std::vector<std::string>& build_violations() const {
    return violations_;
  }

 private:
  struct version_key {
    txn_id writer;
    key_id key;
    bool operator==(const version_key&) const = default;
  };
  struct version_key_hash {
    std::size_t operator()(const version_key& k) const {
      return static_cast<std::size_t>(mix64(k.writer ^ mix64(k.key)));
    }
  };

  void record(const history_event& e, bool origin_commit) {
    for (key_id k : e.keys) {
      auto it = index_.find(version_key{e.txn, k});
      if (it != index_.end()) {
        // Same transaction seen at another partition or replica: every
        // update of a transaction must carry the same commit vector.
        if (!(it->second->cv == e.cv) || it->second->ct != e.ct)
          violations_.push_back("txn " + std::to_string(e.txn) +
                                " commit vectors differ across partitions");
        if (origin_commit && it->second->commit_time < 0)
          it->second->commit_time = e.time;
        continue;
      }
      version v;
      v.key = k;
      v.writer = e.txn;
      v.origin = e.from_site;
      v.ct = e.ct;
      v.dep = e.dep;
      v.cv = e.cv;
      v.commit_time = origin_commit ? e.time : -1;
      v.initial = false;
      if (!origin_commit)
        violations_.push_back("txn " + std::to_string(e.txn) +
                              " delivered before any origin commit");
      versions_.push_back(std::move(v));
      version* p = &versions_.back();
      index_.emplace(version_key{e.txn, k}, p);
      by_key_[k].push_back(p);
      by_writer_[e.txn].push_back(p);
    }
  }

  std::size_t sites_;
  std::deque<version> versions_;  // stable addresses
  std::unordered_map<version_key, version*, version_key_hash> index_;
  std::unordered_map<key_id, version*> initials_;
  std::unordered_map<key_id, std::vector<const version*>> by_key_;
  std::unordered_map<txn_id, std::vector<const version*>> by_writer_;
  std::vector<std::string> violations_;
};

using graph_version = version_graph::version;
using readset = std::vector<const graph_version*>;

//! Definition of an order-preserving snapshot: no pair of read versions
//! admits a gap witness among the versions of the earlier element's key.
inline bool check_order_preserving(version_graph& g, const readset& reads) {
  for (const graph_version* a : reads) {
    const auto& candidates = g.of_key(a->key);
    for (const graph_version* b : reads) {
      for (const graph_version* k : candidates) {
        if (g.precedes(*a, *k) && g.precedes(*k, *b)) return false;
      }
    }
  }
  return true;
}

//! No broken reads: observing one of a transaction's writes while another
//! of its writes is superseded in the snapshot.
inline bool check_atomic(version_graph& g, const readset& reads) {
  std::unordered_map<key_id, const graph_version*> by_key;
  for (const graph_version* r : reads) by_key.emplace(r->key, r);
  for (const graph_version* r : reads) {
    if (r->initial) continue;
    for (const graph_version* sibling : g.writes_of(r->writer)) {
      if (sibling->key == r->key) continue;
      auto it = by_key.find(sibling->key);
      if (it == by_key.end()) continue;  // object not read at all
      if (g.precedes(*it->second, *sibling)) return false;
    }
  }
  return true;
}

//! Definition of a compatible version: v can join the snapshot without
//! creating a gap after any element.
inline bool check_compatible(version_graph& g, const readset& snapshot,
                             const graph_version& v) {
  for (const graph_version* a : snapshot) {
    for (const graph_version* k : g.of_key(a->key)) {
      if (g.precedes(*a, *k) && g.precedes(*k, v)) return false;
    }
  }
  return true;
}

enum class freshness_kind : std::uint8_t { latest, concurrent, stable };

inline const char* to_string(freshness_kind f) {
  switch (f) {
    case freshness_kind::latest: return "latest";
    case freshness_kind::concurrent: return "concurrent";
    case freshness_kind::stable: return "stable";
  }
  return "?";
}

struct txn_verdict {
  txn_id txn = 0;
  client_id client = 0;
  protocol proto = protocol::cv;
  bool aborted = false;
  bool has_reads = false;
  bool committed_reads = true;
  bool order_preserving = true;
  bool atomic = true;
  freshness_kind freshness = freshness_kind::stable;
  std::uint32_t server_reads = 0;
  std::uint32_t stale_reads = 0;
  tick begin_time = 0;
  tick read_phase_latency = 0;
  tick catchup_wait = 0;
};

//! One served key-read at a partition (cache hits excluded).
struct read_sample {
  txn_id txn = 0;
  key_id key = 0;
  tick wait = 0;
  wait_cause cause = wait_cause::none;
  std::uint32_t skips = 0;
};

struct delay_report {
  std::uint64_t server_reads = 0;
  std::uint64_t stale_reads = 0;
  tick max_wait = 0;
  std::uint64_t waits_clock_skew = 0;
  std::uint64_t waits_pending_commit = 0;
  std::map<std::uint32_t, std::uint64_t> staleness_cdf;  // skips -> count
  double stale_fraction = 0.0;
  double mv_overhead = 1.0;  // mean of (skips + 1)
  bool single_round_zero_wait = true;
};

struct session_report {
  std::uint64_t ryw_violations = 0;
  std::uint64_t monotonic_violations = 0;
  std::vector<std::string> details;
};

struct report {
  protocol proto = protocol::cv;
  std::vector<txn_verdict> txns;
  std::vector<read_sample> samples;
  delay_report delay;
  session_report sessions;
  std::vector<std::string> violations;  // structural invariant breaches

  //! Per-protocol snapshot-guarantee contract over committed read sets.
  bool contracts_ok() const {
    for (const txn_verdict& t : txns) {
      if (t.aborted || !t.has_reads) continue;
      if (!t.committed_reads) return false;
      switch (t.proto) {
        case protocol::av:
        case protocol::cure:
          if (!t.atomic || !t.order_preserving) return false;
          break;
        case protocol::op:
          if (!t.order_preserving) return false;
          break;
        case protocol::cv:
        case protocol::latest_always:
          break;
      }
    }
    return true;
  }

  bool ok() const { return violations.empty() && contracts_ok(); }

  std::string summary() const {
    std::ostringstream os;
    std::size_t checked = 0;
    for (const txn_verdict& t : txns)
      if (!t.aborted && t.has_reads) ++checked;
    os << "protocol=" << snapsim::to_string(proto) << " txns=" << txns.size()
       << " checked=" << checked << " reads=" << delay.server_reads
       << " stale_fraction=" << delay.stale_fraction
       << " mv_overhead=" << delay.mv_overhead
       << " waits[clock]=" << delay.waits_clock_skew
       << " waits[pending]=" << delay.waits_pending_commit
       << " ryw_violations=" << sessions.ryw_violations
       << " monotonic_violations=" << sessions.monotonic_violations
       << " invariant_violations=" << violations.size()
       << " contracts=" << (contracts_ok() ? "pass" : "FAIL");
    return os.str();
  }
};

namespace detail {

//! Mirror of a partition's per-key chain, rebuilt from apply events; used
//! to recompute staleness independently of the store's own accounting.
struct replay_chain {
  std::vector<const graph_version*> versions;  // newest first

  void apply(const graph_version* v, protocol proto) {
    if (proto == protocol::cv) {
      if (!versions.empty() && !versions.front()->initial &&
          recency_less_v(*v, *versions.front()))
        return;
      versions.assign(1, v);
      return;
    }
    auto pos = versions.begin();
    for (; pos != versions.end(); ++pos)
      if (!recency_less_v(*v, **pos)) break;
    if (pos != versions.end() && (*pos)->writer == v->writer &&
        (*pos)->key == v->key)
      return;  // duplicate delivery
    versions.insert(pos, v);
  }

  //! Committed versions stored newer than `v` at serve time.
  std::uint32_t skips_of(const graph_version* v) const {
    std::uint32_t n = 0;
    for (const graph_version* c : versions) {
      if (c->writer == v->writer && c->key == v->key) return n;
      ++n;
    }
    return n;  // not found: older than everything retained
  }

  static bool recency_less_v(const graph_version& a, const graph_version& b) {
    if (a.ct != b.ct) return a.ct < b.ct;
    if (a.origin != b.origin) return a.origin < b.origin;
    return a.writer < b.writer;
  }
};

struct partition_replay {
  std::unordered_map<key_id, replay_chain> chains;
  std::unordered_set<std::uint64_t> applied_txns;  // mixed txn/key hash

  replay_chain& chain_of(version_graph& g, key_id k) {
    auto it = chains.find(k);
    if (it == chains.end()) {
      it = chains.emplace(k, replay_chain{}).first;
      it->second.versions.push_back(g.initial_of(k));
    }
    return it->second;
  }
};

inline std::uint64_t txn_key_hash(txn_id t, key_id k) {
  return mix64(t ^ mix64(k));
}

}  // namespace detail

/*! \brief Full offline analysis of one history log.
 *
 * Replays the log once to reconstruct per-partition chains (independent
 * staleness accounting and dirty-read detection), builds the version
 * graph, and evaluates the snapshot definitions, freshness classes,
 * delay accounting, structural invariants and session guarantees.
 */
class analyzer {
 public:
  explicit analyzer(const history_log& log) : log_(log), graph_(log) {}

  version_graph& graph() { return graph_; }

  report run() {
    report rep;
    rep.proto = log_.info.proto;
    for (const std::string& v : graph_.build_violations())
      rep.violations.push_back(v);

    collect_txns();
    replay(rep);
    evaluate_snapshots(rep);
    delay_accounting(rep);
    check_structural(rep);
    check_sessions(rep);
    return rep;
  }

 private:
  struct txn_state {
    txn_verdict verdict;
    version_vector ss;
    std::map<key_id, const graph_version*> reads;  // final readset
    std::map<key_id, tick> read_times;             // serve time per key
    tick last_read_ack = 0;
    bool committed_ack = false;
    tick commit_ack_time = 0;
  };

  void collect_txns() {
    for (const history_event& e : log_.events) {
      switch (e.kind) {
        case event_kind::txn_begin: {
          txn_state& t = txns_[e.txn];
          t.verdict.txn = e.txn;
          t.verdict.client = e.client;
          t.verdict.proto = e.proto;
          t.verdict.begin_time = e.time;
          t.verdict.catchup_wait = e.wait;
          t.ss = e.ss;
          break;
        }
        case event_kind::client_ack: {
          txn_state& t = txns_[e.txn];
          if (e.ack == ack_kind::read_round)
            t.last_read_ack = e.time;
          else if (e.ack == ack_kind::committed) {
            t.committed_ack = true;
            t.commit_ack_time = e.time;
          } else if (e.ack == ack_kind::aborted) {
            t.verdict.aborted = true;
          }
          break;
        }
        default:
          break;
      }
    }
  }

  //! Forward replay: maintain each partition's chain exactly as the store
  //! did and judge every read record against it.
  void replay(report& rep) {
    std::map<std::pair<site_id, partition_id>, detail::partition_replay>
        parts;
    std::unordered_set<txn_id> commit_acked;

    for (const history_event& e : log_.events) {
      switch (e.kind) {
        case event_kind::commit:
        case event_kind::deliver: {
          auto& pr = parts[{e.site, e.part}];
          for (key_id k : e.keys) {
            const graph_version* v = graph_.find(e.txn, k);
            if (!v) continue;  // build violation already recorded
            if (!pr.applied_txns.insert(detail::txn_key_hash(e.txn, k))
                     .second)
              continue;
            pr.chain_of(graph_, k).apply(v, log_.info.proto);
          }
          break;
        }
        case event_kind::client_ack:
          if (e.ack == ack_kind::committed) commit_acked.insert(e.txn);
          break;
        case event_kind::read_resp: {
          txn_state& t = txns_[e.txn];
          auto& pr = parts[{e.site, e.part}];
          for (const read_record& r : e.reads) {
            const graph_version* v =
                r.writer == initial_txn ? graph_.initial_of(r.key)
                                        : graph_.find(r.writer, r.key);
            if (!v) {
              rep.violations.push_back(
                  "read of unknown version txn=" + std::to_string(r.writer) +
                  " key=" + std::to_string(r.key));
              continue;
            }
            t.reads[r.key] = v;
            t.read_times[r.key] = e.time;
            t.verdict.has_reads = true;

            if (r.from_cache) {
              // Served from the client's own-write cache: committed iff
              // the writing transaction was acknowledged first.
              if (!v->initial && !commit_acked.count(r.writer))
                t.verdict.committed_reads = false;
              continue;
            }

            ++t.verdict.server_reads;
            detail::replay_chain& chain = pr.chain_of(graph_, r.key);
            bool applied =
                v->initial ||
                pr.applied_txns.count(detail::txn_key_hash(r.writer, r.key));
            if (!applied) t.verdict.committed_reads = false;

            std::uint32_t skips = chain.skips_of(v);
            if (skips != r.skips)
              rep.violations.push_back(
                  "staleness mismatch txn=" + std::to_string(e.txn) +
                  " key=" + std::to_string(r.key) + " logged=" +
                  std::to_string(r.skips) + " replayed=" +
                  std::to_string(skips));
            if (skips > 0) ++t.verdict.stale_reads;

            read_sample s;
            s.txn = e.txn;
            s.key = r.key;
            s.wait = e.wait;
            s.cause = e.cause;
            s.skips = skips;
            rep.samples.push_back(s);
          }
          break;
        }
        default:
          break;
      }
    }
  }

  void evaluate_snapshots(report& rep) {
    for (auto& [id, t] : txns_) {
      if (t.verdict.has_reads && !t.verdict.aborted) {
        readset reads;
        for (const auto& [k, v] : t.reads) reads.push_back(v);
        t.verdict.order_preserving = check_order_preserving(graph_, reads);
        t.verdict.atomic =
            t.verdict.order_preserving && check_atomic(graph_, reads);
        t.verdict.freshness = classify_freshness(t);
      }
      t.verdict.read_phase_latency =
          t.last_read_ack > t.verdict.begin_time
              ? t.last_read_ack - t.verdict.begin_time
              : 0;
      rep.txns.push_back(t.verdict);
    }
  }

  freshness_kind classify_freshness(const txn_state& t) const {
    if (t.verdict.stale_reads == 0) return freshness_kind::latest;
    for (const auto& [k, v] : t.reads) {
      if (!v->initial && v->commit_time > t.verdict.begin_time)
        return freshness_kind::concurrent;
    }
    return freshness_kind::stable;
  }

  void delay_accounting(report& rep) {
    delay_report& d = rep.delay;
    double skip_sum = 0.0;
    for (const read_sample& s : rep.samples) {
      ++d.server_reads;
      if (s.skips > 0) ++d.stale_reads;
      d.staleness_cdf[s.skips] += 1;
      skip_sum += s.skips + 1;
      d.max_wait = std::max(d.max_wait, s.wait);
      if (s.wait > 0) {
        d.single_round_zero_wait = false;
        if (s.cause == wait_cause::clock_skew) ++d.waits_clock_skew;
        if (s.cause == wait_cause::pending_commit) ++d.waits_pending_commit;
      }
    }
    if (d.server_reads > 0) {
      d.stale_fraction =
          static_cast<double>(d.stale_reads) / static_cast<double>(d.server_reads);
      d.mv_overhead = skip_sum / static_cast<double>(d.server_reads);
    }
  }

  //! Structural invariants: commit-vector construction, monotone
  //! stabilisation vectors, ct-sorted streams, request conservation.
  void check_structural(report& rep) {
    std::map<std::pair<site_id, partition_id>,
             std::pair<version_vector, version_vector>>
        last_vectors;
    std::map<std::pair<std::uint64_t, std::uint64_t>, tick> stream_watermark;
    std::map<std::uint64_t, int> open_requests;

    for (const history_event& e : log_.events) {
      switch (e.kind) {
        case event_kind::commit:
        case event_kind::deliver: {
          if (e.ct <= e.dep.at(e.from_site))
            rep.violations.push_back("txn " + std::to_string(e.txn) +
                                     " has ct <= dep[origin]");
          version_vector expect = e.dep;
          expect.set(e.from_site, e.ct);
          if (!(expect == e.cv))
            rep.violations.push_back(
                "txn " + std::to_string(e.txn) +
                " cv is not dep with origin entry replaced");
          if (e.kind == event_kind::deliver) {
            auto channel = std::make_pair(
                (static_cast<std::uint64_t>(e.from_site) << 32) | e.from_part,
                (static_cast<std::uint64_t>(e.site) << 32) | e.part);
            auto it = stream_watermark.find(channel);
            if (it != stream_watermark.end() && e.ct < it->second)
              rep.violations.push_back(
                  "cross-site stream regressed at txn " +
                  std::to_string(e.txn));
            stream_watermark[channel] = e.ct;
          }
          break;
        }
        case event_kind::stable_tick: {
          auto& prev = last_vectors[{e.site, e.part}];
          if (prev.first.size() != 0 &&
              (!vv_leq(prev.first, e.vec) || !vv_leq(prev.second, e.sv)))
            rep.violations.push_back(
                "vec_p or sv regressed at partition " +
                std::to_string(e.site) + ":" + std::to_string(e.part));
          prev = {e.vec, e.sv};
          break;
        }
        case event_kind::read_req:
          open_requests[e.request] += 1;
          break;
        case event_kind::read_resp:
          if (e.request != 0) open_requests[e.request] -= 1;
          break;
        default:
          break;
      }
    }
    for (const auto& [req, n] : open_requests) {
      if (n != 0)
        rep.violations.push_back("request " + std::to_string(req) +
                                 " has no matching response");
    }
  }

  //! Read-your-writes and monotonic-reads, judged per client over its
  //! transactions in program order.
  void check_sessions(report& rep) {
    std::map<client_id, std::vector<const txn_state*>> by_client;
    for (const auto& [id, t] : txns_)
      by_client[t.verdict.client].push_back(&t);
    for (auto& [c, list] : by_client) {
      std::sort(list.begin(), list.end(),
                [](const txn_state* a, const txn_state* b) {
                  return a->verdict.txn < b->verdict.txn;
                });
      std::map<key_id, const graph_version*> own_writes;
      std::map<key_id, const graph_version*> last_reads;
      for (const txn_state* t : list) {
        for (const auto& [k, v] : t->reads) {
          auto w = own_writes.find(k);
          if (w != own_writes.end() &&
              detail::replay_chain::recency_less_v(*v, *w->second)) {
            ++rep.sessions.ryw_violations;
            rep.sessions.details.push_back(
                "ryw: client " + std::to_string(c) + " txn " +
                std::to_string(t->verdict.txn) + " key " + std::to_string(k) +
                " read older than own write");
          }
          auto lr = last_reads.find(k);
          if (lr != last_reads.end() &&
              detail::replay_chain::recency_less_v(*v, *lr->second)) {
            ++rep.sessions.monotonic_violations;
            rep.sessions.details.push_back(
                "monotonic: client " + std::to_string(c) + " txn " +
                std::to_string(t->verdict.txn) + " key " + std::to_string(k) +
                " regressed");
          }
          last_reads[k] = v;
        }
        if (t->committed_ack) {
          for (const graph_version* w : graph_.writes_of(t->verdict.txn))
            own_writes[w->key] = w;
        }
      }
    }
  }

  const history_log& log_;
  version_graph graph_;
  std::map<txn_id, txn_state> txns_;
};

inline report analyze(const history_log& log) {
  analyzer a(log);
  return a.run();
}

}  // namespace snapsim::oracle
