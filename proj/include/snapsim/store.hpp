#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "snapsim/types.hpp"
#include "snapsim/version_vector.hpp"

namespace snapsim {

/*! \brief One committed state of one object.
 *
 * `dep` declares the version causally after every version with commit
 * vector <= dep. `cv` is `dep` with the origin-site entry replaced by the
 * commit timestamp `ct`; since ct > dep[origin], cv > dep always holds
 * for transaction-committed versions. The initial version of every key
 * has dep = cv = zero and ct = 0.
 */
struct object_version {
  key_id key = 0;
  std::string value;
  version_vector dep;
  version_vector cv;
  tick ct = 0;
  site_id origin = 0;
  txn_id writer = initial_txn;

  bool is_initial() const { return writer == initial_txn; }

  static object_version initial(key_id k, std::size_t sites) {
    object_version v;
    v.key = k;
    v.dep = version_vector::zero(sites);
    v.cv = version_vector::zero(sites);
    return v;
  }
};

/*! Total recency order on versions of one key: by (ct, origin), with the
 * writer id as a last resort for the rare case of two transactions from
 * one site committing the same key at the same timestamp. "Newest" always
 * means recency-greatest under this order. */
inline bool recency_less(const object_version& a, const object_version& b) {
  if (a.ct != b.ct) return a.ct < b.ct;
  if (a.origin != b.origin) return a.origin < b.origin;
  return a.writer < b.writer;
}

//! Version-selection predicate of the read path, per protocol.
inline bool cond(const object_version& v, const version_vector& ss, protocol p) {
  switch (p) {
    case protocol::cv:
    case protocol::latest_always:
      return true;
    case protocol::op:
      return vv_leq(v.dep, ss);
    case protocol::av:
    case protocol::cure:
      return vv_leq(v.cv, ss);
  }
  return false;
}

struct gc_config {
  std::size_t trigger = 50;  // truncate once a chain grows past this
  std::size_t keep = 20;     // versions retained after truncation
};

//! Result of a read: the version plus how many newer stored versions the
//! chain had to skip to satisfy the snapshot (0 = the head was returned).
struct read_result {
  const object_version* version = nullptr;
  std::uint32_t skips = 0;
};

/*! \brief Per-partition multi-version object storage.
 *
 * One store is owned by exactly one partition state machine. Chains are
 * kept newest-first; every key implicitly starts with an initial version,
 * materialised on first touch.
 */
class version_store {
 public:
  version_store() = default;
  version_store(std::size_t sites, gc_config gc) : sites_(sites), gc_(gc) {}

  using chain = std::vector<object_version>;

  const chain& versions(key_id k) { return chain_for(k); }

  /*! Newest version satisfying cond for (`ss`, `proto`). Always succeeds:
   * the initial version has cv = 0 <= ss. */
  read_result read_version(key_id k, const version_vector& ss, protocol proto) {
    const chain& c = chain_for(k);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (cond(c[i], ss, proto))
        return read_result{&c[i], static_cast<std::uint32_t>(i)};
    }
    throw std::logic_error("version_store: no eligible version (initial lost)");
  }

  /*! Apply one transaction's updates for this partition.
   *
   * Repeated updates to one key within the batch are applied in
   * submission order, so the register ends holding the last value. Under
   * CV the chain collapses to a single version with last-writer-wins
   * resolution; under the multi-version protocols the new version is
   * inserted preserving recency order. Re-delivering an already-applied
   * transaction is a no-op.
   */
  void update_versions(const std::vector<std::pair<key_id, std::string>>& upds,
                       const version_vector& dep, tick ct, site_id origin,
                       txn_id writer, protocol proto) {
    if (ct <= dep.at(origin))
      throw std::logic_error("version_store: ct must exceed dep[origin]");
    version_vector cv = dep;
    cv.set(origin, ct);

    for (std::size_t i = 0; i < upds.size(); ++i) {
      // Register semantics: only the last submitted value of a key survives.
      bool overwritten = false;
      for (std::size_t j = i + 1; j < upds.size() && !overwritten; ++j)
        overwritten = upds[j].first == upds[i].first;
      if (overwritten) continue;

      object_version v;
      v.key = upds[i].first;
      v.value = upds[i].second;
      v.dep = dep;
      v.cv = cv;
      v.ct = ct;
      v.origin = origin;
      v.writer = writer;
      insert(std::move(v), proto);
    }
  }

  std::size_t key_count() const { return chains_.size(); }

  //! Stable-vector snapshot the GC guard checks evictions against.
  void set_gc_guard(const version_vector& guard) { gc_guard_ = guard; }

  const gc_config& gc() const { return gc_; }

  std::uint64_t evicted_total() const { return evicted_total_; }

 private:
  chain& chain_for(key_id k) {
    auto it = chains_.find(k);
    if (it == chains_.end())
      it = chains_.emplace(k, chain{object_version::initial(k, sites_)}).first;
    return it->second;
  }

  void insert(object_version&& v, protocol proto) {
    chain& c = chain_for(v.key);
    if (proto == protocol::cv) {
      // Single-version LWW register: the incoming version replaces the
      // stored one unless it is older in recency order.
      if (!c.empty() && recency_less(v, c.front())) return;
      c.assign(1, std::move(v));
      return;
    }
    // Replay safety: a transaction's updates all share one cv, so an
    // existing (key, cv) entry means this delivery is a duplicate.
    auto pos = c.begin();
    for (; pos != c.end(); ++pos) {
      if (!recency_less(v, *pos)) break;
    }
    if (pos != c.end() && pos->cv == v.cv && pos->writer == v.writer) return;
    c.insert(pos, std::move(v));
    maybe_gc(c);
  }

  /*! Truncate an oversized chain, keeping the `keep` newest versions.
   *
   * When a guard vector is set, the newest version it covers survives as
   * well, together with everything newer: a reader pinned to any snapshot
   * at least as fresh as the guard can still be served its entitled
   * version. The guard lags the stable vector by enough rounds to cover
   * every snapshot still in flight.
   */
  void maybe_gc(chain& c) {
    if (gc_.trigger == 0 || c.size() <= gc_.trigger) return;
    std::size_t anchor = 0;
    if (gc_guard_.size() == sites_) {
      anchor = c.size() - 1;  // nothing covered: conservatively keep all
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (vv_leq(c[i].cv, gc_guard_)) {
          anchor = i;
          break;
        }
      }
    }
    std::size_t cut = std::max(gc_.keep, anchor + 1);
    if (cut >= c.size()) return;
    evicted_total_ += c.size() - cut;
    c.erase(c.begin() + static_cast<std::ptrdiff_t>(cut), c.end());
  }

  std::size_t sites_ = 1;
  gc_config gc_;
  version_vector gc_guard_;
  std::unordered_map<key_id, chain> chains_;
  std::uint64_t evicted_total_ = 0;
};

}  // namespace snapsim
