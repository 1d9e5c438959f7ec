#pragma once

#include <map>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "snapsim/client.hpp"
#include "snapsim/coordinator.hpp"
#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"
#include "snapsim/partition.hpp"
#include "snapsim/stabilisation.hpp"
#include "snapsim/workload.hpp"

namespace snapsim {

struct latency_range {
  tick lo = 1;
  tick hi = 1;
};

struct sim_config {
  std::uint32_t sites = 2;
  std::uint32_t partitions = 4;  // per site
  std::uint64_t seed = 1;
  protocol proto = protocol::av;

  latency_range intra_site{1, 2};
  latency_range cross_site{5, 10};
  latency_range client_server{1, 1};

  std::vector<tick> clock_offsets;  // per site; empty = all zero
  tick clock_jitter = 0;            // per-read jitter amplitude

  tick stabilisation_period = 10;
  gc_config gc{50, 20};
  std::uint32_t gc_guard_lag = 32;  // rounds of SV history behind the guard

  bool session_cache = true;
  bool session_catchup = true;

  tick max_ticks = 10'000'000;   // hard stop: something is wedged
  tick quiet_limit = 20'000;     // no progress for this long = deadlock

  void validate() const {
    if (sites == 0 || partitions == 0)
      throw std::invalid_argument("sim: sites and partitions must be >= 1");
    if (!clock_offsets.empty() && clock_offsets.size() != sites)
      throw std::invalid_argument("sim: one clock offset per site");
    auto check = [](latency_range r, const char* what) {
      if (r.lo < 1 || r.hi < r.lo)
        throw std::invalid_argument(std::string("sim: bad latency range for ") +
                                    what);
    };
    check(intra_site, "intra_site");
    check(cross_site, "cross_site");
    check(client_server, "client_server");
    if (stabilisation_period <= 0)
      throw std::invalid_argument("sim: stabilisation period must be positive");
  }

  tick offset_of(site_id s) const {
    return clock_offsets.empty() ? 0 : clock_offsets[s];
  }
};

//! No further events can change anything, yet the workload is unfinished.
class sim_deadlock : public std::runtime_error {
 public:
  explicit sim_deadlock(const std::string& dump) : std::runtime_error(dump) {}
};

/*! \brief Deterministic discrete-event simulation of the whole system.
 *
 * Single-threaded event loop over a priority queue keyed by
 * (time, sequence number); all randomness comes from one seeded generator
 * for the network/clocks and one per-client generator for the workload,
 * so a (config, seed) pair fully determines the history log. Channels
 * between any two actors are reliable FIFO: delivery order equals send
 * order per directed channel.
 */
class simulation final : public net {
 public:
  explicit simulation(sim_config cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    sim_rng_.seed(mix64(cfg_.seed ^ 0x5117'37c0ull));
    partitions_.reserve(cfg_.sites * cfg_.partitions);
    for (site_id s = 0; s < cfg_.sites; ++s) {
      for (partition_id m = 0; m < cfg_.partitions; ++m) {
        partitions_.emplace_back(
            s, m, cfg_.sites, cfg_.partitions, cfg_.proto,
            site_clock(s, cfg_.offset_of(s), cfg_.clock_jitter), cfg_.gc,
            cfg_.gc_guard_lag);
      }
    }
    log_.info.sites = cfg_.sites;
    log_.info.partitions = cfg_.partitions;
    log_.info.proto = cfg_.proto;
    log_.info.seed = cfg_.seed;
  }

  //! Closed-loop clients, round-robin across sites.
  void add_clients(const workload_config& wl, std::uint32_t count) {
    wl.validate();
    workload_ = wl;
    for (std::uint32_t i = 0; i < count; ++i) {
      auto id = static_cast<client_id>(clients_.size());
      site_id site = id % cfg_.sites;
      std::mt19937_64 rng(mix64(cfg_.seed ^ (0xc11e'47f2ull + id)));
      clients_.emplace_back(id, site, cfg_.proto, &workload_, rng);
    }
  }

  client_id add_scripted_client(site_id site, std::vector<scripted_op> script) {
    auto id = static_cast<client_id>(clients_.size());
    clients_.emplace_back(id, site, cfg_.proto, std::move(script));
    return id;
  }

  void set_partition_down(partition_addr p) {
    partition_at(p).down = true;
  }

  //! Replace one site's clock skew before the run starts.
  void inject_skew(site_id site, tick offset) {
    if (ran_) throw std::logic_error("simulation: inject_skew after run()");
    for (partition_id m = 0; m < cfg_.partitions; ++m)
      partition_at({site, m}).clock() =
          site_clock(site, offset, cfg_.clock_jitter);
  }

  enum class link_class { intra_site, cross_site, client_server };

  //! Replace one link class's latency range before the run starts.
  void set_latency(link_class which, latency_range range) {
    if (ran_) throw std::logic_error("simulation: set_latency after run()");
    if (range.lo < 1 || range.hi < range.lo)
      throw std::invalid_argument("simulation: bad latency range");
    switch (which) {
      case link_class::intra_site: cfg_.intra_site = range; break;
      case link_class::cross_site: cfg_.cross_site = range; break;
      case link_class::client_server: cfg_.client_server = range; break;
    }
  }

  const sim_config& config() const { return cfg_; }
  partition_server& partition_at(partition_addr p) {
    return partitions_[p.site * cfg_.partitions + p.part];
  }
  client& client_at(client_id id) { return clients_[id]; }

  //! Execute until clients finish, messages drain and every partition's
  //! stable vector covers every committed transaction.
  history_log run() {
    if (ran_) throw std::logic_error("simulation: run() is single-shot");
    ran_ = true;
    log_.info.clients = static_cast<std::uint32_t>(clients_.size());
    max_committed_cv_ = version_vector::zero(cfg_.sites);

    for (partition_server& p : partitions_)
      schedule_partition_timer(p.self, message{stab_tick{1}},
                               cfg_.stabilisation_period);
    for (client& c : clients_) {
      tick start = c.scripted() ? c.first_wake() : 1 + c.id();
      schedule_client_wake(c.id(), start);
    }

    while (!queue_.empty()) {
      event ev = pop_event();
      now_ = ev.at;
      if (now_ > cfg_.max_ticks)
        throw sim_deadlock("simulation exceeded max_ticks\n" + blocked_dump());
      if (now_ - last_progress_ > cfg_.quiet_limit)
        throw sim_deadlock("no progress for " +
                           std::to_string(cfg_.quiet_limit) + " ticks\n" +
                           blocked_dump());
      dispatch(ev);
      if (finished()) return std::move(log_);
    }
    throw sim_deadlock("event queue drained with work left\n" + blocked_dump());
  }

  // ---- net interface ------------------------------------------------------

  tick now() const override { return now_; }
  std::mt19937_64& rng() override { return sim_rng_; }
  std::uint64_t next_request_id() override { return ++request_counter_; }
  txn_id alloc_txn() override { return ++txn_counter_; }

  void send_to_partition(partition_addr dst, message msg,
                         tick latency_override = -1) override {
    std::uint64_t to = encode_partition(dst);
    partition_server& p = partition_at(dst);
    if (p.down) {
      bounce_unreachable(dst, msg);
      return;
    }
    tick lat = latency_override >= 0 ? latency_override
                                     : draw(partition_link_class(dst));
    push(to, std::move(msg), lat, /*timer=*/false);
  }

  void send_to_coordinator(txn_id txn, message msg,
                           tick latency_override = -1) override {
    tick lat = latency_override >= 0
                   ? latency_override
                   : draw(current_is_partition_ ? cfg_.intra_site
                                                : cfg_.client_server);
    push(encode_coordinator(txn), std::move(msg), lat, false);
  }

  void send_to_client(client_id dst, message msg,
                      tick latency_override = -1) override {
    tick lat =
        latency_override >= 0 ? latency_override : draw(cfg_.client_server);
    push(encode_client(dst), std::move(msg), lat, false);
  }

  void schedule_partition_timer(partition_addr dst, message msg,
                                tick at) override {
    push_absolute(encode_partition(dst), std::move(msg), at, true);
  }

  void schedule_client_wake(client_id id, tick at) override {
    push_absolute(encode_client(id), message{client_wake{}}, at, true);
  }

  void sv_updated(partition_addr at) override {
    partition_server& p = partition_at(at);
    for (txn_id txn : p.sv_waiters)
      push(encode_coordinator(txn), message{catchup_check{}}, 0, false);
  }

  void log(history_event ev) override {
    ev.time = now_;
    if (ev.kind == event_kind::commit) max_committed_cv_.merge(ev.cv);
    log_.append(std::move(ev));
  }

 private:
  struct event {
    tick at = 0;
    std::uint64_t seq = 0;
    std::uint64_t target = 0;
    bool timer = false;
    bool workload = false;  // counted toward the drain condition
    message msg;
  };

  struct event_after {
    bool operator()(const event& a, const event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  static constexpr std::uint64_t env_actor = ~0ull;

  std::uint64_t encode_partition(partition_addr p) const {
    return (1ull << 60) | (static_cast<std::uint64_t>(p.site) * cfg_.partitions +
                           p.part);
  }
  std::uint64_t encode_coordinator(txn_id t) const { return (2ull << 60) | t; }
  std::uint64_t encode_client(client_id c) const { return (3ull << 60) | c; }

  latency_range partition_link_class(partition_addr dst) const {
    if (!current_is_partition_) return cfg_.intra_site;  // coordinator -> part
    return current_partition_.site == dst.site ? cfg_.intra_site
                                               : cfg_.cross_site;
  }

  tick draw(latency_range r) { return rng_range(sim_rng_, r.lo, r.hi); }

  //! Stabilisation gossip flows forever while the simulation runs; it is
  //! exempt from the drain condition. Update batches are exempt too: the
  //! termination check `sv >= max committed cv` can only pass once every
  //! batch was delivered, because vec_p advances over FIFO channels and
  //! cannot overtake an in-flight batch.
  static bool is_stabilisation_traffic(const message& m) {
    return std::holds_alternative<stable_broadcast>(m.body) ||
           std::holds_alternative<remote_updates>(m.body) ||
           std::holds_alternative<remote_heartbeat>(m.body);
  }

  void push(std::uint64_t target, message msg, tick latency, bool timer) {
    tick at = now_ + latency;
    auto key = std::make_pair(current_actor_, target);
    auto it = fifo_clamp_.find(key);
    if (it != fifo_clamp_.end() && it->second > at) at = it->second;
    fifo_clamp_[key] = at;
    push_absolute(target, std::move(msg), at, timer);
  }

  void push_absolute(std::uint64_t target, message msg, tick at, bool timer) {
    bool workload = !timer && !is_stabilisation_traffic(msg);
    if (workload) ++inflight_;
    queue_.push(event{at, ++seq_counter_, target, timer, workload,
                      std::move(msg)});
  }

  event pop_event() {
    event ev = queue_.top();
    queue_.pop();
    if (ev.workload) {
      --inflight_;
      last_progress_ = ev.at;
    }
    return ev;
  }

  void bounce_unreachable(partition_addr dst, const message& msg) {
    txn_id txn = 0;
    if (const auto* r = std::get_if<read_request>(&msg.body))
      txn = r->txn;
    else if (const auto* p = std::get_if<prepare_request>(&msg.body))
      txn = p->txn;
    else
      return;  // commit/abort/stabilisation traffic to a dead partition: drop
    push(encode_coordinator(txn), message{unreachable{txn, dst}},
         draw(cfg_.intra_site), false);
  }

  void dispatch(const event& ev) {
    std::uint64_t tag = ev.target >> 60;
    std::uint64_t id = ev.target & ((1ull << 60) - 1);
    current_actor_ = ev.target;
    current_is_partition_ = tag == 1;
    if (tag == 1) {
      partition_server& p = partitions_[id];
      current_partition_ = p.self;
      if (p.down) return;
      dispatch_partition(p, ev.msg);
    } else if (tag == 2) {
      dispatch_coordinator(static_cast<txn_id>(id), ev.msg);
    } else if (tag == 3) {
      dispatch_client(clients_[id], ev.msg);
    }
  }

  void dispatch_partition(partition_server& p, const message& m) {
    stabiliser st(p);
    if (const auto* r = std::get_if<read_request>(&m.body))
      p.handle_read(*this, *r);
    else if (const auto* pr = std::get_if<prepare_request>(&m.body))
      p.handle_prepare(*this, *pr);
    else if (const auto* c = std::get_if<commit_request>(&m.body))
      p.handle_commit(*this, *c);
    else if (const auto* a = std::get_if<abort_request>(&m.body))
      p.handle_abort(*this, *a);
    else if (const auto* s = std::get_if<stable_broadcast>(&m.body))
      st.on_stable(*this, *s);
    else if (const auto* u = std::get_if<remote_updates>(&m.body))
      st.on_remote_updates(*this, *u);
    else if (const auto* h = std::get_if<remote_heartbeat>(&m.body))
      st.on_heartbeat(*h);
    else if (const auto* t = std::get_if<stab_tick>(&m.body))
      st.run_tick(*this, t->round, cfg_.stabilisation_period);
    else if (std::get_if<blocked_read_recheck>(&m.body))
      p.handle_recheck(*this);
  }

  void dispatch_coordinator(txn_id txn, const message& m) {
    auto it = coordinators_.find(txn);
    if (it == coordinators_.end()) {
      const auto* req = std::get_if<client_request>(&m.body);
      if (!req) return;  // stray reply for a finished transaction
      partition_server* home = &partition_at(
          partition_addr{req->site, req->client % cfg_.partitions});
      client_session* session =
          (cfg_.session_cache || cfg_.session_catchup) && req->client < clients_.size()
              ? &clients_[req->client].session
              : nullptr;
      coordinator_config ccfg;
      ccfg.sites = cfg_.sites;
      ccfg.partitions = cfg_.partitions;
      ccfg.session_cache = cfg_.session_cache;
      ccfg.session_catchup = cfg_.session_catchup;
      it = coordinators_
               .emplace(txn, coordinator(txn, req->client, req->proto, home,
                                         session, ccfg))
               .first;
    }
    coordinator& co = it->second;
    if (const auto* req = std::get_if<client_request>(&m.body))
      co.handle_client(*this, *req);
    else if (const auto* rr = std::get_if<read_reply>(&m.body))
      co.handle_read_reply(*this, *rr);
    else if (const auto* pr = std::get_if<prepare_reply>(&m.body))
      co.handle_prepare_reply(*this, *pr);
    else if (const auto* un = std::get_if<unreachable>(&m.body))
      co.handle_unreachable(*this, *un);
    else if (std::get_if<catchup_check>(&m.body))
      co.handle_catchup_check(*this);
  }

  void dispatch_client(client& c, const message& m) {
    if (std::get_if<client_wake>(&m.body))
      c.handle_wake(*this);
    else if (const auto* r = std::get_if<client_reply>(&m.body))
      c.handle_reply(*this, *r);
  }

  bool finished() const {
    if (now_ < 2 * cfg_.stabilisation_period) return false;
    if (inflight_ != 0) return false;
    for (const client& c : clients_)
      if (!c.done()) return false;
    for (const partition_server& p : partitions_) {
      if (!p.drained()) return false;
      if (!vv_leq(max_committed_cv_, p.sv)) return false;
    }
    return true;
  }

  std::string blocked_dump() const {
    std::ostringstream os;
    os << "t=" << now_ << " inflight=" << inflight_ << '\n';
    for (const client& c : clients_)
      if (!c.done()) os << "client " << c.id() << " not done\n";
    for (const partition_server& p : partitions_) {
      if (p.drained() && vv_leq(max_committed_cv_, p.sv)) continue;
      os << "partition " << p.self.site << ':' << p.self.part
         << " prepared=" << p.prepared.size() << " to_send=" << p.to_send.size()
         << " blocked_reads=" << p.blocked.size() << " sv=" << p.sv.str()
         << " need=" << max_committed_cv_.str() << '\n';
    }
    for (const auto& [txn, co] : coordinators_)
      if (!co.finished())
        os << "coordinator txn=" << txn << " unfinished\n";
    return os.str();
  }

  sim_config cfg_;
  workload_config workload_;

  std::vector<partition_server> partitions_;
  std::vector<client> clients_;
  std::map<txn_id, coordinator> coordinators_;

  std::mt19937_64 sim_rng_;
  std::priority_queue<event, std::vector<event>, event_after> queue_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, tick> fifo_clamp_;

  history_log log_;
  version_vector max_committed_cv_;

  tick now_ = 0;
  std::uint64_t seq_counter_ = 0;
  std::uint64_t request_counter_ = 0;
  txn_id txn_counter_ = 0;
  std::uint64_t inflight_ = 0;
  tick last_progress_ = 0;
  std::uint64_t current_actor_ = env_actor;
  bool current_is_partition_ = false;
  partition_addr current_partition_;
  bool ran_ = false;
};

}  // namespace snapsim
