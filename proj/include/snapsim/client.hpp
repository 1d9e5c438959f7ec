#pragma once

#include <optional>
#include <random>
#include <unordered_set>
#include <variant>
#include <vector>

#include "snapsim/coordinator.hpp"
#include "snapsim/messages.hpp"
#include "snapsim/net.hpp"
#include "snapsim/workload.hpp"

namespace snapsim {

//! One step of a hand-written schedule. Steps with `at >= 0` fire at that
//! absolute time; others fire as soon as the previous step is acked.
struct scripted_op {
  tick at = -1;
  bool new_txn = false;
  std::optional<site_id> move_to_site;  // reconnect elsewhere first
  std::variant<op_read, op_update, op_commit> op;
};

/*! \brief A closed-loop client (zero think time), or a scripted one.
 *
 * Workload clients alternate read-only and update transactions until
 * their pair budget is spent. Scripted clients replay an explicit
 * schedule; scenarios use them to pin exact interleavings.
 */
class client {
 public:
  client(client_id id, site_id site, protocol proto, const workload_config* wl,
         std::mt19937_64 wl_rng)
      : id_(id), site_(site), proto_(proto), wl_(wl), rng_(wl_rng) {
    session.id = id;
    session.sticky_site = site;
  }

  client(client_id id, site_id site, protocol proto,
         std::vector<scripted_op> script)
      : id_(id), site_(site), proto_(proto), script_(std::move(script)) {
    session.id = id;
    session.sticky_site = site;
  }

  client_id id() const { return id_; }
  site_id site() const { return site_; }
  bool done() const { return done_; }
  bool scripted() const { return !script_.empty(); }

  tick first_wake() const {
    return (script_.empty() || script_[0].at < 0) ? 1 : script_[0].at;
  }

  //! First event of the client, and the timer for time-pinned steps.
  void handle_wake(net& n) {
    if (done_) return;
    if (scripted()) {
      run_script_step(n);
      return;
    }
    if (!started_) {
      started_ = true;
      begin_read_txn(n);
    }
  }

  void handle_reply(net& n, const client_reply& r) {
    if (r.txn != txn_ || done_) return;
    if (scripted()) {
      advance_script(n);
      return;
    }
    switch (r.kind) {
      case ack_kind::read_round:
        if (round_ + 1 < wl_->rounds_per_txn) {
          ++round_;
          send_read_round(n);
        } else {
          send(n, op_commit{});
        }
        break;
      case ack_kind::update_ok:
        send(n, op_commit{});
        break;
      case ack_kind::committed:
      case ack_kind::aborted:
        if (in_read_txn_) {
          begin_update_txn(n);
        } else {
          ++pairs_done_;
          if (pairs_done_ >= wl_->txn_pairs_per_client)
            done_ = true;
          else
            begin_read_txn(n);
        }
        break;
    }
  }

  client_session session;

 private:
  void begin_read_txn(net& n) {
    in_read_txn_ = true;
    round_ = 0;
    txn_read_keys_.clear();
    txn_used_.clear();
    txn_ = n.alloc_txn();
    send_read_round(n);
  }

  void send_read_round(net& n) {
    op_read op;
    op.round = round_;
    for (std::uint32_t i = 0; i < wl_->reads_per_round; ++i) {
      key_id k = pick_key(*wl_, rng_, txn_used_);
      txn_used_.insert(k);
      txn_read_keys_.push_back(k);
      op.keys.push_back(k);
    }
    send(n, std::move(op));
  }

  void begin_update_txn(net& n) {
    in_read_txn_ = false;
    txn_ = n.alloc_txn();

    // Blind writes over a subset of what the read transaction observed.
    std::vector<key_id> pool = txn_read_keys_;
    std::uint32_t count = std::min<std::uint32_t>(
        wl_->updates_per_txn, static_cast<std::uint32_t>(pool.size()));
    op_update op;
    for (std::uint32_t i = 0; i < count; ++i) {
      std::size_t j = i + rng_index(rng_, pool.size() - i);
      std::swap(pool[i], pool[j]);
      op.pairs.emplace_back(pool[i], random_value(wl_->value_size, rng_));
    }
    send(n, std::move(op));
  }

  void run_script_step(net& n) {
    if (step_ >= script_.size()) {
      done_ = true;
      return;
    }
    scripted_op& s = script_[step_];
    if (s.move_to_site) site_ = *s.move_to_site;
    if (s.new_txn) txn_ = n.alloc_txn();
    ++step_;
    std::visit([&](const auto& op) { send(n, op); }, s.op);
  }

  void advance_script(net& n) {
    if (step_ >= script_.size()) {
      done_ = true;
      return;
    }
    tick at = script_[step_].at;
    if (at < 0 || at <= n.now())
      run_script_step(n);
    else
      n.schedule_client_wake(id_, at);
  }

  template <typename Op>
  void send(net& n, Op op) {
    client_request req;
    req.client = id_;
    req.txn = txn_;
    req.proto = proto_;
    req.site = site_;
    req.op = std::move(op);
    n.send_to_coordinator(txn_, message{std::move(req)});
  }

  client_id id_ = 0;
  site_id site_ = 0;
  protocol proto_ = protocol::cv;
  const workload_config* wl_ = nullptr;
  std::mt19937_64 rng_;

  std::vector<scripted_op> script_;
  std::size_t step_ = 0;

  bool started_ = false;
  bool done_ = false;
  bool in_read_txn_ = true;
  std::uint32_t round_ = 0;
  std::uint32_t pairs_done_ = 0;
  txn_id txn_ = 0;
  std::vector<key_id> txn_read_keys_;
  std::unordered_set<key_id> txn_used_;
};

}  // namespace snapsim
