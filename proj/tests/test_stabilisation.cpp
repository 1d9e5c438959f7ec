#include "snapsim/stabilisation.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "fake_net.hpp"

using namespace snapsim;
using test::fake_net;

namespace {

partition_server make_partition(std::uint32_t sites, std::uint32_t partitions,
                                site_id site = 0, partition_id part = 0) {
  return partition_server(site, part, sites, partitions, protocol::av,
                          site_clock(site, 0), gc_config{50, 20}, 8);
}

}  // namespace

TEST_CASE("stable time is min prepared minus one") {
  fake_net n;
  n.time = 20;
  auto p = make_partition(2, 1);
  p.prepared.push_back(prepared_txn{1, {}, version_vector{0, 0}, 8});
  p.prepared.push_back(prepared_txn{2, {}, version_vector{0, 0}, 11});
  stabiliser(p).run_tick(n, 1, 10);
  CHECK(p.vec_p[0] == 7);
}

TEST_CASE("stable time falls back to the clock when idle") {
  fake_net n;
  n.time = 12;
  auto p = make_partition(2, 1);
  stabiliser(p).run_tick(n, 1, 10);
  CHECK(p.vec_p[0] == 12);
  // Single-partition site: sv is its own delivery vector.
  CHECK(p.sv == p.vec_p);
}

TEST_CASE("only updates at or below the stable time propagate") {
  fake_net n;
  n.time = 7;
  auto p = make_partition(2, 1);
  p.to_send.push_back(outbound_updates{1, {{3, "a"}}, version_vector{0, 0}, 5});
  p.to_send.push_back(outbound_updates{2, {{4, "b"}}, version_vector{0, 0}, 9});
  stabiliser(p).run_tick(n, 1, 10);
  auto sent = n.sent_of<remote_updates>();
  REQUIRE(sent.size() == 1);  // one remote site
  CHECK(sent[0].ct == 5);
  REQUIRE(p.to_send.size() == 1);
  CHECK(p.to_send[0].ct == 9);
  CHECK(n.sent_of<remote_heartbeat>().empty());
}

TEST_CASE("idle partitions heartbeat their siblings") {
  fake_net n;
  n.time = 7;
  auto p = make_partition(3, 1);
  stabiliser(p).run_tick(n, 1, 10);
  auto beats = n.sent_of<remote_heartbeat>();
  REQUIRE(beats.size() == 2);  // one per remote site
  CHECK(beats[0].stable == 7);
}

TEST_CASE("sv is the componentwise min over the local round") {
  fake_net n;
  n.time = 30;
  auto p = make_partition(2, 3, 0, 0);
  p.vec_p = version_vector{5, 3};
  stabiliser st(p);
  st.run_tick(n, 4, 10);  // own vector for round 4 is [30, 3]

  stable_broadcast b1;
  b1.from = {0, 1};
  b1.round = 4;
  b1.vec = version_vector{7, 2};
  st.on_stable(n, b1);
  CHECK(p.sv == version_vector::zero(2));  // round incomplete

  stable_broadcast b2;
  b2.from = {0, 2};
  b2.round = 4;
  b2.vec = version_vector{9, 8};
  st.on_stable(n, b2);
  CHECK(p.sv == version_vector{7, 2});
}

TEST_CASE("remote updates advance the delivery watermark in ct order") {
  fake_net n;
  auto p = make_partition(2, 1, 0, 0);
  stabiliser st(p);

  remote_updates u;
  u.from = {1, 0};
  u.txn = 9;
  u.updates = {{2, "x"}};
  u.dep = version_vector{0, 0};
  u.ct = 5;
  st.on_remote_updates(n, u);
  CHECK(p.vec_p[1] == 5);

  u.txn = 10;
  u.ct = 9;
  st.on_remote_updates(n, u);
  CHECK(p.vec_p[1] == 9);

  u.txn = 11;
  u.ct = 5;  // regression on the channel: broken FIFO contract
  CHECK_THROWS_AS(st.on_remote_updates(n, u), std::logic_error);
}

TEST_CASE("delivered versions stay invisible until sv covers them") {
  fake_net n;
  auto p = make_partition(2, 1, 0, 0);
  stabiliser st(p);
  remote_updates u;
  u.from = {1, 0};
  u.txn = 9;
  u.updates = {{2, "x"}};
  u.dep = version_vector{0, 0};
  u.ct = 5;
  st.on_remote_updates(n, u);

  auto hidden = p.store().read_version(2, p.sv, protocol::av);
  CHECK(hidden.version->is_initial());
  auto visible = p.store().read_version(2, version_vector{0, 5}, protocol::av);
  CHECK(visible.version->ct == 5);
}

TEST_CASE("heartbeats are max-guarded") {
  fake_net n;
  auto p = make_partition(2, 1, 0, 0);
  stabiliser st(p);
  remote_heartbeat hb;
  hb.from = {1, 0};
  hb.stable = 5;
  st.on_heartbeat(hb);
  CHECK(p.vec_p[1] == 5);
  hb.stable = 8;
  st.on_heartbeat(hb);
  CHECK(p.vec_p[1] == 8);
  hb.stable = 3;  // stale timer interleaving
  st.on_heartbeat(hb);
  CHECK(p.vec_p[1] == 8);
  remote_heartbeat own;
  own.from = {0, 0};
  own.stable = 99;
  st.on_heartbeat(own);  // own site: ignored
  CHECK(p.vec_p[0] == 0);
}
