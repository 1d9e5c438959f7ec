#include "snapsim/coordinator.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "fake_net.hpp"

using namespace snapsim;
using test::fake_net;

namespace {

struct fixture {
  fake_net n;
  partition_server home;
  client_session session;
  coordinator_config cfg;

  explicit fixture(protocol p, std::uint32_t partitions = 2,
                   bool sessions = false)
      : home(0, 0, 2, partitions, p, site_clock(0, 0), gc_config{50, 20}, 8) {
    cfg.sites = 2;
    cfg.partitions = partitions;
    cfg.session_cache = sessions;
    cfg.session_catchup = sessions;
  }

  coordinator make(txn_id id, protocol p, bool with_session = false) {
    return coordinator(id, 0, p, &home, with_session ? &session : nullptr,
                       cfg);
  }

  client_request request(txn_id id, protocol p,
                         std::variant<op_read, op_update, op_commit> op) {
    client_request r;
    r.client = 0;
    r.txn = id;
    r.proto = p;
    r.site = 0;
    r.op = std::move(op);
    return r;
  }
};

served_version make_served(key_id k, version_vector dep, tick ct,
                           site_id origin, txn_id writer) {
  served_version v;
  v.version.key = k;
  v.version.dep = dep;
  v.version.cv = dep;
  v.version.cv.set(origin, ct);
  v.version.ct = ct;
  v.version.origin = origin;
  v.version.writer = writer;
  return v;
}

}  // namespace

TEST_CASE("get_parts is deterministic hash partitioning") {
  auto one = get_parts({1, 2, 3, 4, 5}, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].first == 0);
  CHECK(one[0].second.size() == 5);

  CHECK(partition_of(42, 8) == partition_of(42, 8));
  auto grouped = get_parts({1, 2, 3, 4, 5, 6, 7, 8}, 4);
  CHECK(grouped.size() <= 4);
  std::size_t total = 0;
  for (auto& [p, keys] : grouped) total += keys.size();
  CHECK(total == 8);
}

TEST_CASE("init assigns the snapshot per protocol") {
  fixture f(protocol::av);
  f.home.sv = version_vector{5, 2};
  f.n.time = 9;

  auto av = f.make(1, protocol::av);
  av.handle_client(f.n, f.request(1, protocol::av, op_read{{3}, 0, {}}));
  CHECK(av.record().ss == version_vector{5, 2});
  CHECK(av.record().dep == version_vector{5, 2});

  auto cure = f.make(2, protocol::cure);
  cure.handle_client(f.n, f.request(2, protocol::cure, op_read{{3}, 0, {}}));
  CHECK(cure.record().ss == version_vector{9, 2});
  CHECK(cure.record().dep == version_vector{9, 2});

  auto cv = f.make(3, protocol::cv);
  cv.handle_client(f.n, f.request(3, protocol::cv, op_read{{3}, 0, {}}));
  CHECK(cv.record().ss == version_vector{0, 0});
}

TEST_CASE("read replies fold dependencies under op and not under av") {
  for (protocol p : {protocol::op, protocol::av}) {
    fixture f(p, 1);
    f.home.sv = version_vector{1, 0};
    auto co = f.make(1, p);
    co.handle_client(f.n, f.request(1, p, op_read{{10, 11}, 0, {}}));

    auto reqs = f.n.sent_of<read_request>();
    REQUIRE(reqs.size() == 1);
    read_reply reply;
    reply.txn = 1;
    reply.request = reqs[0].request;
    reply.from = {0, 0};
    reply.versions.push_back(make_served(10, {3, 0}, 3, 0, 7));  // cv [3,0]
    reply.versions.push_back(make_served(11, {1, 2}, 2, 1, 8));  // cv [1,2]
    co.handle_read_reply(f.n, reply);

    if (p == protocol::op)
      CHECK(co.record().dep == version_vector{3, 2});
    else
      CHECK(co.record().dep == version_vector{1, 0});  // dep stays ss
  }
}

TEST_CASE("single-partition commit collapses prepare and commit") {
  fixture f(protocol::av, 1);
  f.home.sv = version_vector{3, 2};
  auto co = f.make(1, protocol::av);
  co.handle_client(f.n, f.request(1, protocol::av, op_update{{{5, "x"}}}));
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));

  auto prepares = f.n.sent_of<prepare_request>();
  REQUIRE(prepares.size() == 1);
  CHECK(prepares[0].also_commit);
  CHECK(prepares[0].ct == 4);  // dep[site] + 1
  CHECK(f.n.to_partitions.size() == 1);  // nothing else on the wire

  prepare_reply r;
  r.txn = 1;
  r.from = {0, 0};
  r.time = 9;
  r.committed = true;
  co.handle_prepare_reply(f.n, r);
  CHECK(co.record().phase == txn_phase::committed);
  CHECK(co.record().ct == 9);
  CHECK(f.n.to_partitions.size() == 1);  // no separate commit round
}

TEST_CASE("multi-partition commit takes the max proposal and fans out") {
  fixture f(protocol::av, 4);
  f.home.sv = version_vector{3, 2};
  auto co = f.make(1, protocol::av);
  // Two keys on different partitions.
  key_id a = 0;
  key_id b = 1;
  while (partition_of(b, 4) == partition_of(a, 4)) ++b;
  co.handle_client(f.n,
                   f.request(1, protocol::av, op_update{{{a, "x"}, {b, "y"}}}));
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));

  auto prepares = f.n.sent_of<prepare_request>();
  REQUIRE(prepares.size() == 2);
  CHECK_FALSE(prepares[0].also_commit);

  prepare_reply r1{1, {0, partition_of(a, 4)}, 6, false};
  prepare_reply r2{1, {0, partition_of(b, 4)}, 5, false};
  co.handle_prepare_reply(f.n, r1);
  CHECK(co.record().phase == txn_phase::preparing);
  co.handle_prepare_reply(f.n, r2);
  CHECK(co.record().phase == txn_phase::committed);
  CHECK(co.record().ct == 6);

  auto commits = f.n.sent_of<commit_request>();
  REQUIRE(commits.size() == 2);
  CHECK(commits[0].ct == 6);

  // The committed ack carries cv = dep with the local entry replaced.
  bool acked = false;
  for (const auto& e : f.n.events)
    if (e.kind == event_kind::client_ack && e.ack == ack_kind::committed) {
      acked = true;
      CHECK(e.cv == version_vector{6, 2});
    }
  CHECK(acked);
}

TEST_CASE("cv commits ignore proposals") {
  fixture f(protocol::cv, 1);
  auto co = f.make(1, protocol::cv);
  co.handle_client(f.n, f.request(1, protocol::cv, op_update{{{5, "x"}}}));
  co.handle_client(f.n, f.request(1, protocol::cv, op_commit{}));
  prepare_reply r{1, {0, 0}, 1, true};
  co.handle_prepare_reply(f.n, r);
  CHECK(co.record().ct == 1);  // dep[site] + 1 with zero dep
}

TEST_CASE("read-only commit acknowledges without messages") {
  fixture f(protocol::av, 2);
  auto co = f.make(1, protocol::av);
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  CHECK(co.record().phase == txn_phase::committed);
  CHECK(f.n.to_partitions.empty());
}

TEST_CASE("operations after commit are contract violations") {
  fixture f(protocol::av, 2);
  auto co = f.make(1, protocol::av);
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  CHECK_THROWS_AS(
      co.handle_client(f.n, f.request(1, protocol::av, op_update{{{1, "x"}}})),
      std::logic_error);
}

TEST_CASE("empty update list leaves the write set unchanged") {
  fixture f(protocol::av, 2);
  auto co = f.make(1, protocol::av);
  co.handle_client(f.n, f.request(1, protocol::av, op_update{{}}));
  CHECK(co.record().ws.empty());
  co.handle_client(f.n,
                   f.request(1, protocol::av, op_update{{{1, "a"}, {1, "b"}}}));
  REQUIRE(co.record().ws.size() == 2);  // both retained, order preserved
  CHECK(co.record().ws[0].second == "a");
  CHECK(co.record().ws[1].second == "b");
}

TEST_CASE("repeated reads of one key are served from the transaction") {
  fixture f(protocol::av, 1);
  auto co = f.make(1, protocol::av);
  co.handle_client(f.n, f.request(1, protocol::av, op_read{{7}, 0, {}}));
  auto reqs = f.n.sent_of<read_request>();
  REQUIRE(reqs.size() == 1);
  read_reply reply;
  reply.txn = 1;
  reply.request = reqs[0].request;
  reply.from = {0, 0};
  reply.versions.push_back(make_served(7, {0, 0}, 1, 0, 9));
  co.handle_read_reply(f.n, reply);

  co.handle_client(f.n, f.request(1, protocol::av, op_read{{7}, 1, {}}));
  CHECK(f.n.sent_of<read_request>().size() == 1);  // no second fetch
  REQUIRE(f.n.to_clients.size() == 2);
  const auto* second =
      std::get_if<client_reply>(&f.n.to_clients[1].second.body);
  REQUIRE(second);
  REQUIRE(second->values.size() == 1);
  CHECK(second->values[0].version.writer == 9);
}

TEST_CASE("session cache shadows older server versions") {
  fixture f(protocol::av, 1, true);
  f.session.cache[7] = make_served(7, {4, 0}, 4, 0, 21).version;
  auto co = f.make(1, protocol::av, true);
  co.handle_client(f.n, f.request(1, protocol::av, op_read{{7}, 0, {}}));
  auto reqs = f.n.sent_of<read_request>();
  REQUIRE(reqs.size() == 1);
  read_reply reply;
  reply.txn = 1;
  reply.request = reqs[0].request;
  reply.from = {0, 0};
  reply.versions.push_back(make_served(7, {0, 0}, 2, 0, 9));  // older than cache
  co.handle_read_reply(f.n, reply);

  const auto* sent = std::get_if<client_reply>(&f.n.to_clients[0].second.body);
  REQUIRE(sent);
  CHECK(sent->values[0].version.writer == 21);
  CHECK(sent->values[0].from_cache);
}

TEST_CASE("session cache invalidation drops covered entries") {
  client_session s;
  s.cache[1] = make_served(1, {2, 1}, 2, 0, 5).version;  // cv [2,1]
  s.cache[2] = make_served(2, {7, 0}, 7, 0, 6).version;  // cv [7,0]
  s.invalidate(version_vector{5, 2});
  CHECK(s.cache.count(1) == 0);
  CHECK(s.cache.count(2) == 1);
  client_session empty;
  empty.invalidate(version_vector{5, 2});  // no-op
  CHECK(empty.cache.empty());
}

TEST_CASE("same-site catch-up adopts the client snapshot") {
  fixture f(protocol::av, 1, true);
  f.home.sv = version_vector{3, 2};
  f.session.has_last = true;
  f.session.last_site = 0;
  f.session.last_ss = version_vector{5, 2};
  auto co = f.make(1, protocol::av, true);
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  CHECK(co.record().ss == version_vector{5, 2});
}

TEST_CASE("covered client snapshot proceeds with the site vector") {
  fixture f(protocol::av, 1, true);
  f.home.sv = version_vector{5, 2};
  f.session.has_last = true;
  f.session.last_site = 0;
  f.session.last_ss = version_vector{4, 2};
  auto co = f.make(1, protocol::av, true);
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  CHECK(co.record().ss == version_vector{5, 2});
}

TEST_CASE("cross-site catch-up blocks until the vector is covered") {
  fixture f(protocol::av, 1, true);
  f.home.sv = version_vector{3, 2};
  f.session.has_last = true;
  f.session.last_site = 1;  // previous transaction ran elsewhere
  f.session.last_ss = version_vector{5, 2};
  auto co = f.make(1, protocol::av, true);
  f.n.time = 10;
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  CHECK(co.record().phase == txn_phase::active);  // parked
  REQUIRE(f.home.sv_waiters.size() == 1);

  f.home.sv = version_vector{5, 3};
  f.n.time = 14;
  co.handle_catchup_check(f.n);
  CHECK(co.record().phase == txn_phase::committed);
  CHECK(co.record().ss == version_vector{5, 3});
  CHECK(f.home.sv_waiters.empty());
  bool begin_logged = false;
  for (const auto& e : f.n.events)
    if (e.kind == event_kind::txn_begin) {
      begin_logged = true;
      CHECK(e.wait == 4);  // catch-up delay, not protocol read delay
    }
  CHECK(begin_logged);
}

TEST_CASE("unreachable participant aborts and notifies prepared peers") {
  fixture f(protocol::av, 4);
  auto co = f.make(1, protocol::av);
  key_id a = 0;
  key_id b = 1;
  while (partition_of(b, 4) == partition_of(a, 4)) ++b;
  co.handle_client(f.n,
                   f.request(1, protocol::av, op_update{{{a, "x"}, {b, "y"}}}));
  co.handle_client(f.n, f.request(1, protocol::av, op_commit{}));
  co.handle_unreachable(f.n, unreachable{1, {0, partition_of(b, 4)}});
  CHECK(co.record().phase == txn_phase::aborted);
  CHECK(f.n.sent_of<abort_request>().size() == 2);
  CHECK(f.n.sent_of<commit_request>().empty());
}
