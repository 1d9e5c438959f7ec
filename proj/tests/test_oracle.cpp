#include "snapsim/oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "oracle_brute.hpp"
#include "snapsim/bench.hpp"
#include "snapsim/simnet.hpp"

using namespace snapsim;
using oracle::version_graph;

namespace {

// The running example of the snapshot definitions: keys x, y, z on one
// site; transaction 1 writes x_i, transaction 2 writes y_j and z_k
// atomically, causally after x_i.
history_log fig3_log() {
  history_log log;
  log.info.sites = 1;
  log.info.partitions = 3;
  log.info.proto = protocol::av;

  history_event xi;
  xi.kind = event_kind::commit;
  xi.txn = 1;
  xi.site = 0;
  xi.part = 0;
  xi.from_site = 0;
  xi.ct = 1;
  xi.dep = version_vector{0};
  xi.cv = version_vector{1};
  xi.keys = {0};
  log.append(xi);

  history_event t2;
  t2.kind = event_kind::commit;
  t2.txn = 2;
  t2.site = 0;
  t2.from_site = 0;
  t2.ct = 2;
  t2.dep = version_vector{1};
  t2.cv = version_vector{2};
  t2.part = 1;
  t2.keys = {1};  // y_j
  log.append(t2);
  t2.part = 2;
  t2.keys = {2};  // z_k
  log.append(t2);
  return log;
}

}  // namespace

TEST_CASE("version precedence from commit metadata") {
  history_log log = fig3_log();
  version_graph g(log);
  const auto* xbot = g.initial_of(0);
  const auto* ybot = g.initial_of(1);
  const auto* xi = g.find(1, 0);
  const auto* yj = g.find(2, 1);
  const auto* zk = g.find(2, 2);
  REQUIRE(xi);
  REQUIRE(yj);
  REQUIRE(zk);

  CHECK(g.precedes(*xbot, *xi));
  CHECK(g.precedes(*xi, *yj));
  CHECK(g.precedes(*xbot, *yj));  // transitive through metadata
  CHECK_FALSE(g.precedes(*yj, *xi));
  // Siblings of one transaction are unordered.
  CHECK_FALSE(g.precedes(*yj, *zk));
  CHECK_FALSE(g.precedes(*zk, *yj));
  // Initial versions precede committed ones but not each other.
  CHECK_FALSE(g.precedes(*xbot, *ybot));
  CHECK_FALSE(g.precedes(*xbot, *xbot));
}

TEST_CASE("snapshot definitions on the three canonical snapshots") {
  history_log log = fig3_log();
  version_graph g(log);
  const auto* xbot = g.initial_of(0);
  const auto* ybot = g.initial_of(1);
  const auto* zbot = g.initial_of(2);
  const auto* xi = g.find(1, 0);
  const auto* yj = g.find(2, 1);
  const auto* zk = g.find(2, 2);

  oracle::readset left{xbot, yj, zbot};
  oracle::readset middle{xi, yj, zbot};
  oracle::readset right{xi, yj, zk};

  CHECK_FALSE(oracle::check_order_preserving(g, left));
  CHECK(oracle::check_order_preserving(g, middle));
  CHECK(oracle::check_order_preserving(g, right));

  CHECK_FALSE(oracle::check_atomic(g, middle));  // read skew on z
  CHECK(oracle::check_atomic(g, right));

  oracle::readset singleton{yj};
  CHECK(oracle::check_order_preserving(g, singleton));

  // All-or-nothing only binds transactions whose writes were observed.
  oracle::readset none_of_t2{xi, ybot, zbot};
  CHECK(oracle::check_atomic(g, none_of_t2));
}

TEST_CASE("compatible versions against a stable snapshot") {
  // Order: x_o, y_o < x_u < y_v, as in the concurrent-freshness proof.
  history_log log;
  log.info.sites = 1;
  log.info.partitions = 2;
  log.info.proto = protocol::op;

  history_event xu;
  xu.kind = event_kind::commit;
  xu.txn = 1;
  xu.from_site = 0;
  xu.ct = 1;
  xu.dep = version_vector{0};
  xu.cv = version_vector{1};
  xu.keys = {0};
  log.append(xu);

  history_event yv;
  yv.kind = event_kind::commit;
  yv.txn = 2;
  yv.from_site = 0;
  yv.ct = 2;
  yv.dep = version_vector{1};
  yv.cv = version_vector{2};
  yv.keys = {1};
  log.append(yv);

  version_graph g(log);
  oracle::readset snapshot{g.initial_of(0), g.initial_of(1)};
  CHECK(oracle::check_compatible(g, snapshot, *g.find(1, 0)));       // x_u
  CHECK_FALSE(oracle::check_compatible(g, snapshot, *g.find(2, 1))); // y_v
  // A version already in the snapshot is vacuously compatible.
  CHECK(oracle::check_compatible(g, snapshot, *g.initial_of(0)));
}

TEST_CASE("incremental checks agree with exhaustive enumeration") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    sim_config cfg;
    cfg.sites = 1 + static_cast<std::uint32_t>(rng() % 2);
    cfg.partitions = 1 + static_cast<std::uint32_t>(rng() % 3);
    cfg.seed = rng();
    cfg.proto = trial % 2 ? protocol::op : protocol::av;
    workload_config wl;
    wl.keys = 16;
    wl.value_size = 4;
    wl.reads_per_round = 3;
    wl.rounds_per_txn = 1;
    wl.updates_per_txn = 2;
    wl.txn_pairs_per_client = 4;
    simulation sim(cfg);
    sim.add_clients(wl, 4);
    history_log log = sim.run();

    oracle::analyzer an(log);
    oracle::report rep = an.run();
    REQUIRE(rep.violations.empty());

    // Recover every readset and compare both routes.
    std::map<txn_id, std::map<key_id, const oracle::graph_version*>> readsets;
    for (const history_event& e : log.events) {
      if (e.kind != event_kind::read_resp) continue;
      for (const read_record& r : e.reads) {
        const auto* v = r.writer == initial_txn
                            ? an.graph().initial_of(r.key)
                            : an.graph().find(r.writer, r.key);
        readsets[e.txn][r.key] = v;
      }
    }
    for (const auto& [txn, by_key] : readsets) {
      oracle::readset reads;
      for (const auto& [k, v] : by_key) reads.push_back(v);
      bool fast_op = oracle::check_order_preserving(an.graph(), reads);
      bool slow_op = oracle::brute::order_preserving(an.graph(), reads);
      CHECK(fast_op == slow_op);
      bool fast_at = fast_op && oracle::check_atomic(an.graph(), reads);
      bool slow_at = slow_op && oracle::brute::atomic_snapshot(an.graph(), reads);
      CHECK(fast_at == slow_at);
    }
  }
}

TEST_CASE("staleness replay matches the partition accounting") {
  sim_config cfg;
  cfg.sites = 2;
  cfg.partitions = 2;
  cfg.seed = 17;
  cfg.proto = protocol::av;
  workload_config wl;
  wl.keys = 32;
  wl.reads_per_round = 6;
  wl.updates_per_txn = 6;
  wl.txn_pairs_per_client = 6;
  wl.value_size = 4;
  simulation sim(cfg);
  sim.add_clients(wl, 8);
  history_log log = sim.run();
  oracle::report rep = oracle::analyze(log);
  // Any divergence would surface as a "staleness mismatch" violation.
  CHECK(rep.violations.empty());
  CHECK(rep.delay.server_reads > 0);
}

TEST_CASE("dirty reads are caught") {
  // Forge a log where a partition serves a version before its commit.
  history_log log;
  log.info.sites = 1;
  log.info.partitions = 1;
  log.info.proto = protocol::cv;

  history_event begin;
  begin.kind = event_kind::txn_begin;
  begin.txn = 5;
  begin.client = 0;
  begin.proto = protocol::cv;
  begin.ss = version_vector{0};
  begin.dep = version_vector{0};
  log.append(begin);

  history_event resp;
  resp.kind = event_kind::read_resp;
  resp.txn = 5;
  resp.request = 1;
  resp.reads.push_back(read_record{0, 9, 0, 3, 0, false});
  log.append(resp);

  history_event commit;
  commit.kind = event_kind::commit;
  commit.txn = 9;
  commit.from_site = 0;
  commit.ct = 3;
  commit.dep = version_vector{0};
  commit.cv = version_vector{3};
  commit.keys = {0};
  log.append(commit);

  oracle::report rep = oracle::analyze(log);
  bool flagged = false;
  for (const auto& t : rep.txns)
    if (t.txn == 5 && !t.committed_reads) flagged = true;
  CHECK(flagged);
}
