#include "snapsim/scenarios.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "snapsim/oracle.hpp"

using namespace snapsim;

namespace {

// The racing reader is the client that reads both keys in one round.
const oracle::txn_verdict& reader_of(const oracle::report& rep) {
  const oracle::txn_verdict* found = nullptr;
  for (const auto& t : rep.txns)
    if (t.server_reads >= 2) found = &t;
  REQUIRE(found != nullptr);
  return *found;
}

}  // namespace

TEST_CASE("ordered updates break the latest-always strawman") {
  history_log log = run_scenario("fig2a", protocol::latest_always);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  const auto& reader = reader_of(rep);
  CHECK(reader.committed_reads);
  CHECK_FALSE(reader.order_preserving);
}

TEST_CASE("ordered updates are safe under op") {
  history_log log = run_scenario("fig2a", protocol::op);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  for (const auto& t : rep.txns)
    if (t.has_reads) CHECK(t.order_preserving);
  CHECK(rep.contracts_ok());
}

TEST_CASE("atomic updates break the strawman with a read skew") {
  history_log log = run_scenario("fig2b", protocol::latest_always);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  const auto& reader = reader_of(rep);
  CHECK(reader.order_preserving);
  CHECK_FALSE(reader.atomic);
}

TEST_CASE("atomic updates are safe under av") {
  history_log log = run_scenario("fig2b", protocol::av);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  const auto& reader = reader_of(rep);
  CHECK(reader.atomic);
  CHECK(rep.contracts_ok());
}

TEST_CASE("the concurrent-freshness schedule classifies as concurrent") {
  history_log log = run_scenario("lemma_ff", protocol::op);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  CHECK(rep.contracts_ok());
  const auto& reader = reader_of(rep);
  CHECK(reader.order_preserving);
  CHECK(reader.freshness == oracle::freshness_kind::concurrent);
}

TEST_CASE("write then read before stabilisation violates ryw without cache") {
  history_log with_cache = run_scenario("ryw", protocol::av, 1, true);
  oracle::report ok = oracle::analyze(with_cache);
  CHECK(ok.sessions.ryw_violations == 0);

  history_log no_cache = run_scenario("ryw", protocol::av, 1, false);
  oracle::report bad = oracle::analyze(no_cache);
  CHECK(bad.sessions.ryw_violations >= 1);
}

TEST_CASE("site hop blocks until the stable vector catches up") {
  history_log log = run_scenario("catchup", protocol::av);
  oracle::report rep = oracle::analyze(log);
  REQUIRE(rep.violations.empty());
  CHECK(rep.sessions.monotonic_violations == 0);
  bool waited = false;
  for (const auto& t : rep.txns)
    if (t.catchup_wait > 0) waited = true;
  CHECK(waited);
}

TEST_CASE("scenarios replay identically per seed") {
  for (const std::string& name : scenario_names()) {
    protocol p = name == "fig2a" ? protocol::latest_always : protocol::av;
    history_log a = run_scenario(name, p, 3);
    history_log b = run_scenario(name, p, 3);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      CHECK(a.events[i].time == b.events[i].time);
      CHECK(a.events[i].kind == b.events[i].kind);
    }
  }
}
