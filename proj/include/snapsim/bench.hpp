#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "snapsim/oracle.hpp"
#include "snapsim/simnet.hpp"
#include "snapsim/workload.hpp"

namespace snapsim::bench {

//! One row of the experiment report: a (protocol, seed) run after the
//! warm-up fraction is discarded. Latencies are simulated ticks.
struct run_metrics {
  protocol proto = protocol::cv;
  std::uint64_t seed = 0;
  std::uint64_t txns = 0;
  std::uint64_t reads = 0;
  std::uint64_t updates = 0;
  double update_rate = 0.0;  // realized, reads vs updates
  tick read_p50 = 0;
  tick read_p99 = 0;
  double stale_fraction = 0.0;
  double mv_overhead = 1.0;
  std::uint32_t max_skips = 0;
  std::uint64_t waits_clock_skew = 0;
  std::uint64_t waits_pending_commit = 0;
  tick max_wait = 0;
  std::uint64_t ryw_violations = 0;
  std::uint64_t monotonic_violations = 0;
  bool oracle_ok = true;
  std::map<std::uint32_t, std::uint64_t> staleness_cdf;
};

struct run_result {
  history_log log;
  oracle::report verdicts;
  run_metrics metrics;
};

inline tick percentile(std::vector<tick> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto idx = static_cast<std::size_t>(p * static_cast<double>(values.size() - 1));
  return values[idx];
}

/*! Compute the report row from a finished run. The warm-up filter drops
 * transactions that began in the leading fraction of the run; oracle
 * correctness checks always cover the full log. */
inline run_metrics summarize(const history_log& log, const oracle::report& rep,
                             double warmup_fraction) {
  run_metrics m;
  m.proto = log.info.proto;
  m.seed = log.info.seed;
  m.oracle_ok = rep.ok();
  m.ryw_violations = rep.sessions.ryw_violations;
  m.monotonic_violations = rep.sessions.monotonic_violations;

  tick end = log.events.empty() ? 0 : log.events.back().time;
  tick cutoff = static_cast<tick>(warmup_fraction * static_cast<double>(end));

  std::map<txn_id, tick> begin_time;
  std::vector<tick> latencies;
  for (const oracle::txn_verdict& t : rep.txns) {
    begin_time[t.txn] = t.begin_time;
    if (t.begin_time < cutoff || t.aborted) continue;
    ++m.txns;
    if (t.has_reads && t.read_phase_latency > 0)
      latencies.push_back(t.read_phase_latency);
  }
  m.read_p50 = percentile(latencies, 0.50);
  m.read_p99 = percentile(latencies, 0.99);

  double skip_sum = 0.0;
  for (const oracle::read_sample& s : rep.samples) {
    auto it = begin_time.find(s.txn);
    if (it == begin_time.end() || it->second < cutoff) continue;
    ++m.reads;
    skip_sum += s.skips + 1;
    if (s.skips > 0) ++m.stale_fraction;  // numerator for now
    m.staleness_cdf[s.skips] += 1;
    m.max_skips = std::max(m.max_skips, s.skips);
    m.max_wait = std::max(m.max_wait, s.wait);
    if (s.wait > 0) {
      if (s.cause == wait_cause::clock_skew) ++m.waits_clock_skew;
      if (s.cause == wait_cause::pending_commit) ++m.waits_pending_commit;
    }
  }
  if (m.reads > 0) {
    m.stale_fraction /= static_cast<double>(m.reads);
    m.mv_overhead = skip_sum / static_cast<double>(m.reads);
  }

  for (const history_event& e : log.events) {
    if (e.kind != event_kind::commit) continue;
    auto it = begin_time.find(e.txn);
    if (it != begin_time.end() && it->second >= cutoff)
      m.updates += e.keys.size();
  }
  if (m.reads + m.updates > 0)
    m.update_rate = static_cast<double>(m.updates) /
                    static_cast<double>(m.reads + m.updates);
  return m;
}

//! One simulation under the given protocol and seed, fully analysed.
inline run_result run_one(sim_config cfg, const workload_config& wl,
                          std::uint32_t clients) {
  simulation sim(cfg);
  sim.add_clients(wl, clients);
  run_result out;
  out.log = sim.run();
  out.verdicts = oracle::analyze(out.log);
  out.metrics = summarize(out.log, out.verdicts, wl.warmup_fraction);
  return out;
}

inline const char* csv_header() {
  return "protocol,seed,txns,reads,updates,update_rate,read_p50,read_p99,"
         "stale_fraction,mv_overhead,max_skips,waits_clock_skew,"
         "waits_pending_commit,max_wait,ryw_violations,monotonic_violations,"
         "oracle_ok";
}

inline std::string csv_row(const run_metrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%llu,%llu,%llu,%llu,%.6f,%lld,%lld,%.6f,%.6f,%u,%llu,%llu,"
                "%lld,%llu,%llu,%d",
                to_string(m.proto), static_cast<unsigned long long>(m.seed),
                static_cast<unsigned long long>(m.txns),
                static_cast<unsigned long long>(m.reads),
                static_cast<unsigned long long>(m.updates), m.update_rate,
                static_cast<long long>(m.read_p50),
                static_cast<long long>(m.read_p99), m.stale_fraction,
                m.mv_overhead, m.max_skips,
                static_cast<unsigned long long>(m.waits_clock_skew),
                static_cast<unsigned long long>(m.waits_pending_commit),
                static_cast<long long>(m.max_wait),
                static_cast<unsigned long long>(m.ryw_violations),
                static_cast<unsigned long long>(m.monotonic_violations),
                m.oracle_ok ? 1 : 0);
  return buf;
}

//! Staleness CDF rows: protocol,seed,skips,count,cumulative_fraction.
inline void write_cdf(std::ostream& os, const run_metrics& m) {
  std::uint64_t total = 0, acc = 0;
  for (const auto& [skips, count] : m.staleness_cdf) total += count;
  for (const auto& [skips, count] : m.staleness_cdf) {
    acc += count;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%llu,%u,%llu,%.6f",
                  to_string(m.proto), static_cast<unsigned long long>(m.seed),
                  skips, static_cast<unsigned long long>(count),
                  total ? static_cast<double>(acc) / static_cast<double>(total)
                        : 0.0);
    os << buf << '\n';
  }
}

}  // namespace snapsim::bench
