// snapsim command line: run experiments, check logs against the oracle,
// replay named scenarios, aggregate report CSVs.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapsim/bench.hpp"
#include "snapsim/config_io.hpp"
#include "snapsim/oracle.hpp"
#include "snapsim/scenarios.hpp"

namespace fs = std::filesystem;
using namespace snapsim;

namespace {

int cmd_run(const std::string& config_path, const std::string& out_csv,
            const std::string& cdf_csv, const std::string& logs_dir,
            bool verbose) {
  experiment_config exp = load_experiment(config_path);
  std::ofstream csv(out_csv);
  if (!csv) {
    std::cerr << "cannot write " << out_csv << '\n';
    return 2;
  }
  csv << bench::csv_header() << '\n';

  std::ofstream cdf;
  if (!cdf_csv.empty()) {
    cdf.open(cdf_csv);
    cdf << "protocol,seed,skips,count,cumulative_fraction\n";
  }

  bool all_ok = true;
  for (protocol p : exp.protocols) {
    for (std::uint64_t seed : exp.seeds) {
      sim_config cfg = exp.sim;
      cfg.proto = p;
      cfg.seed = seed;
      bench::run_result r = bench::run_one(cfg, exp.workload, exp.clients);
      csv << bench::csv_row(r.metrics) << '\n';
      if (cdf.is_open()) bench::write_cdf(cdf, r.metrics);
      if (!logs_dir.empty()) {
        fs::create_directories(logs_dir);
        std::ofstream lf(fs::path(logs_dir) /
                         (std::string(to_string(p)) + "-" +
                          std::to_string(seed) + ".log"));
        write_log(lf, r.log);
      }
      if (verbose) std::cout << r.verdicts.summary() << '\n';
      if (!r.verdicts.ok()) {
        all_ok = false;
        for (const auto& v : r.verdicts.violations)
          std::cerr << "violation: " << v << '\n';
      }
    }
  }
  std::cout << "report written to " << out_csv << '\n';
  return all_ok ? 0 : 1;
}

int cmd_check(const std::string& log_path, const std::string& csv_path) {
  std::ifstream in(log_path);
  if (!in) {
    std::cerr << "cannot open " << log_path << '\n';
    return 2;
  }
  history_log log = read_log(in);
  oracle::report rep = oracle::analyze(log);
  std::cout << rep.summary() << '\n';
  for (const auto& v : rep.violations) std::cout << "violation: " << v << '\n';
  for (const auto& d : rep.sessions.details) std::cout << d << '\n';

  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    csv << "txn,client,protocol,aborted,committed,order_preserving,atomic,"
           "freshness,server_reads,stale_reads,begin,read_latency\n";
    for (const oracle::txn_verdict& t : rep.txns) {
      csv << t.txn << ',' << t.client << ',' << to_string(t.proto) << ','
          << (t.aborted ? 1 : 0) << ',' << (t.committed_reads ? 1 : 0) << ','
          << (t.order_preserving ? 1 : 0) << ',' << (t.atomic ? 1 : 0) << ','
          << to_string(t.freshness) << ',' << t.server_reads << ','
          << t.stale_reads << ',' << t.begin_time << ','
          << t.read_phase_latency << '\n';
    }
  }
  return rep.ok() ? 0 : 1;
}

int cmd_scenario(const std::string& name, const std::string& proto_name,
                 std::uint64_t seed, const std::string& log_path,
                 bool no_cache) {
  history_log log =
      run_scenario(name, protocol_from_string(proto_name), seed, !no_cache);
  oracle::report rep = oracle::analyze(log);
  std::cout << rep.summary() << '\n';
  for (const oracle::txn_verdict& t : rep.txns) {
    if (!t.has_reads) continue;
    std::cout << "txn " << t.txn << " committed=" << t.committed_reads
              << " order_preserving=" << t.order_preserving
              << " atomic=" << t.atomic
              << " freshness=" << to_string(t.freshness) << '\n';
  }
  for (const auto& d : rep.sessions.details) std::cout << d << '\n';
  if (!log_path.empty()) {
    std::ofstream lf(log_path);
    write_log(lf, log);
  }
  return rep.ok() ? 0 : 1;
}

// Aggregate per-run CSVs into per-protocol means.
int cmd_report(const std::vector<std::string>& inputs,
               const std::string& out_csv) {
  struct acc {
    double stale = 0, overhead = 0, rate = 0;
    double p50 = 0, p99 = 0;
    std::uint64_t rows = 0, reads = 0, updates = 0, txns = 0;
    std::uint64_t waits_clock = 0, waits_pending = 0;
    bool ok = true;
  };
  std::map<std::string, acc> by_proto;

  for (const std::string& path : inputs) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "cannot open " << path << '\n';
      return 2;
    }
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string tok;
      while (std::getline(ss, tok, ',')) f.push_back(tok);
      if (f.size() < 17) continue;
      acc& a = by_proto[f[0]];
      a.rows += 1;
      a.txns += std::stoull(f[2]);
      a.reads += std::stoull(f[3]);
      a.updates += std::stoull(f[4]);
      a.rate += std::stod(f[5]);
      a.p50 += std::stod(f[6]);
      a.p99 += std::stod(f[7]);
      a.stale += std::stod(f[8]);
      a.overhead += std::stod(f[9]);
      a.waits_clock += std::stoull(f[11]);
      a.waits_pending += std::stoull(f[12]);
      a.ok = a.ok && f[16] == "1";
    }
  }

  std::ofstream out(out_csv);
  out << "protocol,runs,txns,reads,updates,mean_update_rate,mean_read_p50,"
         "mean_read_p99,mean_stale_fraction,mean_mv_overhead,waits_clock_skew,"
         "waits_pending_commit,all_ok\n";
  bool all_ok = true;
  for (const auto& [proto, a] : by_proto) {
    double n = static_cast<double>(a.rows);
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%llu,%llu,%llu,%llu,%.6f,%.2f,%.2f,%.6f,%.6f,%llu,%llu,%d",
                  proto.c_str(), static_cast<unsigned long long>(a.rows),
                  static_cast<unsigned long long>(a.txns),
                  static_cast<unsigned long long>(a.reads),
                  static_cast<unsigned long long>(a.updates), a.rate / n,
                  a.p50 / n, a.p99 / n, a.stale / n, a.overhead / n,
                  static_cast<unsigned long long>(a.waits_clock),
                  static_cast<unsigned long long>(a.waits_pending),
                  a.ok ? 1 : 0);
    out << buf << '\n';
    all_ok = all_ok && a.ok;
  }
  std::cout << "aggregate written to " << out_csv << '\n';
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snapsim: minimal-delay transactional read protocols, "
               "simulated and checked"};
  app.require_subcommand(1);

  std::string config_path, out_csv = "report.csv", cdf_csv, logs_dir;
  bool verbose = false;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("--config", config_path, "experiment JSON")->required();
  run->add_option("--out", out_csv, "report CSV path");
  run->add_option("--cdf", cdf_csv, "staleness CDF CSV path");
  run->add_option("--logs-dir", logs_dir, "write per-run history logs here");
  run->add_flag("-v,--verbose", verbose, "print per-run oracle summaries");

  std::string log_path, verdict_csv;
  auto* check = app.add_subcommand("check", "run the oracle over a saved log");
  check->add_option("--log", log_path, "history log file")->required();
  check->add_option("--csv", verdict_csv, "per-transaction verdict CSV");

  std::string scenario_name, scenario_proto = "op", scenario_log;
  std::uint64_t scenario_seed = 1;
  bool no_cache = false;
  auto* scen = app.add_subcommand("scenario", "run a named scripted schedule");
  scen->add_option("--name", scenario_name, "one of: fig2a fig2b lemma_ff ryw catchup")
      ->required();
  scen->add_option("--protocol", scenario_proto, "cv|op|av|cure|latest");
  scen->add_option("--seed", scenario_seed, "rng seed");
  scen->add_option("--log", scenario_log, "write the history log here");
  scen->add_flag("--no-cache", no_cache, "disable the session write cache");

  std::vector<std::string> report_inputs;
  std::string report_out = "aggregate.csv";
  auto* rep = app.add_subcommand("report", "aggregate run CSVs per protocol");
  rep->add_option("inputs", report_inputs, "run CSV files")->required();
  rep->add_option("--out", report_out, "aggregate CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, out_csv, cdf_csv, logs_dir, verbose);
    if (check->parsed()) return cmd_check(log_path, verdict_csv);
    if (scen->parsed())
      return cmd_scenario(scenario_name, scenario_proto, scenario_seed,
                          scenario_log, no_cache);
    if (rep->parsed()) return cmd_report(report_inputs, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
