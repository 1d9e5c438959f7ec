#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "snapsim/types.hpp"
#include "snapsim/version_vector.hpp"

namespace snapsim {

enum class event_kind : std::uint8_t {
  txn_begin,
  read_req,
  read_resp,
  prepare,
  prepared,
  commit,
  abort,
  deliver,      // remote updates applied at a sibling partition
  stable_tick,  // stabilisation timer fired at a partition
  client_ack,   // coordinator replied to the client
};

enum class wait_cause : std::uint8_t { none, clock_skew, pending_commit };

// update_ok acknowledges a buffered update to the client; it never
// reaches the history log.
enum class ack_kind : std::uint8_t { read_round, committed, aborted, update_ok };

//! One key served within a read response. (writer, key) identifies the
//! version; skips counts stored versions newer than the one returned.
struct read_record {
  key_id key = 0;
  txn_id writer = initial_txn;
  site_id origin = 0;
  tick ct = 0;
  std::uint32_t skips = 0;
  bool from_cache = false;
};

/*! \brief One entry of the append-only simulation history.
 *
 * The log is totally ordered by (time, seq); seq is the deterministic
 * tie-break assigned in processing order. Fields not meaningful for a
 * kind are left at their defaults and omitted from the serialised form.
 */
struct history_event {
  tick time = 0;
  std::uint64_t seq = 0;
  event_kind kind = event_kind::txn_begin;

  txn_id txn = 0;
  client_id client = 0;
  protocol proto = protocol::cv;
  site_id site = 0;          // acting partition's site / coordinator site
  partition_id part = 0;     // acting partition / coordinator home
  site_id from_site = 0;     // deliver: origin site
  partition_id from_part = 0;
  std::uint64_t request = 0; // pairs read_req with read_resp

  version_vector ss;   // txn_begin, read_req
  version_vector dep;  // prepare, commit, deliver
  version_vector cv;   // commit, client_ack(committed)
  version_vector vec;  // stable_tick: vec_p after the local update
  version_vector sv;   // stable_tick: stable vector currently known

  tick ct = 0;        // prepare (initial), commit/deliver (final)
  tick stable = 0;    // stable_tick: stable_n
  tick wait = 0;      // read_resp: server wait ticks; txn_begin: catch-up wait
  wait_cause cause = wait_cause::none;
  ack_kind ack = ack_kind::read_round;
  std::uint32_t round = 0;  // stable_tick round / read round index
  bool collapsed = false;   // prepare that commits in the same message

  std::vector<key_id> keys;        // read_req, prepare, commit, abort, deliver
  std::vector<read_record> reads;  // read_resp
};

//! Identifies one run; serialised as the log header line.
struct run_info {
  std::uint32_t sites = 1;
  std::uint32_t partitions = 1;
  std::uint32_t clients = 0;
  protocol proto = protocol::cv;
  std::uint64_t seed = 0;
  std::string label;
};

struct history_log {
  run_info info;
  std::vector<history_event> events;

  void append(history_event ev) {
    ev.seq = events.size();
    events.push_back(std::move(ev));
  }
};

namespace detail {

inline const char* kind_token(event_kind k) {
  switch (k) {
    case event_kind::txn_begin: return "begin";
    case event_kind::read_req: return "read_req";
    case event_kind::read_resp: return "read_resp";
    case event_kind::prepare: return "prepare";
    case event_kind::prepared: return "prepared";
    case event_kind::commit: return "commit";
    case event_kind::abort: return "abort";
    case event_kind::deliver: return "deliver";
    case event_kind::stable_tick: return "stable";
    case event_kind::client_ack: return "ack";
  }
  return "?";
}

inline event_kind kind_from_token(const std::string& s) {
  if (s == "begin") return event_kind::txn_begin;
  if (s == "read_req") return event_kind::read_req;
  if (s == "read_resp") return event_kind::read_resp;
  if (s == "prepare") return event_kind::prepare;
  if (s == "prepared") return event_kind::prepared;
  if (s == "commit") return event_kind::commit;
  if (s == "abort") return event_kind::abort;
  if (s == "deliver") return event_kind::deliver;
  if (s == "stable") return event_kind::stable_tick;
  if (s == "ack") return event_kind::client_ack;
  throw std::invalid_argument("history: unknown event kind '" + s + "'");
}

inline const char* cause_token(wait_cause c) {
  switch (c) {
    case wait_cause::none: return "none";
    case wait_cause::clock_skew: return "clock_skew";
    case wait_cause::pending_commit: return "pending_commit";
  }
  return "?";
}

inline wait_cause cause_from_token(const std::string& s) {
  if (s == "none") return wait_cause::none;
  if (s == "clock_skew") return wait_cause::clock_skew;
  if (s == "pending_commit") return wait_cause::pending_commit;
  throw std::invalid_argument("history: unknown wait cause '" + s + "'");
}

inline const char* ack_token(ack_kind a) {
  switch (a) {
    case ack_kind::read_round: return "read";
    case ack_kind::committed: return "committed";
    case ack_kind::aborted: return "aborted";
    case ack_kind::update_ok: return "update";
  }
  return "?";
}

inline ack_kind ack_from_token(const std::string& s) {
  if (s == "read") return ack_kind::read_round;
  if (s == "committed") return ack_kind::committed;
  if (s == "aborted") return ack_kind::aborted;
  throw std::invalid_argument("history: unknown ack kind '" + s + "'");
}

inline void write_vec(std::ostream& os, const char* name,
                      const version_vector& v) {
  os << ' ' << name << '=' << v;
}

inline void write_keys(std::ostream& os, const std::vector<key_id>& keys) {
  os << " keys=[";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i) os << ',';
    os << keys[i];
  }
  os << ']';
}

}  // namespace detail

/*! Serialise one event as a single line. Field order is fixed per kind;
 * the format is documented in the README and consumed by `check`. */
inline void write_event(std::ostream& os, const history_event& e) {
  using namespace detail;
  os << e.time << ' ' << e.seq << ' ' << kind_token(e.kind);
  switch (e.kind) {
    case event_kind::txn_begin:
      os << " txn=" << e.txn << " client=" << e.client
         << " proto=" << to_string(e.proto) << " at=" << e.site << ':' << e.part;
      write_vec(os, "ss", e.ss);
      write_vec(os, "dep", e.dep);
      os << " catchup=" << e.wait;
      break;
    case event_kind::read_req:
      os << " txn=" << e.txn << " req=" << e.request << " to=" << e.site << ':'
         << e.part << " round=" << e.round;
      write_vec(os, "ss", e.ss);
      write_keys(os, e.keys);
      break;
    case event_kind::read_resp:
      os << " txn=" << e.txn << " req=" << e.request << " at=" << e.site << ':'
         << e.part << " wait=" << e.wait << " cause=" << cause_token(e.cause)
         << " r=";
      for (std::size_t i = 0; i < e.reads.size(); ++i) {
        const read_record& r = e.reads[i];
        if (i) os << ';';
        os << r.key << ':' << r.writer << ':' << r.origin << ':' << r.ct << ':'
           << r.skips << ':' << (r.from_cache ? 1 : 0);
      }
      break;
    case event_kind::prepare:
      os << " txn=" << e.txn << " at=" << e.site << ':' << e.part
         << " ct=" << e.ct << " collapsed=" << (e.collapsed ? 1 : 0);
      write_vec(os, "dep", e.dep);
      write_keys(os, e.keys);
      break;
    case event_kind::prepared:
      os << " txn=" << e.txn << " at=" << e.site << ':' << e.part
         << " time=" << e.ct;
      break;
    case event_kind::commit:
      os << " txn=" << e.txn << " at=" << e.site << ':' << e.part
         << " ct=" << e.ct << " origin=" << e.from_site;
      write_vec(os, "dep", e.dep);
      write_vec(os, "cv", e.cv);
      write_keys(os, e.keys);
      break;
    case event_kind::abort:
      os << " txn=" << e.txn << " at=" << e.site << ':' << e.part;
      break;
    case event_kind::deliver:
      os << " txn=" << e.txn << " from=" << e.from_site << ':' << e.from_part
         << " at=" << e.site << ':' << e.part << " ct=" << e.ct;
      write_vec(os, "dep", e.dep);
      write_vec(os, "cv", e.cv);
      write_keys(os, e.keys);
      break;
    case event_kind::stable_tick:
      os << " at=" << e.site << ':' << e.part << " round=" << e.round
         << " stable=" << e.stable;
      write_vec(os, "vec", e.vec);
      write_vec(os, "sv", e.sv);
      break;
    case event_kind::client_ack:
      os << " txn=" << e.txn << " client=" << e.client
         << " kind=" << ack_token(e.ack) << " round=" << e.round;
      if (e.ack == ack_kind::committed) write_vec(os, "cv", e.cv);
      break;
  }
  os << '\n';
}

inline void write_log(std::ostream& os, const history_log& log) {
  os << "# snapsim-log v1 sites=" << log.info.sites
     << " partitions=" << log.info.partitions
     << " clients=" << log.info.clients
     << " protocol=" << to_string(log.info.proto) << " seed=" << log.info.seed
     << " label=" << (log.info.label.empty() ? "-" : log.info.label) << '\n';
  for (const history_event& e : log.events) write_event(os, e);
}

namespace detail {

// Tokenized field access for the parser: "name=value" pairs after the
// leading "<time> <seq> <kind>" triple.
class field_reader {
 public:
  explicit field_reader(const std::vector<std::string>& toks) : toks_(toks) {}

  std::string get(const std::string& name) const {
    for (const std::string& t : toks_) {
      if (t.size() > name.size() + 1 && t.compare(0, name.size(), name) == 0 &&
          t[name.size()] == '=')
        return t.substr(name.size() + 1);
    }
    throw std::invalid_argument("history: missing field '" + name + "'");
  }

  static version_vector parse_vec(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
      throw std::invalid_argument("history: bad vector '" + s + "'");
    version_vector out;
    std::string body = s.substr(1, s.size() - 2);
    if (body.empty()) return out;
    std::vector<tick> vals;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(std::stoll(item));
    version_vector v(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) v.set(i, vals[i]);
    return v;
  }

  static std::vector<key_id> parse_keys(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
      throw std::invalid_argument("history: bad key list '" + s + "'");
    std::vector<key_id> out;
    std::string body = s.substr(1, s.size() - 2);
    if (body.empty()) return out;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
    return out;
  }

  static std::pair<site_id, partition_id> parse_at(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("history: bad site:part '" + s + "'");
    return {static_cast<site_id>(std::stoul(s.substr(0, colon))),
            static_cast<partition_id>(std::stoul(s.substr(colon + 1)))};
  }

 private:
  const std::vector<std::string>& toks_;
};

}  // namespace detail

inline history_event parse_event(const std::string& line) {
  using namespace detail;
  std::stringstream ss(line);
  std::vector<std::string> toks;
  std::string tok;
  while (ss >> tok) toks.push_back(tok);
  if (toks.size() < 3) throw std::invalid_argument("history: short line");

  history_event e;
  e.time = std::stoll(toks[0]);
  e.seq = std::stoull(toks[1]);
  e.kind = kind_from_token(toks[2]);
  field_reader f(toks);

  auto opt_at = [&](const char* name, site_id& s, partition_id& p) {
    auto [a, b] = field_reader::parse_at(f.get(name));
    s = a;
    p = b;
  };

  switch (e.kind) {
    case event_kind::txn_begin:
      e.txn = std::stoull(f.get("txn"));
      e.client = static_cast<client_id>(std::stoul(f.get("client")));
      e.proto = protocol_from_string(f.get("proto"));
      opt_at("at", e.site, e.part);
      e.ss = field_reader::parse_vec(f.get("ss"));
      e.dep = field_reader::parse_vec(f.get("dep"));
      e.wait = std::stoll(f.get("catchup"));
      break;
    case event_kind::read_req:
      e.txn = std::stoull(f.get("txn"));
      e.request = std::stoull(f.get("req"));
      opt_at("to", e.site, e.part);
      e.round = static_cast<std::uint32_t>(std::stoul(f.get("round")));
      e.ss = field_reader::parse_vec(f.get("ss"));
      e.keys = field_reader::parse_keys(f.get("keys"));
      break;
    case event_kind::read_resp: {
      e.txn = std::stoull(f.get("txn"));
      e.request = std::stoull(f.get("req"));
      opt_at("at", e.site, e.part);
      e.wait = std::stoll(f.get("wait"));
      e.cause = cause_from_token(f.get("cause"));
      std::string recs = f.get("r");
      std::stringstream rs(recs);
      std::string rec;
      while (std::getline(rs, rec, ';')) {
        std::stringstream one(rec);
        std::string p;
        std::vector<std::string> parts;
        while (std::getline(one, p, ':')) parts.push_back(p);
        if (parts.size() != 6)
          throw std::invalid_argument("history: bad read record '" + rec + "'");
        read_record r;
        r.key = std::stoull(parts[0]);
        r.writer = std::stoull(parts[1]);
        r.origin = static_cast<site_id>(std::stoul(parts[2]));
        r.ct = std::stoll(parts[3]);
        r.skips = static_cast<std::uint32_t>(std::stoul(parts[4]));
        r.from_cache = parts[5] == "1";
        e.reads.push_back(r);
      }
      break;
    }
    case event_kind::prepare:
      e.txn = std::stoull(f.get("txn"));
      opt_at("at", e.site, e.part);
      e.ct = std::stoll(f.get("ct"));
      e.collapsed = f.get("collapsed") == "1";
      e.dep = field_reader::parse_vec(f.get("dep"));
      e.keys = field_reader::parse_keys(f.get("keys"));
      break;
    case event_kind::prepared:
      e.txn = std::stoull(f.get("txn"));
      opt_at("at", e.site, e.part);
      e.ct = std::stoll(f.get("time"));
      break;
    case event_kind::commit:
      e.txn = std::stoull(f.get("txn"));
      opt_at("at", e.site, e.part);
      e.ct = std::stoll(f.get("ct"));
      e.from_site = static_cast<site_id>(std::stoul(f.get("origin")));
      e.dep = field_reader::parse_vec(f.get("dep"));
      e.cv = field_reader::parse_vec(f.get("cv"));
      e.keys = field_reader::parse_keys(f.get("keys"));
      break;
    case event_kind::abort:
      e.txn = std::stoull(f.get("txn"));
      opt_at("at", e.site, e.part);
      break;
    case event_kind::deliver:
      e.txn = std::stoull(f.get("txn"));
      opt_at("from", e.from_site, e.from_part);
      opt_at("at", e.site, e.part);
      e.ct = std::stoll(f.get("ct"));
      e.dep = field_reader::parse_vec(f.get("dep"));
      e.cv = field_reader::parse_vec(f.get("cv"));
      e.keys = field_reader::parse_keys(f.get("keys"));
      break;
    case event_kind::stable_tick:
      opt_at("at", e.site, e.part);
      e.round = static_cast<std::uint32_t>(std::stoul(f.get("round")));
      e.stable = std::stoll(f.get("stable"));
      e.vec = field_reader::parse_vec(f.get("vec"));
      e.sv = field_reader::parse_vec(f.get("sv"));
      break;
    case event_kind::client_ack:
      e.txn = std::stoull(f.get("txn"));
      e.client = static_cast<client_id>(std::stoul(f.get("client")));
      e.ack = ack_from_token(f.get("kind"));
      e.round = static_cast<std::uint32_t>(std::stoul(f.get("round")));
      if (e.ack == ack_kind::committed)
        e.cv = field_reader::parse_vec(f.get("cv"));
      break;
  }
  return e;
}

inline history_log read_log(std::istream& is) {
  history_log log;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream ss(line);
      std::vector<std::string> toks;
      std::string tok;
      while (ss >> tok) toks.push_back(tok);
      detail::field_reader f(toks);
      log.info.sites = static_cast<std::uint32_t>(std::stoul(f.get("sites")));
      log.info.partitions =
          static_cast<std::uint32_t>(std::stoul(f.get("partitions")));
      log.info.clients =
          static_cast<std::uint32_t>(std::stoul(f.get("clients")));
      log.info.proto = protocol_from_string(f.get("protocol"));
      log.info.seed = std::stoull(f.get("seed"));
      std::string label = f.get("label");
      log.info.label = label == "-" ? "" : label;
      have_header = true;
      continue;
    }
    log.events.push_back(parse_event(line));
  }
  if (!have_header) throw std::invalid_argument("history: missing log header");
  return log;
}

}  // namespace snapsim
