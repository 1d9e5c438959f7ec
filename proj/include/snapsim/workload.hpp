#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "snapsim/net.hpp"
#include "snapsim/types.hpp"

namespace snapsim {

/*! Closed-loop workload: each client alternates a read-only transaction
 * (rounds_per_txn rounds of reads_per_round parallel reads) with an
 * update transaction that blindly writes a subset of the keys the read
 * transaction observed. Key choice is power-law: hot_op_fraction of the
 * operations go to the hot_key_fraction hottest keys (80/20 by default).
 */
struct workload_config {
  std::uint32_t keys = 1024;
  std::uint32_t value_size = 100;       // bytes per written value
  std::uint32_t reads_per_round = 20;
  std::uint32_t rounds_per_txn = 1;     // 1 = single-shot, 10 = multi-shot
  std::uint32_t updates_per_txn = 4;
  std::uint32_t txn_pairs_per_client = 8;
  double hot_key_fraction = 0.2;
  double hot_op_fraction = 0.8;
  double warmup_fraction = 0.1;  // leading fraction of the run dropped from metrics

  void validate() const {
    if (keys == 0 || reads_per_round == 0 || rounds_per_txn == 0 ||
        updates_per_txn == 0 || txn_pairs_per_client == 0)
      throw std::invalid_argument("workload: counts must be >= 1");
    if (hot_key_fraction <= 0.0 || hot_key_fraction > 1.0 ||
        hot_op_fraction < 0.0 || hot_op_fraction > 1.0)
      throw std::invalid_argument("workload: bad power-law parameters");
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
      throw std::invalid_argument("workload: bad warmup fraction");
    if (static_cast<std::uint64_t>(reads_per_round) * rounds_per_txn > keys)
      throw std::invalid_argument(
          "workload: transaction reads exceed the keyspace");
  }

  std::uint32_t hot_keys() const {
    auto h = static_cast<std::uint32_t>(hot_key_fraction *
                                        static_cast<double>(keys));
    return h == 0 ? 1 : h;
  }
};

//! Power-law key draw; `used` makes picks distinct within a transaction.
inline key_id pick_key(const workload_config& wl, std::mt19937_64& rng,
                       const std::unordered_set<key_id>& used) {
  std::uint32_t hot = wl.hot_keys();
  for (int attempt = 0; attempt < 64; ++attempt) {
    double coin =
        static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    key_id k;
    if (coin < wl.hot_op_fraction || hot == wl.keys)
      k = static_cast<key_id>(rng_index(rng, hot));
    else
      k = hot + static_cast<key_id>(rng_index(rng, wl.keys - hot));
    if (!used.count(k)) return k;
  }
  // Dense transactions: probe linearly from a random start.
  key_id start = static_cast<key_id>(rng_index(rng, wl.keys));
  for (std::uint32_t i = 0; i < wl.keys; ++i) {
    key_id k = (start + i) % wl.keys;
    if (!used.count(k)) return k;
  }
  throw std::logic_error("pick_key: keyspace exhausted");
}

inline std::string random_value(std::uint32_t size, std::mt19937_64& rng) {
  std::string v(size, '\0');
  for (std::uint32_t i = 0; i < size; ++i)
    v[i] = static_cast<char>(rng() & 0xff);
  return v;
}

}  // namespace snapsim
