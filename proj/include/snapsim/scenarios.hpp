#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "snapsim/simnet.hpp"

namespace snapsim {

//! Smallest key that hashes onto partition `m`.
inline key_id key_on_partition(partition_id m, std::uint32_t partitions) {
  for (key_id k = 0;; ++k)
    if (partition_of(k, partitions) == m) return k;
}

/*! Hand-written schedules. Each pins an exact interleaving of message
 * arrivals with unit latencies and explicit per-partition read latency
 * overrides, so the interesting race is hit deterministically:
 *
 *  - fig2a:    two causally ordered single-key writers; a concurrent
 *              reader reaches the first key's partition before the first
 *              write lands and the second key's partition after the
 *              second write landed.
 *  - fig2b:    one transaction writes two keys atomically; the reader
 *              races its commit the same way.
 *  - lemma_ff: a reader with a stable snapshot overlaps two causally
 *              ordered writers; the fresher first write is compatible
 *              with the snapshot, the second is not.
 *  - ryw:      write then read back before any stabilisation round.
 *  - catchup:  a client hops sites between transactions, forcing the
 *              monotonic-reads catch-up to block until the new site's
 *              stable vector covers the old snapshot.
 */
inline history_log run_scenario(const std::string& name, protocol proto,
                                std::uint64_t seed = 1,
                                bool session_cache = true) {
  sim_config cfg;
  cfg.seed = seed;
  cfg.proto = proto;
  cfg.intra_site = {1, 1};
  cfg.cross_site = {10, 10};
  cfg.client_server = {1, 1};
  cfg.clock_jitter = 0;
  cfg.session_cache = session_cache;
  cfg.session_catchup = true;

  if (name == "fig2a") {
    cfg.sites = 1;
    cfg.partitions = 2;
    cfg.stabilisation_period = 200;
    simulation sim(cfg);
    key_id x = key_on_partition(0, 2);
    key_id y = key_on_partition(1, 2);

    // Writer of x_k.
    sim.add_scripted_client(0, {
        {1, true, {}, op_update{{{x, "xk"}}}},
        {-1, false, {}, op_commit{}},
    });
    // Reader of x_k, writer of y_j (established causal order x_k < y_j).
    sim.add_scripted_client(0, {
        {10, true, {}, op_read{{x}, 0, {}}},
        {-1, false, {}, op_update{{{y, "yj"}}}},
        {-1, false, {}, op_commit{}},
    });
    // Racing reader: reaches p_x before x_k, p_y after y_j.
    sim.add_scripted_client(0, {
        {2, true, {}, op_read{{x, y}, 0, {{0, 1}, {1, 30}}}},
        {-1, false, {}, op_commit{}},
    });
    return sim.run();
  }

  if (name == "fig2b") {
    cfg.sites = 1;
    cfg.partitions = 2;
    cfg.stabilisation_period = 200;
    simulation sim(cfg);
    key_id x = key_on_partition(0, 2);
    key_id y = key_on_partition(1, 2);

    // Atomic writer of {x_k, y_j} across two partitions.
    sim.add_scripted_client(0, {
        {1, true, {}, op_update{{{x, "xk"}, {y, "yj"}}}},
        {-1, false, {}, op_commit{}},
    });
    // Reader racing the 2PC.
    sim.add_scripted_client(0, {
        {2, true, {}, op_read{{x, y}, 0, {{0, 1}, {1, 30}}}},
        {-1, false, {}, op_commit{}},
    });
    return sim.run();
  }

  if (name == "lemma_ff") {
    cfg.sites = 1;
    cfg.partitions = 2;
    cfg.stabilisation_period = 500;
    simulation sim(cfg);
    key_id x = key_on_partition(0, 2);
    key_id y = key_on_partition(1, 2);

    // Reader starts first: stable snapshot {x_bot, y_bot}; both reads
    // arrive after the writers below committed.
    sim.add_scripted_client(0, {
        {1, true, {}, op_read{{x, y}, 0, {{0, 25}, {1, 35}}}},
        {-1, false, {}, op_commit{}},
    });
    // x_u, committed concurrently with the reader, dep within snapshot.
    sim.add_scripted_client(0, {
        {3, true, {}, op_update{{{x, "xu"}}}},
        {-1, false, {}, op_commit{}},
    });
    // y_v, causally after x_u (reads it first), incompatible.
    sim.add_scripted_client(0, {
        {12, true, {}, op_read{{x}, 0, {}}},
        {-1, false, {}, op_update{{{y, "yv"}}}},
        {-1, false, {}, op_commit{}},
    });
    return sim.run();
  }

  if (name == "ryw") {
    cfg.sites = 1;
    cfg.partitions = 1;
    cfg.stabilisation_period = 50;  // write and read both land before tick 1
    simulation sim(cfg);
    key_id x = 0;
    sim.add_scripted_client(0, {
        {1, true, {}, op_update{{{x, "mine"}}}},
        {-1, false, {}, op_commit{}},
        {-1, true, {}, op_read{{x}, 0, {}}},
        {-1, false, {}, op_commit{}},
    });
    return sim.run();
  }

  if (name == "catchup") {
    cfg.sites = 2;
    cfg.partitions = 1;
    cfg.stabilisation_period = 5;
    cfg.cross_site = {12, 12};
    if (cfg.clock_offsets.empty()) cfg.clock_offsets = {20, 0};
    simulation sim(cfg);
    key_id x = 0;
    // One transaction at the fast site, then reconnect at the lagging
    // site: its SV trails site 0's by the cross-site delay.
    sim.add_scripted_client(0, {
        {30, true, {}, op_read{{x}, 0, {}}},
        {-1, false, {}, op_commit{}},
        {-1, true, site_id{1}, op_read{{x}, 0, {}}},
        {-1, false, {}, op_commit{}},
    });
    return sim.run();
  }

  throw std::invalid_argument("unknown scenario: " + name);
}

inline std::vector<std::string> scenario_names() {
  return {"fig2a", "fig2b", "lemma_ff", "ryw", "catchup"};
}

}  // namespace snapsim
