#pragma once

#include <algorithm>
#include <random>

#include "snapsim/types.hpp"

namespace snapsim {

//! Uniform integer draw that is deterministic across platforms (the
//! standard distributions are implementation-defined).
inline tick rng_range(std::mt19937_64& rng, tick lo, tick hi) {
  if (hi <= lo) return lo;
  return lo +
         static_cast<tick>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline std::size_t rng_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

/*! \brief The physical clock of one server, driven by simulation time.
 *
 * A reading is sim-time plus the site's configured fixed offset, plus an
 * optional per-read jitter drawn uniformly from [-jitter, +jitter].
 * Successive readings of one instance are clamped to be non-decreasing,
 * so a server never observes its own clock running backwards even when a
 * jittered read overshoots. Each server (partition) owns one instance; a
 * transaction coordinator reads the clock of the server it runs on.
 */
class site_clock {
 public:
  site_clock() = default;

  site_clock(site_id site, tick offset, tick jitter = 0)
      : site_(site), offset_(offset), jitter_(jitter) {}

  site_id site() const { return site_; }
  tick offset() const { return offset_; }
  tick jitter() const { return jitter_; }

  //! Read the clock at simulation time `now`, drawing jitter from `rng`.
  tick read(tick now, std::mt19937_64& rng) {
    tick value = now + offset_;
    if (jitter_ > 0) value += rng_range(rng, -jitter_, jitter_);
    last_ = std::max(last_, value);
    return last_;
  }

  //! Largest value returned so far (the monotonic floor).
  tick last() const { return last_; }

  /*! Earliest sim time by which a reading is guaranteed to be >= `target`,
   *  regardless of jitter draw. Used to schedule wake-ups for reads that
   *  deferred on a lagging clock. */
  tick guaranteed_pass(tick target) const {
    return target - offset_ + jitter_;
  }

 private:
  site_id site_ = 0;
  tick offset_ = 0;
  tick jitter_ = 0;
  tick last_ = 0;
};

}  // namespace snapsim
