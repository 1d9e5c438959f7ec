#include "snapsim/clock.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace snapsim;

TEST_CASE("clock reads sim time plus offset") {
  std::mt19937_64 rng(1);
  site_clock c(0, 0);
  CHECK(c.read(100, rng) == 100);
  site_clock behind(1, -5);
  CHECK(behind.read(100, rng) == 95);
  site_clock ahead(2, +7);
  CHECK(ahead.read(100, rng) == 107);
}

TEST_CASE("clock clamps to the previous reading") {
  std::mt19937_64 rng(1);
  site_clock c(0, -5);
  CHECK(c.read(101, rng) == 96);
  // Time went on but the offset keeps the raw value below the floor.
  CHECK(c.read(100, rng) == 96);
  CHECK(c.read(110, rng) == 105);
}

TEST_CASE("consecutive reads are non-decreasing under any jitter") {
  std::mt19937_64 rng(42);
  for (tick offset : {-5, 0, 5}) {
    for (tick jitter : {0, 3, 9}) {
      site_clock c(0, offset, jitter);
      tick prev = c.read(0, rng);
      for (tick t = 1; t < 500; ++t) {
        tick r = c.read(t, rng);
        CHECK(r >= prev);
        prev = r;
      }
    }
  }
}

TEST_CASE("guaranteed_pass bounds the jittered read from below") {
  std::mt19937_64 rng(3);
  site_clock c(0, -4, 5);
  tick target = 123;
  tick at = c.guaranteed_pass(target);
  CHECK(c.read(at, rng) >= target);
}
