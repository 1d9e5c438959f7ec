#include "snapsim/version_vector.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace snapsim;

namespace {

version_vector random_vec(std::mt19937_64& rng, std::size_t n, tick max) {
  version_vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    v.set(i, static_cast<tick>(rng() % (max + 1)));
  return v;
}

}  // namespace

TEST_CASE("vv_leq is componentwise") {
  CHECK(vv_leq({2, 0}, {4, 3}));
  CHECK_FALSE(vv_leq({5, 0}, {4, 3}));
  version_vector a{3, 7};
  CHECK(vv_leq(a, a));
}

TEST_CASE("vv_leq rejects mismatched lengths") {
  CHECK_THROWS_AS(vv_leq({1, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(vv_max({1}, {1, 2}), std::invalid_argument);
}

TEST_CASE("vv_max basics") {
  CHECK(vv_max({3, 2}, {1, 5}) == version_vector{3, 5});
  version_vector v{4, 9};
  CHECK(vv_max(v, version_vector::zero(2)) == v);
  CHECK(vv_max(v, v) == v);
}

TEST_CASE("vv_leq is a partial order") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    auto a = random_vec(rng, 3, 6);
    auto b = random_vec(rng, 3, 6);
    auto c = random_vec(rng, 3, 6);
    CHECK(vv_leq(a, a));
    if (vv_leq(a, b) && vv_leq(b, a)) CHECK(a == b);
    if (vv_leq(a, b) && vv_leq(b, c)) CHECK(vv_leq(a, c));
  }
}

TEST_CASE("vv_max is the least upper bound") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    auto a = random_vec(rng, 4, 6);
    auto b = random_vec(rng, 4, 6);
    auto m = vv_max(a, b);
    CHECK(vv_leq(a, m));
    CHECK(vv_leq(b, m));
    auto c = vv_max(random_vec(rng, 4, 6), m);  // any upper bound of a and b
    if (vv_leq(a, c) && vv_leq(b, c)) CHECK(vv_leq(m, c));
  }
}

TEST_CASE("advance never decreases an entry") {
  version_vector v{5, 2};
  v.advance(0, 3);
  CHECK(v == version_vector{5, 2});
  v.advance(1, 9);
  CHECK(v == version_vector{5, 9});
}
