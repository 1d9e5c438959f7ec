#pragma once

// Test-only exhaustive checkers for the snapshot definitions. They follow
// the definitions literally, quantifying over every version in the graph,
// and stay independent of the incremental per-key implementation they
// cross-check.

#include "snapsim/oracle.hpp"

namespace snapsim::oracle::brute {

//! Order preservation by full enumeration: for every ordered pair in the
//! snapshot and every version in the graph, look for a gap witness of the
//! earlier element's object.
inline bool order_preserving(version_graph& g, const readset& reads) {
  auto everything = g.all_versions();
  for (const graph_version* a : reads) {
    for (const graph_version* b : reads) {
      for (const graph_version* k : everything) {
        if (k->key != a->key) continue;
        if (g.precedes(*a, *k) && g.precedes(*k, *b)) return false;
      }
    }
  }
  return true;
}

//! Broken-read detection by full enumeration over all same-transaction
//! version pairs in the graph.
inline bool atomic_snapshot(version_graph& g, const readset& reads) {
  auto everything = g.all_versions();
  for (const graph_version* xi : everything) {
    for (const graph_version* yj : everything) {
      if (xi->initial || yj->initial) continue;
      if (xi->writer != yj->writer || xi->key == yj->key) continue;
      // xi and yj written by one transaction; if the snapshot holds xi
      // and some version y_k of yj's object, y_k must not precede yj.
      bool holds_xi = false;
      const graph_version* yk = nullptr;
      for (const graph_version* r : reads) {
        if (r == xi) holds_xi = true;
        if (r->key == yj->key) yk = r;
      }
      if (holds_xi && yk && g.precedes(*yk, *yj)) return false;
    }
  }
  return true;
}

}  // namespace snapsim::oracle::brute
