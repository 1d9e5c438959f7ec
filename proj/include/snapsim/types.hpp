#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace snapsim {

// Simulation time is integer ticks. Signed so that clock offsets and
// deltas compose without surprises; negative absolute times never occur.
using tick = std::int64_t;

using site_id = std::uint32_t;
using partition_id = std::uint32_t;   // partition index within a site
using client_id = std::uint32_t;
using txn_id = std::uint64_t;
using key_id = std::uint64_t;

// txn id 0 is reserved for the initial versions every key starts with.
inline constexpr txn_id initial_txn = 0;

enum class protocol : std::uint8_t {
  cv,            // Committed Visibility, latest freshness
  op,            // Order-Preserving Visibility, concurrent freshness
  av,            // Atomic Visibility, stable freshness
  cure,          // the blocking base protocol
  latest_always, // strawman: head-of-chain reads, no snapshot gating
};

inline const char* to_string(protocol p) {
  switch (p) {
    case protocol::cv: return "cv";
    case protocol::op: return "op";
    case protocol::av: return "av";
    case protocol::cure: return "cure";
    case protocol::latest_always: return "latest";
  }
  return "?";
}

// Stable 64-bit mixer used wherever the artifact needs a deterministic,
// platform-independent hash (key partitioning, seed derivation).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline protocol protocol_from_string(const std::string& s) {
  if (s == "cv") return protocol::cv;
  if (s == "op") return protocol::op;
  if (s == "av") return protocol::av;
  if (s == "cure") return protocol::cure;
  if (s == "latest" || s == "latest_always") return protocol::latest_always;
  throw std::invalid_argument("unknown protocol: " + s);
}

}  // namespace snapsim
