#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "snapsim/types.hpp"

namespace snapsim {

/*! \brief An M-entry vector timestamp, one entry per site.
 *
 * Every timestamp in the system is one of these: transaction snapshots,
 * dependency vectors, commit vectors and stable vectors. Entries are
 * 64-bit so long runs cannot overflow. The length is fixed at
 * construction and equals the configured site count.
 */
class version_vector {
 public:
  version_vector() = default;

  explicit version_vector(std::size_t sites, tick fill = 0)
      : entries_(sites, fill) {}

  version_vector(std::initializer_list<tick> init) : entries_(init) {}

  static version_vector zero(std::size_t sites) {
    return version_vector(sites, 0);
  }

  std::size_t size() const { return entries_.size(); }

  tick operator[](std::size_t site) const { return entries_[site]; }

  tick at(std::size_t site) const {
    if (site >= entries_.size())
      throw std::invalid_argument("version_vector: site out of range");
    return entries_[site];
  }

  //! Set one entry. Advancing in place never decreases an entry.
  void set(std::size_t site, tick value) {
    if (site >= entries_.size())
      throw std::invalid_argument("version_vector: site out of range");
    entries_[site] = value;
  }

  //! Raise one entry to at least `value` (no-op when already past it).
  void advance(std::size_t site, tick value) {
    if (site >= entries_.size())
      throw std::invalid_argument("version_vector: site out of range");
    if (value > entries_[site]) entries_[site] = value;
  }

  //! Componentwise in-place join with `other`.
  void merge(const version_vector& other) {
    check_same_length(other);
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (other.entries_[i] > entries_[i]) entries_[i] = other.entries_[i];
  }

  bool operator==(const version_vector& o) const = default;

  friend std::ostream& operator<<(std::ostream& os, const version_vector& v) {
    os << '[';
    for (std::size_t i = 0; i < v.entries_.size(); ++i) {
      if (i) os << ',';
      os << v.entries_[i];
    }
    return os << ']';
  }

  std::string str() const;

 private:
  void check_same_length(const version_vector& o) const {
    if (entries_.size() != o.entries_.size())
      throw std::invalid_argument("version_vector: length mismatch (" +
                                  std::to_string(entries_.size()) + " vs " +
                                  std::to_string(o.entries_.size()) + ")");
  }

  friend bool vv_leq(const version_vector&, const version_vector&);
  friend version_vector vv_max(const version_vector&, const version_vector&);

  std::vector<tick> entries_;
};

//! Componentwise partial order: true iff a[i] <= b[i] for every site.
inline bool vv_leq(const version_vector& a, const version_vector& b) {
  a.check_same_length(b);
  for (std::size_t i = 0; i < a.entries_.size(); ++i)
    if (a.entries_[i] > b.entries_[i]) return false;
  return true;
}

//! Componentwise maximum: the least upper bound of a and b under vv_leq.
inline version_vector vv_max(const version_vector& a, const version_vector& b) {
  a.check_same_length(b);
  version_vector out = a;
  out.merge(b);
  return out;
}

inline std::string version_vector::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(entries_[i]);
  }
  s += ']';
  return s;
}

}  // namespace snapsim
