#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>

#include "errors.hpp"
#include "lattice.hpp"
#include "replica.hpp"
#include "text.hpp"

namespace dcrdt {

/// Grow-only counter state: a partial map from replica to its increment count.
///
/// Canonical form: an absent entry means zero and zero is never stored, so structural
/// equality coincides with semantic equality.
class gcounter_state {
 public:
  using map_type = std::map<replica_id, std::uint64_t>;

  gcounter_state() = default;

  gcounter_state(std::initializer_list<std::pair<const replica_id, std::uint64_t>> entries) {
    for (const auto& [who, count] : entries) set(who, count);
  }

  std::uint64_t get(replica_id who) const {
    auto it = entries_.find(who);
    return it == entries_.end() ? 0 : it->second;
  }

  bool contains(replica_id who) const { return entries_.contains(who); }

  void set(replica_id who, std::uint64_t count) {
    if (count == 0) {
      entries_.erase(who);
    } else {
      entries_[who] = count;
    }
  }

  const map_type& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  auto operator<=>(const gcounter_state&) const = default;

 private:
  map_type entries_;
};

/// The restricted G-Counter fragment: one replica and the count it was raised to.
struct counter_entry {
  replica_id who;
  std::uint64_t count = 0;

  auto operator<=>(const counter_entry&) const = default;
};

struct increment {
  auto operator<=>(const increment&) const = default;
};

inline std::string format_gcounter(const gcounter_state& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& [who, count] : s.entries()) {
    if (!first) out += ", ";
    first = false;
    out += to_string(who) + ":" + std::to_string(count);
  }
  return out + "}";
}

/// Keywise maximum over the union of domains; a present entry always beats an absent one.
inline gcounter_state join(const gcounter_state& a, const gcounter_state& b) {
  gcounter_state out = a;
  for (const auto& [who, count] : b.entries()) out.set(who, std::max(out.get(who), count));
  return out;
}

/// Grow-only counter over a fixed replica set.
class gcounter {
 public:
  using state_type = gcounter_state;
  using update_type = increment;
  using refined_type = counter_entry;
  using difference_type = counter_entry;
  using query_type = std::uint64_t;

  gcounter() = default;
  explicit gcounter(replica_set replicas) : replicas_(replicas) {}

  const replica_set& replicas() const noexcept { return replicas_; }

  state_type bottom() const { return {}; }

  state_type join(const state_type& a, const state_type& b) const { return dcrdt::join(a, b); }

  bool leq(const state_type& a, const state_type& b) const {
    return std::all_of(a.entries().begin(), a.entries().end(),
                       [&](const auto& e) { return e.second <= b.get(e.first); });
  }

  query_type query(const state_type& s) const {
    std::uint64_t total = 0;
    for (const auto& [who, count] : s.entries()) total = checked_add(total, count);
    return total;
  }

  /// State-based inc: the whole state with who's entry raised by one.
  state_type update_full(const state_type& s, replica_id who, increment = {}) const {
    replicas_.require(who);
    state_type out = s;
    out.set(who, checked_add(s.get(who), 1));
    return out;
  }

  /// Delta inc: the singleton map {who -> s(who) + 1}. s is left untouched.
  state_type update_delta(const state_type& s, replica_id who, increment = {}) const {
    replicas_.require(who);
    state_type out;
    out.set(who, checked_add(s.get(who), 1));
    return out;
  }

  refined_type refine(const state_type& s, replica_id who, increment = {}) const {
    replicas_.require(who);
    return {who, checked_add(s.get(who), 1)};
  }

  /// The state defined only at the entry's replica.
  state_type expand(const refined_type& r) const {
    state_type out;
    out.set(r.who, r.count);
    return out;
  }

  /// Replaces the entry named by r; a stale (lower) count never lowers the entry.
  state_type recover(const state_type& s, const refined_type& r) const {
    state_type out = s;
    out.set(r.who, std::max(s.get(r.who), r.count));
    return out;
  }

  /// Before/after difference: (i, s2[i]) for the least replica i where the states differ.
  difference_type difference(const state_type& s1, const state_type& s2) const {
    if (!leq(s1, s2)) {
      throw precondition_violation("gcounter difference: " + format(s1) + " is not below " +
                                   format(s2));
    }
    for (const auto& [who, count] : s2.entries()) {
      if (s1.get(who) != count) return {who, count};
    }
    throw undefined_difference("gcounter difference is not defined for equal states " + format(s1));
  }

  state_type apply_difference(const state_type& s, const difference_type& d) const {
    return recover(s, d);
  }

  std::string format(const state_type& s) const { return format_gcounter(s); }

  std::string format_refined(const refined_type& r) const {
    return "(" + to_string(r.who) + ", " + std::to_string(r.count) + ")";
  }

  std::string format_difference(const difference_type& d) const { return format_refined(d); }

  std::string format_query(query_type q) const { return std::to_string(q); }

  state_type parse(text_cursor& in) const {
    state_type out;
    in.expect('{');
    if (in.consume('}')) return out;
    do {
      const auto tok = in.token();
      const auto who = parse_replica_id(tok);
      if (!who) in.fail("expected a replica id");
      replicas_.require(*who);
      in.expect(':');
      const auto count = in.number();
      if (out.contains(*who)) in.fail("duplicate replica " + to_string(*who));
      out.set(*who, count);
    } while (in.consume(','));
    in.expect('}');
    return out;
  }

 private:
  replica_set replicas_;
};

}  // namespace dcrdt
