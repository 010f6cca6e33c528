#pragma once

#include <concepts>
#include <ranges>
#include <string>

#include "replica.hpp"
#include "text.hpp"

namespace dcrdt {

/// A CRDT instance whose states form a join semi-lattice with a least element.
template <class C>
concept join_semilattice = requires(const C& c, const typename C::state_type& s) {
  { c.bottom() } -> std::same_as<typename C::state_type>;
  { c.join(s, s) } -> std::same_as<typename C::state_type>;
  { c.format(s) } -> std::convertible_to<std::string>;
} && std::equality_comparable<typename C::state_type>;

/// A delta-state CRDT instance.
///
/// update_full is the state-based mutator (returns the whole new state), update_delta the
/// delta-mutator (returns only the fragment, a state-typed value), refine the delta-mutator
/// under the restricted message type, expand turns a restricted fragment back into a state,
/// and recover applies a restricted fragment to a state.
template <class C>
concept delta_crdt =
    join_semilattice<C> &&
    requires(const C& c, const typename C::state_type& s, const typename C::update_type& u,
             const typename C::refined_type& r, replica_id who, text_cursor& in) {
      { c.update_full(s, who, u) } -> std::same_as<typename C::state_type>;
      { c.update_delta(s, who, u) } -> std::same_as<typename C::state_type>;
      { c.refine(s, who, u) } -> std::same_as<typename C::refined_type>;
      { c.expand(r) } -> std::same_as<typename C::state_type>;
      { c.recover(s, r) } -> std::same_as<typename C::state_type>;
      { c.query(s) } -> std::same_as<typename C::query_type>;
      { c.format_refined(r) } -> std::convertible_to<std::string>;
      { c.format_query(c.query(s)) } -> std::convertible_to<std::string>;
      { c.parse(in) } -> std::same_as<typename C::state_type>;
    };

/// Partial order induced by the join: a <= b iff a join b == b.
template <join_semilattice C>
bool leq(const C& crdt, const typename C::state_type& a, const typename C::state_type& b) {
  return crdt.join(a, b) == b;
}

template <join_semilattice C, std::ranges::input_range R>
typename C::state_type fold_join(const C& crdt, R&& states) {
  auto acc = crdt.bottom();
  for (const auto& s : states) acc = crdt.join(acc, s);
  return acc;
}

template <delta_crdt C>
typename C::state_type parse_state(const C& crdt, std::string_view text) {
  text_cursor in(text);
  auto s = crdt.parse(in);
  if (!in.at_end()) in.fail("trailing characters");
  return s;
}

}  // namespace dcrdt
