#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "errors.hpp"
#include "gcounter.hpp"
#include "gset.hpp"
#include "lattice.hpp"

namespace dcrdt {

template <class A, class B>
struct pair_state {
  A first{};
  B second{};

  auto operator<=>(const pair_state&) const = default;
};

/// Tags an argument as addressed to the left or right component of a pair.
template <class T>
struct on_left {
  T value{};
  auto operator<=>(const on_left&) const = default;
};

template <class T>
struct on_right {
  T value{};
  auto operator<=>(const on_right&) const = default;
};

/// Product of two independent delta-state CRDTs. Join is componentwise; a delta fragment
/// carries the bottom of the component that was not updated. Query is supplied by Query,
/// which provides `result_type`, `apply(left, right, state)` and `format(result)`.
template <delta_crdt L, delta_crdt R, class Query>
class pair_crdt {
 public:
  using left_type = L;
  using right_type = R;
  using state_type = pair_state<typename L::state_type, typename R::state_type>;
  using update_type = std::variant<on_left<typename L::update_type>, on_right<typename R::update_type>>;
  using refined_type =
      std::variant<on_left<typename L::refined_type>, on_right<typename R::refined_type>>;
  using query_type = typename Query::result_type;

  pair_crdt() = default;
  pair_crdt(L left, R right) : left_(std::move(left)), right_(std::move(right)) {}

  const L& left() const noexcept { return left_; }
  const R& right() const noexcept { return right_; }

  state_type bottom() const { return {left_.bottom(), right_.bottom()}; }

  state_type join(const state_type& a, const state_type& b) const {
    return {left_.join(a.first, b.first), right_.join(a.second, b.second)};
  }

  bool leq(const state_type& a, const state_type& b) const {
    return dcrdt::leq(left_, a.first, b.first) && dcrdt::leq(right_, a.second, b.second);
  }

  query_type query(const state_type& s) const { return Query::apply(left_, right_, s); }

  state_type update_full(const state_type& s, replica_id who, const update_type& u) const {
    if (const auto* l = std::get_if<0>(&u)) return {left_.update_full(s.first, who, l->value), s.second};
    const auto& r = std::get<1>(u);
    return {s.first, right_.update_full(s.second, who, r.value)};
  }

  state_type update_delta(const state_type& s, replica_id who, const update_type& u) const {
    if (const auto* l = std::get_if<0>(&u)) {
      return {left_.update_delta(s.first, who, l->value), right_.bottom()};
    }
    const auto& r = std::get<1>(u);
    return {left_.bottom(), right_.update_delta(s.second, who, r.value)};
  }

  refined_type refine(const state_type& s, replica_id who, const update_type& u) const {
    if (const auto* l = std::get_if<0>(&u)) {
      return refined_type(std::in_place_index<0>,
                          on_left<typename L::refined_type>{left_.refine(s.first, who, l->value)});
    }
    const auto& r = std::get<1>(u);
    return refined_type(std::in_place_index<1>,
                        on_right<typename R::refined_type>{right_.refine(s.second, who, r.value)});
  }

  state_type expand(const refined_type& r) const {
    if (const auto* l = std::get_if<0>(&r)) return {left_.expand(l->value), right_.bottom()};
    return {left_.bottom(), right_.expand(std::get<1>(r).value)};
  }

  state_type recover(const state_type& s, const refined_type& r) const {
    if (const auto* l = std::get_if<0>(&r)) return {left_.recover(s.first, l->value), s.second};
    return {s.first, right_.recover(s.second, std::get<1>(r).value)};
  }

  std::string format(const state_type& s) const {
    return "(" + left_.format(s.first) + ", " + right_.format(s.second) + ")";
  }

  std::string format_refined(const refined_type& r) const {
    if (const auto* l = std::get_if<0>(&r)) return "left " + left_.format_refined(l->value);
    return "right " + right_.format_refined(std::get<1>(r).value);
  }

  std::string format_query(const query_type& q) const { return Query::format(left_, right_, q); }

  state_type parse(text_cursor& in) const {
    in.expect('(');
    auto a = left_.parse(in);
    in.expect(',');
    auto b = right_.parse(in);
    in.expect(')');
    return {std::move(a), std::move(b)};
  }

 private:
  L left_;
  R right_;
};

template <class Query, delta_crdt L, delta_crdt R>
pair_crdt<L, R, Query> pair_compose(L left, R right) {
  return pair_crdt<L, R, Query>(std::move(left), std::move(right));
}

/// Difference of the two counters' sums.
struct pn_query {
  using result_type = std::int64_t;

  static result_type apply(const gcounter& l, const gcounter& r,
                           const pair_state<gcounter_state, gcounter_state>& s) {
    const std::uint64_t pos = l.query(s.first);
    const std::uint64_t neg = r.query(s.second);
    constexpr auto max = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (pos > max || neg > max) throw counter_overflow("pn-counter component exceeds int64 range");
    return static_cast<std::int64_t>(pos) - static_cast<std::int64_t>(neg);
  }

  static std::string format(const gcounter&, const gcounter&, result_type q) { return std::to_string(q); }
};

/// Elements added and never removed.
template <class E>
struct two_p_query {
  using result_type = gset_state<E>;

  static result_type apply(const gset<E>&, const gset<E>&, const pair_state<gset_state<E>, gset_state<E>>& s) {
    result_type out;
    for (const auto& e : s.first.elements()) {
      if (!s.second.contains(e)) out.insert(e);
    }
    return out;
  }

  static std::string format(const gset<E>& l, const gset<E>&, const result_type& q) { return l.format(q); }
};

using pn_counter = pair_crdt<gcounter, gcounter, pn_query>;

template <class E>
using two_p_set = pair_crdt<gset<E>, gset<E>, two_p_query<E>>;

inline pn_counter make_pn_counter(replica_set replicas) {
  return pair_compose<pn_query>(gcounter(replicas), gcounter(replicas));
}

template <class E = std::string>
two_p_set<E> make_two_p_set(replica_set replicas) {
  return pair_compose<two_p_query<E>>(gset<E>(replicas), gset<E>(replicas));
}

inline pn_counter::update_type pn_increment() {
  return pn_counter::update_type(std::in_place_index<0>, on_left<increment>{});
}

inline pn_counter::update_type pn_decrement() {
  return pn_counter::update_type(std::in_place_index<1>, on_right<increment>{});
}

template <class E>
typename two_p_set<E>::update_type two_p_add(E x) {
  return typename two_p_set<E>::update_type(std::in_place_index<0>,
                                            on_left<insert_element<E>>{{std::move(x)}});
}

template <class E>
typename two_p_set<E>::update_type two_p_remove(E x) {
  return typename two_p_set<E>::update_type(std::in_place_index<1>,
                                            on_right<insert_element<E>>{{std::move(x)}});
}

/// Membership: added and not removed. Once removed an element never returns.
template <class E>
bool two_p_contains(const pair_state<gset_state<E>, gset_state<E>>& s, const E& x) {
  return s.first.contains(x) && !s.second.contains(x);
}

}  // namespace dcrdt
