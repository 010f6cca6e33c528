#pragma once

#include <algorithm>
#include <compare>
#include <initializer_list>
#include <iterator>
#include <set>
#include <string>
#include <utility>

#include "errors.hpp"
#include "lattice.hpp"
#include "replica.hpp"
#include "text.hpp"

namespace dcrdt {

template <class E>
class gset_state {
 public:
  using set_type = std::set<E>;

  gset_state() = default;
  gset_state(std::initializer_list<E> elements) : elements_(elements) {}
  explicit gset_state(set_type elements) : elements_(std::move(elements)) {}

  bool contains(const E& e) const { return elements_.contains(e); }
  void insert(const E& e) { elements_.insert(e); }

  const set_type& elements() const noexcept { return elements_; }
  bool empty() const noexcept { return elements_.empty(); }
  std::size_t size() const noexcept { return elements_.size(); }

  auto operator<=>(const gset_state&) const = default;

 private:
  set_type elements_;
};

template <class E>
struct insert_element {
  E element;

  auto operator<=>(const insert_element&) const = default;
};

template <class E>
gset_state<E> join(const gset_state<E>& a, const gset_state<E>& b) {
  auto out = a;
  for (const auto& e : b.elements()) out.insert(e);
  return out;
}

template <class E>
std::string format_gset(const gset_state<E>& s) {
  std::string out = "{";
  bool first = true;
  for (const auto& e : s.elements()) {
    if (!first) out += ", ";
    first = false;
    out += element_traits<E>::format(e);
  }
  return out + "}";
}

/// Grow-only set. The replica argument of the mutators is accepted for interface uniformity
/// and ignored.
template <class E>
class gset {
 public:
  using element_type = E;
  using state_type = gset_state<E>;
  using update_type = insert_element<E>;
  using refined_type = E;
  using difference_type = gset_state<E>;
  using query_type = gset_state<E>;

  gset() = default;
  explicit gset(replica_set replicas) : replicas_(replicas) {}

  const replica_set& replicas() const noexcept { return replicas_; }

  state_type bottom() const { return {}; }

  state_type join(const state_type& a, const state_type& b) const { return dcrdt::join(a, b); }

  bool leq(const state_type& a, const state_type& b) const {
    return std::includes(b.elements().begin(), b.elements().end(), a.elements().begin(),
                         a.elements().end());
  }

  query_type query(const state_type& s) const { return s; }

  bool contains(const state_type& s, const E& x) const { return s.contains(x); }

  state_type update_full(const state_type& s, replica_id, const update_type& u) const {
    auto out = s;
    out.insert(u.element);
    return out;
  }

  /// The singleton {x}; the state argument is ignored.
  state_type update_delta(const state_type&, replica_id, const update_type& u) const {
    return state_type{u.element};
  }

  refined_type refine(const state_type&, replica_id, const update_type& u) const { return u.element; }

  state_type expand(const refined_type& x) const { return state_type{x}; }

  state_type recover(const state_type& s, const refined_type& x) const {
    auto out = s;
    out.insert(x);
    return out;
  }

  /// Before/after difference s2 \ s1. Requires s1 below s2.
  difference_type difference(const state_type& s1, const state_type& s2) const {
    if (!leq(s1, s2)) {
      throw precondition_violation("gset difference: " + format(s1) + " is not below " + format(s2));
    }
    typename state_type::set_type out;
    std::set_difference(s2.elements().begin(), s2.elements().end(), s1.elements().begin(),
                        s1.elements().end(), std::inserter(out, out.end()));
    return state_type(std::move(out));
  }

  state_type apply_difference(const state_type& s, const difference_type& d) const {
    return join(s, d);
  }

  std::string format(const state_type& s) const { return format_gset(s); }
  std::string format_refined(const refined_type& x) const { return element_traits<E>::format(x); }
  std::string format_difference(const difference_type& d) const { return format(d); }
  std::string format_query(const query_type& q) const { return format(q); }

  state_type parse(text_cursor& in) const {
    state_type out;
    in.expect('{');
    if (in.consume('}')) return out;
    do {
      out.insert(element_traits<E>::parse(in));
    } while (in.consume(','));
    in.expect('}');
    return out;
  }

 private:
  replica_set replicas_;
};

}  // namespace dcrdt
