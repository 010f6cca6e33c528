#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "errors.hpp"
#include "gcounter.hpp"
#include "gset.hpp"
#include "lattice.hpp"
#include "machine.hpp"

namespace dcrdt {

// Reductions from state-based and delta-state CRDTs to op-based machines. Every reduced
// machine has a delivery predicate that always holds, so it runs under relaxed delivery.

/// State-based CRDT as an op-based machine: prepare returns the updated state and effect
/// joins it into the receiver.
template <delta_crdt C>
class state_to_op {
 public:
  using crdt_type = C;
  using state_type = typename C::state_type;
  using message_type = typename C::state_type;
  using update_type = typename C::update_type;

  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = true;

  explicit state_to_op(C crdt) : crdt_(std::move(crdt)) {}

  const C& crdt() const noexcept { return crdt_; }

  state_type initial() const { return crdt_.bottom(); }

  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    return crdt_.update_full(s, who, u);
  }

  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    return crdt_.join(s, m);
  }

  message_type snapshot(const state_type& s) const { return s; }

  std::string format_message(const message_type& m) const { return crdt_.format(m); }
  std::string format_state(const state_type& s) const { return crdt_.format(s); }
  std::string format_query(const state_type& s) const { return crdt_.format_query(crdt_.query(s)); }

 private:
  C crdt_;
};

/// Delta-state CRDT as an op-based machine with state-typed fragments: prepare returns the
/// delta-mutator's fragment and effect joins it (the pseudo-join).
template <delta_crdt C>
class delta_to_op {
 public:
  using crdt_type = C;
  using state_type = typename C::state_type;
  using message_type = typename C::state_type;
  using update_type = typename C::update_type;

  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = false;

  explicit delta_to_op(C crdt) : crdt_(std::move(crdt)) {}

  const C& crdt() const noexcept { return crdt_; }

  state_type initial() const { return crdt_.bottom(); }

  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    return crdt_.update_delta(s, who, u);
  }

  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    return crdt_.join(s, m);
  }

  /// Any state is a valid fragment, so a whole state may be sent.
  message_type snapshot(const state_type& s) const { return s; }

  std::string format_message(const message_type& m) const { return crdt_.format(m); }
  std::string format_state(const state_type& s) const { return crdt_.format(s); }
  std::string format_query(const state_type& s) const { return crdt_.format_query(crdt_.query(s)); }

 private:
  C crdt_;
};

/// Delta-state CRDT with the restricted message type: a G-Counter sends (replica, count),
/// a G-Set sends a single element.
template <delta_crdt C>
class refined_delta_to_op {
 public:
  using crdt_type = C;
  using state_type = typename C::state_type;
  using message_type = typename C::refined_type;
  using update_type = typename C::update_type;

  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = false;

  explicit refined_delta_to_op(C crdt) : crdt_(std::move(crdt)) {}

  const C& crdt() const noexcept { return crdt_; }

  state_type initial() const { return crdt_.bottom(); }

  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    return crdt_.refine(s, who, u);
  }

  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    return crdt_.recover(s, m);
  }

  std::string format_message(const message_type& m) const { return crdt_.format_refined(m); }
  std::string format_state(const state_type& s) const { return crdt_.format(s); }
  std::string format_query(const state_type& s) const { return crdt_.format_query(crdt_.query(s)); }

 private:
  C crdt_;
};

/// CRDTs that provide a before/after difference function t and its recovery u.
template <class C>
concept differencing_crdt =
    delta_crdt<C> && requires(const C& c, const typename C::state_type& s,
                              const typename C::difference_type& d) {
      { c.difference(s, s) } -> std::same_as<typename C::difference_type>;
      { c.apply_difference(s, d) } -> std::same_as<typename C::state_type>;
      { c.format_difference(d) } -> std::convertible_to<std::string>;
    };

/// The delta-to-op reduction built from t and u: prepare computes the fragment as the
/// difference between the states before and after the delta-mutation, effect recovers it.
template <differencing_crdt C>
class difference_to_op {
 public:
  using crdt_type = C;
  using state_type = typename C::state_type;
  using message_type = typename C::difference_type;
  using update_type = typename C::update_type;

  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = false;

  explicit difference_to_op(C crdt) : crdt_(std::move(crdt)) {}

  const C& crdt() const noexcept { return crdt_; }

  state_type initial() const { return crdt_.bottom(); }

  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    const auto after = crdt_.join(s, crdt_.update_delta(s, who, u));
    return crdt_.difference(s, after);
  }

  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    return crdt_.apply_difference(s, m);
  }

  std::string format_message(const message_type& m) const { return crdt_.format_difference(m); }
  std::string format_state(const state_type& s) const { return crdt_.format(s); }
  std::string format_query(const state_type& s) const { return crdt_.format_query(crdt_.query(s)); }

 private:
  C crdt_;
};

template <delta_crdt C>
state_to_op<C> phi_state_to_op(C crdt) {
  return state_to_op<C>(std::move(crdt));
}

template <delta_crdt C>
delta_to_op<C> phi_delta_to_op(C crdt) {
  return delta_to_op<C>(std::move(crdt));
}

template <delta_crdt C>
refined_delta_to_op<C> phi_delta_to_op_refined(C crdt) {
  return refined_delta_to_op<C>(std::move(crdt));
}

template <differencing_crdt C>
difference_to_op<C> phi_delta_to_op_difference(C crdt) {
  return difference_to_op<C>(std::move(crdt));
}

template <class E>
gset_state<E> t_gset(const gset_state<E>& s1, const gset_state<E>& s2) {
  return gset<E>().difference(s1, s2);
}

inline counter_entry t_gcounter(const gcounter& crdt, const gcounter_state& s1, const gcounter_state& s2) {
  return crdt.difference(s1, s2);
}

// ---------------------------------------------------------------------------------------
// Native op-based machines. They are not idempotent and need causal, at-most-once delivery.

/// The sentinel message of the op-based G-Counter.
struct inc_op {
  auto operator<=>(const inc_op&) const = default;
};

/// Op-based G-Counter: a single natural number, incremented once per delivered message.
class native_gcounter_op {
 public:
  using state_type = std::uint64_t;
  using message_type = inc_op;
  using update_type = increment;

  static constexpr delivery_mode mode = delivery_mode::causal_at_most_once;
  static constexpr bool idempotent = false;
  static constexpr bool full_state_messages = false;

  state_type initial() const { return 0; }
  message_type prepare(const state_type&, replica_id, const update_type&) const { return {}; }
  std::optional<state_type> effect(const message_type&, const state_type& s) const { return checked_add(s, 1); }

  std::string format_message(const message_type&) const { return "inc"; }
  std::string format_state(const state_type& s) const { return std::to_string(s); }
  std::string format_query(const state_type& s) const { return std::to_string(s); }
};

template <class E>
struct ins_op {
  E element;
  auto operator<=>(const ins_op&) const = default;
};

/// Op-based G-Set: messages (ins, x), effect inserts x.
template <class E>
class native_gset_op {
 public:
  using state_type = gset_state<E>;
  using message_type = ins_op<E>;
  using update_type = insert_element<E>;

  static constexpr delivery_mode mode = delivery_mode::causal_at_most_once;
  static constexpr bool idempotent = false;
  static constexpr bool full_state_messages = false;

  state_type initial() const { return {}; }
  message_type prepare(const state_type&, replica_id, const update_type& u) const { return {u.element}; }

  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    auto out = s;
    out.insert(m.element);
    return out;
  }

  std::string format_message(const message_type& m) const {
    return "(ins, " + element_traits<E>::format(m.element) + ")";
  }
  std::string format_state(const state_type& s) const { return format_gset(s); }
  std::string format_query(const state_type& s) const { return format_gset(s); }
};

}  // namespace dcrdt
