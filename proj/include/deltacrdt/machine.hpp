#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "replica.hpp"

namespace dcrdt {

/// Delivery guarantee a machine family needs from the network.
enum class delivery_mode {
  relaxed,              ///< drop, reorder, delay and duplicate all allowed
  causal_at_most_once,  ///< causal order and no duplicate delivery
};

inline std::string to_string(delivery_mode m) {
  return m == delivery_mode::relaxed ? "relaxed" : "causal";
}

enum class effect_status {
  applied,
  rejected,   ///< refused by a merge guard; state unchanged
  undefined,  ///< partial effect returned nothing: the replica crashed
};

/// Which client updates a message carries, for update-level delivery accounting.
struct message_scope {
  enum class kind : std::uint8_t {
    update,   ///< exactly the update that produced it
    history,  ///< every update the sender had incorporated
    range,    ///< origin's updates with sequence index in [first, last)
    none,
  };

  kind what = kind::update;
  replica_id origin{};
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};

/// An op-based machine family: prepare-update, (partial) effect-update and the delivery
/// predicate it needs. Families are stateless; replica state is threaded through.
template <class F>
concept machine_family =
    requires(const F& f, const typename F::state_type& s, const typename F::message_type& m,
             const typename F::update_type& u, replica_id who) {
      { f.initial() } -> std::same_as<typename F::state_type>;
      { f.prepare(s, who, u) } -> std::same_as<typename F::message_type>;
      { f.effect(m, s) } -> std::same_as<std::optional<typename F::state_type>>;
      { f.format_message(m) } -> std::convertible_to<std::string>;
      { f.format_state(s) } -> std::convertible_to<std::string>;
      { f.format_query(s) } -> std::convertible_to<std::string>;
      { F::mode } -> std::convertible_to<delivery_mode>;
      { F::idempotent } -> std::convertible_to<bool>;
      { F::full_state_messages } -> std::convertible_to<bool>;
    };

/// Families whose messages can carry a whole state (state-typed messages).
template <class F>
concept snapshot_family = machine_family<F> && requires(const F& f, const typename F::state_type& s) {
  { f.snapshot(s) } -> std::same_as<typename F::message_type>;
};

/// One replica running a machine family. Owns only its own state.
template <machine_family F>
class machine_replica {
 public:
  using family_type = F;
  using state_type = typename F::state_type;
  using message_type = typename F::message_type;
  using update_type = typename F::update_type;

  static constexpr delivery_mode required_mode = F::mode;
  static constexpr bool idempotent_messages = F::idempotent;

  machine_replica(F family, replica_id self) : family_(std::move(family)), self_(self), state_(family_.initial()) {}

  replica_id self() const noexcept { return self_; }
  const F& family() const noexcept { return family_; }
  const state_type& state() const noexcept { return state_; }
  void reset(state_type s) { state_ = std::move(s); }

  message_type prepare(const update_type& u) const { return family_.prepare(state_, self_, u); }

  effect_status effect(const message_type& m) {
    auto next = family_.effect(m, state_);
    if (!next) return effect_status::undefined;
    state_ = std::move(*next);
    return effect_status::applied;
  }

  message_scope::kind update_scope() const {
    return F::full_state_messages ? message_scope::kind::history : message_scope::kind::update;
  }

  std::optional<message_type> snapshot() const {
    if constexpr (snapshot_family<F>) {
      return family_.snapshot(state_);
    } else {
      return std::nullopt;
    }
  }

  std::string format(const message_type& m) const { return family_.format_message(m); }
  std::string state_repr() const { return family_.format_state(state_); }
  std::string query_repr() const { return family_.format_query(state_); }

 private:
  F family_;
  replica_id self_;
  state_type state_;
};

/// What the simulator needs from a replica.
template <class R>
concept simulated_replica =
    requires(R& r, const R& cr, const typename R::message_type& m, const typename R::update_type& u) {
      { r.prepare(u) } -> std::same_as<typename R::message_type>;
      { r.effect(m) } -> std::same_as<effect_status>;
      { cr.update_scope() } -> std::same_as<message_scope::kind>;
      { cr.snapshot() } -> std::same_as<std::optional<typename R::message_type>>;
      { cr.format(m) } -> std::convertible_to<std::string>;
      { cr.state_repr() } -> std::convertible_to<std::string>;
      { cr.query_repr() } -> std::convertible_to<std::string>;
      { R::required_mode } -> std::convertible_to<delivery_mode>;
      { R::idempotent_messages } -> std::convertible_to<bool>;
    };

}  // namespace dcrdt
