#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "errors.hpp"
#include "lattice.hpp"
#include "machine.hpp"

namespace dcrdt {

/// Highest contiguous sequence index (exclusive) incorporated from each origin.
using known_map = std::map<replica_id, std::uint64_t>;

inline std::string format_known(const known_map& known) {
  std::string out = "[";
  bool first = true;
  for (const auto& [who, idx] : known) {
    if (!first) out += ", ";
    first = false;
    out += to_string(who) + ":" + std::to_string(idx);
  }
  return out + "]";
}

/// Join of the deltas produced at `origin` with sequence index in [first, last).
template <delta_crdt C>
struct delta_interval {
  replica_id origin{};
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  typename C::state_type value{};

  auto operator<=>(const delta_interval&) const = default;
};

template <delta_crdt C>
struct full_state_message {
  typename C::state_type state{};
  std::optional<known_map> known;  ///< present only when the causal guard is on

  auto operator<=>(const full_state_message&) const = default;
};

/// Forced sync of an empty group. Carries nothing and changes nothing.
struct empty_sync {
  replica_id origin{};
  auto operator<=>(const empty_sync&) const = default;
};

template <delta_crdt C>
using sync_message = std::variant<full_state_message<C>, delta_interval<C>, empty_sync>;

/// Deltas accumulated since the last flush, already joined together.
template <delta_crdt C>
struct delta_group {
  typename C::state_type pending{};
  std::uint64_t since = 0;  ///< sequence index of the oldest accumulated delta
  std::uint64_t count = 0;  ///< number of deltas accumulated

  bool empty() const noexcept { return count == 0; }
};

enum class guard_decision { accept, reject };

/// Causal merging condition, operationalised with per-origin sequence indices: the receiver
/// joins an interval [a, b) from j only if it already holds everything j produced before a.
/// On accept the value is joined and known[j] advances to b (never backwards).
template <delta_crdt C>
guard_decision causal_merge_guard(const C& crdt, typename C::state_type& receiver,
                                  const delta_interval<C>& interval, known_map& known) {
  if (interval.first >= interval.last) {
    throw malformed_interval("malformed delta interval [" + std::to_string(interval.first) + ", " +
                             std::to_string(interval.last) + ") from " + to_string(interval.origin));
  }
  auto& have = known[interval.origin];
  if (have < interval.first) return guard_decision::reject;
  receiver = crdt.join(receiver, interval.value);
  have = std::max(have, interval.last);
  return guard_decision::accept;
}

struct anti_entropy_config {
  bool enabled = false;
  std::uint64_t sync_period = 4;
  bool guard = false;        ///< apply the causal merging condition to intervals
  bool buffer = false;       ///< hold back rejected intervals instead of dropping them
  bool force_empty = false;  ///< send a no-op envelope when the group is empty

  bool operator==(const anti_entropy_config&) const = default;
};

/// A delta-state replica running the delta-group anti-entropy algorithm.
///
/// Local updates are applied to the state and to the group, and are also sent at once as a
/// one-delta interval. Every sync period the replica sends either its full state or its group
/// (as an interval), then flushes the group.
template <delta_crdt C>
class anti_entropy_replica {
 public:
  using crdt_type = C;
  using state_type = typename C::state_type;
  using message_type = sync_message<C>;
  using update_type = typename C::update_type;

  static constexpr delivery_mode required_mode = delivery_mode::relaxed;
  static constexpr bool idempotent_messages = true;

  anti_entropy_replica(C crdt, replica_id self, anti_entropy_config config)
      : crdt_(std::move(crdt)), self_(self), config_(config), state_(crdt_.bottom()) {
    group_.pending = crdt_.bottom();
  }

  replica_id self() const noexcept { return self_; }
  const state_type& state() const noexcept { return state_; }
  const delta_group<C>& group() const noexcept { return group_; }
  const known_map& known() const noexcept { return known_; }
  std::uint64_t next_sequence() const noexcept { return seq_; }
  const anti_entropy_config& config() const noexcept { return config_; }

  /// Generates the delta, joins it into state and group, and returns it.
  state_type on_local_update(const update_type& u) {
    auto delta = crdt_.update_delta(state_, self_, u);
    state_ = crdt_.join(state_, delta);
    if (group_.empty()) {
      group_.since = seq_;
      group_.pending = delta;
    } else {
      group_.pending = crdt_.join(group_.pending, delta);
    }
    ++group_.count;
    ++seq_;
    known_[self_] = seq_;
    return delta;
  }

  message_type prepare(const update_type& u) {
    auto delta = on_local_update(u);
    return delta_interval<C>{self_, seq_ - 1, seq_, std::move(delta)};
  }

  /// coin == false sends the full state, coin == true the group. The group is flushed either way.
  std::optional<std::pair<message_type, message_scope>> periodic_sync(bool coin) {
    std::optional<std::pair<message_type, message_scope>> out;
    if (!coin) {
      out.emplace(full_state(), message_scope{message_scope::kind::history, self_, 0, 0});
    } else if (!group_.empty()) {
      out.emplace(delta_interval<C>{self_, group_.since, seq_, group_.pending},
                  message_scope{message_scope::kind::range, self_, group_.since, seq_});
    } else if (config_.force_empty) {
      out.emplace(empty_sync{self_}, message_scope{message_scope::kind::none, self_, 0, 0});
    }
    flush();
    return out;
  }

  void flush() {
    group_.pending = crdt_.bottom();
    group_.count = 0;
    group_.since = seq_;
  }

  /// Whether effect would accept the message right now.
  bool ready(const message_type& m) const {
    if (!config_.guard) return true;
    if (const auto* iv = std::get_if<delta_interval<C>>(&m)) {
      auto it = known_.find(iv->origin);
      const std::uint64_t have = it == known_.end() ? 0 : it->second;
      return have >= iv->first;
    }
    return true;
  }

  effect_status effect(const message_type& m) {
    if (const auto* full = std::get_if<full_state_message<C>>(&m)) {
      state_ = crdt_.join(state_, full->state);
      if (config_.guard && full->known) {
        for (const auto& [who, idx] : *full->known) known_[who] = std::max(known_[who], idx);
      }
      return effect_status::applied;
    }
    if (const auto* iv = std::get_if<delta_interval<C>>(&m)) {
      if (!config_.guard) {
        if (iv->first >= iv->last) {
          throw malformed_interval("malformed delta interval from " + to_string(iv->origin));
        }
        state_ = crdt_.join(state_, iv->value);
        return effect_status::applied;
      }
      return causal_merge_guard(crdt_, state_, *iv, known_) == guard_decision::accept
                 ? effect_status::applied
                 : effect_status::rejected;
    }
    return effect_status::applied;
  }

  message_scope::kind update_scope() const { return message_scope::kind::update; }

  std::optional<message_type> snapshot() const { return message_type(full_state()); }

  bool idle() const noexcept { return group_.empty(); }

  std::string format(const message_type& m) const {
    if (const auto* full = std::get_if<full_state_message<C>>(&m)) {
      std::string out = "FULLSTATE " + crdt_.format(full->state);
      if (full->known) out += " " + format_known(*full->known);
      return out;
    }
    if (const auto* iv = std::get_if<delta_interval<C>>(&m)) {
      return "INTERVAL " + to_string(iv->origin) + " " + std::to_string(iv->first) + " " +
             std::to_string(iv->last) + " " + crdt_.format(iv->value);
    }
    return "NOOP " + to_string(std::get<empty_sync>(m).origin);
  }

  std::string state_repr() const { return crdt_.format(state_); }
  std::string query_repr() const { return crdt_.format_query(crdt_.query(state_)); }

 private:
  full_state_message<C> full_state() const {
    full_state_message<C> out{state_, std::nullopt};
    if (config_.guard) out.known = known_;
    return out;
  }

  C crdt_;
  replica_id self_;
  anti_entropy_config config_;
  state_type state_;
  delta_group<C> group_;
  known_map known_;
  std::uint64_t seq_ = 0;
};

}  // namespace dcrdt
