#pragma once

// Reference executions used as oracles: plain containers with hand-written merge rules,
// independent of the library's lattice types, plus a lockstep family that runs a library
// machine next to a reference one under the same schedule.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "deltacrdt/deltacrdt.hpp"

namespace support {

using dcrdt::delivery_mode;
using dcrdt::replica_id;

using counts = std::array<std::uint64_t, 4>;

inline dcrdt::gcounter_state lift(const counts& c) {
  dcrdt::gcounter_state s;
  for (std::uint32_t i = 0; i < c.size(); ++i) s.set(replica_id{i}, c[i]);
  return s;
}

inline dcrdt::gset_state<std::string> lift(const std::set<std::string>& s) { return dcrdt::gset_state<std::string>(s); }

template <class A, class B>
auto lift(const std::pair<A, B>& p) {
  return dcrdt::pair_state<decltype(lift(p.first)), decltype(lift(p.second))>{lift(p.first), lift(p.second)};
}

inline std::string show(const counts& c) {
  std::string out = "[";
  for (std::size_t i = 0; i < c.size(); ++i) out += (i ? " " : "") + std::to_string(c[i]);
  return out + "]";
}

inline std::string show(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? " " : "") + x;
  return out + "}";
}

/// Reference grow-only counter. Full style sends the whole vector, delta style only the
/// sender's own slot; receivers take the pointwise maximum either way.
template <bool Delta>
struct ref_counter {
  using state_type = counts;
  using message_type = std::map<std::uint32_t, std::uint64_t>;
  using update_type = dcrdt::increment;
  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = !Delta;

  state_type initial() const { return {}; }
  message_type prepare(const state_type& s, replica_id who, const update_type&) const {
    message_type m;
    if (Delta) {
      m[who.index] = s[who.index] + 1;
    } else {
      for (std::uint32_t i = 0; i < s.size(); ++i) m[i] = s[i] + (i == who.index ? 1 : 0);
    }
    return m;
  }
  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    auto out = s;
    for (const auto& [i, c] : m) out[i] = std::max(out[i], c);
    return out;
  }
  std::string format_message(const message_type& m) const {
    std::string out;
    for (const auto& [i, c] : m) out += std::to_string(i) + ":" + std::to_string(c) + " ";
    return out;
  }
  std::string format_state(const state_type& s) const { return show(s); }
  std::string format_query(const state_type& s) const {
    std::uint64_t t = 0;
    for (auto c : s) t += c;
    return std::to_string(t);
  }
};

/// Reference grow-only set: full style sends s with x added, delta style sends {x}.
template <bool Delta>
struct ref_set {
  using state_type = std::set<std::string>;
  using message_type = std::set<std::string>;
  using update_type = dcrdt::insert_element<std::string>;
  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = !Delta;

  state_type initial() const { return {}; }
  message_type prepare(const state_type& s, replica_id, const update_type& u) const {
    message_type m = Delta ? message_type{} : s;
    m.insert(u.element);
    return m;
  }
  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    auto out = s;
    out.insert(m.begin(), m.end());
    return out;
  }
  std::string format_message(const message_type& m) const { return show(m); }
  std::string format_state(const state_type& s) const { return show(s); }
  std::string format_query(const state_type& s) const { return show(s); }
};

/// Product of two reference families, addressed by the library's left/right update variant.
template <class L, class R, class Update>
struct ref_pair {
  using state_type = std::pair<typename L::state_type, typename R::state_type>;
  using message_type = std::pair<typename L::message_type, typename R::message_type>;
  using update_type = Update;
  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = L::full_state_messages;

  L left;
  R right;

  state_type initial() const { return {left.initial(), right.initial()}; }
  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    if (const auto* l = std::get_if<0>(&u)) return {left.prepare(s.first, who, l->value), untouched<R>(s.second)};
    return {untouched<L>(s.first), right.prepare(s.second, who, std::get<1>(u).value)};
  }
  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    auto a = left.effect(m.first, s.first);
    auto b = right.effect(m.second, s.second);
    if (!a || !b) return std::nullopt;
    return state_type{*a, *b};
  }
  std::string format_message(const message_type& m) const {
    return "(" + left.format_message(m.first) + ", " + right.format_message(m.second) + ")";
  }
  std::string format_state(const state_type& s) const {
    return "(" + left.format_state(s.first) + ", " + right.format_state(s.second) + ")";
  }
  std::string format_query(const state_type& s) const { return format_state(s); }

 private:
  /// The side an update does not touch: the whole side in full style, nothing in delta style.
  template <class F, class S>
  static typename F::message_type untouched(const S& side) {
    if constexpr (F::full_state_messages) {
      return to_message(side);
    } else {
      return {};
    }
  }
  static std::map<std::uint32_t, std::uint64_t> to_message(const counts& c) {
    std::map<std::uint32_t, std::uint64_t> m;
    for (std::uint32_t i = 0; i < c.size(); ++i) m[i] = c[i];
    return m;
  }
  static std::set<std::string> to_message(const std::set<std::string>& s) { return s; }
};

/// Runs a library family and a reference family side by side on the same schedule.
template <dcrdt::machine_family A, dcrdt::machine_family B>
struct lockstep {
  using state_type = std::pair<typename A::state_type, typename B::state_type>;
  using message_type = std::pair<typename A::message_type, typename B::message_type>;
  using update_type = typename A::update_type;
  static constexpr delivery_mode mode = A::mode;
  static constexpr bool idempotent = A::idempotent && B::idempotent;
  static constexpr bool full_state_messages = A::full_state_messages;

  A a;
  B b;

  state_type initial() const { return {a.initial(), b.initial()}; }
  message_type prepare(const state_type& s, replica_id who, const update_type& u) const {
    return {a.prepare(s.first, who, u), b.prepare(s.second, who, u)};
  }
  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    auto x = a.effect(m.first, s.first);
    auto y = b.effect(m.second, s.second);
    if (!x || !y) return std::nullopt;
    return state_type{*x, *y};
  }
  std::string format_message(const message_type& m) const {
    return a.format_message(m.first) + " | " + b.format_message(m.second);
  }
  std::string format_state(const state_type& s) const { return a.format_state(s.first) + " | " + b.format_state(s.second); }
  std::string format_query(const state_type& s) const { return a.format_query(s.first); }
};

/// Origin assignments up to renaming of replicas: replica k+1 is used only after replica k
/// (restricted growth strings). Renaming is a symmetry of every family checked here.
inline std::vector<std::vector<dcrdt::replica_id>> canonical_origins(std::uint32_t replicas, std::size_t ops) {
  std::vector<std::vector<dcrdt::replica_id>> out;
  for (const auto& a : dcrdt::origin_assignments(replicas, ops)) {
    std::uint32_t next = 0;
    bool canonical = true;
    for (auto r : a) {
      if (r.index > next) {
        canonical = false;
        break;
      }
      if (r.index == next) ++next;
    }
    if (canonical) out.push_back(a);
  }
  return out;
}

struct equivalence_result {
  bool pass = true;
  std::uint64_t sequences = 0;
  std::uint64_t schedules = 0;
  std::uint64_t configurations = 0;
  std::string failure;
};

/// Every schedule of every canonical assignment of `ops` to origins: at every reachable configuration the
/// library state of every replica must equal its lifted reference state. Configurations of
/// every prefix of `ops` are reachable, so prefixes need no separate run.
template <class Lib, class Ref>
void check_equivalence(const Lib& lib, const Ref& ref, std::uint32_t replicas,
                       const std::vector<typename Lib::update_type>& ops, equivalence_result& out) {
  using family = lockstep<Lib, Ref>;
  ++out.sequences;
  for (const auto& origins : canonical_origins(replicas, ops.size())) {
    dcrdt::schedule_explorer<family> ex(family{lib, ref}, replicas, 1, ops, origins);
    ex.set_invariant([&](const auto& states) -> std::optional<std::string> {
      for (std::size_t i = 0; i < states.size(); ++i) {
        if (!states[i]) return "replica crashed";
        if (!(lift(states[i]->second) == states[i]->first)) {
          return "replica " + std::to_string(i + 1) + " library " + lib.format_state(states[i]->first) +
                 " reference " + ref.format_state(states[i]->second);
        }
      }
      return std::nullopt;
    });
    const bool ok = ex.run();
    out.configurations += ex.configurations();
    if (!ok) {
      out.pass = false;
      out.failure = ex.first_failure()->explanation + " after " + dcrdt::to_string(ex.first_failure()->moves);
      return;
    }
    out.schedules += ex.schedules();
  }
}

/// All sequences of length 0..max_len over the alphabet.
template <class U>
std::vector<std::vector<U>> sequences(const std::vector<U>& alphabet, std::size_t max_len) {
  std::vector<std::vector<U>> out{{}};
  std::vector<std::vector<U>> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<U>> next;
    for (const auto& seq : frontier) {
      for (const auto& u : alphabet) {
        auto longer = seq;
        longer.push_back(u);
        next.push_back(longer);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace support
