#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "machine.hpp"
#include "replica.hpp"

namespace dcrdt {

/// A client update: the origin replica and its per-origin sequence index.
struct update_id {
  replica_id origin{};
  std::uint64_t seq = 0;

  auto operator<=>(const update_id&) const = default;
};

inline std::string to_string(update_id u) { return to_string(u.origin) + "#" + std::to_string(u.seq); }

enum class event_kind : std::uint8_t { broadcast, deliver, reject };

inline std::string to_string(event_kind k) {
  switch (k) {
    case event_kind::broadcast: return "Broadcast";
    case event_kind::deliver: return "Deliver";
    case event_kind::reject: return "Reject";
  }
  return "?";
}

struct history_event {
  event_kind kind = event_kind::broadcast;
  std::uint64_t time = 0;
  replica_id node{};
  std::uint64_t msg = 0;
  std::uint32_t dup = 0;
  std::string payload;               ///< printed payload
  std::string key;                   ///< payload identity for delivered-set comparison
  std::vector<update_id> covers;     ///< client updates the message carries
  std::optional<update_id> update;   ///< on Broadcast: the update that produced it, if any
};

using node_history = std::vector<history_event>;

/// Everything the checker needs about one finished run.
struct run_record {
  std::uint32_t replicas = 0;
  delivery_mode mode = delivery_mode::relaxed;
  bool fairness = false;
  std::vector<node_history> histories;
  std::vector<std::pair<std::uint32_t, std::size_t>> order;  ///< global event order (node, index)
  std::vector<std::vector<update_id>> initial;                ///< updates seeded into each replica
  std::vector<std::string> final_states;
  std::vector<std::string> final_queries;
  std::vector<bool> crashed;
  bool quiescent = true;
  std::uint64_t events = 0;
  std::uint64_t max_events = 0;
  std::uint64_t end_time = 0;

  /// One line per event: `<time> <replica> <kind> <msg-id> <dup-index> <payload>`.
  std::string transcript() const {
    std::string out;
    for (const auto& [node, idx] : order) {
      const auto& e = histories[node][idx];
      out += std::to_string(e.time) + " " + to_string(e.node) + " " + to_string(e.kind) + " " +
             std::to_string(e.msg) + " " + std::to_string(e.dup) + " " + e.payload + "\n";
    }
    return out;
  }
};

}  // namespace dcrdt
