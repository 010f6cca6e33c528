#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace dcrdt {

/// Identifier of one replica. Indices are zero-based; the printed form is one-based ("r1" is index 0).
struct replica_id {
  std::uint32_t index = 0;

  auto operator<=>(const replica_id&) const = default;
};

inline std::string to_string(replica_id id) { return "r" + std::to_string(id.index + 1); }

inline std::ostream& operator<<(std::ostream& os, replica_id id) { return os << to_string(id); }

/// Parses "r<N>" with N >= 1.
inline std::optional<replica_id> parse_replica_id(std::string_view text) {
  if (text.size() < 2 || text.front() != 'r') return std::nullopt;
  std::uint32_t n = 0;
  auto [ptr, ec] = std::from_chars(text.data() + 1, text.data() + text.size(), n);
  if (ec != std::errc{} || ptr != text.data() + text.size() || n == 0) return std::nullopt;
  return replica_id{n - 1};
}

/// The fixed replica set of a run. Membership never changes once constructed.
class replica_set {
 public:
  replica_set() = default;
  explicit replica_set(std::uint32_t count) : count_(count) {}

  std::uint32_t size() const noexcept { return count_; }
  bool contains(replica_id id) const noexcept { return id.index < count_; }

  void require(replica_id id) const {
    if (!contains(id)) {
      throw unknown_replica("unknown replica " + to_string(id) + " (replica set has " +
                            std::to_string(count_) + " members)");
    }
  }

  std::vector<replica_id> ids() const {
    std::vector<replica_id> out;
    out.reserve(count_);
    for (std::uint32_t i = 0; i < count_; ++i) out.push_back(replica_id{i});
    return out;
  }

  bool operator==(const replica_set&) const = default;

 private:
  std::uint32_t count_ = 0;
};

}  // namespace dcrdt
