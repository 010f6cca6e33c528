#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dispatch.hpp"
#include "errors.hpp"
#include "machine.hpp"
#include "replica.hpp"

namespace dcrdt {

struct oracle_bounds {
  static constexpr std::uint32_t max_replicas = 3;
  static constexpr std::size_t max_ops = 4;
  static constexpr std::uint32_t max_dup = 2;

  static void require(std::uint32_t replicas, std::size_t ops, std::uint32_t dup) {
    if (replicas < 1 || replicas > max_replicas) {
      throw bounds_exceeded("oracle supports 1 to " + std::to_string(max_replicas) + " replicas, got " +
                            std::to_string(replicas));
    }
    if (ops > max_ops) {
      throw bounds_exceeded("oracle supports at most " + std::to_string(max_ops) + " operations, got " +
                            std::to_string(ops));
    }
    if (dup < 1 || dup > max_dup) {
      throw bounds_exceeded("oracle supports max-dup 1 to " + std::to_string(max_dup) + ", got " +
                            std::to_string(dup));
    }
  }
};

/// One step of a schedule: issue the next operation at its origin, or deliver one more copy of
/// a message at a remote replica.
struct oracle_move {
  enum class kind : std::uint8_t { issue, deliver };
  kind what = kind::issue;
  std::uint32_t msg = 0;  ///< message id; equals the operation index
  replica_id target{};

  bool operator==(const oracle_move&) const = default;
};

inline std::string to_string(const oracle_move& m) {
  if (m.what == oracle_move::kind::issue) return "issue m" + std::to_string(m.msg) + "@" + to_string(m.target);
  return "deliver m" + std::to_string(m.msg) + "->" + to_string(m.target);
}

inline std::string to_string(const std::vector<oracle_move>& moves) {
  std::string out;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    if (i) out += ", ";
    out += to_string(moves[i]);
  }
  return out;
}

/// Exhaustive enumeration of delivery schedules for one fixed assignment of operations to
/// origins.
///
/// A schedule is a sequence of moves. Operations are issued in list order; issuing delivers
/// the message at its origin. Remote deliveries of a message happen 1..max_dup times per
/// replica; a schedule is complete once every operation is issued and every remote replica
/// holds at least one copy of every message. Causal families with max_dup 1 are explored with
/// causal exactly-once delivery; otherwise any order is allowed.
///
/// Order: at each configuration, stopping (when complete) comes first, then issue, then
/// deliveries ordered by (message, target). Schedules are numbered in that lexicographic order.
/// Strong convergence is checked at every configuration reached.
template <machine_family F>
class schedule_explorer {
 public:
  using state_type = typename F::state_type;
  using message_type = typename F::message_type;
  using update_type = typename F::update_type;
  /// Extra check at complete configurations; returns a description on failure.
  using complete_check = std::function<std::optional<std::string>(const std::vector<std::optional<state_type>>&)>;

  struct failure {
    std::vector<oracle_move> moves;  ///< shortest failing prefix in enumeration order
    std::uint64_t schedule_index = 0;
    std::string explanation;
  };

  schedule_explorer(F family, std::uint32_t replicas, std::uint32_t max_dup, std::vector<update_type> ops,
                    std::vector<replica_id> origins)
      : family_(std::move(family)), n_(replicas), max_dup_(max_dup), ops_(std::move(ops)), origins_(std::move(origins)) {
    if (ops_.size() != origins_.size()) throw error("each operation needs an origin");
    for (auto o : origins_) {
      if (o.index >= n_) throw unknown_replica("unknown replica " + to_string(o));
    }
    causal_ = F::mode == delivery_mode::causal_at_most_once && max_dup_ == 1;
  }

  void set_complete_check(complete_check check) { check_ = std::move(check); }

  /// Extra check at every reachable configuration, complete or not.
  void set_invariant(complete_check check) { invariant_ = std::move(check); }

  /// Runs the enumeration. Stops at the first failure.
  bool run() {
    memo_.clear();
    failure_.reset();
    path_.clear();
    config root;
    root.states.assign(n_, family_.initial());
    root.vc.assign(n_, std::vector<std::uint32_t>(n_, 0));
    total_ = visit(root, 0);
    return !failure_;
  }

  std::uint64_t schedules() const noexcept { return total_; }
  std::size_t configurations() const noexcept { return memo_.size(); }
  const std::optional<failure>& first_failure() const noexcept { return failure_; }
  bool causal() const noexcept { return causal_; }

  /// The schedule with the given index. Requires a completed passing run.
  std::vector<oracle_move> schedule_at(std::uint64_t index) {
    if (failure_ || index >= total_) throw error("schedule index out of range");
    std::vector<oracle_move> out;
    config c;
    c.states.assign(n_, family_.initial());
    c.vc.assign(n_, std::vector<std::uint32_t>(n_, 0));
    while (true) {
      if (complete(c)) {
        if (index == 0) return out;
        --index;
      }
      bool descended = false;
      for (const auto& m : moves(c)) {
        auto next = apply(c, m);
        const auto cnt = memo_.at(key(next));
        if (index < cnt) {
          out.push_back(m);
          c = std::move(next);
          descended = true;
          break;
        }
        index -= cnt;
      }
      if (!descended) throw error("schedule index out of range");
    }
  }

  /// Final states after playing moves from the initial configuration (crashed replicas empty).
  std::vector<std::optional<state_type>> replay(const std::vector<oracle_move>& ms) const {
    config c;
    c.states.assign(n_, family_.initial());
    c.vc.assign(n_, std::vector<std::uint32_t>(n_, 0));
    for (const auto& m : ms) c = apply(c, m);
    return c.states;
  }

 private:
  struct config {
    std::size_t issued = 0;
    std::vector<message_type> payloads;
    std::vector<std::string> reprs;
    std::vector<std::vector<std::uint32_t>> counts;  // [msg][replica]
    std::vector<std::optional<state_type>> states;
    std::vector<std::vector<std::uint32_t>> vc;      // delivered per origin
    std::vector<std::vector<std::uint32_t>> msg_vc;  // [msg] vector clock
  };

  std::string key(const config& c) const {
    std::string k = std::to_string(c.issued) + "|";
    for (std::size_t m = 0; m < c.issued; ++m) {
      k += c.reprs[m] + "#";
      for (auto x : c.counts[m]) k += std::to_string(x) + ",";
      if (causal_) {
        k += "@";
        for (auto x : c.msg_vc[m]) k += std::to_string(x) + ",";
      }
      k += "|";
    }
    for (const auto& s : c.states) k += (s ? family_.format_state(*s) : std::string("crashed")) + "|";
    return k;
  }

  bool complete(const config& c) const {
    if (c.issued < ops_.size()) return false;
    for (std::size_t m = 0; m < c.issued; ++m) {
      for (std::uint32_t r = 0; r < n_; ++r) {
        if (c.counts[m][r] == 0 && c.states[r]) return false;
      }
    }
    return true;
  }

  bool causally_ready(const config& c, std::size_t m, std::uint32_t target) const {
    const auto origin = origins_[m].index;
    for (std::uint32_t k = 0; k < n_; ++k) {
      if (k == origin) {
        if (c.vc[target][k] + 1 != c.msg_vc[m][k]) return false;
      } else if (c.vc[target][k] < c.msg_vc[m][k]) {
        return false;
      }
    }
    return true;
  }

  std::vector<oracle_move> moves(const config& c) const {
    std::vector<oracle_move> out;
    if (c.issued < ops_.size() && c.states[origins_[c.issued].index]) {
      out.push_back({oracle_move::kind::issue, static_cast<std::uint32_t>(c.issued), origins_[c.issued]});
    }
    for (std::size_t m = 0; m < c.issued; ++m) {
      for (std::uint32_t r = 0; r < n_; ++r) {
        if (r == origins_[m].index || !c.states[r] || c.counts[m][r] >= max_dup_) continue;
        if (causal_ && !causally_ready(c, m, r)) continue;
        out.push_back({oracle_move::kind::deliver, static_cast<std::uint32_t>(m), replica_id{r}});
      }
    }
    return out;
  }

  config apply(const config& c, const oracle_move& mv) const {
    config next = c;
    if (mv.what == oracle_move::kind::issue) {
      const auto m = next.issued++;
      const auto o = origins_[m].index;
      auto payload = family_.prepare(*next.states[o], origins_[m], ops_[m]);
      next.reprs.push_back(family_.format_message(payload));
      next.payloads.push_back(std::move(payload));
      next.counts.emplace_back(n_, 0);
      auto clock = next.vc[o];
      clock[o] += 1;
      next.msg_vc.push_back(std::move(clock));
      deliver_into(next, m, o);
    } else {
      deliver_into(next, mv.msg, mv.target.index);
    }
    return next;
  }

  void deliver_into(config& c, std::size_t m, std::uint32_t r) const {
    if (!c.states[r]) return;
    c.counts[m][r] += 1;
    if (c.counts[m][r] == 1) c.vc[r][origins_[m].index] += 1;
    c.states[r] = family_.effect(c.payloads[m], *c.states[r]);
  }

  /// Strong convergence at a configuration: equal delivered sets imply equal states.
  std::optional<std::string> violation(const config& c) const {
    std::vector<std::set<std::string>> delivered(n_);
    for (std::size_t m = 0; m < c.issued; ++m) {
      for (std::uint32_t r = 0; r < n_; ++r) {
        if (c.counts[m][r] > 0) delivered[r].insert(F::idempotent ? c.reprs[m] : "m" + std::to_string(m));
      }
    }
    for (std::uint32_t a = 0; a < n_; ++a) {
      if (!c.states[a]) continue;
      for (std::uint32_t b = a + 1; b < n_; ++b) {
        if (!c.states[b] || delivered[a] != delivered[b]) continue;
        const auto sa = family_.format_state(*c.states[a]);
        const auto sb = family_.format_state(*c.states[b]);
        if (sa != sb) {
          return to_string(replica_id{a}) + " and " + to_string(replica_id{b}) +
                 " delivered the same messages but hold " + sa + " and " + sb;
        }
      }
    }
    if (invariant_) {
      if (auto bad = invariant_(c.states)) return bad;
    }
    if (check_ && complete(c)) return check_(c.states);
    return std::nullopt;
  }

  std::uint64_t visit(const config& c, std::uint64_t rank) {
    auto k = key(c);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    if (auto bad = violation(c)) {
      failure_ = failure{path_, rank, *bad};
      return 0;
    }
    std::uint64_t count = complete(c) ? 1 : 0;
    for (const auto& m : moves(c)) {
      path_.push_back(m);
      const auto sub = visit(apply(c, m), rank + count);
      path_.pop_back();
      if (failure_) return 0;
      count = checked_add(count, sub);
    }
    memo_.emplace(std::move(k), count);
    return count;
  }

  F family_;
  std::uint32_t n_;
  std::uint32_t max_dup_;
  std::vector<update_type> ops_;
  std::vector<replica_id> origins_;
  bool causal_ = false;
  complete_check check_;
  complete_check invariant_;
  std::map<std::string, std::uint64_t> memo_;
  std::vector<oracle_move> path_;
  std::optional<failure> failure_;
  std::uint64_t total_ = 0;
};

/// Every assignment of operation k to an origin, as base-n digits with operation 0 most
/// significant.
inline std::vector<std::vector<replica_id>> origin_assignments(std::uint32_t replicas, std::size_t ops) {
  std::vector<std::vector<replica_id>> out;
  std::vector<replica_id> cur(ops);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == ops) {
      out.push_back(cur);
      return;
    }
    for (std::uint32_t r = 0; r < replicas; ++r) {
      cur[i] = replica_id{r};
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

struct oracle_report {
  crdt_kind kind = crdt_kind::gcounter;
  replica_style style = replica_style::delta;
  std::uint32_t replicas = 0;
  std::size_t ops = 0;
  std::uint32_t max_dup = 1;
  bool causal = false;
  std::size_t assignments = 0;
  std::uint64_t schedules = 0;
  std::uint64_t configurations = 0;
  bool pass = true;
  std::vector<client_op> workload;
  std::vector<replica_id> failing_assignment;
  std::vector<oracle_move> failing_schedule;
  std::uint64_t failing_index = 0;
  std::string explanation;

  std::string text() const {
    std::ostringstream out;
    out << "oracle " << to_string(kind) << " style=" << to_string(style) << " replicas=" << replicas
        << " ops=" << ops << " max_dup=" << max_dup << (causal ? " delivery=causal" : " delivery=any") << "\n";
    out << "workload:";
    for (const auto& op : workload) out << " [" << to_string(op) << "]";
    out << "\n";
    out << "assignments: " << assignments << "\n";
    out << "schedules: " << schedules << "\n";
    out << "configurations: " << configurations << "\n";
    out << "strong_convergence: " << (pass ? "pass" : "fail") << "\n";
    if (!pass) {
      out << "failing assignment:";
      for (auto r : failing_assignment) out << " " << to_string(r);
      out << "\n";
      out << "failing schedule index: " << failing_index << "\n";
      out << "failing schedule: " << to_string(failing_schedule) << "\n";
      out << "reason: " << explanation << "\n";
    }
    return out.str();
  }
};

/// Exhaustive strong-convergence check of the standard workload over every origin assignment
/// and every delivery schedule.
inline oracle_report brute_force_oracle(crdt_kind kind, replica_style style, std::uint32_t replicas,
                                        std::size_t ops, std::uint32_t max_dup) {
  oracle_bounds::require(replicas, ops, max_dup);
  oracle_report report;
  report.kind = kind;
  report.style = style;
  report.replicas = replicas;
  report.ops = ops;
  report.max_dup = max_dup;
  for (std::size_t k = 0; k < ops; ++k) report.workload.push_back(standard_op(kind, k));

  const replica_set rs(replicas);
  with_family(kind, style, rs, [&](auto family, auto crdt) {
    using family_type = decltype(family);
    std::vector<typename family_type::update_type> updates;
    for (const auto& op : report.workload) updates.push_back(to_update(crdt, op));
    for (const auto& origins : origin_assignments(replicas, ops)) {
      schedule_explorer<family_type> ex(family, replicas, max_dup, updates, origins);
      report.causal = ex.causal();
      ++report.assignments;
      const bool ok = ex.run();
      report.configurations += ex.configurations();
      if (!ok) {
        const auto& f = *ex.first_failure();
        report.pass = false;
        report.failing_assignment = origins;
        report.failing_schedule = f.moves;
        report.failing_index = f.schedule_index;
        report.explanation = f.explanation;
        return;
      }
      report.schedules = checked_add(report.schedules, ex.schedules());
    }
  });
  return report;
}

}  // namespace dcrdt
