#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "history.hpp"
#include "machine.hpp"
#include "replica.hpp"

namespace dcrdt {

enum class outcome { pass, fail, not_applicable };

inline std::string to_string(outcome o) {
  switch (o) {
    case outcome::pass: return "pass";
    case outcome::fail: return "fail";
    case outcome::not_applicable: return "n/a";
  }
  return "?";
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return out;
}

struct convergence_counterexample {
  replica_id first{};
  replica_id second{};
  std::string basis;  ///< "delivered payloads" or "incorporated updates"
  std::vector<std::string> delivered_first;
  std::vector<std::string> delivered_second;
  std::string state_first;
  std::string state_second;
  std::string query_first;
  std::string query_second;
  std::vector<std::string> duplicated;  ///< messages delivered more than once at either replica
};

/// An update that some live replica never incorporated.
struct delivery_gap {
  replica_id replica{};
  update_id update{};
  std::optional<std::uint64_t> msg;  ///< the message that first carried it
  std::string payload;
};

struct replica_detail {
  replica_id id{};
  bool crashed = false;
  std::size_t delivered = 0;     ///< distinct delivered payloads
  std::uint64_t digest = 0;      ///< of the sorted delivered payload set
  std::size_t duplicates = 0;    ///< Deliver events beyond the first per message
  std::string state;
  std::string query;
};

struct verdict {
  outcome strong_convergence = outcome::pass;
  std::optional<convergence_counterexample> counterexample;
  outcome eventual_delivery = outcome::not_applicable;
  std::vector<delivery_gap> missing;
  bool quiescent = true;
  std::uint64_t events = 0;
  std::uint64_t max_events = 0;
  std::vector<replica_detail> details;

  bool passed() const {
    return strong_convergence != outcome::fail && eventual_delivery != outcome::fail && quiescent;
  }

  /// 0 pass, 1 fail. Malformed histories never produce a verdict (exit 2 is the caller's).
  int exit_code() const { return passed() ? 0 : 1; }

  std::string report() const {
    std::ostringstream out;
    out << "strong_convergence: " << to_string(strong_convergence) << "\n";
    out << "eventual_delivery: " << to_string(eventual_delivery) << "\n";
    out << "termination: " << (quiescent ? "pass" : "fail") << "\n";
    if (!quiescent) out << "  max-events bound " << max_events << " reached after " << events << " events\n";
    if (counterexample) {
      const auto& c = *counterexample;
      out << "counterexample:\n";
      out << "  replicas: " << to_string(c.first) << " " << to_string(c.second) << "\n";
      out << "  equal " << c.basis << "\n";
      out << "  delivered " << to_string(c.first) << ": " << join_list(c.delivered_first) << "\n";
      out << "  delivered " << to_string(c.second) << ": " << join_list(c.delivered_second) << "\n";
      out << "  state " << to_string(c.first) << ": " << c.state_first << "\n";
      out << "  state " << to_string(c.second) << ": " << c.state_second << "\n";
      out << "  query " << to_string(c.first) << ": " << c.query_first << "\n";
      out << "  query " << to_string(c.second) << ": " << c.query_second << "\n";
      if (!c.duplicated.empty()) out << "  duplicated: " << join_list(c.duplicated) << "\n";
    }
    if (!missing.empty()) {
      out << "missing:\n";
      for (const auto& g : missing) {
        out << "  " << to_string(g.replica) << " never incorporated " << to_string(g.update);
        if (g.msg) out << " (msg " << *g.msg << " " << g.payload << ")";
        out << "\n";
      }
    }
    out << "details:\n";
    for (const auto& d : details) {
      out << "  " << to_string(d.id) << (d.crashed ? " crashed" : "") << " delivered=" << d.delivered
          << " digest=" << hex64(d.digest) << " duplicates=" << d.duplicates << " query=" << d.query
          << " state=" << d.state << "\n";
    }
    return out.str();
  }

 private:
  static std::string join_list(const std::vector<std::string>& xs) {
    std::string out = "{";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      out += xs[i];
    }
    return out + "}";
  }
};

struct check_options {
  bool eventual_delivery = false;  ///< evaluate eventual delivery; n/a otherwise
};

/// Validates the network assumptions every history must satisfy: each delivery has an earlier
/// broadcast, each broadcast is delivered at its origin, and under causal delivery each message
/// is delivered at most once per replica and only after its causal predecessors.
inline void check_locale(const run_record& run) {
  const auto n = run.replicas;
  if (run.histories.size() != n || run.final_states.size() != n || run.final_queries.size() != n) {
    throw malformed_history("history or final-state count differs from replica count");
  }
  std::size_t total = 0;
  for (const auto& h : run.histories) total += h.size();
  if (run.order.size() != total) throw malformed_history("global order does not cover every event");

  std::map<std::uint64_t, std::pair<std::uint32_t, std::size_t>> broadcast_at;  // msg -> (origin, order pos)
  std::map<std::uint64_t, std::set<std::uint64_t>> deps;  // msg -> messages its origin had delivered
  std::vector<std::set<std::uint64_t>> delivered(n);
  std::vector<std::map<std::uint64_t, std::size_t>> deliver_count(n);
  std::vector<std::size_t> next_index(n, 0);

  for (std::size_t pos = 0; pos < run.order.size(); ++pos) {
    const auto [node, idx] = run.order[pos];
    if (node >= n || idx >= run.histories[node].size()) throw malformed_history("order names a missing event");
    if (idx != next_index[node]++) throw malformed_history("order is not consistent with per-replica histories");
    const auto& e = run.histories[node][idx];
    if (e.node.index != node) throw malformed_history("event recorded in the wrong replica history");
    if (e.kind == event_kind::broadcast) {
      if (!broadcast_at.emplace(e.msg, std::pair{node, pos}).second) {
        throw malformed_history("message " + std::to_string(e.msg) + " broadcast twice");
      }
      deps[e.msg] = delivered[node];
      continue;
    }
    const auto it = broadcast_at.find(e.msg);
    if (it == broadcast_at.end()) {
      throw malformed_history("delivery of message " + std::to_string(e.msg) + " at " + to_string(e.node) +
                              " has no earlier broadcast");
    }
    if (e.kind == event_kind::deliver && run.mode == delivery_mode::causal_at_most_once) {
      if (++deliver_count[node][e.msg] > 1) {
        throw malformed_history("message " + std::to_string(e.msg) + " delivered twice at " + to_string(e.node) +
                                " under at-most-once delivery");
      }
      for (auto d : deps[e.msg]) {
        if (!delivered[node].contains(d)) {
          throw malformed_history("message " + std::to_string(e.msg) + " delivered at " + to_string(e.node) +
                                  " before its causal predecessor " + std::to_string(d));
        }
      }
    }
    if (e.kind == event_kind::deliver) delivered[node].insert(e.msg);
  }
  for (const auto& [msg, where] : broadcast_at) {
    const auto [origin, pos] = where;
    bool local = false;
    for (const auto& e : run.histories[origin]) {
      if (e.kind != event_kind::broadcast && e.msg == msg) {
        local = true;
        break;
      }
    }
    if (!local) {
      throw malformed_history("message " + std::to_string(msg) + " never delivered at its origin " +
                              to_string(replica_id{origin}));
    }
  }
}

/// Strong convergence and eventual delivery over a finished run.
///
/// Two replicas are compared when their delivered payload sets are equal (duplicates collapse,
/// seeded initial states count as payloads), and also when the sets of client updates they
/// incorporated are equal. Crashed replicas are left out.
inline verdict check_run(const run_record& run, check_options opts = {}) {
  check_locale(run);
  const auto n = run.replicas;
  verdict v;
  v.quiescent = run.quiescent;
  v.events = run.events;
  v.max_events = run.max_events;

  auto crashed = [&](std::uint32_t i) { return i < run.crashed.size() && run.crashed[i]; };

  std::vector<std::set<std::string>> keys(n);
  std::vector<std::set<update_id>> incorporated(n);
  std::vector<std::map<std::uint64_t, std::size_t>> counts(n);
  std::map<update_id, std::pair<std::uint64_t, std::string>> carrier;  // first message carrying an update
  std::set<update_id> all_updates;

  for (std::uint32_t i = 0; i < n; ++i) {
    if (i < run.initial.size()) {
      for (const auto& u : run.initial[i]) {
        keys[i].insert("initial " + to_string(u));
        incorporated[i].insert(u);
        all_updates.insert(u);
      }
    }
  }
  for (const auto& [node, idx] : run.order) {
    const auto& e = run.histories[node][idx];
    if (e.kind == event_kind::broadcast) {
      if (e.update) all_updates.insert(*e.update);
      for (const auto& u : e.covers) carrier.emplace(u, std::pair{e.msg, e.payload});
      continue;
    }
    if (e.kind != event_kind::deliver) continue;
    keys[node].insert(e.key);
    ++counts[node][e.msg];
    for (const auto& u : e.covers) incorporated[node].insert(u);
  }

  std::map<std::uint64_t, std::string> payload_of;
  for (const auto& h : run.histories) {
    for (const auto& e : h) {
      if (e.kind == event_kind::broadcast) payload_of[e.msg] = e.payload;
    }
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    replica_detail d;
    d.id = replica_id{i};
    d.crashed = crashed(i);
    d.delivered = keys[i].size();
    std::string joined;
    for (const auto& k : keys[i]) joined += k + "\n";
    d.digest = fnv1a(joined);
    for (const auto& [msg, c] : counts[i]) d.duplicates += c - 1;
    d.state = run.final_states[i];
    d.query = run.final_queries[i];
    v.details.push_back(std::move(d));
  }

  auto make_counterexample = [&](std::uint32_t a, std::uint32_t b, std::string basis) {
    convergence_counterexample c;
    c.first = replica_id{a};
    c.second = replica_id{b};
    c.basis = std::move(basis);
    c.delivered_first.assign(keys[a].begin(), keys[a].end());
    c.delivered_second.assign(keys[b].begin(), keys[b].end());
    c.state_first = run.final_states[a];
    c.state_second = run.final_states[b];
    c.query_first = run.final_queries[a];
    c.query_second = run.final_queries[b];
    for (auto r : {a, b}) {
      for (const auto& [msg, cnt] : counts[r]) {
        if (cnt > 1) {
          c.duplicated.push_back("msg " + std::to_string(msg) + " " + payload_of[msg] + " x" + std::to_string(cnt) +
                                 " at " + to_string(replica_id{r}));
        }
      }
    }
    return c;
  };

  for (std::uint32_t a = 0; a < n && !v.counterexample; ++a) {
    if (crashed(a)) continue;
    for (std::uint32_t b = a + 1; b < n; ++b) {
      if (crashed(b) || run.final_states[a] == run.final_states[b]) continue;
      if (keys[a] == keys[b]) {
        v.counterexample = make_counterexample(a, b, "delivered payloads");
      } else if (incorporated[a] == incorporated[b]) {
        v.counterexample = make_counterexample(a, b, "incorporated updates");
      }
      if (v.counterexample) break;
    }
  }
  v.strong_convergence = v.counterexample ? outcome::fail : outcome::pass;

  if (opts.eventual_delivery) {
    for (std::uint32_t i = 0; i < n; ++i) {
      if (crashed(i)) continue;
      for (const auto& u : all_updates) {
        if (incorporated[i].contains(u)) continue;
        delivery_gap g{replica_id{i}, u, std::nullopt, {}};
        if (auto it = carrier.find(u); it != carrier.end()) {
          g.msg = it->second.first;
          g.payload = it->second.second;
        }
        v.missing.push_back(std::move(g));
      }
    }
    v.eventual_delivery = v.missing.empty() && run.quiescent ? outcome::pass : outcome::fail;
  }
  return v;
}

}  // namespace dcrdt
