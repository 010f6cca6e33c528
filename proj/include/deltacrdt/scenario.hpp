#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "anti_entropy.hpp"
#include "dispatch.hpp"
#include "errors.hpp"
#include "lattice.hpp"
#include "netsim.hpp"
#include "replica.hpp"

namespace dcrdt {

/// A client operation at a replica, injected when virtual time reaches `time`.
/// The verb "sync" broadcasts the replica's whole state.
struct scheduled_op {
  std::uint64_t time = 0;
  replica_id replica{};
  client_op op;

  bool is_sync() const { return op.verb == "sync" && !op.arg; }
  bool operator==(const scheduled_op&) const = default;
};

/// A complete run description.
///
/// Text format, one entry per line, `#` starts a comment:
///
///     crdt = gcounter | gset | pncounter | twopset
///     style = state | op | delta | delta-refined
///     replicas = 3
///     seed = 1
///     fairness = true
///     max_events = 100000
///     unsafe = false
///     network.drop = 0.3
///     network.duplicate = 0.3
///     network.max_duplicates = 2
///     network.delay = 1 3
///     network.reorder = true
///     network.mode = relaxed | causal
///     network.link = r1 r3 1.0          (repeatable; per-link drop probability)
///     anti_entropy = true
///     anti_entropy.sync_period = 4
///     anti_entropy.guard = false
///     anti_entropy.buffer = false
///     anti_entropy.force_empty = false
///     checks = strong_convergence eventual_delivery   (or none)
///     contrast_style = state
///     initial.r1 = {r1:1, r3:2}
///     schedule:
///     0 r1 inc
///     2 r2 add x
///     5 r2 sync
///     end
///
/// crdt, style and replicas are required.
struct scenario {
  crdt_kind crdt = crdt_kind::gcounter;
  replica_style style = replica_style::delta;
  std::uint32_t replicas = 0;
  std::uint64_t seed = 0;
  bool fairness = false;
  std::uint64_t max_events = 100000;
  bool unsafe = false;
  network_config network;  ///< network.seed is unused; the run seed comes from `seed`
  anti_entropy_config anti_entropy;
  bool check_strong_convergence = true;
  bool check_eventual_delivery = false;
  std::optional<replica_style> contrast_style;
  std::map<replica_id, std::string> initial;
  std::vector<scheduled_op> schedule;

  bool operator==(const scenario&) const = default;

  /// Eventual delivery is judged when fairness is on or when it is asked for.
  bool evaluates_eventual_delivery() const { return fairness || check_eventual_delivery; }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

/// Whitespace-separated words with their 1-based columns.
inline std::vector<std::pair<std::string, std::size_t>> words(std::string_view s, std::size_t base_col) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const auto start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(std::string(s.substr(start, i - start)), base_col + start);
  }
  return out;
}

class scenario_parser {
 public:
  explicit scenario_parser(std::string_view text) : text_(text) {}

  scenario parse() {
    std::istringstream in{std::string(text_)};
    std::string raw;
    bool in_schedule = false, schedule_seen = false, schedule_closed = false;
    while (std::getline(in, raw)) {
      ++line_;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      std::string_view l = raw;
      if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
      const auto content = trim(l);
      if (content.empty()) continue;
      const std::size_t indent = l.find_first_not_of(" \t") + 1;
      if (in_schedule) {
        if (content == "end") {
          in_schedule = false;
          schedule_closed = true;
          continue;
        }
        parse_schedule_line(l);
        continue;
      }
      if (content == "schedule:") {
        if (schedule_seen) syntax(indent, "schedule block given twice");
        in_schedule = schedule_seen = true;
        continue;
      }
      const auto eq = l.find('=');
      if (eq == std::string_view::npos) syntax(indent, "expected 'key = value'");
      const auto key = trim(l.substr(0, eq));
      const auto vstart = l.find_first_not_of(" \t", eq + 1);
      const std::size_t vcol = vstart == std::string_view::npos ? eq + 2 : vstart + 1;
      const auto value = trim(l.substr(eq + 1));
      if (key.empty()) syntax(indent, "missing key");
      if (value.empty()) syntax(vcol, "missing value for '" + key + "'");
      assign(key, value, indent, vcol);
    }
    if (in_schedule && !schedule_closed) syntax(1, "schedule block is not closed with 'end'");
    finish();
    return sc_;
  }

 private:
  [[noreturn]] void syntax(std::size_t col, const std::string& what) const { throw parse_error(line_, col, what); }
  [[noreturn]] void semantic(std::size_t col, const std::string& what) const {
    throw semantic_error(line_, col, what);
  }

  bool parse_bool(const std::string& v, std::size_t col) const {
    if (v == "true") return true;
    if (v == "false") return false;
    syntax(col, "expected true or false, got '" + v + "'");
  }

  std::uint64_t parse_uint(const std::string& v, std::size_t col) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) syntax(col, "expected a non-negative integer, got '" + v + "'");
    return out;
  }

  double parse_probability(const std::string& v, std::size_t col) const {
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) syntax(col, "expected a number, got '" + v + "'");
    if (!(out >= 0.0 && out <= 1.0)) semantic(col, "probability " + v + " is outside [0, 1]");
    return out;
  }

  replica_id parse_replica(const std::string& v, std::size_t col) const {
    auto id = parse_replica_id(v);
    if (!id) syntax(col, "expected a replica id like r1, got '" + v + "'");
    return *id;
  }

  void once(const std::string& key, std::size_t col) {
    if (key != "network.link" && !seen_.emplace(key, line_).second) semantic(col, "key '" + key + "' given twice");
  }

  void assign(const std::string& key, const std::string& value, std::size_t kcol, std::size_t vcol) {
    once(key, kcol);
    auto& net = sc_.network;
    if (key == "crdt") {
      auto k = parse_crdt_kind(value);
      if (!k) semantic(vcol, "unknown crdt '" + value + "'");
      sc_.crdt = *k;
    } else if (key == "style") {
      auto s = parse_replica_style(value);
      if (!s) semantic(vcol, "unknown style '" + value + "'");
      sc_.style = *s;
    } else if (key == "contrast_style") {
      auto s = parse_replica_style(value);
      if (!s) semantic(vcol, "unknown style '" + value + "'");
      sc_.contrast_style = *s;
    } else if (key == "replicas") {
      const auto n = parse_uint(value, vcol);
      if (n < 1 || n > 1000) semantic(vcol, "replica count must be between 1 and 1000");
      sc_.replicas = static_cast<std::uint32_t>(n);
    } else if (key == "seed") {
      sc_.seed = parse_uint(value, vcol);
    } else if (key == "fairness") {
      sc_.fairness = parse_bool(value, vcol);
    } else if (key == "max_events") {
      sc_.max_events = parse_uint(value, vcol);
    } else if (key == "unsafe") {
      sc_.unsafe = parse_bool(value, vcol);
    } else if (key == "network.drop") {
      net.drop_probability = parse_probability(value, vcol);
    } else if (key == "network.duplicate") {
      net.duplicate_probability = parse_probability(value, vcol);
    } else if (key == "network.max_duplicates") {
      const auto d = parse_uint(value, vcol);
      if (d < 1 || d > 1000) semantic(vcol, "max duplicates must be between 1 and 1000");
      net.max_duplicates = static_cast<std::uint32_t>(d);
    } else if (key == "network.delay") {
      const auto w = words(value, vcol);
      if (w.size() != 2) syntax(vcol, "expected 'min max'");
      net.delay_min = parse_uint(w[0].first, w[0].second);
      net.delay_max = parse_uint(w[1].first, w[1].second);
      if (net.delay_min > net.delay_max) semantic(vcol, "delay range needs min <= max");
    } else if (key == "network.reorder") {
      net.reorder = parse_bool(value, vcol);
    } else if (key == "network.mode") {
      if (value == "relaxed") {
        net.mode = delivery_mode::relaxed;
      } else if (value == "causal") {
        net.mode = delivery_mode::causal_at_most_once;
      } else {
        semantic(vcol, "unknown delivery mode '" + value + "'");
      }
    } else if (key == "network.link") {
      const auto w = words(value, vcol);
      if (w.size() != 3) syntax(vcol, "expected 'rA rB probability'");
      link_rule rule{parse_replica(w[0].first, w[0].second), parse_replica(w[1].first, w[1].second),
                     parse_probability(w[2].first, w[2].second)};
      link_lines_.push_back({line_, vcol});
      net.links.push_back(rule);
    } else if (key == "anti_entropy") {
      sc_.anti_entropy.enabled = parse_bool(value, vcol);
    } else if (key == "anti_entropy.sync_period") {
      const auto p = parse_uint(value, vcol);
      if (p < 1) semantic(vcol, "sync period must be at least 1");
      sc_.anti_entropy.sync_period = p;
    } else if (key == "anti_entropy.guard") {
      sc_.anti_entropy.guard = parse_bool(value, vcol);
    } else if (key == "anti_entropy.buffer") {
      sc_.anti_entropy.buffer = parse_bool(value, vcol);
    } else if (key == "anti_entropy.force_empty") {
      sc_.anti_entropy.force_empty = parse_bool(value, vcol);
    } else if (key == "checks") {
      sc_.check_strong_convergence = false;
      sc_.check_eventual_delivery = false;
      for (const auto& [w, col] : words(value, vcol)) {
        if (w == "strong_convergence") {
          sc_.check_strong_convergence = true;
        } else if (w == "eventual_delivery") {
          sc_.check_eventual_delivery = true;
        } else if (w != "none") {
          semantic(col, "unknown check '" + w + "'");
        }
      }
    } else if (key.rfind("initial.", 0) == 0) {
      const auto who = parse_replica(key.substr(8), kcol + 8);
      sc_.initial[who] = value;
      initial_lines_[who] = {line_, vcol};
    } else {
      semantic(kcol, "unknown key '" + key + "'");
    }
  }

  void parse_schedule_line(std::string_view l) {
    const auto w = words(l, 1);
    if (w.size() < 3 || w.size() > 4) syntax(w.empty() ? 1 : w[0].second, "expected '<time> <replica> <op> [arg]'");
    scheduled_op op;
    op.time = parse_uint(w[0].first, w[0].second);
    op.replica = parse_replica(w[1].first, w[1].second);
    op.op.verb = w[2].first;
    if (w.size() == 4) {
      if (!is_token(w[3].first)) syntax(w[3].second, "element '" + w[3].first + "' has characters outside [A-Za-z0-9_.-]");
      op.op.arg = w[3].first;
    }
    sc_.schedule.push_back(std::move(op));
    schedule_lines_.push_back({line_, w[1].second, w[2].second});
  }

  struct loc {
    std::size_t line, col, col2 = 0;
  };

  [[noreturn]] void semantic_at(loc where, const std::string& what) const {
    throw semantic_error(where.line, where.col, what);
  }

  void finish() {
    for (const char* k : {"crdt", "style", "replicas"}) {
      if (!seen_.contains(k)) throw semantic_error(line_ + 1, 1, std::string("missing required key '") + k + "'");
    }
    const auto key_loc = [&](const std::string& k) { return loc{seen_.at(k), 1}; };
    const replica_set rs(sc_.replicas);

    for (std::size_t i = 0; i < sc_.network.links.size(); ++i) {
      const auto& l = sc_.network.links[i];
      if (!rs.contains(l.from) || !rs.contains(l.to)) {
        semantic_at(link_lines_[i], "link names a replica outside r1..r" + std::to_string(sc_.replicas));
      }
    }
    for (std::size_t i = 0; i < sc_.schedule.size(); ++i) {
      const auto& op = sc_.schedule[i];
      const auto where = schedule_lines_[i];
      if (!rs.contains(op.replica)) {
        semantic_at(where, "replica " + to_string(op.replica) + " is outside r1..r" + std::to_string(sc_.replicas));
      }
      if (op.is_sync()) {
        if (sc_.style != replica_style::state && sc_.style != replica_style::delta) {
          semantic_at({where.line, where.col2}, "sync needs style state or delta");
        }
        continue;
      }
      if (auto p = op_problem(sc_.crdt, op.op); !p.empty()) semantic_at({where.line, where.col2}, p);
    }

    auto check_style = [&](replica_style style, loc where) {
      if (style != replica_style::op) return;
      if (!supports_op_style(sc_.crdt)) semantic_at(where, "op style is only available for gcounter and gset");
      if (sc_.unsafe) return;
      if (sc_.network.duplicate_probability > 0.0) {
        semantic_at(where,
                    "op-based replicas are not idempotent, so duplicated messages break convergence; "
                    "set 'unsafe = true' to run with network.duplicate > 0 anyway");
      }
      if (sc_.network.mode == delivery_mode::relaxed) {
        semantic_at(where,
                    "op-based replicas need causal at-most-once delivery; use 'network.mode = causal' "
                    "or set 'unsafe = true'");
      }
    };
    check_style(sc_.style, key_loc("style"));
    if (sc_.contrast_style) check_style(*sc_.contrast_style, key_loc("contrast_style"));

    if (sc_.anti_entropy.enabled && sc_.style != replica_style::delta) {
      semantic_at(key_loc("anti_entropy"), "anti-entropy runs only with style delta");
    }
    if (sc_.anti_entropy.enabled && sc_.contrast_style) {
      semantic_at(key_loc("contrast_style"), "contrast runs are not available with anti-entropy");
    }
    if (!sc_.initial.empty()) {
      for (const auto& [who, text] : sc_.initial) {
        const auto where = initial_lines_.at(who);
        if (!rs.contains(who)) semantic_at(where, "replica " + to_string(who) + " is outside the replica set");
        if (sc_.anti_entropy.enabled || sc_.style == replica_style::op ||
            (sc_.contrast_style && *sc_.contrast_style == replica_style::op)) {
          semantic_at(where, "initial states need style state, delta or delta-refined without anti-entropy");
        }
        try {
          with_crdt(sc_.crdt, rs, [&](auto crdt) { (void)parse_state(crdt, text); });
        } catch (const parse_error& e) {
          semantic_at({where.line, where.col + e.column() - 1}, std::string("bad initial state: ") + e.what());
        } catch (const error& e) {
          semantic_at(where, std::string("bad initial state: ") + e.what());
        }
      }
    }
  }

  std::string_view text_;
  std::size_t line_ = 0;
  scenario sc_;
  std::map<std::string, std::size_t> seen_;
  std::vector<loc> link_lines_;
  std::vector<loc> schedule_lines_;
  std::map<replica_id, loc> initial_lines_;
};

}  // namespace detail

/// Parses and validates a scenario. Throws parse_error (syntax) or semantic_error, both with
/// line and column.
inline scenario parse_scenario(std::string_view text) { return detail::scenario_parser(text).parse(); }

/// Canonical text form; parse_scenario(serialize_scenario(s)) == s.
inline std::string serialize_scenario(const scenario& s) {
  std::ostringstream out;
  const auto b = [](bool v) { return v ? "true" : "false"; };
  out << "crdt = " << to_string(s.crdt) << "\n";
  out << "style = " << to_string(s.style) << "\n";
  out << "replicas = " << s.replicas << "\n";
  out << "seed = " << s.seed << "\n";
  out << "fairness = " << b(s.fairness) << "\n";
  out << "max_events = " << s.max_events << "\n";
  out << "unsafe = " << b(s.unsafe) << "\n";
  const auto& n = s.network;
  out << "network.drop = " << detail::format_double(n.drop_probability) << "\n";
  out << "network.duplicate = " << detail::format_double(n.duplicate_probability) << "\n";
  out << "network.max_duplicates = " << n.max_duplicates << "\n";
  out << "network.delay = " << n.delay_min << " " << n.delay_max << "\n";
  out << "network.reorder = " << b(n.reorder) << "\n";
  out << "network.mode = " << (n.mode == delivery_mode::relaxed ? "relaxed" : "causal") << "\n";
  for (const auto& l : n.links) {
    out << "network.link = " << to_string(l.from) << " " << to_string(l.to) << " "
        << detail::format_double(l.drop_probability) << "\n";
  }
  const auto& ae = s.anti_entropy;
  out << "anti_entropy = " << b(ae.enabled) << "\n";
  out << "anti_entropy.sync_period = " << ae.sync_period << "\n";
  out << "anti_entropy.guard = " << b(ae.guard) << "\n";
  out << "anti_entropy.buffer = " << b(ae.buffer) << "\n";
  out << "anti_entropy.force_empty = " << b(ae.force_empty) << "\n";
  std::string checks;
  if (s.check_strong_convergence) checks += " strong_convergence";
  if (s.check_eventual_delivery) checks += " eventual_delivery";
  out << "checks =" << (checks.empty() ? std::string(" none") : checks) << "\n";
  if (s.contrast_style) out << "contrast_style = " << to_string(*s.contrast_style) << "\n";
  for (const auto& [who, text] : s.initial) out << "initial." << to_string(who) << " = " << text << "\n";
  out << "schedule:\n";
  for (const auto& op : s.schedule) {
    out << op.time << " " << to_string(op.replica) << " " << to_string(op.op) << "\n";
  }
  out << "end\n";
  return out.str();
}

}  // namespace dcrdt
