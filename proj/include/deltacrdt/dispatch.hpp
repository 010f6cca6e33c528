#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>

#include "errors.hpp"
#include "gcounter.hpp"
#include "gset.hpp"
#include "pair.hpp"
#include "reductions.hpp"
#include "replica.hpp"

namespace dcrdt {

enum class crdt_kind { gcounter, gset, pncounter, twopset };

/// How replicas exchange information.
enum class replica_style {
  state,          ///< full states, joined on receipt
  op,             ///< native op-based machine (causal, at-most-once)
  delta,          ///< delta-state fragments
  delta_refined,  ///< delta-state with the compact message encoding
};

inline std::string to_string(crdt_kind k) {
  switch (k) {
    case crdt_kind::gcounter: return "gcounter";
    case crdt_kind::gset: return "gset";
    case crdt_kind::pncounter: return "pncounter";
    case crdt_kind::twopset: return "twopset";
  }
  return "?";
}

inline std::string to_string(replica_style s) {
  switch (s) {
    case replica_style::state: return "state";
    case replica_style::op: return "op";
    case replica_style::delta: return "delta";
    case replica_style::delta_refined: return "delta-refined";
  }
  return "?";
}

inline std::optional<crdt_kind> parse_crdt_kind(std::string_view s) {
  for (auto k : {crdt_kind::gcounter, crdt_kind::gset, crdt_kind::pncounter, crdt_kind::twopset}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline std::optional<replica_style> parse_replica_style(std::string_view s) {
  for (auto k : {replica_style::state, replica_style::op, replica_style::delta, replica_style::delta_refined}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline bool supports_op_style(crdt_kind k) { return k == crdt_kind::gcounter || k == crdt_kind::gset; }

/// A client operation as written in a scenario: verb plus optional element.
struct client_op {
  std::string verb;
  std::optional<std::string> arg;

  bool operator==(const client_op&) const = default;
};

inline std::string to_string(const client_op& op) { return op.arg ? op.verb + " " + *op.arg : op.verb; }

/// Empty when the op is valid for the kind, otherwise why not.
inline std::string op_problem(crdt_kind k, const client_op& op) {
  auto want = [&](bool arg) -> std::string {
    if (arg && !op.arg) return "'" + op.verb + "' needs an element";
    if (!arg && op.arg) return "'" + op.verb + "' takes no element";
    return {};
  };
  switch (k) {
    case crdt_kind::gcounter:
      if (op.verb == "inc") return want(false);
      break;
    case crdt_kind::gset:
      if (op.verb == "add" || op.verb == "insert") return want(true);
      break;
    case crdt_kind::pncounter:
      if (op.verb == "inc" || op.verb == "dec") return want(false);
      break;
    case crdt_kind::twopset:
      if (op.verb == "add" || op.verb == "remove") return want(true);
      break;
  }
  return "operation '" + op.verb + "' is not defined for " + to_string(k);
}

inline increment to_update(const gcounter&, const client_op&) { return {}; }

inline insert_element<std::string> to_update(const gset<std::string>&, const client_op& op) {
  return {op.arg.value_or("")};
}

inline pn_counter::update_type to_update(const pn_counter&, const client_op& op) {
  return op.verb == "dec" ? pn_decrement() : pn_increment();
}

inline two_p_set<std::string>::update_type to_update(const two_p_set<std::string>&, const client_op& op) {
  return op.verb == "remove" ? two_p_remove(op.arg.value_or("")) : two_p_add(op.arg.value_or(""));
}

/// The k-th operation of the standard workload used by the oracle.
inline client_op standard_op(crdt_kind kind, std::size_t k) {
  switch (kind) {
    case crdt_kind::gcounter: return {"inc", std::nullopt};
    case crdt_kind::gset: return {"add", "x" + std::to_string(k)};
    case crdt_kind::pncounter: return {k % 2 == 0 ? "inc" : "dec", std::nullopt};
    case crdt_kind::twopset: return {k % 2 == 0 ? "add" : "remove", "x" + std::to_string(k / 2)};
  }
  return {};
}

/// Calls fn with the CRDT object for kind.
template <class Fn>
decltype(auto) with_crdt(crdt_kind kind, const replica_set& replicas, Fn&& fn) {
  switch (kind) {
    case crdt_kind::gcounter: return fn(gcounter(replicas));
    case crdt_kind::gset: return fn(gset<std::string>());
    case crdt_kind::pncounter: return fn(make_pn_counter(replicas));
    case crdt_kind::twopset: return fn(make_two_p_set<std::string>(replicas));
  }
  throw error("unknown crdt kind");
}

/// Calls fn with the op-based machine family for (kind, style).
template <class Fn>
decltype(auto) with_family(crdt_kind kind, replica_style style, const replica_set& replicas, Fn&& fn) {
  if (style == replica_style::op) {
    if (kind == crdt_kind::gcounter) return fn(native_gcounter_op{}, gcounter(replicas));
    if (kind == crdt_kind::gset) return fn(native_gset_op<std::string>{}, gset<std::string>());
    throw error("op style is only available for gcounter and gset");
  }
  return with_crdt(kind, replicas, [&](auto crdt) -> decltype(auto) {
    switch (style) {
      case replica_style::state: return fn(phi_state_to_op(crdt), crdt);
      case replica_style::delta: return fn(phi_delta_to_op(crdt), crdt);
      default: return fn(phi_delta_to_op_refined(crdt), crdt);
    }
  });
}

}  // namespace dcrdt
