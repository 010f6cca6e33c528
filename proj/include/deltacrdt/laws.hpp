#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dispatch.hpp"
#include "gcounter.hpp"
#include "gset.hpp"
#include "lattice.hpp"
#include "pair.hpp"
#include "rng.hpp"

namespace dcrdt {

struct law_result {
  std::string law;
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  std::optional<std::string> counterexample;  ///< first failing instance
};

struct law_report {
  std::string crdt;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<law_result> laws;

  bool pass() const {
    for (const auto& l : laws) {
      if (l.failures) return false;
    }
    return true;
  }

  const law_result* find(std::string_view name) const {
    for (const auto& l : laws) {
      if (l.law == name) return &l;
    }
    return nullptr;
  }

  std::string text() const {
    std::ostringstream out;
    out << "laws " << crdt << " trials=" << trials << " seed=" << seed << "\n";
    for (const auto& l : laws) {
      out << l.law << ": " << (l.failures ? "fail" : "pass") << " (" << (l.trials - l.failures) << "/" << l.trials
          << ")\n";
      if (l.counterexample) out << "  counterexample: " << *l.counterexample << "\n";
    }
    out << "result: " << (pass() ? "pass" : "fail") << "\n";
    return out.str();
  }
};

// Random states for the built-in CRDTs. Values are kept small so that joins often overlap.

inline gcounter_state random_state(const gcounter& crdt, rng& r) {
  gcounter_state s;
  for (auto who : crdt.replicas().ids()) {
    if (r.coin()) s.set(who, r.below(6));
  }
  return s;
}

inline gset_state<std::string> random_state(const gset<std::string>&, rng& r) {
  gset_state<std::string> s;
  for (int k = 0; k < 6; ++k) {
    if (r.below(3) == 0) s.insert(std::string(1, static_cast<char>('a' + k)));
  }
  return s;
}

template <delta_crdt L, delta_crdt R, class Q>
pair_state<typename L::state_type, typename R::state_type> random_state(const pair_crdt<L, R, Q>& crdt, rng& r) {
  auto a = random_state(crdt.left(), r);
  auto b = random_state(crdt.right(), r);
  return {std::move(a), std::move(b)};
}

inline increment random_update(const gcounter&, rng&) { return {}; }

inline insert_element<std::string> random_update(const gset<std::string>&, rng& r) {
  return {std::string(1, static_cast<char>('a' + r.below(8)))};
}

template <delta_crdt L, delta_crdt R, class Q>
typename pair_crdt<L, R, Q>::update_type random_update(const pair_crdt<L, R, Q>& crdt, rng& r) {
  using U = typename pair_crdt<L, R, Q>::update_type;
  if (r.coin()) return U(std::in_place_index<0>, on_left<typename L::update_type>{random_update(crdt.left(), r)});
  return U(std::in_place_index<1>, on_right<typename R::update_type>{random_update(crdt.right(), r)});
}

/// Randomized checks of the semi-lattice laws on states drawn from gen:
/// commutativity, associativity, idempotency (a|a = a and (a|b)|b = a|b) and inflation (a <= a|b).
template <join_semilattice C, class Gen>
std::vector<law_result> check_join_laws(const C& crdt, Gen&& gen, std::uint64_t trials, rng& r) {
  law_result comm, assoc, idem, infl;
  comm.law = "commutativity";
  assoc.law = "associativity";
  idem.law = "idempotency";
  infl.law = "inflation";
  auto fail = [](law_result& l, std::string what) {
    if (l.failures++ == 0) l.counterexample = std::move(what);
  };
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto a = gen(r);
    const auto b = gen(r);
    const auto c = gen(r);
    const auto ab = crdt.join(a, b);
    const auto ba = crdt.join(b, a);
    ++comm.trials;
    if (!(ab == ba)) {
      fail(comm, "a=" + crdt.format(a) + " b=" + crdt.format(b) + " a|b=" + crdt.format(ab) +
                     " b|a=" + crdt.format(ba));
    }
    const auto left = crdt.join(ab, c);
    const auto right = crdt.join(a, crdt.join(b, c));
    ++assoc.trials;
    if (!(left == right)) {
      fail(assoc, "a=" + crdt.format(a) + " b=" + crdt.format(b) + " c=" + crdt.format(c) +
                      " (a|b)|c=" + crdt.format(left) + " a|(b|c)=" + crdt.format(right));
    }
    const auto aa = crdt.join(a, a);
    const auto abb = crdt.join(ab, b);
    ++idem.trials;
    if (!(aa == a)) {
      fail(idem, "a=" + crdt.format(a) + " a|a=" + crdt.format(aa));
    } else if (!(abb == ab)) {
      fail(idem, "a=" + crdt.format(a) + " b=" + crdt.format(b) + " (a|b)|b=" + crdt.format(abb));
    }
    ++infl.trials;
    if (!(crdt.join(a, ab) == ab && crdt.join(b, ab) == ab)) {
      fail(infl, "a=" + crdt.format(a) + " b=" + crdt.format(b) + " a|b=" + crdt.format(ab));
    }
  }
  return {comm, assoc, idem, infl};
}

/// Mutator laws: the full mutator inflates, and joining the delta gives the full result.
template <delta_crdt C, class Gen, class UpdGen>
std::vector<law_result> check_mutator_laws(const C& crdt, Gen&& gen, UpdGen&& upd, const std::vector<replica_id>& who,
                                           std::uint64_t trials, rng& r) {
  law_result infl, delta;
  infl.law = "mutator-inflation";
  delta.law = "delta-mutator";
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto s = gen(r);
    const auto id = who[r.below(who.size())];
    const auto u = upd(r);
    const auto full = crdt.update_full(s, id, u);
    ++infl.trials;
    if (!leq(crdt, s, full) && infl.failures++ == 0) {
      infl.counterexample = "s=" + crdt.format(s) + " m(s)=" + crdt.format(full);
    }
    const auto joined = crdt.join(s, crdt.update_delta(s, id, u));
    ++delta.trials;
    if (!(joined == full) && delta.failures++ == 0) {
      delta.counterexample = "s=" + crdt.format(s) + " m(s)=" + crdt.format(full) + " s|md(s)=" + crdt.format(joined);
    }
  }
  return {infl, delta};
}

/// Runs every law for a built-in CRDT kind over a 3-replica set.
inline law_report lattice_law_suite(crdt_kind kind, std::uint64_t trials, std::uint64_t seed) {
  law_report report;
  report.crdt = to_string(kind);
  report.trials = trials;
  report.seed = seed;
  const replica_set rs(3);
  with_crdt(kind, rs, [&](auto crdt) {
    rng r(seed);
    auto gen = [&](rng& g) { return random_state(crdt, g); };
    auto upd = [&](rng& g) { return random_update(crdt, g); };
    report.laws = check_join_laws(crdt, gen, trials, r);
    for (auto& l : check_mutator_laws(crdt, gen, upd, rs.ids(), trials, r)) report.laws.push_back(std::move(l));
  });
  return report;
}

}  // namespace dcrdt
