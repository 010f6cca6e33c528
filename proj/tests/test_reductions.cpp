#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "deltacrdt/deltacrdt.hpp"
#include "support.hpp"

using namespace dcrdt;

namespace {

const replica_id r1{0}, r2{1}, r3{2};

template <class F>
std::vector<machine_replica<F>> nodes(const F& family, std::uint32_t n) {
  std::vector<machine_replica<F>> out;
  for (std::uint32_t i = 0; i < n; ++i) out.emplace_back(family, replica_id{i});
  return out;
}

/// Every counter state over two replicas with entries in 0..max.
std::vector<gcounter_state> small_counters(std::uint64_t max) {
  std::vector<gcounter_state> out;
  for (std::uint64_t a = 0; a <= max; ++a) {
    for (std::uint64_t b = 0; b <= max; ++b) {
      gcounter_state s;
      s.set(r1, a);
      s.set(r2, b);
      out.push_back(s);
    }
  }
  return out;
}

/// Every subset of {a, b, c}.
std::vector<gset_state<std::string>> small_sets() {
  std::vector<gset_state<std::string>> out;
  for (int mask = 0; mask < 8; ++mask) {
    gset_state<std::string> s;
    for (int k = 0; k < 3; ++k) {
      if (mask & (1 << k)) s.insert(std::string(1, static_cast<char>('a' + k)));
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(StateToOp, PrepareSendsTheMutatedState) {
  const auto phi = phi_state_to_op(gcounter(replica_set(2)));
  EXPECT_EQ(phi.prepare(phi.initial(), r1, {}), (gcounter_state{{r1, 1}}));
  const auto s = *phi.effect(gcounter_state{{r1, 1}}, phi.initial());
  EXPECT_EQ(phi.format_state(s), "{r1:1}");
}

template <class F, class U>
void expect_duplication_harmless(const F& phi, const U& u) {
  const auto m = phi.prepare(phi.initial(), r1, u);
  const auto once = *phi.effect(m, phi.initial());
  for (int k : {1, 2, 3, 5}) {
    auto s = phi.initial();
    for (int i = 0; i < k; ++i) s = *phi.effect(m, s);
    EXPECT_EQ(s, once) << "k=" << k;
  }
}

TEST(Reductions, DuplicatedMessagesAreAbsorbed) {
  const replica_set rs(2);
  expect_duplication_harmless(phi_state_to_op(gcounter(rs)), increment{});
  expect_duplication_harmless(phi_delta_to_op(gcounter(rs)), increment{});
  expect_duplication_harmless(phi_delta_to_op_refined(gcounter(rs)), increment{});
  expect_duplication_harmless(phi_delta_to_op_difference(gcounter(rs)), increment{});
  const insert_element<std::string> x{"x"};
  expect_duplication_harmless(phi_state_to_op(gset<std::string>(rs)), x);
  expect_duplication_harmless(phi_delta_to_op(gset<std::string>(rs)), x);
  expect_duplication_harmless(phi_delta_to_op_refined(gset<std::string>(rs)), x);
  expect_duplication_harmless(phi_delta_to_op_difference(gset<std::string>(rs)), x);
  expect_duplication_harmless(phi_delta_to_op(make_pn_counter(rs)), pn_decrement());
  expect_duplication_harmless(phi_delta_to_op_refined(make_two_p_set(rs)), two_p_remove<std::string>("x"));
}

TEST(DeltaToOp, GSetInsertSendsSingleton) {
  const auto phi = phi_delta_to_op(gset<std::string>(replica_set(2)));
  const gset_state<std::string> s{"a"};
  const auto m = phi.prepare(s, r1, {"x"});
  EXPECT_EQ(m, (gset_state<std::string>{"x"}));
  EXPECT_EQ(*phi.effect(m, s), (gset_state<std::string>{"a", "x"}));
}

TEST(RefinedDeltaToOp, CounterSendsOneEntry) {
  const auto phi = phi_delta_to_op_refined(gcounter(replica_set(3)));
  const gcounter_state s{{r1, 2}, {r2, 7}};
  const auto m = phi.prepare(s, r1, {});
  EXPECT_EQ(m, (counter_entry{r1, 3}));
  EXPECT_EQ(phi.format_message(m), "(r1, 3)");
  EXPECT_EQ(*phi.effect(m, gcounter_state{}), (gcounter_state{{r1, 3}}));
  EXPECT_EQ(*phi.effect(m, s), (gcounter_state{{r1, 3}, {r2, 7}}));
  // A stale entry never lowers the receiver.
  EXPECT_EQ(*phi.effect(counter_entry{r1, 1}, s), s);
}

TEST(Difference, RecoveryStaysBelowTarget) {
  const gcounter c(replica_set(2));
  const auto states = small_counters(2);
  for (const auto& s : states) {
    for (const auto& t : states) {
      if (!c.leq(s, t) || s == t) continue;
      const auto d = t_gcounter(c, s, t);
      const auto back = c.apply_difference(s, d);
      EXPECT_TRUE(c.leq(back, t)) << c.format(s) << " " << c.format(t);
      EXPECT_TRUE(c.leq(s, back));
      EXPECT_NE(back, s);
    }
  }
  const gset<std::string> g;
  for (const auto& s : small_sets()) {
    for (const auto& t : small_sets()) {
      if (!g.leq(s, t)) continue;
      EXPECT_EQ(g.apply_difference(s, t_gset(s, t)), t) << g.format(s) << " " << g.format(t);
    }
  }
}

TEST(Difference, GSetExamples) {
  EXPECT_EQ(t_gset(gset_state<std::string>{"a"}, gset_state<std::string>{"a", "b", "c"}),
            (gset_state<std::string>{"b", "c"}));
  EXPECT_EQ(t_gset(gset_state<std::string>{"a"}, gset_state<std::string>{"a"}), gset_state<std::string>{});
  EXPECT_THROW(t_gset(gset_state<std::string>{"a"}, gset_state<std::string>{"b"}), precondition_violation);
}

TEST(Difference, CounterExamples) {
  const gcounter c(replica_set(3));
  EXPECT_EQ(t_gcounter(c, gcounter_state{{r1, 1}}, gcounter_state{{r1, 1}, {r2, 4}}), (counter_entry{r2, 4}));
  EXPECT_EQ(t_gcounter(c, gcounter_state{}, gcounter_state{{r2, 1}, {r3, 2}}), (counter_entry{r2, 1}));
  EXPECT_THROW(t_gcounter(c, gcounter_state{{r1, 1}}, gcounter_state{{r1, 1}}), undefined_difference);
  EXPECT_THROW(t_gcounter(c, gcounter_state{{r1, 2}}, gcounter_state{{r1, 1}}), precondition_violation);
}

TEST(Difference, OpReductionMatchesDeltaStates) {
  const replica_set rs(2);
  const auto diff = phi_delta_to_op_difference(gcounter(rs));
  const auto delta = phi_delta_to_op(gcounter(rs));
  for (const auto& s : small_counters(3)) {
    for (auto who : rs.ids()) {
      const auto a = *diff.effect(diff.prepare(s, who, {}), s);
      const auto b = *delta.effect(delta.prepare(s, who, {}), s);
      EXPECT_EQ(a, b);
    }
  }
  const auto gdiff = phi_delta_to_op_difference(gset<std::string>(rs));
  for (const auto& s : small_sets()) {
    const auto m = gdiff.prepare(s, r1, {"b"});
    EXPECT_EQ(*gdiff.effect(m, s), gset<std::string>().update_full(s, r1, {"b"}));
    if (s.contains("b")) {
      EXPECT_TRUE(m.empty());
    }
  }
}

template <class F>
void expect_effects_commute(const F& phi, const std::vector<typename F::state_type>& states,
                            const std::vector<typename F::update_type>& updates, const std::vector<replica_id>& who) {
  for (const auto& s : states) {
    for (const auto& a : states) {
      for (const auto& b : states) {
        for (const auto& u : updates) {
          for (const auto& v : updates) {
            const auto m1 = phi.prepare(a, who.front(), u);
            const auto m2 = phi.prepare(b, who.back(), v);
            const auto x = phi.effect(m2, *phi.effect(m1, s));
            const auto y = phi.effect(m1, *phi.effect(m2, s));
            ASSERT_EQ(x, y);
          }
        }
      }
    }
  }
}

TEST(Reductions, ConcurrentEffectsCommute) {
  const replica_set rs(2);
  const auto counters = small_counters(2);
  expect_effects_commute(phi_state_to_op(gcounter(rs)), counters, {increment{}}, rs.ids());
  expect_effects_commute(phi_delta_to_op(gcounter(rs)), counters, {increment{}}, rs.ids());
  expect_effects_commute(phi_delta_to_op_refined(gcounter(rs)), counters, {increment{}}, rs.ids());
  const std::vector<insert_element<std::string>> ins{{"a"}, {"d"}};
  expect_effects_commute(phi_state_to_op(gset<std::string>(rs)), small_sets(), ins, rs.ids());
  expect_effects_commute(phi_delta_to_op(gset<std::string>(rs)), small_sets(), ins, rs.ids());
  expect_effects_commute(phi_delta_to_op_refined(gset<std::string>(rs)), small_sets(), ins, rs.ids());
}

TEST(Reductions, ConcurrentEffectsCommuteOnRandomPairs) {
  const replica_set rs(3);
  const auto pn = make_pn_counter(rs);
  const auto tp = make_two_p_set(rs);
  rng r(11);
  for (int t = 0; t < 500; ++t) {
    const auto phi = phi_delta_to_op(pn);
    const auto s = random_state(pn, r), a = random_state(pn, r), b = random_state(pn, r);
    const auto m1 = phi.prepare(a, replica_id{static_cast<std::uint32_t>(r.below(3))}, random_update(pn, r));
    const auto m2 = phi.prepare(b, replica_id{static_cast<std::uint32_t>(r.below(3))}, random_update(pn, r));
    EXPECT_EQ(phi.effect(m2, *phi.effect(m1, s)), phi.effect(m1, *phi.effect(m2, s)));

    const auto psi = phi_delta_to_op_refined(tp);
    const auto x = random_state(tp, r);
    const auto n1 = psi.prepare(x, r1, random_update(tp, r));
    const auto n2 = psi.prepare(x, r2, random_update(tp, r));
    EXPECT_EQ(psi.effect(n2, *psi.effect(n1, x)), psi.effect(n1, *psi.effect(n2, x)));
  }
}

TEST(Reductions, UpdateIsVisibleAtOrigin) {
  const replica_set rs(3);
  const gcounter c(rs);
  for (const auto& s : small_counters(2)) {
    for (auto who : rs.ids()) {
      const auto full = c.update_full(s, who);
      const auto a = phi_state_to_op(c);
      const auto b = phi_delta_to_op(c);
      const auto d = phi_delta_to_op_refined(c);
      EXPECT_EQ(*a.effect(a.prepare(s, who, {}), s), full);
      EXPECT_EQ(*b.effect(b.prepare(s, who, {}), s), full);
      EXPECT_EQ(*d.effect(d.prepare(s, who, {}), s), full);
      EXPECT_EQ(c.query(full), c.query(s) + 1);
    }
  }
}

TEST(NativeOp, CountsEachIncOnceUnderCausalDelivery) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    network_config net;
    net.mode = delivery_mode::causal_at_most_once;
    net.drop_probability = 0.4;
    net.duplicate_probability = 0.5;
    net.max_duplicates = 3;
    net.reorder = true;
    net.delay_max = 5;
    net.seed = seed;
    sim_options opts;
    opts.fairness = true;
    simulator<machine_replica<native_gcounter_op>> sim(nodes(native_gcounter_op{}, 3), net, opts);
    using op = simulator<machine_replica<native_gcounter_op>>::timed_op;
    sim.schedule({op{0, r1, increment{}}, op{1, r2, increment{}}, op{1, r1, increment{}}, op{3, r3, increment{}},
                  op{4, r2, increment{}}});
    ASSERT_EQ(sim.run_to_quiescence(), run_status::quiescent);
    for (const auto& n : sim.nodes()) EXPECT_EQ(n.state(), 5u) << "seed " << seed;
    EXPECT_EQ(sim.stats().duplicates, 0u);
    EXPECT_TRUE(check_run(sim.record(), {true}).passed());
  }
}

TEST(NativeOp, RefusesRelaxedDeliveryUnlessUnsafe) {
  network_config net;
  EXPECT_THROW((simulator<machine_replica<native_gcounter_op>>(nodes(native_gcounter_op{}, 2), net, {})),
               simulation_error);
  EXPECT_THROW((simulator<machine_replica<native_gset_op<std::string>>>(nodes(native_gset_op<std::string>{}, 2), net,
                                                                        {})),
               simulation_error);
  sim_options opts;
  opts.allow_unsafe = true;
  EXPECT_NO_THROW((simulator<machine_replica<native_gcounter_op>>(nodes(native_gcounter_op{}, 2), net, opts)));
}

TEST(NativeOp, GSetMessageFormat) {
  const native_gset_op<std::string> op;
  const auto m = op.prepare(op.initial(), r1, {"x"});
  EXPECT_EQ(op.format_message(m), "(ins, x)");
  EXPECT_EQ(*op.effect(m, op.initial()), (gset_state<std::string>{"x"}));
}

TEST(NativeOp, DuplicateDeliveryOvercounts) {
  const native_gcounter_op op;
  const auto m = op.prepare(op.initial(), r1, {});
  EXPECT_EQ(*op.effect(m, *op.effect(m, op.initial())), 2u);
}

// Every schedule (single delivery per replica) of two inc and two insert sequences, checked
// against the reference families in tests/support.hpp.
TEST(ReductionEquivalence, SmallWorkloadsMatchReference) {
  const replica_set rs(2);
  support::equivalence_result res;
  for (const auto& ops : support::sequences(std::vector<increment>{{}}, 3)) {
    support::check_equivalence(phi_state_to_op(gcounter(rs)), support::ref_counter<false>{}, 2, ops, res);
    support::check_equivalence(phi_delta_to_op(gcounter(rs)), support::ref_counter<true>{}, 2, ops, res);
    support::check_equivalence(phi_delta_to_op_refined(gcounter(rs)), support::ref_counter<true>{}, 2, ops, res);
  }
  const std::vector<insert_element<std::string>> alphabet{{"a"}, {"b"}};
  for (const auto& ops : support::sequences(alphabet, 2)) {
    support::check_equivalence(phi_state_to_op(gset<std::string>(rs)), support::ref_set<false>{}, 2, ops, res);
    support::check_equivalence(phi_delta_to_op(gset<std::string>(rs)), support::ref_set<true>{}, 2, ops, res);
  }
  EXPECT_TRUE(res.pass) << res.failure;
  EXPECT_GT(res.schedules, 0u);
}

// A mutated library reduction (effect ignores the message) must be caught by the same harness.
struct forgetful_delta {
  using state_type = gcounter_state;
  using message_type = gcounter_state;
  using update_type = increment;
  static constexpr delivery_mode mode = delivery_mode::relaxed;
  static constexpr bool idempotent = true;
  static constexpr bool full_state_messages = false;
  gcounter crdt{replica_set(2)};
  state_type initial() const { return {}; }
  message_type prepare(const state_type& s, replica_id who, const update_type&) const {
    return crdt.update_delta(s, who);
  }
  std::optional<state_type> effect(const message_type& m, const state_type& s) const {
    return m.size() && s.empty() ? m : s;
  }
  std::string format_message(const message_type& m) const { return crdt.format(m); }
  std::string format_state(const state_type& s) const { return crdt.format(s); }
  std::string format_query(const state_type& s) const { return crdt.format(s); }
};

TEST(ReductionEquivalence, HarnessCatchesBrokenEffect) {
  support::equivalence_result res;
  support::check_equivalence(forgetful_delta{}, support::ref_counter<true>{}, 2, {increment{}, increment{}}, res);
  EXPECT_FALSE(res.pass);
  EXPECT_NE(res.failure.find("reference"), std::string::npos);
}
