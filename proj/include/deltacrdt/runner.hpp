#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "anti_entropy.hpp"
#include "checker.hpp"
#include "dispatch.hpp"
#include "history.hpp"
#include "netsim.hpp"
#include "scenario.hpp"

namespace dcrdt {

/// One simulated execution of a scenario with its verdict.
struct execution {
  replica_style style = replica_style::delta;
  run_record record;
  verdict result;
  sim_stats stats;
  std::optional<std::uint64_t> converged_at;
};

struct run_result {
  scenario sc;
  std::uint64_t seed = 0;
  execution main;
  std::optional<execution> contrast;  ///< same schedule and network, different style

  const verdict& result() const { return main.result; }
  int exit_code() const { return main.result.exit_code(); }
  std::string transcript() const { return main.record.transcript(); }
  std::string verdict_text() const { return main.result.report(); }

  std::string summary() const {
    std::ostringstream out;
    out << "scenario crdt=" << to_string(sc.crdt) << " style=" << to_string(sc.style) << " replicas=" << sc.replicas
        << " seed=" << seed << (sc.anti_entropy.enabled ? " anti_entropy=on" : "") << "\n";
    describe(out, main);
    if (contrast) {
      out << "contrast style=" << to_string(contrast->style) << "\n";
      describe(out, *contrast);
    }
    out << "verdict: " << (main.result.passed() ? "pass" : "fail") << "\n";
    return out.str();
  }

 private:
  static void describe(std::ostringstream& out, const execution& e) {
    const auto& r = e.record;
    out << "final queries:";
    for (std::uint32_t i = 0; i < r.replicas; ++i) out << " " << to_string(replica_id{i}) << "=" << r.final_queries[i];
    out << "\n";
    out << "final states:";
    for (std::uint32_t i = 0; i < r.replicas; ++i) out << " " << to_string(replica_id{i}) << "=" << r.final_states[i];
    out << "\n";
    const auto& s = e.stats;
    out << "messages: broadcasts=" << s.broadcasts << " envelopes=" << s.envelopes << " dropped=" << s.dropped
        << " deliveries=" << s.deliveries << " duplicates=" << s.duplicates << " rejects=" << s.rejects
        << " reoffers=" << s.reoffers << " syncs=" << s.syncs << "\n";
    out << "duplicates per replica:";
    for (const auto& d : e.result.details) out << " " << to_string(d.id) << "=" << d.duplicates;
    out << "\n";
    out << "crashed:";
    bool any = false;
    for (std::uint32_t i = 0; i < r.crashed.size(); ++i) {
      if (r.crashed[i]) {
        out << " " << to_string(replica_id{i});
        any = true;
      }
    }
    out << (any ? "" : " none") << "\n";
    out << "events=" << r.events << " end_time=" << r.end_time << " quiescent=" << (r.quiescent ? "yes" : "no")
        << " converged_at=" << (e.converged_at ? std::to_string(*e.converged_at) : std::string("never")) << "\n";
    out << "strong_convergence: " << to_string(e.result.strong_convergence)
        << " eventual_delivery: " << to_string(e.result.eventual_delivery) << "\n";
  }
};

namespace detail {

template <class R, class C>
execution simulate(std::vector<R> nodes, const scenario& sc, replica_style style, std::uint64_t seed, const C& crdt) {
  network_config net = sc.network;
  net.seed = seed;
  sim_options opts;
  opts.fairness = sc.fairness;
  opts.max_events = sc.max_events;
  opts.allow_unsafe = sc.unsafe;
  opts.anti_entropy = sc.anti_entropy;
  simulator<R> sim(std::move(nodes), net, opts);

  if constexpr (seedable_replica<R>) {
    if constexpr (std::is_same_v<typename R::state_type, typename C::state_type>) {
      for (const auto& [who, text] : sc.initial) sim.seed_state(who, parse_state(crdt, text));
    }
  }
  std::vector<typename simulator<R>::timed_op> ops;
  for (const auto& op : sc.schedule) {
    typename simulator<R>::timed_op t;
    t.time = op.time;
    t.origin = op.replica;
    if (!op.is_sync()) t.update = to_update(crdt, op.op);
    ops.push_back(std::move(t));
  }
  sim.schedule(std::move(ops));
  sim.run_to_quiescence();

  execution e;
  e.style = style;
  e.record = sim.record();
  e.result = check_run(e.record, check_options{sc.evaluates_eventual_delivery()});
  if (!sc.check_strong_convergence) {
    e.result.strong_convergence = outcome::not_applicable;
    e.result.counterexample.reset();
  }
  e.stats = sim.stats();
  e.converged_at = sim.converged_at();
  return e;
}

inline execution execute(const scenario& sc, replica_style style, std::uint64_t seed) {
  const replica_set rs(sc.replicas);
  if (sc.anti_entropy.enabled) {
    return with_crdt(sc.crdt, rs, [&](auto crdt) {
      using C = decltype(crdt);
      std::vector<anti_entropy_replica<C>> nodes;
      for (auto id : rs.ids()) nodes.emplace_back(crdt, id, sc.anti_entropy);
      return simulate(std::move(nodes), sc, style, seed, crdt);
    });
  }
  return with_family(sc.crdt, style, rs, [&](auto family, auto crdt) {
    using F = decltype(family);
    std::vector<machine_replica<F>> nodes;
    for (auto id : rs.ids()) nodes.emplace_back(family, id);
    return simulate(std::move(nodes), sc, style, seed, crdt);
  });
}

}  // namespace detail

/// Runs a scenario; seed overrides the scenario's own seed when given.
inline run_result run_scenario(const scenario& sc, std::optional<std::uint64_t> seed = std::nullopt) {
  run_result out;
  out.sc = sc;
  out.seed = seed.value_or(sc.seed);
  out.main = detail::execute(sc, sc.style, out.seed);
  if (sc.contrast_style) out.contrast = detail::execute(sc, *sc.contrast_style, out.seed);
  return out;
}

/// Half-open seed range "A..B" (A inclusive, B exclusive).
inline std::pair<std::uint64_t, std::uint64_t> parse_seed_range(std::string_view text) {
  const auto dots = text.find("..");
  auto num = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
      throw error("bad seed range '" + std::string(text) + "': expected A..B");
    }
    return v;
  };
  if (dots == std::string_view::npos) throw error("bad seed range '" + std::string(text) + "': expected A..B");
  const auto a = num(text.substr(0, dots));
  const auto b = num(text.substr(dots + 2));
  if (b < a) throw error("bad seed range '" + std::string(text) + "': end before start");
  return {a, b};
}

struct sweep_report {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
  std::uint64_t runs = 0;
  std::uint64_t passed = 0;
  std::vector<std::uint64_t> failing_seeds;
  std::vector<std::uint64_t> convergence_times;  ///< of runs that ended with equal states
  std::uint64_t strong_convergence_failures = 0;
  std::uint64_t eventual_delivery_failures = 0;
  std::uint64_t termination_failures = 0;

  int exit_code() const { return failing_seeds.empty() ? 0 : 1; }

  std::string text() const {
    std::ostringstream out;
    out << "sweep seeds " << first << ".." << last << "\n";
    out << "runs: " << runs << "\n";
    out << "pass: " << passed << "\n";
    out << "fail: " << failing_seeds.size() << "\n";
    out << "strong_convergence failures: " << strong_convergence_failures << "\n";
    out << "eventual_delivery failures: " << eventual_delivery_failures << "\n";
    out << "termination failures: " << termination_failures << "\n";
    if (!convergence_times.empty()) {
      auto sorted = convergence_times;
      std::sort(sorted.begin(), sorted.end());
      double sum = 0;
      for (auto t : sorted) sum += static_cast<double>(t);
      out << "convergence time: min=" << sorted.front() << " median=" << sorted[sorted.size() / 2]
          << " mean=" << detail::format_double(sum / static_cast<double>(sorted.size())) << " max=" << sorted.back()
          << " (" << sorted.size() << " runs converged)\n";
    }
    if (!failing_seeds.empty()) {
      out << "failing seeds:";
      for (auto s : failing_seeds) out << " " << s;
      out << "\n";
    }
    return out.str();
  }
};

/// Runs seeds [first, last), fanning out over worker threads (0 picks the hardware count).
inline sweep_report run_sweep(const scenario& sc, std::uint64_t first, std::uint64_t last, unsigned threads = 0) {
  sweep_report rep;
  rep.first = first;
  rep.last = last;
  if (last <= first) return rep;
  const auto count = last - first;
  struct slot {
    bool done = false;
    bool pass = false;
    outcome sc = outcome::pass, ed = outcome::pass;
    bool quiescent = true;
    std::optional<std::uint64_t> converged;
    std::string error;
  };
  std::vector<slot> slots(count);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < count; i = next++) {
      auto& s = slots[i];
      try {
        const auto r = run_scenario(sc, first + i);
        s.pass = r.result().passed();
        s.sc = r.result().strong_convergence;
        s.ed = r.result().eventual_delivery;
        s.quiescent = r.result().quiescent;
        s.converged = r.main.converged_at;
      } catch (const std::exception& e) {
        s.error = e.what();
      }
      s.done = true;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::uint64_t i = 0; i < count; ++i) {
    const auto& s = slots[i];
    ++rep.runs;
    if (!s.error.empty()) throw error("seed " + std::to_string(first + i) + ": " + s.error);
    if (s.pass) {
      ++rep.passed;
    } else {
      rep.failing_seeds.push_back(first + i);
    }
    if (s.sc == outcome::fail) ++rep.strong_convergence_failures;
    if (s.ed == outcome::fail) ++rep.eventual_delivery_failures;
    if (!s.quiescent) ++rep.termination_failures;
    if (s.converged) rep.convergence_times.push_back(*s.converged);
  }
  return rep;
}

}  // namespace dcrdt
