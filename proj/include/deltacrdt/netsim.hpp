#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anti_entropy.hpp"
#include "errors.hpp"
#include "history.hpp"
#include "machine.hpp"
#include "replica.hpp"
#include "rng.hpp"

namespace dcrdt {

/// Per-link drop probability overriding the global one (from -> to).
struct link_rule {
  replica_id from{};
  replica_id to{};
  double drop_probability = 0.0;

  bool operator==(const link_rule&) const = default;
};

struct network_config {
  double drop_probability = 0.0;
  double duplicate_probability = 0.0;
  std::uint32_t max_duplicates = 1;  ///< total copies of a duplicated message, at most
  std::uint64_t delay_min = 1;
  std::uint64_t delay_max = 1;
  bool reorder = false;  ///< when false every (from, to) channel is FIFO
  delivery_mode mode = delivery_mode::relaxed;
  std::uint64_t seed = 0;
  std::vector<link_rule> links;

  bool operator==(const network_config&) const = default;

  /// Empty string when valid, otherwise the first problem found.
  std::string problem() const {
    auto bad_prob = [](double p) { return !(p >= 0.0 && p <= 1.0); };
    if (bad_prob(drop_probability)) return "drop probability must lie in [0, 1]";
    if (bad_prob(duplicate_probability)) return "duplicate probability must lie in [0, 1]";
    if (max_duplicates < 1) return "max duplicates must be at least 1";
    if (delay_min > delay_max) return "delay range must satisfy min <= max";
    for (const auto& l : links) {
      if (bad_prob(l.drop_probability)) return "link drop probability must lie in [0, 1]";
    }
    return {};
  }

  void validate() const {
    if (auto p = problem(); !p.empty()) throw simulation_error(p);
  }
};

struct sim_options {
  bool fairness = false;            ///< re-offer undelivered messages until all are delivered
  std::uint64_t max_events = 100000;
  bool allow_unsafe = false;        ///< let causal-only machines run under relaxed delivery
  bool manual = false;              ///< schedule no remote envelopes; drive with deliver()
  anti_entropy_config anti_entropy;
};

enum class delivery_outcome {
  applied,
  rejected,
  held,        ///< not yet deliverable (causal gate or merge guard buffer)
  suppressed,  ///< duplicate under at-most-once delivery
  discarded,   ///< target has crashed
  crashed,     ///< effect undefined; target is now crashed
};

struct delivery_record {
  replica_id target{};
  std::uint64_t msg = 0;
  std::uint32_t dup = 0;
  std::uint64_t time = 0;
  delivery_outcome outcome = delivery_outcome::applied;
};

enum class run_status { quiescent, max_events_exceeded };

struct sim_stats {
  std::uint64_t broadcasts = 0;
  std::uint64_t envelopes = 0;   ///< remote copies scheduled
  std::uint64_t dropped = 0;     ///< remote (message, target) offers dropped by the network
  std::uint64_t deliveries = 0;  ///< Deliver events, local ones included
  std::uint64_t duplicates = 0;  ///< Deliver events beyond the first per (message, target)
  std::uint64_t rejects = 0;
  std::uint64_t reoffers = 0;
  std::uint64_t syncs = 0;
};

template <class R>
concept syncing_replica = simulated_replica<R> && requires(R& r, const R& cr, const typename R::message_type& m) {
  { r.periodic_sync(true) } -> std::same_as<std::optional<std::pair<typename R::message_type, message_scope>>>;
  { cr.ready(m) } -> std::same_as<bool>;
  { cr.idle() } -> std::same_as<bool>;
};

template <class R>
concept seedable_replica = simulated_replica<R> && requires(R& r, typename R::state_type s) { r.reset(s); };

/// Deterministic discrete-event simulator of a fixed set of replicas.
///
/// Time is an integer; each processed envelope (or idle tick) is one event. Envelopes are
/// delivered in (deliver-at, msg-id, dup-index, target) order. Local delivery happens inside
/// broadcast. All randomness comes from one rng seeded from the network config, drawn in a
/// fixed order, so (scenario, seed) fixes the transcript.
template <simulated_replica R>
class simulator {
 public:
  using message_type = typename R::message_type;
  using update_type = typename R::update_type;

  simulator(std::vector<R> replicas, network_config net, sim_options opts)
      : nodes_(std::move(replicas)), net_(std::move(net)), opts_(opts), rng_(net_.seed) {
    net_.validate();
    if (R::required_mode == delivery_mode::causal_at_most_once &&
        net_.mode == delivery_mode::relaxed && !opts_.allow_unsafe) {
      throw simulation_error(
          "op-based machines need causal at-most-once delivery; refusing relaxed delivery "
          "without the unsafe flag");
    }
    if (net_.mode == delivery_mode::causal_at_most_once) net_.duplicate_probability = 0.0;
    const auto n = nodes_.size();
    histories_.resize(n);
    crashed_.assign(n, false);
    holdback_.resize(n);
    delivered_vc_.assign(n, std::vector<std::uint64_t>(n, 0));
    incorporated_.resize(n);
    initial_.resize(n);
    next_seq_.assign(n, 0);
    last_change_.assign(n, 0);
    channel_last_.assign(n * n, 0);
    for (const auto& l : net_.links) {
      if (l.from.index >= n || l.to.index >= n) throw unknown_replica("link rule names an unknown replica");
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const R& node(replica_id id) const { return nodes_.at(id.index); }
  R& node(replica_id id) { return nodes_.at(id.index); }
  const std::vector<R>& nodes() const noexcept { return nodes_; }
  bool crashed(replica_id id) const { return crashed_.at(id.index); }
  std::uint64_t now() const noexcept { return now_; }
  std::uint64_t events() const noexcept { return events_; }
  const sim_stats& stats() const noexcept { return stats_; }
  const network_config& network() const noexcept { return net_; }
  const std::vector<node_history>& histories() const noexcept { return histories_; }
  const std::set<update_id>& incorporated(replica_id id) const { return incorporated_.at(id.index); }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::size_t message_count() const noexcept { return messages_.size(); }

  /// Seeds a replica with a starting state, recorded as one update of that replica.
  void seed_state(replica_id origin, typename R::state_type s)
    requires seedable_replica<R>
  {
    require(origin);
    const update_id uid{origin, next_seq_[origin.index]++};
    node(origin).reset(std::move(s));
    incorporated_[origin.index].insert(uid);
    initial_[origin.index].push_back(uid);
  }

  /// Runs a client update at origin: prepare, then broadcast the prepared message.
  std::optional<std::uint64_t> submit(replica_id origin, const update_type& u) {
    require(origin);
    if (crashed_[origin.index]) return std::nullopt;
    const update_id uid{origin, next_seq_[origin.index]++};
    auto msg = node(origin).prepare(u);
    const message_scope scope{node(origin).update_scope(), origin, 0, 0};
    return broadcast(origin, std::move(msg), scope, uid);
  }

  /// Broadcasts origin's whole state (state-typed styles only).
  std::optional<std::uint64_t> submit_snapshot(replica_id origin) {
    require(origin);
    if (crashed_[origin.index]) return std::nullopt;
    auto msg = node(origin).snapshot();
    if (!msg) throw simulation_error("this replica style cannot send its whole state");
    return broadcast(origin, std::move(*msg), message_scope{message_scope::kind::history, origin, 0, 0},
                     std::nullopt);
  }

  /// Appends Broadcast to origin's history, delivers locally, and offers a copy to every other
  /// live replica through the network model.
  std::uint64_t broadcast(replica_id origin, message_type payload, message_scope scope,
                          std::optional<update_id> uid = std::nullopt) {
    require(origin);
    if (crashed_[origin.index]) throw simulation_error("broadcast from crashed replica " + to_string(origin));
    const std::uint64_t id = messages_.size();
    message_info info;
    info.origin = origin;
    info.repr = nodes_[origin.index].format(payload);
    info.key = R::idempotent_messages ? info.repr : info.repr + " #" + std::to_string(id);
    info.covers = std::make_shared<std::vector<update_id>>(coverage(origin, scope, uid));
    info.vclock = delivered_vc_[origin.index];
    info.vclock[origin.index] += 1;
    info.targets.assign(nodes_.size(), target_info{});
    info.payload = std::move(payload);
    messages_.push_back(std::move(info));
    ++stats_.broadcasts;

    history_event ev;
    ev.kind = event_kind::broadcast;
    ev.time = now_;
    ev.node = origin;
    ev.msg = id;
    ev.dup = 0;
    ev.payload = messages_[id].repr;
    ev.key = messages_[id].key;
    ev.covers = *messages_[id].covers;
    ev.update = uid;
    append(origin, std::move(ev));

    auto& local = messages_[id].targets[origin.index];
    local.next_dup = 1;
    ++local.outstanding;
    deliver_envelope(envelope{now_, id, 0, origin.index});

    if (!opts_.manual) {
      for (std::uint32_t t = 0; t < nodes_.size(); ++t) {
        if (t == origin.index || crashed_[t]) continue;
        offer(id, t);
      }
    }
    return id;
  }

  /// Pops and delivers the earliest envelope; nothing when the queue is empty.
  std::optional<delivery_record> step() {
    if (queue_.empty()) return std::nullopt;
    const envelope env = *queue_.begin();
    queue_.erase(queue_.begin());
    now_ = std::max(now_, env.deliver_at);
    auto rec = deliver_envelope(env);
    count_event();
    return rec;
  }

  /// Forces delivery of a fresh copy of msg at target now, bypassing the network model.
  delivery_record deliver(std::uint64_t msg, replica_id target) {
    require(target);
    if (msg >= messages_.size()) throw simulation_error("unknown message id " + std::to_string(msg));
    auto& ti = messages_[msg].targets[target.index];
    const envelope env{now_, msg, ti.next_dup++, target.index};
    ++ti.outstanding;
    auto rec = deliver_envelope(env);
    return rec;
  }

  /// Client operation injected when virtual time reaches `time`.
  struct timed_op {
    std::uint64_t time = 0;
    replica_id origin{};
    std::optional<update_type> update;  ///< empty: broadcast the whole state
  };

  void schedule(std::vector<timed_op> ops) {
    std::stable_sort(ops.begin(), ops.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    pending_ops_ = std::move(ops);
    next_op_ = 0;
  }

  /// Drives the run until nothing more can happen, or until max_events is reached.
  run_status run_to_quiescence() {
    while (true) {
      if (events_ >= opts_.max_events) {
        status_ = run_status::max_events_exceeded;
        return status_;
      }
      inject_due_ops();
      const bool have_op = next_op_ < pending_ops_.size();
      if (!queue_.empty() && (!have_op || queue_.begin()->deliver_at <= pending_ops_[next_op_].time)) {
        step();
        continue;
      }
      if (have_op) {
        now_ = std::max(now_, pending_ops_[next_op_].time);
        continue;
      }
      if (opts_.fairness && reoffer_round()) continue;
      if (anti_entropy_active() && !fixed_point()) {
        ++now_;
        count_event();
        continue;
      }
      status_ = run_status::quiescent;
      return status_;
    }
  }

  run_status status() const noexcept { return status_; }

  /// Whether every live replica holds the same state (and, with anti-entropy, an empty group).
  bool fixed_point() const {
    std::optional<std::string> first;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (crashed_[i]) continue;
      if constexpr (syncing_replica<R>) {
        if (!nodes_[i].idle()) return false;
      }
      auto s = nodes_[i].state_repr();
      if (!first) {
        first = std::move(s);
      } else if (*first != s) {
        return false;
      }
    }
    return true;
  }

  /// Time of the last state change, when every live replica ends in the same state.
  std::optional<std::uint64_t> converged_at() const {
    std::optional<std::string> first;
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (crashed_[i]) continue;
      auto s = nodes_[i].state_repr();
      if (first && *first != s) return std::nullopt;
      if (!first) first = std::move(s);
      t = std::max(t, last_change_[i]);
    }
    return t;
  }

  run_record record() const {
    run_record out;
    out.replicas = static_cast<std::uint32_t>(nodes_.size());
    out.mode = net_.mode;
    out.fairness = opts_.fairness;
    out.histories = histories_;
    out.order = order_;
    out.initial = initial_;
    out.crashed = crashed_;
    for (const auto& n : nodes_) {
      out.final_states.push_back(n.state_repr());
      out.final_queries.push_back(n.query_repr());
    }
    out.quiescent = status_ == run_status::quiescent;
    out.events = events_;
    out.max_events = opts_.max_events;
    out.end_time = now_;
    return out;
  }

 private:
  struct envelope {
    std::uint64_t deliver_at = 0;
    std::uint64_t msg = 0;
    std::uint32_t dup = 0;
    std::uint32_t target = 0;

    auto operator<=>(const envelope&) const = default;
  };

  struct target_info {
    bool applied = false;
    std::uint32_t next_dup = 0;
    std::uint32_t outstanding = 0;  ///< copies in the queue or held back
    std::uint32_t delivered = 0;
  };

  struct message_info {
    replica_id origin{};
    message_type payload{};
    std::string repr;
    std::string key;
    std::shared_ptr<const std::vector<update_id>> covers;
    std::vector<std::uint64_t> vclock;
    std::vector<target_info> targets;
  };

  void require(replica_id id) const {
    if (id.index >= nodes_.size()) {
      throw unknown_replica("unknown replica " + to_string(id));
    }
  }

  std::vector<update_id> coverage(replica_id origin, const message_scope& scope,
                                  const std::optional<update_id>& uid) const {
    std::set<update_id> out;
    switch (scope.what) {
      case message_scope::kind::update:
        if (uid) out.insert(*uid);
        break;
      case message_scope::kind::history:
        out = incorporated_[origin.index];
        if (uid) out.insert(*uid);
        break;
      case message_scope::kind::range:
        for (auto k = scope.first; k < scope.last; ++k) out.insert(update_id{scope.origin, k});
        break;
      case message_scope::kind::none:
        break;
    }
    return {out.begin(), out.end()};
  }

  void append(replica_id node, history_event ev) {
    histories_[node.index].push_back(std::move(ev));
    order_.emplace_back(node.index, histories_[node.index].size() - 1);
  }

  double drop_probability(std::uint32_t from, std::uint32_t to) const {
    for (auto it = net_.links.rbegin(); it != net_.links.rend(); ++it) {
      if (it->from.index == from && it->to.index == to) return it->drop_probability;
    }
    return net_.drop_probability;
  }

  /// Network model for one (message, target) offer: drop, duplicate, delay, FIFO.
  void offer(std::uint64_t id, std::uint32_t target) {
    auto& info = messages_[id];
    const std::uint32_t from = info.origin.index;
    if (rng_.bernoulli(drop_probability(from, target))) {
      ++stats_.dropped;
      return;
    }
    std::uint32_t copies = 1;
    if (net_.max_duplicates >= 2 && rng_.bernoulli(net_.duplicate_probability)) {
      copies = 2 + static_cast<std::uint32_t>(rng_.below(net_.max_duplicates - 1));
    }
    auto& ti = info.targets[target];
    for (std::uint32_t c = 0; c < copies; ++c) {
      std::uint64_t at = now_ + net_.delay_min + rng_.below(net_.delay_max - net_.delay_min + 1);
      auto& last = channel_last_[from * nodes_.size() + target];
      if (!net_.reorder) at = std::max(at, last);
      last = std::max(last, at);
      queue_.insert(envelope{at, id, ti.next_dup++, target});
      ++ti.outstanding;
      ++stats_.envelopes;
    }
  }

  bool causally_ready(const message_info& info, std::uint32_t target) const {
    const auto& have = delivered_vc_[target];
    for (std::size_t k = 0; k < have.size(); ++k) {
      if (k == info.origin.index) {
        if (have[k] + 1 != info.vclock[k]) return false;
      } else if (have[k] < info.vclock[k]) {
        return false;
      }
    }
    return true;
  }

  delivery_record deliver_envelope(const envelope& env) {
    auto& info = messages_[env.msg];
    auto& ti = info.targets[env.target];
    const replica_id target{env.target};
    delivery_record rec{target, env.msg, env.dup, now_, delivery_outcome::applied};
    --ti.outstanding;

    if (crashed_[env.target]) {
      rec.outcome = delivery_outcome::discarded;
      return rec;
    }
    if (net_.mode == delivery_mode::causal_at_most_once) {
      if (ti.applied) {
        rec.outcome = delivery_outcome::suppressed;
        return rec;
      }
      if (!causally_ready(info, env.target)) {
        hold(env);
        rec.outcome = delivery_outcome::held;
        return rec;
      }
    }
    if constexpr (syncing_replica<R>) {
      if (opts_.anti_entropy.buffer && !nodes_[env.target].ready(info.payload)) {
        hold(env);
        rec.outcome = delivery_outcome::held;
        return rec;
      }
    }

    auto& node = nodes_[env.target];
    const std::string before = node.state_repr();
    const effect_status status = node.effect(info.payload);

    history_event ev;
    ev.kind = status == effect_status::rejected ? event_kind::reject : event_kind::deliver;
    ev.time = now_;
    ev.node = target;
    ev.msg = env.msg;
    ev.dup = env.dup;
    ev.payload = info.repr;
    ev.key = info.key;
    ev.covers = *info.covers;
    append(target, std::move(ev));

    switch (status) {
      case effect_status::rejected:
        ++stats_.rejects;
        rec.outcome = delivery_outcome::rejected;
        return rec;
      case effect_status::undefined:
        ++stats_.deliveries;
        crashed_[env.target] = true;
        rec.outcome = delivery_outcome::crashed;
        return rec;
      case effect_status::applied:
        break;
    }
    ++stats_.deliveries;
    if (ti.delivered++ > 0) ++stats_.duplicates;
    if (!ti.applied) {
      ti.applied = true;
      delivered_vc_[env.target][info.origin.index] += 1;
    }
    for (const auto& u : *info.covers) incorporated_[env.target].insert(u);
    if (node.state_repr() != before) last_change_[env.target] = now_;
    release(env.target);
    return rec;
  }

  void hold(const envelope& env) {
    holdback_[env.target].push_back(env);
    ++messages_[env.msg].targets[env.target].outstanding;
  }

  /// Puts held envelopes back in the queue after a successful delivery at target.
  void release(std::uint32_t target) {
    auto held = std::move(holdback_[target]);
    holdback_[target].clear();
    for (auto env : held) {
      env.deliver_at = now_;
      queue_.insert(env);
    }
  }

  bool anti_entropy_active() const {
    if constexpr (syncing_replica<R>) {
      return opts_.anti_entropy.enabled && opts_.anti_entropy.sync_period > 0;
    } else {
      return false;
    }
  }

  void count_event() {
    ++events_;
    if constexpr (syncing_replica<R>) {
      if (anti_entropy_active() && events_ % opts_.anti_entropy.sync_period == 0 && !fixed_point()) {
        for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
          if (crashed_[i]) continue;
          const bool coin = rng_.coin();
          auto out = nodes_[i].periodic_sync(coin);
          if (out) {
            ++stats_.syncs;
            broadcast(replica_id{i}, std::move(out->first), out->second, std::nullopt);
          }
        }
      }
    }
  }

  void inject_due_ops() {
    while (next_op_ < pending_ops_.size() && pending_ops_[next_op_].time <= now_) {
      const auto& op = pending_ops_[next_op_++];
      if (op.update) {
        submit(op.origin, *op.update);
      } else {
        submit_snapshot(op.origin);
      }
    }
  }

  /// Fair-loss retransmission: re-offers every (message, live target) pair that has no applied
  /// delivery and no copy in flight. Counts as one event. False when nothing is missing.
  bool reoffer_round() {
    bool missing = false;
    for (std::uint64_t id = 0; id < messages_.size(); ++id) {
      for (std::uint32_t t = 0; t < nodes_.size(); ++t) {
        if (crashed_[t] || t == messages_[id].origin.index) continue;
        const auto& ti = messages_[id].targets[t];
        if (ti.applied || ti.outstanding > 0) continue;
        missing = true;
        ++stats_.reoffers;
        offer(id, t);
      }
    }
    if (!missing) return false;
    ++now_;
    count_event();
    return true;
  }

  std::vector<R> nodes_;
  network_config net_;
  sim_options opts_;
  rng rng_;
  std::vector<node_history> histories_;
  std::vector<std::pair<std::uint32_t, std::size_t>> order_;
  std::vector<message_info> messages_;
  std::set<envelope> queue_;
  std::vector<std::vector<envelope>> holdback_;
  std::vector<bool> crashed_;
  std::vector<std::vector<std::uint64_t>> delivered_vc_;
  std::vector<std::set<update_id>> incorporated_;
  std::vector<std::vector<update_id>> initial_;
  std::vector<std::uint64_t> next_seq_;
  std::vector<std::uint64_t> last_change_;
  std::vector<std::uint64_t> channel_last_;
  std::vector<timed_op> pending_ops_;
  std::size_t next_op_ = 0;
  std::uint64_t now_ = 0;
  std::uint64_t events_ = 0;
  sim_stats stats_;
  run_status status_ = run_status::quiescent;
};

}  // namespace dcrdt
