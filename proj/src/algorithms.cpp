#include "ccrn/algorithms.hpp"

#include <stdexcept>

#include "ccrn/errors.hpp"

namespace ccrn {

namespace {

constexpr double kUnreachable = 1.0 - 1e-15;

void require_reachable(const ErasureModel& m, int tx, NodeSet set, const char* what) {
  if (m.erasure_prob(tx, set) >= kUnreachable)
    throw ConfigError(std::string("unreachable phase: ") + what + " (eps" + std::to_string(tx) + "_" + set.to_string() +
                      " = 1)");
}

PacketId pop_front(std::deque<PacketId>& q) {
  if (q.empty()) throw std::logic_error("pop from empty queue");
  PacketId id = q.front();
  q.pop_front();
  return id;
}

void push_mirrored(QueueBank& bank, Queue a, Queue b, PacketId id) {
  bank[a].push_back(id);
  bank[b].push_back(id);
}

void pop_mirrored(QueueBank& bank, Queue a, Queue b, PacketId id) {
  if (bank[a].empty() || bank[a].front() != id || bank[b].empty() || bank[b].front() != id)
    throw std::logic_error("head of " + std::string(queue_name(a)) + " is not " + id.to_string());
  bank[a].pop_front();
  bank[b].pop_front();
}

PacketId constituent(const Transmission& tx, int origin) {
  for (PacketId id : tx.packet.constituents())
    if (id.origin == origin) return id;
  throw std::logic_error("transmission has no origin-" + std::to_string(origin) + " constituent");
}

void check_common_reachability(const SimConfig& c) {
  const ErasureModel& m = c.model;
  if (c.k1 > 0) {
    require_reachable(m, 1, {2, 3}, "node 1 never reaches node 2 or 3");
    // Packets heard by 2 but not 3 must eventually cross from node 2 to node 3.
    if (m.erasure_prob(1, {3}) - m.erasure_prob(1, {2, 3}) > 0.0) require_reachable(m, 2, {3}, "node 2 never reaches node 3");
  }
  if (c.k2 > 0) require_reachable(m, 2, {4}, "node 2 never reaches node 4");
}

// --- steps shared by both algorithms --------------------------------------------------------

enum class UnmarkedRelay { ToQueue, Split };

std::optional<Transmission> primary_send(SimContext& ctx) {
  const auto& q1 = ctx.bank()[Queue::Q1];
  if (q1.empty()) return std::nullopt;
  return ctx.from_node1(q1.front());
}

// Node 1 keeps sending the head of Q1 until node 2 or 3 hears it. `unmarked_relay` places a packet
// heard only by node 2 that node 4 has never heard.
template <typename UnmarkedRelayFn>
void primary_feedback(SimContext& ctx, const Transmission& tx, Reception rx, UnmarkedRelayFn&& unmarked_relay) {
  QueueBank& bank = ctx.bank();
  const PacketId q = constituent(tx, 1);
  auto& marked = bank[Queue::B1_4_n2n3];
  const bool is_marked = !marked.empty() && marked.front() == q;
  if (rx.at(3)) {
    pop_front(bank[Queue::Q1]);
    marked.clear();
    ctx.expect_known(3, q);
  } else if (rx.at(2) && (rx.at(4) || is_marked)) {
    pop_front(bank[Queue::Q1]);
    marked.clear();
    ctx.expect_known(4, q);
    push_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, q);
  } else if (rx.at(2)) {
    pop_front(bank[Queue::Q1]);
    unmarked_relay(q);
  } else if (rx.at(4) && !is_marked) {
    marked.push_back(q);
  }
}

std::optional<Transmission> relay_send(SimContext& ctx) {
  const auto& q = ctx.bank()[Queue::Q1_2_n3n4];
  if (q.empty()) return std::nullopt;
  return ctx.from_node2(q.front());
}

// Node 2 resends a packet only it holds until node 3 or 4 hears it.
void relay_feedback(SimContext& ctx, const Transmission& tx, Reception rx) {
  QueueBank& bank = ctx.bank();
  const PacketId q = constituent(tx, 1);
  if (rx.at(3)) {
    pop_front(bank[Queue::Q1_2_n3n4]);
    ctx.expect_known(3, q);
  } else if (rx.at(4)) {
    pop_front(bank[Queue::Q1_2_n3n4]);
    ctx.expect_known(4, q);
    push_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, q);
    ctx.count_event("M");
  }
}

std::optional<Transmission> secondary_send(SimContext& ctx) {
  const auto& q = ctx.bank()[Queue::Q2];
  if (q.empty()) return std::nullopt;
  return ctx.from_node2(q.front());
}

void secondary_feedback(SimContext& ctx, const Transmission& tx, Reception rx) {
  QueueBank& bank = ctx.bank();
  const PacketId q = constituent(tx, 2);
  if (rx.at(4)) {
    pop_front(bank[Queue::Q2]);
    ctx.expect_known(4, q);
  } else if (rx.at(3)) {
    pop_front(bank[Queue::Q2]);
    ctx.expect_known(3, q);
    push_mirrored(bank, Queue::Q2_3n4, Queue::Q2_3_n4, q);
  }
}

// XOR endgame: a primary packet node 4 holds with a secondary packet node 3 holds, until one
// side runs dry; then the leftovers go uncoded.
std::optional<Transmission> xor_send(SimContext& ctx) {
  const QueueBank& bank = ctx.bank();
  const auto& to3 = bank[Queue::Q1_2_n34];
  const auto& to4 = bank[Queue::Q2_3n4];
  if (!to3.empty() && !to4.empty()) return ctx.from_node2(to3.front(), to4.front());
  if (!to3.empty()) return ctx.from_node2(to3.front());
  if (!to4.empty()) return ctx.from_node2(to4.front());
  return std::nullopt;
}

void xor_feedback(SimContext& ctx, const Transmission& tx, Reception rx) {
  QueueBank& bank = ctx.bank();
  bool has1 = false, has2 = false;
  for (PacketId id : tx.packet.constituents()) (id.origin == 1 ? has1 : has2) = true;
  if (has1 && rx.at(3)) {
    const PacketId a = constituent(tx, 1);
    pop_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, a);
    ctx.expect_known(3, a);
  }
  if (has2 && rx.at(4)) {
    const PacketId b = constituent(tx, 2);
    pop_mirrored(bank, Queue::Q2_3n4, Queue::Q2_3_n4, b);
    ctx.expect_known(4, b);
  }
}

}  // namespace

void MixParams::validate() const {
  constexpr double tol = 1e-12;
  if (!(g >= 0.0) || !(s >= 0.0)) throw DomainError("g and s must be nonnegative");
  if (g + s > 1.0 + tol) throw DomainError("g + s must not exceed 1");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("u must lie in [0,1]");
}

// ---------------------------------------------------------------------------------------------

std::optional<Transmission> StepMachinePolicy::next(SimContext& ctx) {
  while (current_ < steps_.size()) {
    if (!entered_) {
      ctx.begin_step(steps_[current_]);
      entered_ = true;
      on_enter(ctx, current_);
    }
    if (auto tx = transmission(ctx, current_)) return tx;
    ++current_;
    entered_ = false;
  }
  return std::nullopt;
}

void StepMachinePolicy::on_feedback(SimContext& ctx, const Transmission& tx, Reception rx) {
  feedback(ctx, current_, tx, rx);
}

const std::string& StepMachinePolicy::current_step() const {
  static const std::string done = "done";
  return current_ < steps_.size() ? steps_[current_] : done;
}

// ---------------------------------------------------------------------------------------------
// Algorithm 1

Algorithm1Policy::Algorithm1Policy() : StepMachinePolicy({"1", "2", "3", "4"}) {}

void Algorithm1Policy::check_reachable(const SimConfig& config) const { check_common_reachability(config); }

void Algorithm1Policy::start(SimContext& ctx) {
  const auto& c = ctx.config();
  for (std::uint32_t i = 0; i < c.k1; ++i) ctx.bank()[Queue::Q1].push_back({1, i});
  for (std::uint32_t i = 0; i < c.k2; ++i) ctx.bank()[Queue::Q2].push_back({2, i});
}

std::optional<Transmission> Algorithm1Policy::transmission(SimContext& ctx, std::size_t step) {
  switch (step) {
    case 0: return primary_send(ctx);
    case 1: return relay_send(ctx);
    case 2: return secondary_send(ctx);
    case 3: return xor_send(ctx);
  }
  return std::nullopt;
}

void Algorithm1Policy::feedback(SimContext& ctx, std::size_t step, const Transmission& tx, Reception rx) {
  switch (step) {
    case 0:
      primary_feedback(ctx, tx, rx, [&](PacketId q) { ctx.bank()[Queue::Q1_2_n3n4].push_back(q); });
      break;
    case 1: relay_feedback(ctx, tx, rx); break;
    case 2: secondary_feedback(ctx, tx, rx); break;
    case 3: xor_feedback(ctx, tx, rx); break;
  }
}

// ---------------------------------------------------------------------------------------------
// Algorithm 2

namespace {
enum Alg2Step : std::size_t { kPrimary, kNode1Relay, kNode2Relay, kSecondary, kCoded, kFinishOneSided, kFinishBoth, kXor };
}

Algorithm2Policy::Algorithm2Policy(MixParams params)
    : StepMachinePolicy({"1", "2", "3", "4", "5", "6", "7", "8"}), params_(params) {
  params_.validate();
}

void Algorithm2Policy::check_reachable(const SimConfig& config) const {
  check_common_reachability(config);
  if (config.k1 == 0) return;
  const ErasureModel& m = config.model;
  if (params_.g > 0.0 || params_.s > 0.0) require_reachable(m, 1, {3, 4}, "node 1 never reaches node 3 or 4");
  if (params_.s > 0.0 && params_.u > 0.0) require_reachable(m, 1, {4}, "node 1 never reaches node 4");
}

void Algorithm2Policy::start(SimContext& ctx) {
  const auto& c = ctx.config();
  for (std::uint32_t i = 0; i < c.k1; ++i) ctx.bank()[Queue::Q1].push_back({1, i});
  for (std::uint32_t i = 0; i < c.k2; ++i) ctx.bank()[Queue::Q2].push_back({2, i});
}

void Algorithm2Policy::on_enter(SimContext& ctx, std::size_t step) {
  if (step != kFinishBoth) return;
  // Batch thinning: each doubly-received coded packet is kept for node 1 with probability u;
  // the others hand their secondary constituent back to the XOR endgame.
  QueueBank& bank = ctx.bank();
  std::deque<PacketId> kept;
  while (!bank[Queue::A1_234].empty()) {
    const PacketId a = pop_front(bank[Queue::A1_234]);
    const bool keep = params_.u >= 1.0 ? true : params_.u <= 0.0 ? false : ctx.rng().bernoulli(params_.u);
    if (keep) {
      kept.push_back(a);
      continue;
    }
    auto coded = bank.take_by_primary(CodedQueue::AA2_34, a);
    auto mirror = bank.take_by_primary(CodedQueue::AA4_3, a);
    if (!coded || !mirror) throw std::logic_error("coded partner of " + a.to_string() + " missing");
    push_mirrored(bank, Queue::Q2_3n4, Queue::Q2_3_n4, coded->secondary);
    ctx.count_event("step7.returned");
  }
  bank[Queue::A1_234] = std::move(kept);
}

std::optional<Transmission> Algorithm2Policy::transmission(SimContext& ctx, std::size_t step) {
  const QueueBank& bank = ctx.bank();
  switch (step) {
    case kPrimary: return primary_send(ctx);
    case kNode1Relay:
      if (bank.empty(Queue::G1_2n3n4)) return std::nullopt;
      return ctx.from_node1(bank[Queue::G1_2n3n4].front());
    case kNode2Relay: return relay_send(ctx);
    case kSecondary: return secondary_send(ctx);
    case kCoded:
      if (bank.empty(Queue::S2_n3n4)) return std::nullopt;
      if (bank.empty(Queue::Q2_3n4)) return ctx.from_node2(bank[Queue::S2_n3n4].front());
      return ctx.from_node2(bank[Queue::S2_n3n4].front(), bank[Queue::Q2_3n4].front());
    case kFinishOneSided:
      if (bank.empty(Queue::A1_2n34)) return std::nullopt;
      return ctx.from_node1(bank[Queue::A1_2n34].front());
    case kFinishBoth:
      if (bank.empty(Queue::A1_234)) return std::nullopt;
      return ctx.from_node1(bank[Queue::A1_234].front());
    case kXor: return xor_send(ctx);
  }
  return std::nullopt;
}

void Algorithm2Policy::feedback(SimContext& ctx, std::size_t step, const Transmission& tx, Reception rx) {
  QueueBank& bank = ctx.bank();
  switch (step) {
    case kPrimary:
      primary_feedback(ctx, tx, rx, [&](PacketId q) {
        const double g = params_.g, s = params_.s;
        if (g + s <= 0.0) {
          bank[Queue::Q1_2_n3n4].push_back(q);
          return;
        }
        const double draw = ctx.rng().uniform();
        if (draw < g)
          push_mirrored(bank, Queue::G1_2n3n4, Queue::G2_n3n4, q);
        else if (draw < g + s)
          push_mirrored(bank, Queue::S1_2n3n4, Queue::S2_n3n4, q);
        else
          bank[Queue::Q1_2_n3n4].push_back(q);
      });
      break;

    case kNode1Relay: {
      const PacketId q = constituent(tx, 1);
      if (rx.at(3)) {
        pop_mirrored(bank, Queue::G1_2n3n4, Queue::G2_n3n4, q);
        ctx.expect_known(3, q);
      } else if (rx.at(4)) {
        pop_mirrored(bank, Queue::G1_2n3n4, Queue::G2_n3n4, q);
        ctx.expect_known(4, q);
        push_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, q);
      }
      break;
    }

    case kNode2Relay: relay_feedback(ctx, tx, rx); break;
    case kSecondary: secondary_feedback(ctx, tx, rx); break;

    case kCoded: {
      const PacketId s = constituent(tx, 1);
      if (tx.packet.size() == 1) {
        // No secondary partner left: relay uncoded like an ordinary node-2-only packet.
        ctx.count_event("step5.uncoded_slots");
        if (rx.at(3)) {
          pop_mirrored(bank, Queue::S1_2n3n4, Queue::S2_n3n4, s);
          ctx.expect_known(3, s);
        } else if (rx.at(4)) {
          pop_mirrored(bank, Queue::S1_2n3n4, Queue::S2_n3n4, s);
          ctx.expect_known(4, s);
          push_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, s);
        }
        break;
      }
      const PacketId q = constituent(tx, 2);
      if (!rx.at(3) && !rx.at(4)) break;
      pop_mirrored(bank, Queue::S1_2n3n4, Queue::S2_n3n4, s);
      if (rx.at(3)) ctx.expect_known(3, s);
      if (rx.at(3) && !rx.at(4)) break;
      pop_mirrored(bank, Queue::Q2_3n4, Queue::Q2_3_n4, q);
      if (rx.at(3)) {
        bank[CodedQueue::AA2_34].push_back({s, q});
        bank[CodedQueue::AA4_3].push_back({s, q});
        bank[Queue::A1_234].push_back(s);
      } else {
        bank[CodedQueue::AA2_n34].push_back({s, q});
        bank[CodedQueue::AA4_n3].push_back({s, q});
        bank[Queue::A1_2n34].push_back(s);
      }
      break;
    }

    case kFinishOneSided: {
      const PacketId a = constituent(tx, 1);
      if (!rx.at(3) && !rx.at(4)) break;
      pop_front(bank[Queue::A1_2n34]);
      auto coded = bank.take_by_primary(CodedQueue::AA2_n34, a);
      auto mirror = bank.take_by_primary(CodedQueue::AA4_n3, a);
      if (!coded || !mirror) throw std::logic_error("coded partner of " + a.to_string() + " missing");
      if (rx.at(4)) {
        ctx.expect_known(4, coded->secondary);
        if (rx.at(3)) {
          ctx.expect_known(3, a);
        } else {
          push_mirrored(bank, Queue::Q1_2_n34, Queue::Q1_4_2n3, a);
        }
      } else {
        ctx.expect_known(3, a);
        bank[Queue::A1_234].push_back(a);
        bank[CodedQueue::AA2_34].push_back(*coded);
        bank[CodedQueue::AA4_3].push_back(*mirror);
      }
      break;
    }

    case kFinishBoth: {
      if (!rx.at(4)) break;
      const PacketId a = pop_front(bank[Queue::A1_234]);
      auto coded = bank.take_by_primary(CodedQueue::AA2_34, a);
      auto mirror = bank.take_by_primary(CodedQueue::AA4_3, a);
      if (!coded || !mirror) throw std::logic_error("coded partner of " + a.to_string() + " missing");
      ctx.expect_known(4, coded->secondary);
      break;
    }

    case kXor: xor_feedback(ctx, tx, rx); break;
  }
}

std::unique_ptr<Policy> make_policy(std::string_view algorithm, const MixParams& params) {
  if (algorithm == "alg1") return std::make_unique<Algorithm1Policy>();
  if (algorithm == "alg2") return std::make_unique<Algorithm2Policy>(params);
  throw ConfigError("unknown algorithm '" + std::string(algorithm) + "' (expected alg1 or alg2)");
}

}  // namespace ccrn
