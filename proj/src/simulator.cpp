#include "ccrn/simulator.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "ccrn/errors.hpp"

namespace ccrn {

namespace {

std::uint64_t packet_key(PacketId id) { return (static_cast<std::uint64_t>(id.origin) << 32) | id.index; }

// 3-bit reception history index: bit 0 node 2, bit 1 node 3, bit 2 node 4.
std::uint8_t history_index(NodeSet s) { return static_cast<std::uint8_t>(s.bits() >> 2); }

}  // namespace

std::uint64_t SimResult::phase(std::string_view step) const {
  for (const auto& [name, slots] : phase_durations)
    if (name == step) return slots;
  return 0;
}

std::uint64_t SimResult::counter(const std::string& name) const {
  auto it = schedule_counters.find(name);
  return it == schedule_counters.end() ? 0 : it->second;
}

std::size_t SimResult::snapshot(std::string_view when, Queue q) const {
  for (const auto& [label, sizes] : queue_snapshots) {
    if (label != when) continue;
    auto it = sizes.find(std::string(queue_name(q)));
    return it == sizes.end() ? 0 : it->second;
  }
  throw std::out_of_range("no queue snapshot '" + std::string(when) + "'");
}

std::string schedule_counter_name(NodeSet required, NodeSet excluded) {
  std::string body;
  for (int node = 2; node <= 4; ++node) {
    if (!required.contains(node) && !excluded.contains(node)) continue;
    if (!body.empty()) body += "&";
    if (excluded.contains(node)) body += "!";
    body += std::to_string(node);
  }
  return "tau1[" + body + "]";
}

// ---------------------------------------------------------------------------------------------
// Receiver

Receiver::Receiver(int node, std::size_t k1, std::size_t k2, std::size_t payload_len)
    : node_(node), store_(k1, k2, payload_len) {}

std::vector<PacketId> Receiver::receive(const CodedPacket& packet) {
  std::vector<PacketId> learned;
  std::size_t unknown = 0;
  for (PacketId id : packet.constituents())
    if (!store_.knows(id)) ++unknown;
  if (unknown == 0) return learned;
  if (unknown == 1) {
    Packet p = decode_at_receiver(packet, store_);
    learn_cascade(p.id, std::move(p.payload), learned);
    return learned;
  }
  const std::size_t slot = pending_.size();
  pending_.emplace_back(packet);
  ++pending_count_;
  for (PacketId id : packet.constituents()) waiting_[packet_key(id)].push_back(slot);
  return learned;
}

void Receiver::learn_cascade(PacketId first, std::vector<std::uint8_t> payload, std::vector<PacketId>& learned) {
  std::vector<std::pair<PacketId, std::vector<std::uint8_t>>> work;
  work.emplace_back(first, std::move(payload));
  while (!work.empty()) {
    auto [id, bytes] = std::move(work.back());
    work.pop_back();
    if (!store_.learn(id, bytes)) continue;
    learned.push_back(id);
    auto it = waiting_.find(packet_key(id));
    if (it == waiting_.end()) continue;
    for (std::size_t slot : it->second) {
      auto& coded = pending_[slot];
      if (!coded) continue;
      const auto ids = coded->constituents();
      const auto unknown = std::count_if(ids.begin(), ids.end(), [&](PacketId x) { return !store_.knows(x); });
      if (unknown == 1) {
        Packet p = decode_at_receiver(*coded, store_);
        work.emplace_back(p.id, std::move(p.payload));
      }
      // At most two constituents, one of which was just learned.
      coded.reset();
      --pending_count_;
    }
    waiting_.erase(it);
  }
}

// ---------------------------------------------------------------------------------------------
// Erasure sources

Reception ScriptedErasureSource::draw(int transmitter) {
  if (next_ >= outcomes_.size()) throw ConfigError("scripted erasure trace exhausted");
  Reception r = outcomes_[next_++];
  if (!r.received.subset_of(listeners(transmitter)))
    throw ConfigError("scripted outcome lists a node outside the listeners of node " + std::to_string(transmitter));
  return r;
}

// ---------------------------------------------------------------------------------------------
// SimContext

SimContext::SimContext(const SimConfig& config, Rng& rng)
    : config_(config),
      rng_(rng),
      originals_(config.k1, config.k2, config.payload_len),
      node2_(config.k1, config.k2, config.payload_len),
      node3_(3, config.k1, config.k2, config.payload_len),
      node4_(4, config.k1, config.k2, config.payload_len),
      history1_(config.k1, 0) {
  // Payloads come from their own stream so the erasure/coin sequence does not depend on L.
  Rng payload_rng(derive_seed(config.seed, 0x9a710ad));
  std::vector<std::uint8_t> bytes(config.payload_len);
  for (int origin = 1; origin <= 2; ++origin) {
    const std::size_t k = origin == 1 ? config.k1 : config.k2;
    for (std::uint32_t i = 0; i < k; ++i) {
      for (auto& b : bytes) b = static_cast<std::uint8_t>(payload_rng.next_u64());
      const PacketId id{static_cast<std::uint8_t>(origin), i};
      originals_.learn(id, bytes);
      if (origin == 2) node2_.learn(id, bytes);
    }
  }
}

Transmission SimContext::from_node1(PacketId id) const {
  if (id.origin != 1) throw DecodeError("node 1 can only send its own packets, asked for " + id.to_string());
  return {1, CodedPacket(originals_.packet(id))};
}

Transmission SimContext::from_node2(PacketId a, std::optional<PacketId> b) const {
  auto held = [&](PacketId id) {
    if (!node2_.knows(id)) throw DecodeError("node 2 does not hold " + id.to_string());
    return node2_.packet(id);
  };
  CodedPacket coded(held(a));
  if (b) coded = xor_combine(coded, held(*b));
  return {2, std::move(coded)};
}

const Receiver& SimContext::receiver(int node) const {
  if (node == 3) return node3_;
  if (node == 4) return node4_;
  throw DomainError("receivers are nodes 3 and 4");
}

bool SimContext::knows(int node, PacketId id) const { return receiver(node).store().knows(id); }

void SimContext::expect_known(int node, PacketId id) const {
  if (!knows(node, id))
    throw DecodeError("slot " + std::to_string(slot_) + ", step " + step_ + ": node " + std::to_string(node) +
                      " cannot reconstruct " + id.to_string());
}

std::map<std::string, std::size_t> SimContext::queue_sizes() const {
  std::map<std::string, std::size_t> sizes;
  for (std::size_t i = 0; i < kQueueCount; ++i) sizes[std::string(queue_name(static_cast<Queue>(i)))] = bank_.size(static_cast<Queue>(i));
  for (std::size_t i = 0; i < kCodedQueueCount; ++i)
    sizes[std::string(queue_name(static_cast<CodedQueue>(i)))] = bank_.size(static_cast<CodedQueue>(i));
  return sizes;
}

void SimContext::begin_step(std::string_view step) {
  step_ = std::string(step);
  if (std::find(step_order_.begin(), step_order_.end(), step_) == step_order_.end()) step_order_.push_back(step_);
  result_.queue_snapshots.emplace_back("before:" + step_, queue_sizes());
}

void SimContext::deliver(const Transmission& tx, Reception rx) {
  if (tx.transmitter == 1) {
    const PacketId id = tx.packet.constituents().front();
    std::uint8_t& history = history1_.at(id.index);
    ++history_slots_[history];
    ++tau1_;
    history |= history_index(rx.received);
    if (rx.at(2)) node2_.learn(id, tx.packet.payload());
  } else {
    ++tau2_;
  }
  for (Receiver* r : {&node3_, &node4_}) {
    if (!rx.at(r->node())) continue;
    const int wanted_origin = r->node() - 2;
    const std::size_t which = static_cast<std::size_t>(r->node() - 3);
    for (PacketId id : r->receive(tx.packet)) {
      if (id.origin != wanted_origin) continue;
      ++result_.recovered_in_step[which][step_];
      if (tx.packet.size() > 1 || tx.packet.constituents().front() != id) ++result_.recovered_by_xor[which];
    }
  }
}

void SimContext::finish_slot() {
  ++step_slots_[step_];
  ++slot_;
}

void SimContext::check_conservation() const {
  std::vector<int> count1(config_.k1, 0), count2(config_.k2, 0);
  for (Queue q : {Queue::Q1, Queue::Q1_2_n3n4, Queue::Q1_2_n34, Queue::G1_2n3n4, Queue::S1_2n3n4, Queue::A1_2n34})
    for (PacketId id : bank_[q]) ++count1.at(id.index);
  for (Queue q : {Queue::Q2, Queue::Q2_3n4})
    for (PacketId id : bank_[q]) ++count2.at(id.index);
  for (CodedQueue q : {CodedQueue::AA2_n34, CodedQueue::AA2_34})
    for (const CodedEntry& e : bank_[q]) ++count2.at(e.secondary.index);
  auto fail = [&](PacketId id, int count, bool delivered) {
    throw std::logic_error("conservation violated at slot " + std::to_string(slot_) + ": " + id.to_string() + " held " +
                           std::to_string(count) + " times, delivered=" + (delivered ? "yes" : "no"));
  };
  for (std::uint32_t i = 0; i < config_.k1; ++i) {
    const PacketId id{1, i};
    const bool delivered = node3_.store().knows(id);
    if (count1[i] != (delivered ? 0 : 1)) fail(id, count1[i], delivered);
  }
  for (PacketId id : bank_[Queue::A1_234])
    if (!node3_.store().knows(id)) fail(id, 1, false);
  for (std::uint32_t i = 0; i < config_.k2; ++i) {
    const PacketId id{2, i};
    const bool delivered = node4_.store().knows(id);
    if (count2[i] != (delivered ? 0 : 1)) fail(id, count2[i], delivered);
  }
}

// ---------------------------------------------------------------------------------------------
// run_loop

namespace {

void write_trace(std::ostream& out, const SimContext& ctx, std::uint64_t slot, const Transmission& tx, Reception rx) {
  nlohmann::ordered_json rec;
  rec["slot"] = slot;
  rec["transmitter"] = tx.transmitter;
  rec["step"] = std::string(ctx.step());
  auto ids = nlohmann::json::array();
  for (PacketId id : tx.packet.constituents()) ids.push_back(id.to_string());
  rec["packet_ids"] = ids;
  nlohmann::ordered_json outcome;
  for (int node : {2, 3, 4})
    if (listeners(tx.transmitter).contains(node)) outcome["z" + std::to_string(node)] = rx.at(node) ? 1 : 0;
  rec["erasure_outcome"] = outcome;
  nlohmann::ordered_json sizes;
  for (const auto& [name, size] : ctx.queue_sizes())
    if (size > 0) sizes[name] = size;
  rec["queues_after"] = sizes;
  out << rec.dump() << '\n';
}

bool receiver_complete(const SimContext& ctx, int node) {
  const int origin = node - 2;
  const PacketStore& store = ctx.receiver(node).store();
  const std::size_t k = ctx.originals().count(origin);
  for (std::uint32_t i = 0; i < k; ++i) {
    const PacketId id{static_cast<std::uint8_t>(origin), i};
    if (!store.knows(id)) return false;
    auto got = store.payload(id);
    auto want = ctx.originals().payload(id);
    if (!std::equal(got.begin(), got.end(), want.begin(), want.end())) return false;
  }
  return true;
}

}  // namespace

SimResult run_loop(const SimConfig& config, Policy& policy, ErasureSource* erasures) {
  if (config.k1 + config.k2 == 0) throw ConfigError("k1 + k2 must be at least 1");
  if (config.payload_len == 0) throw ConfigError("payload length must be positive");
  if (config.k1 > UINT32_MAX || config.k2 > UINT32_MAX) throw ConfigError("packet counts exceed 2^32");
  policy.check_reachable(config);

  Rng rng(config.seed);
  SimContext ctx(config, rng);
  ModelErasureSource model_source(config.model, rng);
  ErasureSource& source = erasures ? *erasures : model_source;

  policy.start(ctx);
  bool completed = false;
  for (;;) {
    std::optional<Transmission> tx = policy.next(ctx);
    if (!tx) {
      completed = true;
      break;
    }
    if (config.deadline && ctx.slot() >= *config.deadline) break;
    const Reception rx = source.draw(tx->transmitter);
    ctx.deliver(*tx, rx);
    policy.on_feedback(ctx, *tx, rx);
    const std::uint64_t slot = ctx.slot();
    ctx.finish_slot();
    if (config.trace) write_trace(*config.trace, ctx, slot + 1, *tx, rx);
    if (config.check_invariants) {
      ctx.bank().check_invariants();
      ctx.check_conservation();
    }
  }
  if (completed && !ctx.bank().all_empty()) throw std::logic_error("policy finished with nonempty queues");

  SimResult& result = ctx.result();
  result.total_slots = ctx.slot();
  result.completed = completed;
  for (const std::string& step : ctx.step_order_) {
    auto it = ctx.step_slots_.find(step);
    result.phase_durations.emplace_back(step, it == ctx.step_slots_.end() ? 0 : it->second);
  }
  result.queue_snapshots.emplace_back("end", ctx.queue_sizes());
  result.decoded_ok = {receiver_complete(ctx, 3), receiver_complete(ctx, 4)};
  if (config.deadline) result.deadline_met = completed && result.total_slots <= *config.deadline;

  result.schedule_counters["tau1"] = ctx.tau1_;
  result.schedule_counters["tau2"] = ctx.tau2_;
  // Every conjunctive pattern over nodes 2,3,4: each node required, excluded or free.
  for (int code = 1; code < 27; ++code) {
    NodeSet required, excluded;
    int rest = code;
    for (int node = 2; node <= 4; ++node, rest /= 3) {
      if (rest % 3 == 1) required = required.with(node);
      if (rest % 3 == 2) excluded = excluded.with(node);
    }
    std::uint64_t total = 0;
    for (std::uint8_t h = 0; h < 8; ++h) {
      const NodeSet seen = NodeSet::from_bits(static_cast<std::uint8_t>(h << 2));
      if (required.subset_of(seen) && (seen.bits() & excluded.bits()) == 0) total += ctx.history_slots_[h];
    }
    result.schedule_counters[schedule_counter_name(required, excluded)] = total;
  }
  return std::move(result);
}

}  // namespace ccrn
