#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ccrn/erasure_model.hpp"
#include "ccrn/packet.hpp"
#include "ccrn/queue_bank.hpp"
#include "ccrn/rng.hpp"

namespace ccrn {

struct SimConfig {
  ErasureModel model;
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  std::size_t payload_len = 8;
  std::uint64_t seed = 0;
  /// Slot budget n. When set, the run stops after n slots and records deadline_met.
  std::optional<std::uint64_t> deadline;
  /// Check queue invariants and packet conservation after every slot (slow; for tests).
  bool check_invariants = false;
  /// JSON-lines per-slot trace sink.
  std::ostream* trace = nullptr;
};

struct SimResult {
  std::uint64_t total_slots = 0;
  bool completed = false;
  /// Slots spent in each algorithm step, in step order. Sums to total_slots.
  std::vector<std::pair<std::string, std::uint64_t>> phase_durations;
  /// tau1, tau2 and tau1[pattern] scheduling-time counters; see schedule_counter_name.
  std::map<std::string, std::uint64_t> schedule_counters;
  /// Named event counts recorded by the policy (e.g. "M").
  std::map<std::string, std::uint64_t> events;
  /// Queue sizes captured when each step begins ("before:<step>") and at the end ("end").
  std::vector<std::pair<std::string, std::map<std::string, std::size_t>>> queue_snapshots;
  /// Receivers 3 and 4 hold every packet destined to them, byte-identical to the original.
  std::array<bool, 2> decoded_ok{false, false};
  /// Destination packets recovered per step label, per receiver (index 0: node 3, 1: node 4).
  std::array<std::map<std::string, std::uint64_t>, 2> recovered_in_step;
  /// Destination packets recovered by XOR decoding rather than a plain reception.
  std::array<std::uint64_t, 2> recovered_by_xor{0, 0};
  std::optional<bool> deadline_met;

  std::uint64_t phase(std::string_view step) const;
  std::uint64_t counter(const std::string& name) const;
  std::size_t snapshot(std::string_view when, Queue q) const;
  bool all_decoded() const { return decoded_ok[0] && decoded_ok[1]; }
};

/// Name of the counter of node-1 slots whose transmitted packet has the given reception history
/// among nodes 2,3,4 (from earlier node-1 transmissions). `required` nodes must have received it,
/// `excluded` nodes must not have. Example: required {2}, excluded {3} -> "tau1[2&!3]".
std::string schedule_counter_name(NodeSet required, NodeSet excluded);

/// Receiving node with a peeling XOR decoder. Keeps coded packets it cannot decode yet and
/// resolves them as soon as a missing constituent becomes known.
class Receiver {
public:
  Receiver(int node, std::size_t k1, std::size_t k2, std::size_t payload_len);

  int node() const { return node_; }
  const PacketStore& store() const { return store_; }

  /// Returns the packets newly learned through this reception (directly or by peeling).
  std::vector<PacketId> receive(const CodedPacket& packet);

  std::size_t pending() const { return pending_count_; }

private:
  void learn_cascade(PacketId first, std::vector<std::uint8_t> payload, std::vector<PacketId>& learned);

  int node_;
  PacketStore store_;
  std::vector<std::optional<CodedPacket>> pending_;
  std::size_t pending_count_ = 0;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> waiting_;
};

/// One scheduled slot: the transmitter and the (possibly coded) packet it sends.
struct Transmission {
  int transmitter = 1;
  CodedPacket packet;
};

/// Source of per-slot reception outcomes.
class ErasureSource {
public:
  virtual ~ErasureSource() = default;
  virtual Reception draw(int transmitter) = 0;
};

class ModelErasureSource final : public ErasureSource {
public:
  ModelErasureSource(const ErasureModel& model, Rng& rng) : model_(model), rng_(rng) {}
  Reception draw(int transmitter) override { return model_.sample(transmitter, rng_); }

private:
  const ErasureModel& model_;
  Rng& rng_;
};

/// Replays a fixed outcome sequence; throws ConfigError when exhausted.
class ScriptedErasureSource final : public ErasureSource {
public:
  explicit ScriptedErasureSource(std::vector<Reception> outcomes) : outcomes_(std::move(outcomes)) {}
  Reception draw(int transmitter) override;

private:
  std::vector<Reception> outcomes_;
  std::size_t next_ = 0;
};

/// Mutable state of one run shared between the slot loop and the policy.
class SimContext {
public:
  SimContext(const SimConfig& config, Rng& rng);

  const SimConfig& config() const { return config_; }
  const ErasureModel& model() const { return config_.model; }
  QueueBank& bank() { return bank_; }
  const QueueBank& bank() const { return bank_; }
  Rng& rng() { return rng_; }
  std::uint64_t slot() const { return slot_; }

  /// Builds node 1's uncoded transmission of one of its own packets.
  Transmission from_node1(PacketId id) const;
  /// Builds node 2's transmission of one packet or the XOR of two, from what node 2 holds.
  Transmission from_node2(PacketId a, std::optional<PacketId> b = std::nullopt) const;

  /// Throws DecodeError unless `node` (3 or 4) can reconstruct `id`.
  void expect_known(int node, PacketId id) const;
  bool knows(int node, PacketId id) const;

  void begin_step(std::string_view step);
  std::string_view step() const { return step_; }
  void count_event(const std::string& name, std::uint64_t by = 1) { result_.events[name] += by; }

  // Used by run_loop.
  void deliver(const Transmission& tx, Reception rx);
  void finish_slot();
  SimResult& result() { return result_; }
  const Receiver& receiver(int node) const;
  const PacketStore& node2_store() const { return node2_; }
  const PacketStore& originals() const { return originals_; }
  void check_conservation() const;
  std::map<std::string, std::size_t> queue_sizes() const;

private:
  const SimConfig& config_;
  Rng& rng_;
  QueueBank bank_;
  PacketStore originals_;
  PacketStore node2_;
  Receiver node3_;
  Receiver node4_;
  std::vector<std::uint8_t> history1_;
  std::array<std::uint64_t, 8> history_slots_{};
  std::uint64_t tau1_ = 0;
  std::uint64_t tau2_ = 0;
  std::uint64_t slot_ = 0;
  std::string step_;
  std::map<std::string, std::uint64_t> step_slots_;
  std::vector<std::string> step_order_;
  SimResult result_;

  friend SimResult run_loop(const SimConfig&, class Policy&, ErasureSource*);
};

/// A coding/scheduling algorithm as a step machine over the QueueBank.
class Policy {
public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  /// Throws ConfigError when some phase the run will need can never complete.
  virtual void check_reachable(const SimConfig& config) const = 0;
  /// Loads the initial queues. Called once before the first slot.
  virtual void start(SimContext& ctx) = 0;
  /// Transmission for the current slot, or nullopt when every packet is delivered.
  /// May perform zero-slot transitions (step changes, batch coin draws).
  virtual std::optional<Transmission> next(SimContext& ctx) = 0;
  /// Applies the public feedback of the slot's transmission to the queues.
  virtual void on_feedback(SimContext& ctx, const Transmission& tx, Reception rx) = 0;
};

/// Simulates slot by slot until the policy reports completion (or the deadline passes).
/// Erasures come from the config's model and seed unless `erasures` is given.
SimResult run_loop(const SimConfig& config, Policy& policy, ErasureSource* erasures = nullptr);

}  // namespace ccrn
