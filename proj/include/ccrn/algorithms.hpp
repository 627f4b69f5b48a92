#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccrn/simulator.hpp"

namespace ccrn {

/// Branching probabilities of Algorithm 2: g (node 1 relays), s (node 2 codes) and u (node 1
/// finishes doubly-received coded packets).
struct MixParams {
  double g = 0.0;
  double s = 0.0;
  double u = 0.0;

  /// Throws DomainError unless g >= 0, s >= 0, g + s <= 1 and u in [0,1].
  void validate() const;
};

/// Runs an ordered list of steps; a step is left for good once it has nothing to send.
class StepMachinePolicy : public Policy {
public:
  std::optional<Transmission> next(SimContext& ctx) final;
  void on_feedback(SimContext& ctx, const Transmission& tx, Reception rx) final;
  const std::string& current_step() const;

protected:
  explicit StepMachinePolicy(std::vector<std::string> steps) : steps_(std::move(steps)) {}

  virtual void on_enter(SimContext& /*ctx*/, std::size_t /*step*/) {}
  virtual std::optional<Transmission> transmission(SimContext& ctx, std::size_t step) = 0;
  virtual void feedback(SimContext& ctx, std::size_t step, const Transmission& tx, Reception rx) = 0;

private:
  std::vector<std::string> steps_;
  std::size_t current_ = 0;
  bool entered_ = false;
};

/// Four steps: node 1 sends until 2 or 3 hears (marking packets node 4 overheard), node 2
/// relays packets only it holds, node 2 sends its own packets, then node 2 XORs a
/// primary packet node 4 holds with a secondary packet node 3 holds.
class Algorithm1Policy final : public StepMachinePolicy {
public:
  Algorithm1Policy();
  std::string_view name() const override { return "alg1"; }
  void check_reachable(const SimConfig& config) const override;
  void start(SimContext& ctx) override;

private:
  std::optional<Transmission> transmission(SimContext& ctx, std::size_t step) override;
  void feedback(SimContext& ctx, std::size_t step, const Transmission& tx, Reception rx) override;
};

/// Eight steps. Extends Algorithm 1 with a per-packet three-way split of the packets only node 2
/// holds: relayed by node 1 (probability g), sent by node 2 XORed with a secondary packet node 3
/// already holds (probability s), or relayed by node 2 as in Algorithm 1.
///
/// Coded transmissions that reach node 4 but not node 3 are finished by node 1 resending the
/// primary constituent. Coded packets heard by both receivers are finished by node 1 with
/// probability u; otherwise their secondary constituent rejoins the XOR endgame.
///
/// If the coded step runs out of secondary partners while selected packets remain, the rest
/// are relayed uncoded by node 2 until node 3 or 4 hears them.
class Algorithm2Policy final : public StepMachinePolicy {
public:
  explicit Algorithm2Policy(MixParams params);
  std::string_view name() const override { return "alg2"; }
  void check_reachable(const SimConfig& config) const override;
  void start(SimContext& ctx) override;
  const MixParams& params() const { return params_; }

private:
  void on_enter(SimContext& ctx, std::size_t step) override;
  std::optional<Transmission> transmission(SimContext& ctx, std::size_t step) override;
  void feedback(SimContext& ctx, std::size_t step, const Transmission& tx, Reception rx) override;

  MixParams params_;
};

/// "alg1" or "alg2" (params are ignored for alg1).
std::unique_ptr<Policy> make_policy(std::string_view algorithm, const MixParams& params = {});

}  // namespace ccrn
