#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "ccrn/rng.hpp"

namespace ccrn {

using Rational = boost::multiprecision::cpp_rational;

/// Bitmask over listener nodes; bit j is set when node j (2, 3 or 4) is in the set.
class NodeSet {
public:
  constexpr NodeSet() = default;
  constexpr NodeSet(std::initializer_list<int> nodes) {
    for (int n : nodes) bits_ |= static_cast<std::uint8_t>(1u << n);
  }
  static constexpr NodeSet from_bits(std::uint8_t bits) {
    NodeSet s;
    s.bits_ = bits;
    return s;
  }

  constexpr bool contains(int node) const { return (bits_ >> node) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool subset_of(NodeSet other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr NodeSet with(int node) const { return from_bits(bits_ | static_cast<std::uint8_t>(1u << node)); }

  friend constexpr bool operator==(NodeSet, NodeSet) = default;

  std::string to_string() const;

private:
  std::uint8_t bits_ = 0;
};

inline constexpr NodeSet kListeners1{2, 3, 4};
inline constexpr NodeSet kListeners2{3, 4};

/// Listeners of a transmitter: N1 = {2,3,4}, N2 = {3,4}.
NodeSet listeners(int transmitter);

/// Outcome of one transmission: the set of listeners that received it.
struct Reception {
  NodeSet received;
  bool at(int node) const { return received.contains(node); }
  bool erased_at(int node) const { return !received.contains(node); }
};

/// Per-slot erasure statistics of the two transmitters.
///
/// The primitives are the joint pmfs of the reception indicators, so arbitrary
/// within-slot correlation is representable. Node-1 outcomes are indexed
/// 4*z2 + 2*z3 + z4 and node-2 outcomes 2*z3 + z4 (z = 1 means received).
/// Optionally carries exact rational masses, used by classify_case for
/// tie-exact comparisons.
class ErasureModel {
public:
  using Node1Pmf = std::array<double, 8>;
  using Node2Pmf = std::array<double, 4>;
  using ExactNode1Pmf = std::array<Rational, 8>;
  using ExactNode2Pmf = std::array<Rational, 4>;

  /// Erasure-free channel: every transmission reaches every listener.
  ErasureModel();

  static ErasureModel joint(const Node1Pmf& node1, const Node2Pmf& node2);
  static ErasureModel joint_exact(const ExactNode1Pmf& node1, const ExactNode2Pmf& node2);
  static ErasureModel independent(double e12, double e13, double e14, double e23, double e24);
  static ErasureModel independent_exact(const Rational& e12, const Rational& e13, const Rational& e14,
                                        const Rational& e23, const Rational& e24);

  const Node1Pmf& node1_joint() const { return node1_; }
  const Node2Pmf& node2_joint() const { return node2_; }
  bool has_exact() const { return exact1_.has_value(); }

  /// Probability that a transmission of `transmitter` is erased at every node of `set`.
  double erasure_prob(int transmitter, NodeSet set) const;
  Rational exact_erasure_prob(int transmitter, NodeSet set) const;

  Reception sample(int transmitter, Rng& rng) const;

private:
  void build_cdf();

  Node1Pmf node1_{};
  Node2Pmf node2_{};
  std::array<double, 8> cdf1_{};
  std::array<double, 4> cdf2_{};
  std::optional<ExactNode1Pmf> exact1_;
  std::optional<ExactNode2Pmf> exact2_;
};

/// Shorthand accessor: eps(m, 1, {2,3}) is the probability a node-1 packet is erased at 2 and 3.
inline double eps(const ErasureModel& m, int transmitter, NodeSet set) {
  return m.erasure_prob(transmitter, set);
}

enum class CaseLabel { Case1, Case2, Case3 };

std::string_view to_string(CaseLabel c);

/// Throws PreconditionError naming the first violated standing assumption of the region
/// formulas (cooperation beneficial, every denominator strictly positive).
void check_region_preconditions(const ErasureModel& model);

/// Which of the three capacity-region regimes the model falls in.
CaseLabel classify_case(const ErasureModel& model);

/// Tolerance used for floating comparisons in classify_case.
inline constexpr double kCaseTolerance = 1e-12;

/// Parses "0.15", "-2.5e-3" or "3/20" into an exact rational.
Rational parse_rational(std::string_view text);

}  // namespace ccrn
