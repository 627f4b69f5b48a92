#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <string_view>

#include "ccrn/packet.hpp"

namespace ccrn {

// Queue naming follows X^{origin}_{location, received/~erased}: Q1_2_n34 is located at node 2,
// holds origin-1 packets erased at 3 and received by 4. Queues without an origin superscript
// hold the location's own packets.
enum class Queue : int {
  Q1,
  Q2,
  Q1_2_n3n4,  // node 2: origin 1, erased at 3 and 4
  Q1_2_n34,   // node 2: origin 1, erased at 3, received by 4
  Q1_4_2n3,   // node 4 mirror of Q1_2_n34
  Q2_3n4,     // node 2: own packets received by 3, erased at 4
  Q2_3_n4,    // node 3 mirror of Q2_3n4
  B1_4_n2n3,  // node 1 "marked" buffer (at most one packet)
  G1_2n3n4,   // node 1: packets node 1 will relay itself
  G2_n3n4,    // node 2 mirror of G1_2n3n4
  S1_2n3n4,   // node 1: packets node 2 will send coded
  S2_n3n4,    // node 2 mirror of S1_2n3n4
  A1_2n34,    // node 1: origin-1 constituents of AA2_n34
  A1_234,     // node 1: origin-1 constituents of AA2_34
  kCount
};

/// A coded packet parked in a bold-A queue: s (origin 1) XOR q (origin 2).
struct CodedEntry {
  PacketId primary;
  PacketId secondary;
  friend bool operator==(const CodedEntry&, const CodedEntry&) = default;
};

enum class CodedQueue : int {
  AA2_n34,  // node 2: coded, erased at 3, received by 4
  AA2_34,   // node 2: coded, received by 3 and 4
  AA4_n3,   // node 4 mirror of AA2_n34
  AA4_3,    // node 4 mirror of AA2_34
  kCount
};

inline constexpr std::size_t kQueueCount = static_cast<std::size_t>(Queue::kCount);
inline constexpr std::size_t kCodedQueueCount = static_cast<std::size_t>(CodedQueue::kCount);

std::string_view queue_name(Queue q);
std::string_view queue_name(CodedQueue q);

/// FIFO queues of the coding/scheduling algorithms. Front is head of line.
class QueueBank {
public:
  std::deque<PacketId>& operator[](Queue q) { return plain_[static_cast<std::size_t>(q)]; }
  const std::deque<PacketId>& operator[](Queue q) const { return plain_[static_cast<std::size_t>(q)]; }
  std::deque<CodedEntry>& operator[](CodedQueue q) { return coded_[static_cast<std::size_t>(q)]; }
  const std::deque<CodedEntry>& operator[](CodedQueue q) const { return coded_[static_cast<std::size_t>(q)]; }

  std::size_t size(Queue q) const { return (*this)[q].size(); }
  std::size_t size(CodedQueue q) const { return (*this)[q].size(); }
  bool empty(Queue q) const { return (*this)[q].empty(); }
  bool empty(CodedQueue q) const { return (*this)[q].empty(); }
  bool all_empty() const;

  /// Removes the first occurrence of `id`; returns whether it was present.
  bool erase(Queue q, PacketId id);
  /// Removes and returns the first coded entry whose origin-1 constituent is `primary`.
  std::optional<CodedEntry> take_by_primary(CodedQueue q, PacketId primary);

  /// Mirror equality, the one-packet buffer bound, coded-queue/constituent consistency and
  /// disjointness of the representative queues. Throws std::logic_error naming the violation.
  void check_invariants() const;

private:
  std::array<std::deque<PacketId>, kQueueCount> plain_;
  std::array<std::deque<CodedEntry>, kCodedQueueCount> coded_;
};

}  // namespace ccrn
