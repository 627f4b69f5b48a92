#include "ccrn/queue_bank.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace ccrn {

std::string_view queue_name(Queue q) {
  switch (q) {
    case Queue::Q1: return "Q_1";
    case Queue::Q2: return "Q_2";
    case Queue::Q1_2_n3n4: return "Q^1_{2,~3~4}";
    case Queue::Q1_2_n34: return "Q^1_{2,~34}";
    case Queue::Q1_4_2n3: return "Q^1_{4,2~3}";
    case Queue::Q2_3n4: return "Q_{2,3~4}";
    case Queue::Q2_3_n4: return "Q^2_{3,~4}";
    case Queue::B1_4_n2n3: return "B^1_{4,~2~3}";
    case Queue::G1_2n3n4: return "G_{1,2~3~4}";
    case Queue::G2_n3n4: return "G^1_{2,~3~4}";
    case Queue::S1_2n3n4: return "S_{1,2~3~4}";
    case Queue::S2_n3n4: return "S^1_{2,~3~4}";
    case Queue::A1_2n34: return "A_{1,2~34}";
    case Queue::A1_234: return "A_{1,234}";
    case Queue::kCount: break;
  }
  return "?";
}

std::string_view queue_name(CodedQueue q) {
  switch (q) {
    case CodedQueue::AA2_n34: return "AA_{2,~34}";
    case CodedQueue::AA2_34: return "AA_{2,34}";
    case CodedQueue::AA4_n3: return "AA^2_{4,~3}";
    case CodedQueue::AA4_3: return "AA^2_{4,3}";
    case CodedQueue::kCount: break;
  }
  return "?";
}

bool QueueBank::all_empty() const {
  return std::all_of(plain_.begin(), plain_.end(), [](const auto& d) { return d.empty(); }) &&
         std::all_of(coded_.begin(), coded_.end(), [](const auto& d) { return d.empty(); });
}

bool QueueBank::erase(Queue q, PacketId id) {
  auto& d = (*this)[q];
  auto it = std::find(d.begin(), d.end(), id);
  if (it == d.end()) return false;
  d.erase(it);
  return true;
}

std::optional<CodedEntry> QueueBank::take_by_primary(CodedQueue q, PacketId primary) {
  auto& d = (*this)[q];
  auto it = std::find_if(d.begin(), d.end(), [&](const CodedEntry& e) { return e.primary == primary; });
  if (it == d.end()) return std::nullopt;
  CodedEntry e = *it;
  d.erase(it);
  return e;
}

namespace {

[[noreturn]] void violated(const std::string& what) { throw std::logic_error("queue invariant violated: " + what); }

template <typename Deque>
void require_mirror(const Deque& a, const Deque& b, std::string_view na, std::string_view nb) {
  if (!std::equal(a.begin(), a.end(), b.begin(), b.end()))
    violated(std::string(na) + " and " + std::string(nb) + " differ");
}

}  // namespace

void QueueBank::check_invariants() const {
  const auto& self = *this;
  require_mirror(self[Queue::Q1_2_n34], self[Queue::Q1_4_2n3], queue_name(Queue::Q1_2_n34), queue_name(Queue::Q1_4_2n3));
  require_mirror(self[Queue::Q2_3n4], self[Queue::Q2_3_n4], queue_name(Queue::Q2_3n4), queue_name(Queue::Q2_3_n4));
  require_mirror(self[Queue::G1_2n3n4], self[Queue::G2_n3n4], queue_name(Queue::G1_2n3n4), queue_name(Queue::G2_n3n4));
  require_mirror(self[Queue::S1_2n3n4], self[Queue::S2_n3n4], queue_name(Queue::S1_2n3n4), queue_name(Queue::S2_n3n4));
  require_mirror(self[CodedQueue::AA2_n34], self[CodedQueue::AA4_n3], queue_name(CodedQueue::AA2_n34),
                 queue_name(CodedQueue::AA4_n3));
  require_mirror(self[CodedQueue::AA2_34], self[CodedQueue::AA4_3], queue_name(CodedQueue::AA2_34),
                 queue_name(CodedQueue::AA4_3));

  const auto& marked = self[Queue::B1_4_n2n3];
  if (marked.size() > 1) violated("B^1_{4,~2~3} holds more than one packet");
  if (!marked.empty() && (self[Queue::Q1].empty() || self[Queue::Q1].front() != marked.front()))
    violated("marked packet is not the head of Q_1");

  auto primaries_match = [&](CodedQueue cq, Queue pq) {
    const auto& coded = self[cq];
    const auto& plain = self[pq];
    if (coded.size() != plain.size()) violated(std::string(queue_name(cq)) + " size differs from " + std::string(queue_name(pq)));
    for (std::size_t i = 0; i < coded.size(); ++i)
      if (coded[i].primary != plain[i])
        violated(std::string(queue_name(cq)) + " constituent not listed in " + std::string(queue_name(pq)));
  };
  primaries_match(CodedQueue::AA2_n34, Queue::A1_2n34);
  primaries_match(CodedQueue::AA2_34, Queue::A1_234);

  std::unordered_set<std::uint64_t> seen;
  auto visit = [&](PacketId id, std::string_view where) {
    const std::uint64_t key = (static_cast<std::uint64_t>(id.origin) << 32) | id.index;
    if (!seen.insert(key).second) violated(id.to_string() + " appears twice (last in " + std::string(where) + ")");
  };
  for (Queue q : {Queue::Q1, Queue::Q2, Queue::Q1_2_n3n4, Queue::Q1_2_n34, Queue::Q2_3n4, Queue::G1_2n3n4,
                  Queue::S1_2n3n4, Queue::A1_2n34, Queue::A1_234})
    for (PacketId id : self[q]) visit(id, queue_name(q));
  for (CodedQueue q : {CodedQueue::AA2_n34, CodedQueue::AA2_34})
    for (const CodedEntry& e : self[q]) visit(e.secondary, queue_name(q));
}

}  // namespace ccrn
