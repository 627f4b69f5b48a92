#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ccrn {

/// Identity of an original packet: the message it belongs to (origin node 1 or 2) and its
/// ordinal within that message.
struct PacketId {
  std::uint8_t origin = 1;
  std::uint32_t index = 0;

  friend constexpr bool operator==(PacketId, PacketId) = default;
  friend constexpr auto operator<=>(PacketId, PacketId) = default;

  std::string to_string() const;
};

using Payload = std::vector<std::uint8_t>;

struct Packet {
  PacketId id;
  Payload payload;
};

/// XOR of one or two original packets, with the provenance needed to decode it.
class CodedPacket {
public:
  CodedPacket() = default;
  explicit CodedPacket(const Packet& p);

  std::span<const PacketId> constituents() const { return {ids_.data(), count_}; }
  std::size_t size() const { return count_; }
  bool contains(PacketId id) const;
  const Payload& payload() const { return payload_; }

  friend CodedPacket xor_combine(const CodedPacket& a, const Packet& b);

private:
  std::array<PacketId, 2> ids_{};
  std::size_t count_ = 0;
  Payload payload_;
};

/// a XOR b; the constituent set is the union. Throws DomainError on a payload length mismatch,
/// a repeated constituent, or more than two constituents.
CodedPacket xor_combine(const CodedPacket& a, const Packet& b);
inline CodedPacket xor_combine(const Packet& a, const Packet& b) { return xor_combine(CodedPacket(a), b); }

void xor_into(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src);

/// Payloads of the original packets one node holds.
class PacketStore {
public:
  PacketStore(std::size_t k1, std::size_t k2, std::size_t payload_len);

  bool knows(PacketId id) const { return known_[slot(id)]; }
  std::span<const std::uint8_t> payload(PacketId id) const;
  /// Records a payload; returns false when the packet was already known.
  bool learn(PacketId id, std::span<const std::uint8_t> payload);
  Packet packet(PacketId id) const;

  std::size_t payload_len() const { return len_; }
  std::size_t count(int origin) const { return origin == 1 ? k1_ : k2_; }
  std::size_t known_count(int origin) const { return origin == 1 ? known1_ : known2_; }

private:
  std::size_t slot(PacketId id) const;

  std::size_t k1_, k2_, len_;
  std::size_t known1_ = 0, known2_ = 0;
  std::vector<bool> known_;
  std::vector<std::uint8_t> bytes_;
};

/// Extracts the single constituent of `received` missing from `side_info`, reconstructing its
/// payload by XOR. Throws DecodeError when more than one constituent is unknown and DomainError
/// when nothing is unknown.
Packet decode_at_receiver(const CodedPacket& received, const PacketStore& side_info);

}  // namespace ccrn
