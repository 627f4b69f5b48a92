#include "ccrn/packet.hpp"

#include <algorithm>

#include "ccrn/errors.hpp"

namespace ccrn {

std::string PacketId::to_string() const {
  return "w" + std::to_string(origin) + "." + std::to_string(index);
}

CodedPacket::CodedPacket(const Packet& p) : count_(1), payload_(p.payload) { ids_[0] = p.id; }

bool CodedPacket::contains(PacketId id) const {
  return std::find(ids_.begin(), ids_.begin() + count_, id) != ids_.begin() + count_;
}

void xor_into(std::span<std::uint8_t> dst, std::span<const std::uint8_t> src) {
  if (dst.size() != src.size())
    throw DomainError("payload length mismatch: " + std::to_string(dst.size()) + " vs " + std::to_string(src.size()));
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
}

CodedPacket xor_combine(const CodedPacket& a, const Packet& b) {
  if (a.count_ == 0) return CodedPacket(b);
  if (a.payload_.size() != b.payload.size())
    throw DomainError("payload length mismatch: " + std::to_string(a.payload_.size()) + " vs " +
                      std::to_string(b.payload.size()));
  if (a.contains(b.id)) throw DomainError("packet " + b.id.to_string() + " is already a constituent");
  if (a.count_ >= 2) throw DomainError("coded packets carry at most two constituents");
  CodedPacket out = a;
  out.ids_[out.count_++] = b.id;
  xor_into(out.payload_, b.payload);
  return out;
}

PacketStore::PacketStore(std::size_t k1, std::size_t k2, std::size_t payload_len)
    : k1_(k1), k2_(k2), len_(payload_len), known_(k1 + k2, false), bytes_((k1 + k2) * payload_len, 0) {}

std::size_t PacketStore::slot(PacketId id) const {
  if (id.origin == 1 && id.index < k1_) return id.index;
  if (id.origin == 2 && id.index < k2_) return k1_ + id.index;
  throw DomainError("packet " + id.to_string() + " is outside this run");
}

std::span<const std::uint8_t> PacketStore::payload(PacketId id) const {
  const std::size_t s = slot(id);
  if (!known_[s]) throw DecodeError("payload of " + id.to_string() + " is not held");
  return {bytes_.data() + s * len_, len_};
}

bool PacketStore::learn(PacketId id, std::span<const std::uint8_t> payload) {
  if (payload.size() != len_) throw DomainError("payload length mismatch on learn");
  const std::size_t s = slot(id);
  if (known_[s]) return false;
  std::copy(payload.begin(), payload.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(s * len_));
  known_[s] = true;
  ++(id.origin == 1 ? known1_ : known2_);
  return true;
}

Packet PacketStore::packet(PacketId id) const {
  auto bytes = payload(id);
  return {id, Payload(bytes.begin(), bytes.end())};
}

Packet decode_at_receiver(const CodedPacket& received, const PacketStore& side_info) {
  const PacketId* missing = nullptr;
  std::size_t unknown = 0;
  for (const PacketId& id : received.constituents()) {
    if (!side_info.knows(id)) {
      missing = &id;
      ++unknown;
    }
  }
  if (unknown > 1) throw DecodeError("coded packet has " + std::to_string(unknown) + " unknown constituents");
  if (unknown == 0) throw DomainError("coded packet carries nothing new");
  Packet out{*missing, received.payload()};
  for (const PacketId& id : received.constituents())
    if (id != *missing) xor_into(out.payload, side_info.payload(id));
  return out;
}

}  // namespace ccrn
