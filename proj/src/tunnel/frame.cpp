#include "roamsim/tunnel/frame.hpp"

namespace roamsim::tunnel {

namespace {

constexpr std::uint8_t kDirBit = 0x01;
constexpr std::uint8_t kRatMask = 0x06;
constexpr std::uint8_t kDupBit = 0x08;
constexpr std::uint8_t kProbeBit = 0x10;
constexpr std::uint8_t kReserved = 0xE0;

template <typename T>
void put_be(std::vector<std::uint8_t>& out, T v) {
    for (int shift = 8 * (static_cast<int>(sizeof(T)) - 1); shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(v >> shift));
}

template <typename T>
T get_be(std::span<const std::uint8_t> b, std::size_t at) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v = static_cast<T>((v << 8) | b[at + i]);
    return v;
}

}  // namespace

std::uint8_t rat_id(Rat rat) {
    switch (rat) {
        case Rat::Wifi: return 0;
        case Rat::Cbrs: return 1;
        default: throw std::invalid_argument("tunnel frames carry only WIFI or CBRS");
    }
}

Rat rat_from_id(std::uint8_t id) {
    if (id == 0) return Rat::Wifi;
    if (id == 1) return Rat::Cbrs;
    throw FrameError("flags", "flags: unknown rat id " + std::to_string(id));
}

void encode_frame_into(const TunnelFrame& f, std::vector<std::uint8_t>& out) {
    if (f.payload.size() > 0xFFFF) throw std::invalid_argument("payload exceeds 65535 bytes");
    if (f.probe && !f.payload.empty()) throw std::invalid_argument("probe frames carry no payload");
    out.clear();
    out.reserve(kHeaderSize + f.payload.size());
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(kVersion);
    std::uint8_t flags = static_cast<std::uint8_t>(rat_id(f.rat) << 1);
    if (f.direction == FrameDirection::Dl) flags |= kDirBit;
    if (f.duplicate) flags |= kDupBit;
    if (f.probe) flags |= kProbeBit;
    out.push_back(flags);
    put_be(out, f.session_id);
    put_be(out, f.seq);
    put_be(out, f.timestamp_ms);
    put_be(out, static_cast<std::uint16_t>(f.payload.size()));
    out.insert(out.end(), f.payload.begin(), f.payload.end());
}

std::vector<std::uint8_t> encode_frame(const TunnelFrame& frame) {
    std::vector<std::uint8_t> out;
    encode_frame_into(frame, out);
    return out;
}

TunnelFrame decode_frame(std::span<const std::uint8_t> b) {
    if (b.size() < kHeaderSize) throw FrameError("header", "short header");
    if (b[0] != kMagic0 || b[1] != kMagic1) throw FrameError("magic", "bad magic");
    if (b[2] != kVersion) throw FrameError("version", "unsupported version " + std::to_string(b[2]));
    const std::uint8_t flags = b[3];
    if (flags & kReserved) throw FrameError("flags", "flags: reserved bits set");
    TunnelFrame f;
    f.direction = (flags & kDirBit) ? FrameDirection::Dl : FrameDirection::Ul;
    f.rat = rat_from_id(static_cast<std::uint8_t>((flags & kRatMask) >> 1));
    f.duplicate = (flags & kDupBit) != 0;
    f.probe = (flags & kProbeBit) != 0;
    f.session_id = get_be<std::uint64_t>(b, 4);
    f.seq = get_be<std::uint32_t>(b, 12);
    f.timestamp_ms = get_be<std::uint64_t>(b, 16);
    const auto len = get_be<std::uint16_t>(b, 24);
    if (b.size() < kHeaderSize + len) throw FrameError("payload_len", "payload_len exceeds frame: truncated payload");
    if (b.size() > kHeaderSize + len) throw FrameError("payload_len", "payload_len short of frame: trailing bytes");
    if (f.probe && len != 0) throw FrameError("payload_len", "payload_len must be 0 on probe frames");
    f.payload.assign(b.begin() + kHeaderSize, b.end());
    return f;
}

}  // namespace roamsim::tunnel
