#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "roamsim/types.hpp"

namespace roamsim::tunnel {

inline constexpr std::uint8_t kMagic0 = 0xC3;
inline constexpr std::uint8_t kMagic1 = 0x1A;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 26;

enum class FrameDirection : std::uint8_t { Ul = 0, Dl = 1 };

// Wire layout (big-endian):
//   0  magic C3 1A
//   2  version
//   3  flags: bit0 direction, bits1-2 rat id (0 WIFI, 1 CBRS), bit3 duplicate, bit4 probe
//   4  session_id u64
//  12  seq u32
//  16  timestamp_ms u64
//  24  payload_len u16
//  26  payload
struct TunnelFrame {
    FrameDirection direction = FrameDirection::Ul;
    Rat rat = Rat::Wifi;
    bool duplicate = false;
    bool probe = false;
    std::uint64_t session_id = 0;
    std::uint32_t seq = 0;
    std::uint64_t timestamp_ms = 0;
    std::vector<std::uint8_t> payload;

    friend bool operator==(const TunnelFrame&, const TunnelFrame&) = default;
};

class FrameError : public std::runtime_error {
public:
    FrameError(std::string field, const std::string& what) : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

std::uint8_t rat_id(Rat rat);
Rat rat_from_id(std::uint8_t id);

std::vector<std::uint8_t> encode_frame(const TunnelFrame& frame);
void encode_frame_into(const TunnelFrame& frame, std::vector<std::uint8_t>& out);
TunnelFrame decode_frame(std::span<const std::uint8_t> bytes);

}  // namespace roamsim::tunnel
