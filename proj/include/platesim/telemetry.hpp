#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <variant>

#include "platesim/detector.hpp"
#include "platesim/geometry.hpp"

namespace platesim {

// Wire layout, little-endian, 20 bytes:
//   [0..1]   magic 0xC4 0xAF
//   [2]      version 0x01
//   [3..4]   seq u16
//   [5..8]   timestamp_ms u32
//   [9..11]  x_mm, 24-bit two's complement
//   [12..14] y_mm, 24-bit two's complement
//   [15..16] yaw_cdeg i16, -17999..18000
//   [17]     label (0 background, 1 plate)
//   [18]     confidence_q8
//   [19]     crc8 over bytes 0..18, polynomial 0x07, init 0x00
inline constexpr std::size_t kFrameSize = 20;
inline constexpr std::uint8_t kMagic0 = 0xC4;
inline constexpr std::uint8_t kMagic1 = 0xAF;
inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::int16_t kYawCdegMin = -17999;
inline constexpr std::int16_t kYawCdegMax = 18000;
inline constexpr std::int32_t kCoordMmMin = -(1 << 23);
inline constexpr std::int32_t kCoordMmMax = (1 << 23) - 1;

using Frame = std::array<std::uint8_t, kFrameSize>;

struct TelemetryPacket {
  std::uint16_t seq{0};
  std::uint32_t timestamp_ms{0};
  std::int32_t x_mm{0};
  std::int32_t y_mm{0};
  std::int16_t yaw_cdeg{0};
  std::uint8_t label{0};
  std::uint8_t confidence_q8{0};

  bool valid() const {
    return yaw_cdeg >= kYawCdegMin && yaw_cdeg <= kYawCdegMax && label <= 1 && x_mm >= kCoordMmMin &&
           x_mm <= kCoordMmMax && y_mm >= kCoordMmMin && y_mm <= kCoordMmMax;
  }
  bool operator==(const TelemetryPacket&) const = default;
};

enum class DecodeError { BadMagic, BadVersion, BadCrc, BadRange };

inline constexpr std::string_view decode_error_name(DecodeError e) {
  switch (e) {
    case DecodeError::BadMagic: return "BadMagic";
    case DecodeError::BadVersion: return "BadVersion";
    case DecodeError::BadCrc: return "BadCrc";
    case DecodeError::BadRange: return "BadRange";
  }
  return "?";
}

using DecodeResult = std::variant<TelemetryPacket, DecodeError>;

namespace detail {

inline constexpr std::array<std::uint8_t, 256> make_crc8_table() {
  std::array<std::uint8_t, 256> t{};
  for (int i = 0; i < 256; ++i) {
    auto c = static_cast<std::uint8_t>(i);
    for (int b = 0; b < 8; ++b) {
      c = static_cast<std::uint8_t>((c & 0x80) ? (c << 1) ^ 0x07 : (c << 1));
    }
    t[static_cast<std::size_t>(i)] = c;
  }
  return t;
}

inline constexpr auto kCrc8Table = make_crc8_table();

template <typename T>
void put_le(std::uint8_t* out, T v) {
  auto u = static_cast<std::make_unsigned_t<T>>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<std::uint8_t>(u >> (8 * i));
  }
}

template <typename T>
T get_le(const std::uint8_t* in) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u = static_cast<std::make_unsigned_t<T>>(u | (static_cast<std::make_unsigned_t<T>>(in[i]) << (8 * i)));
  }
  return static_cast<T>(u);
}

inline double round_half_up(double v) { return std::floor(v + 0.5); }

}  // namespace detail

inline std::uint8_t crc8(std::span<const std::uint8_t> bytes) {
  std::uint8_t crc = 0x00;
  for (std::uint8_t b : bytes) {
    crc = detail::kCrc8Table[static_cast<std::uint8_t>(crc ^ b)];
  }
  return crc;
}

inline void put_i24(std::uint8_t* out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  out[0] = static_cast<std::uint8_t>(u);
  out[1] = static_cast<std::uint8_t>(u >> 8);
  out[2] = static_cast<std::uint8_t>(u >> 16);
}

inline std::int32_t get_i24(const std::uint8_t* in) {
  std::uint32_t u = static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
                    (static_cast<std::uint32_t>(in[2]) << 16);
  if (u & 0x800000u) u |= 0xFF000000u;
  return static_cast<std::int32_t>(u);
}

inline Frame encode_packet(const TelemetryPacket& p) {
  if (!p.valid()) {
    throw std::invalid_argument("encode_packet: field out of range");
  }
  Frame f{};
  f[0] = kMagic0;
  f[1] = kMagic1;
  f[2] = kProtocolVersion;
  detail::put_le(&f[3], p.seq);
  detail::put_le(&f[5], p.timestamp_ms);
  put_i24(&f[9], p.x_mm);
  put_i24(&f[12], p.y_mm);
  detail::put_le(&f[15], p.yaw_cdeg);
  f[17] = p.label;
  f[18] = p.confidence_q8;
  f[19] = crc8(std::span<const std::uint8_t>(f.data(), kFrameSize - 1));
  return f;
}

/// Validates magic, version, CRC and field ranges, in that order.
inline DecodeResult decode_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameSize || bytes[0] != kMagic0 || bytes[1] != kMagic1) return DecodeError::BadMagic;
  if (bytes[2] != kProtocolVersion) return DecodeError::BadVersion;
  if (crc8(bytes.first(kFrameSize - 1)) != bytes[19]) return DecodeError::BadCrc;
  TelemetryPacket p;
  p.seq = detail::get_le<std::uint16_t>(&bytes[3]);
  p.timestamp_ms = detail::get_le<std::uint32_t>(&bytes[5]);
  p.x_mm = get_i24(&bytes[9]);
  p.y_mm = get_i24(&bytes[12]);
  p.yaw_cdeg = detail::get_le<std::int16_t>(&bytes[15]);
  p.label = bytes[17];
  p.confidence_q8 = bytes[18];
  if (!p.valid()) return DecodeError::BadRange;
  return p;
}

// Fixed-point conversions. All roundings are half-up.
inline std::int32_t to_mm(double meters) {
  return static_cast<std::int32_t>(detail::round_half_up(meters * 1000.0));
}

inline std::int16_t to_cdeg(double yaw_rad) {
  auto c = static_cast<std::int32_t>(detail::round_half_up(rad_to_deg(wrap_angle(yaw_rad)) * 100.0));
  if (c <= -18000) c += 36000;
  if (c > 18000) c -= 36000;
  return static_cast<std::int16_t>(c);
}

inline std::uint8_t to_q8(double confidence) {
  return static_cast<std::uint8_t>(detail::round_half_up(std::clamp(confidence, 0.0, 1.0) * 255.0));
}

inline double from_mm(std::int32_t mm) { return mm / 1000.0; }
inline double from_cdeg(std::int16_t c) { return deg_to_rad(c / 100.0); }
inline double from_q8(std::uint8_t q) { return q / 255.0; }

/// Packet for a classified frame; seq is the frame index modulo 2^16.
inline TelemetryPacket make_packet(const DetectionEvent& ev) {
  TelemetryPacket p;
  p.seq = static_cast<std::uint16_t>(ev.frame_index & 0xFFFF);
  p.timestamp_ms = static_cast<std::uint32_t>(detail::round_half_up(ev.sim_time * 1000.0));
  p.x_mm = std::clamp(to_mm(ev.estimated_pose.position.x), kCoordMmMin, kCoordMmMax);
  p.y_mm = std::clamp(to_mm(ev.estimated_pose.position.y), kCoordMmMin, kCoordMmMax);
  p.yaw_cdeg = to_cdeg(ev.estimated_pose.yaw);
  p.label = static_cast<std::uint8_t>(ev.label);
  p.confidence_q8 = to_q8(ev.confidence);
  return p;
}

}  // namespace platesim
