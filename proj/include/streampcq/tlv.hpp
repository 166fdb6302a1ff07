#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "streampcq/error.hpp"
#include "streampcq/schema.hpp"

namespace streampcq {

struct TlvUnit {
  std::uint64_t unit_type = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const TlvUnit&) const = default;
};

namespace detail {

inline std::uint64_t
read_uint(std::span<const std::uint8_t> bytes, Framing::Endian endian)
{
  std::uint64_t v = 0;
  if (endian == Framing::Endian::Big)
    for (auto b : bytes)
      v = (v << 8) | b;
  else
    for (auto it = bytes.rbegin(); it != bytes.rend(); ++it)
      v = (v << 8) | *it;
  return v;
}

inline void write_uint(
  std::vector<std::uint8_t>& out, std::uint64_t v, unsigned width,
  Framing::Endian endian)
{
  if (width < 8 && (v >> (8 * width)) != 0)
    throw Error(ErrorCode::UnrepresentableField, "tlv",
                std::to_string(v) + " exceeds " + std::to_string(width) + "-byte field");
  for (unsigned i = 0; i < width; ++i) {
    const unsigned shift = endian == Framing::Endian::Big ? 8 * (width - 1 - i) : 8 * i;
    out.push_back(static_cast<std::uint8_t>(v >> shift));
  }
}

}  // namespace detail

/// Splits a byte stream into type-length-value units. The type field is
/// always big-endian; the length field follows the schema's endianness.
inline std::vector<TlvUnit>
read_tlv_units(std::span<const std::uint8_t> bytes, const Framing& framing = {})
{
  if (bytes.empty())
    throw Error(ErrorCode::EmptyInput, {});

  const std::size_t head = framing.type_bytes + framing.length_bytes;
  std::vector<TlvUnit> units;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < head)
      throw Error(ErrorCode::TruncatedUnit, "unit " + std::to_string(units.size()),
                  "incomplete type/length header at byte " + std::to_string(pos));
    TlvUnit unit;
    unit.unit_type =
      detail::read_uint(bytes.subspan(pos, framing.type_bytes), Framing::Endian::Big);
    const std::uint64_t length = detail::read_uint(
      bytes.subspan(pos + framing.type_bytes, framing.length_bytes), framing.length_endian);
    pos += head;
    if (length > bytes.size() - pos)
      throw Error(ErrorCode::TruncatedUnit, "unit " + std::to_string(units.size()),
                  "declared " + std::to_string(length) + " bytes, " +
                    std::to_string(bytes.size() - pos) + " available");
    unit.payload.assign(bytes.begin() + pos, bytes.begin() + pos + length);
    pos += length;
    units.push_back(std::move(unit));
  }
  return units;
}

inline void
write_tlv_unit(std::vector<std::uint8_t>& out, const TlvUnit& unit, const Framing& framing = {})
{
  detail::write_uint(out, unit.unit_type, framing.type_bytes, Framing::Endian::Big);
  detail::write_uint(out, unit.payload.size(), framing.length_bytes, framing.length_endian);
  out.insert(out.end(), unit.payload.begin(), unit.payload.end());
}

inline std::vector<std::uint8_t>
write_tlv_units(std::span<const TlvUnit> units, const Framing& framing = {})
{
  std::vector<std::uint8_t> out;
  for (const auto& u : units)
    write_tlv_unit(out, u, framing);
  return out;
}

}  // namespace streampcq
