#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "streampcq/error.hpp"

namespace streampcq {

//============================================================================
// MSB-first bit reader with Exp-Golomb support. The reader never owns the
// bytes it walks; position() is the number of bits consumed so far.

class BitReader {
public:
  explicit BitReader(std::span<const std::uint8_t> bytes) noexcept
    : bytes_(bytes)
  {}

  std::size_t position() const noexcept { return pos_; }
  std::size_t size_bits() const noexcept { return bytes_.size() * 8; }
  std::size_t remaining() const noexcept { return size_bits() - pos_; }

  bool read_bit()
  {
    if (pos_ >= size_bits())
      throw Error(ErrorCode::BitstreamExhausted, {});
    const auto byte = bytes_[pos_ >> 3];
    const bool bit = (byte >> (7 - (pos_ & 7))) & 1;
    ++pos_;
    return bit;
  }

  /// u(n): n in [0, 64].
  std::uint64_t read_bits(unsigned n)
  {
    if (n > 64)
      throw Error(ErrorCode::InvalidInput, {}, "u(n) wider than 64 bits");
    if (n > remaining())
      throw Error(ErrorCode::BitstreamExhausted, {});
    std::uint64_t value = 0;
    for (unsigned i = 0; i < n; ++i)
      value = (value << 1) | static_cast<std::uint64_t>(read_bit());
    return value;
  }

  /// ue(v): codeNum = 2^z - 1 + suffix, z = number of leading zero bits.
  std::uint64_t read_ue()
  {
    unsigned zeros = 0;
    while (!read_bit()) {
      if (++zeros > 63)
        throw Error(ErrorCode::BitstreamExhausted, {}, "ue(v) prefix too long");
    }
    if (zeros == 0)
      return 0;
    const std::uint64_t suffix = read_bits(zeros);
    return ((std::uint64_t{1} << zeros) - 1) + suffix;
  }

  /// se(v): codeNum k maps to (-1)^(k+1) * ceil(k/2).
  std::int64_t read_se()
  {
    const std::uint64_t k = read_ue();
    const auto magnitude = static_cast<std::int64_t>((k + 1) / 2);
    return (k & 1) ? magnitude : -magnitude;
  }

  void byte_align() noexcept { pos_ = (pos_ + 7) & ~std::size_t{7}; }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

//============================================================================

class BitWriter {
public:
  std::size_t position() const noexcept { return pos_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

  std::vector<std::uint8_t> take() &&
  {
    return std::move(buf_);
  }

  void write_bit(bool bit)
  {
    if ((pos_ & 7) == 0)
      buf_.push_back(0);
    if (bit)
      buf_.back() |= static_cast<std::uint8_t>(1u << (7 - (pos_ & 7)));
    ++pos_;
  }

  void write_bits(std::uint64_t value, unsigned n)
  {
    if (n < 64 && (value >> n) != 0)
      throw Error(
        ErrorCode::UnrepresentableField, {},
        std::to_string(value) + " does not fit u(" + std::to_string(n) + ")");
    for (unsigned i = n; i-- > 0;)
      write_bit((value >> i) & 1);
  }

  void write_ue(std::uint64_t value)
  {
    if (value == std::numeric_limits<std::uint64_t>::max())
      throw Error(ErrorCode::UnrepresentableField, {}, "ue(v) overflow");
    const std::uint64_t code = value + 1;
    unsigned bits = 0;
    for (auto v = code; v; v >>= 1)
      ++bits;
    for (unsigned i = 1; i < bits; ++i)
      write_bit(false);
    write_bits(code, bits);
  }

  void write_se(std::int64_t value)
  {
    if (value == std::numeric_limits<std::int64_t>::min())
      throw Error(ErrorCode::UnrepresentableField, {}, "se(v) overflow");
    const auto magnitude = static_cast<std::uint64_t>(value < 0 ? -value : value);
    write_ue(value > 0 ? 2 * magnitude - 1 : 2 * magnitude);
  }

  void byte_align()
  {
    while (pos_ & 7)
      write_bit(false);
  }

private:
  std::vector<std::uint8_t> buf_;
  std::size_t pos_ = 0;
};

}  // namespace streampcq
