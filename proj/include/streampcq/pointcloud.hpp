#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "streampcq/error.hpp"

namespace streampcq {

using Vec3i = std::array<std::int32_t, 3>;
using Rgb = std::array<std::uint8_t, 3>;

struct PointCloud {
  std::vector<Vec3i> positions;
  std::vector<Rgb> colors;

  std::size_t size() const noexcept { return positions.size(); }

  void validate() const
  {
    if (positions.empty())
      throw Error(ErrorCode::InvalidInput, "pointcloud", "no points");
    if (positions.size() != colors.size())
      throw Error(ErrorCode::InvalidInput, "pointcloud", "position/color count mismatch");
  }

  bool operator==(const PointCloud&) const = default;
};

/// BT.601 full-range luma.
constexpr double rgb_to_luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept
{
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

constexpr double rgb_to_luma(const Rgb& c) noexcept { return rgb_to_luma(c[0], c[1], c[2]); }

//============================================================================
// PLY

namespace detail {

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::optional<PlyType> ply_type(const std::string& name)
{
  static const std::map<std::string, PlyType> table{
    {"char", PlyType::I8},     {"int8", PlyType::I8},     {"uchar", PlyType::U8},
    {"uint8", PlyType::U8},    {"short", PlyType::I16},   {"int16", PlyType::I16},
    {"ushort", PlyType::U16},  {"uint16", PlyType::U16},  {"int", PlyType::I32},
    {"int32", PlyType::I32},   {"uint", PlyType::U32},    {"uint32", PlyType::U32},
    {"float", PlyType::F32},   {"float32", PlyType::F32}, {"double", PlyType::F64},
    {"float64", PlyType::F64}};
  auto it = table.find(name);
  if (it == table.end())
    return std::nullopt;
  return it->second;
}

constexpr std::size_t ply_size(PlyType t) noexcept
{
  switch (t) {
  case PlyType::I8:
  case PlyType::U8: return 1;
  case PlyType::I16:
  case PlyType::U16: return 2;
  case PlyType::I32:
  case PlyType::U32:
  case PlyType::F32: return 4;
  case PlyType::F64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  std::uint64_t count = 0;
  std::vector<PlyProperty> properties;
};

template<typename T>
T load_le(const char* p)
{
  T v;
  std::memcpy(&v, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* b = reinterpret_cast<unsigned char*>(&v);
    std::reverse(b, b + sizeof(T));
  }
  return v;
}

inline double read_binary_value(std::istream& in, PlyType t)
{
  char buf[8];
  const auto n = ply_size(t);
  if (!in.read(buf, static_cast<std::streamsize>(n)))
    throw Error(ErrorCode::MalformedHeader, "ply", "unexpected end of binary data");
  switch (t) {
  case PlyType::I8: return load_le<std::int8_t>(buf);
  case PlyType::U8: return load_le<std::uint8_t>(buf);
  case PlyType::I16: return load_le<std::int16_t>(buf);
  case PlyType::U16: return load_le<std::uint16_t>(buf);
  case PlyType::I32: return load_le<std::int32_t>(buf);
  case PlyType::U32: return load_le<std::uint32_t>(buf);
  case PlyType::F32: return load_le<float>(buf);
  case PlyType::F64: return load_le<double>(buf);
  }
  return 0;
}

inline std::int32_t to_coord(double v)
{
  const double r = std::round(v);  // half away from zero
  if (!std::isfinite(r) || r < std::numeric_limits<std::int32_t>::min() ||
      r > std::numeric_limits<std::int32_t>::max())
    throw Error(ErrorCode::UnsupportedPly, "coordinate", "outside 32-bit range");
  return static_cast<std::int32_t>(r);
}

inline std::uint8_t to_channel(double v)
{
  if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v)
    throw Error(ErrorCode::UnsupportedPly, "color", "channel outside [0,255]");
  return static_cast<std::uint8_t>(v);
}

}  // namespace detail

/// Reads the vertex element of an ASCII or binary little-endian PLY.
inline PointCloud read_ply(std::istream& in)
{
  using namespace detail;

  std::string line;
  if (!std::getline(in, line) || (line != "ply" && line != "ply\r"))
    throw Error(ErrorCode::MalformedHeader, "ply", "missing magic");

  enum class Format { Ascii, BinaryLE } format = Format::Ascii;
  bool saw_format = false;
  std::vector<PlyElement> elements;

  for (;;) {
    if (!std::getline(in, line))
      throw Error(ErrorCode::MalformedHeader, "ply", "missing end_header");
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw.empty() || kw == "comment" || kw == "obj_info")
      continue;
    if (kw == "end_header")
      break;
    if (kw == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii")
        format = Format::Ascii;
      else if (fmt == "binary_little_endian")
        format = Format::BinaryLE;
      else if (fmt == "binary_big_endian")
        throw Error(ErrorCode::UnsupportedPly, "format", "big-endian binary");
      else
        throw Error(ErrorCode::MalformedHeader, "format", fmt);
      saw_format = true;
    }
    else if (kw == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count))
        throw Error(ErrorCode::MalformedHeader, "element", line);
      elements.push_back(std::move(e));
    }
    else if (kw == "property") {
      if (elements.empty())
        throw Error(ErrorCode::MalformedHeader, "property", "before any element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        auto ct = ply_type(count_type);
        auto it = ply_type(item_type);
        if (!ct || !it)
          throw Error(ErrorCode::MalformedHeader, "property", line);
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      }
      else {
        auto t = ply_type(type);
        if (!t || !(ls >> p.name))
          throw Error(ErrorCode::MalformedHeader, "property", line);
        p.type = *t;
      }
      elements.back().properties.push_back(std::move(p));
    }
    else
      throw Error(ErrorCode::MalformedHeader, "ply", "unknown keyword '" + kw + "'");
  }
  if (!saw_format)
    throw Error(ErrorCode::MalformedHeader, "format", "missing format line");

  auto vertex_it = std::find_if(elements.begin(), elements.end(),
                                [](const PlyElement& e) { return e.name == "vertex"; });
  if (vertex_it == elements.end())
    throw Error(ErrorCode::MalformedHeader, "vertex", "no vertex element");

  std::array<int, 6> slot;
  slot.fill(-1);
  static const std::array<const char*, 6> wanted{"x", "y", "z", "red", "green", "blue"};
  for (std::size_t k = 0; k < vertex_it->properties.size(); ++k)
    for (std::size_t w = 0; w < wanted.size(); ++w)
      if (vertex_it->properties[k].name == wanted[w] && !vertex_it->properties[k].is_list)
        slot[w] = static_cast<int>(k);
  for (std::size_t w = 0; w < wanted.size(); ++w)
    if (slot[w] < 0)
      throw Error(w < 3 ? ErrorCode::MalformedHeader : ErrorCode::UnsupportedPly, wanted[w],
                  "vertex property missing");

  PointCloud pc;
  pc.positions.reserve(vertex_it->count);
  pc.colors.reserve(vertex_it->count);
  std::vector<double> row;

  auto store = [&](const std::vector<double>& values) {
    pc.positions.push_back({to_coord(values[slot[0]]), to_coord(values[slot[1]]),
                            to_coord(values[slot[2]])});
    pc.colors.push_back({to_channel(values[slot[3]]), to_channel(values[slot[4]]),
                         to_channel(values[slot[5]])});
  };

  for (auto e = elements.begin(); e != elements.end(); ++e) {
    const bool is_vertex = e == vertex_it;
    for (std::uint64_t n = 0; n < e->count; ++n) {
      row.assign(e->properties.size(), 0.0);
      if (format == Format::Ascii) {
        if (!std::getline(in, line))
          throw Error(ErrorCode::MalformedHeader, e->name, "fewer rows than declared");
        std::istringstream ls(line);
        for (std::size_t k = 0; k < e->properties.size(); ++k) {
          const auto& p = e->properties[k];
          double v;
          if (!(ls >> v))
            throw Error(ErrorCode::MalformedHeader, p.name, "row " + std::to_string(n));
          if (p.is_list) {
            for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(v); ++i) {
              double skip;
              if (!(ls >> skip))
                throw Error(ErrorCode::MalformedHeader, p.name, "short list");
            }
          }
          else
            row[k] = v;
        }
      }
      else {
        for (std::size_t k = 0; k < e->properties.size(); ++k) {
          const auto& p = e->properties[k];
          if (p.is_list) {
            const auto count = static_cast<std::uint64_t>(read_binary_value(in, p.count_type));
            for (std::uint64_t i = 0; i < count; ++i)
              read_binary_value(in, p.type);
          }
          else
            row[k] = read_binary_value(in, p.type);
        }
      }
      if (is_vertex)
        store(row);
    }
    if (is_vertex)
      break;
  }
  if (pc.positions.empty())
    throw Error(ErrorCode::InvalidInput, "vertex", "no points");
  return pc;
}

inline PointCloud read_ply(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, path.string(), "cannot open");
  return read_ply(in);
}

/// Writes x,y,z as int and colours as uchar.
inline void write_ply(std::ostream& out, const PointCloud& pc, bool binary = false)
{
  pc.validate();
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
      << "element vertex " << pc.size() << "\n"
      << "property int x\nproperty int y\nproperty int z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.positions[i];
    const auto& c = pc.colors[i];
    if (binary) {
      for (auto v : p) {
        char buf[4];
        auto u = static_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b)
          buf[b] = static_cast<char>((u >> (8 * b)) & 0xff);
        out.write(buf, 4);
      }
      out.write(reinterpret_cast<const char*>(c.data()), 3);
    }
    else
      out << p[0] << ' ' << p[1] << ' ' << p[2] << ' ' << int(c[0]) << ' ' << int(c[1])
          << ' ' << int(c[2]) << '\n';
  }
}

//============================================================================
// Texture complexity

struct TcResult {
  double tc = 0.0;
  std::uint64_t blocks_used = 0;
  std::int32_t block_edge = 4;
};

inline constexpr std::int32_t kDefaultBlockEdge = 4;

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept
{
  const auto q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

}  // namespace detail

/// Mean over occupied cubic blocks (>= 2 points) of the population standard
/// deviation of per-point scalar values. Blocks are visited in coordinate
/// order so the sum is reproducible.
inline TcResult compute_tc_from_values(
  std::span<const Vec3i> positions, std::span<const double> values, std::int32_t block_edge)
{
  if (block_edge < 1)
    throw Error(ErrorCode::InvalidInput, "block_edge", "must be >= 1");
  if (positions.size() != values.size() || positions.empty())
    throw Error(ErrorCode::InvalidInput, "pointcloud", "position/value count mismatch");

  using Key = std::array<std::int64_t, 3>;
  std::map<Key, std::vector<double>> blocks;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Key key{detail::floor_div(positions[i][0], block_edge),
                  detail::floor_div(positions[i][1], block_edge),
                  detail::floor_div(positions[i][2], block_edge)};
    blocks[key].push_back(values[i]);
  }

  double sum = 0.0;
  std::uint64_t used = 0;
  for (auto& [key, v] : blocks) {
    if (v.size() < 2)
      continue;
    // sort so the result does not depend on point order within a block
    std::sort(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v)
      mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
      ss += (x - mean) * (x - mean);
    sum += std::sqrt(ss / static_cast<double>(v.size()));
    ++used;
  }
  if (used == 0)
    throw Error(ErrorCode::NoEligibleBlocks, {}, "every block holds fewer than 2 points");
  return {sum / static_cast<double>(used), used, block_edge};
}

inline TcResult compute_tc(const PointCloud& pc, std::int32_t block_edge = kDefaultBlockEdge)
{
  pc.validate();
  std::vector<double> luma(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i)
    luma[i] = rgb_to_luma(pc.colors[i]);
  return compute_tc_from_values(pc.positions, luma, block_edge);
}

}  // namespace streampcq
