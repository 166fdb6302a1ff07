#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streampcq/bitio.hpp"
#include "streampcq/error.hpp"
#include "streampcq/schema.hpp"
#include "streampcq/tlv.hpp"

namespace streampcq {

//============================================================================
// Header prefix parsing

struct ParsedHeader {
  std::map<std::string, std::int64_t> fields;
  std::size_t bits = 0;  // bits consumed from the payload
};

/// Decodes the fields of `path` in order from the start of `payload`.
/// Anything after the last field is left untouched.
inline ParsedHeader
parse_header(std::span<const std::uint8_t> payload, const FieldPath& path)
{
  if (path.empty())
    throw Error(ErrorCode::InvalidInput, "path", "empty field path");

  BitReader reader(payload);
  ParsedHeader out;
  for (const auto& field : path) {
    try {
      std::int64_t value = 0;
      switch (field.descriptor.kind) {
      case Descriptor::Kind::U:
      case Descriptor::Kind::UE: {
        const std::uint64_t raw = field.descriptor.kind == Descriptor::Kind::U
          ? reader.read_bits(field.descriptor.width)
          : reader.read_ue();
        if (raw > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
          throw Error(ErrorCode::UnrepresentableField, field.name, "value exceeds 63 bits");
        value = static_cast<std::int64_t>(raw);
        break;
      }
      case Descriptor::Kind::SE: value = reader.read_se(); break;
      }
      out.fields[field.name] = value;
    }
    catch (const Error& e) {
      if (e.code() == ErrorCode::BitstreamExhausted)
        throw Error(ErrorCode::BitstreamExhausted, field.name,
                    "payload ends at bit " + std::to_string(reader.size_bits()));
      throw;
    }
  }
  out.bits = reader.position();
  return out;
}

//============================================================================
// Features

enum class PointCountSource { SliceHeader, Sidecar, DecodedCloud };

constexpr std::string_view point_count_source_name(PointCountSource s) noexcept {
  switch (s) {
  case PointCountSource::SliceHeader: return "slice-header";
  case PointCountSource::Sidecar: return "sidecar";
  case PointCountSource::DecodedCloud: return "decoded-cloud";
  }
  return "?";
}

inline PointCountSource parse_point_count_source(std::string_view s) {
  for (auto v : {PointCountSource::SliceHeader, PointCountSource::Sidecar,
                 PointCountSource::DecodedCloud})
    if (point_count_source_name(v) == s)
      return v;
  throw Error(ErrorCode::InvalidInput, std::string(s), "unknown point count source");
}

enum class FieldSource { Header, Sidecar, DecodedCloud, Computed };

constexpr std::string_view field_source_name(FieldSource s) noexcept {
  switch (s) {
  case FieldSource::Header: return "header";
  case FieldSource::Sidecar: return "sidecar";
  case FieldSource::DecodedCloud: return "decoded-cloud";
  case FieldSource::Computed: return "computed";
  }
  return "?";
}

/// Texture bits per point. Exact IEEE quotient.
inline double compute_tbpp(std::uint64_t texture_bits, std::uint64_t point_count)
{
  if (point_count == 0)
    throw Error(ErrorCode::ZeroPointCount, {});
  return static_cast<double>(texture_bits) / static_cast<double>(point_count);
}

struct BitstreamFeatures {
  double pqs = 1.0;
  std::uint64_t qp = 0;
  std::uint64_t texture_bits = 0;
  std::uint64_t point_count = 0;
  double tbpp = 0.0;
  PointCountSource point_count_source = PointCountSource::SliceHeader;

  static BitstreamFeatures make(
    double pqs, std::uint64_t qp, std::uint64_t texture_bits, std::uint64_t point_count,
    PointCountSource src = PointCountSource::SliceHeader)
  {
    return {pqs, qp, texture_bits, point_count, compute_tbpp(texture_bits, point_count), src};
  }

  void validate() const
  {
    if (!(pqs > 0.0) || !std::isfinite(pqs))
      throw Error(ErrorCode::NonPositivePqs, "pqs");
    if (point_count == 0)
      throw Error(ErrorCode::ZeroPointCount, "point_count");
    if (tbpp != compute_tbpp(texture_bits, point_count))
      throw Error(ErrorCode::InvalidInput, "tbpp", "tbpp != texture_bits / point_count");
  }

  bool operator==(const BitstreamFeatures&) const = default;
};

/// Optional `<stream>.meta.json` manifest; any key may be absent.
struct Sidecar {
  std::optional<double> pqs;
  std::optional<std::uint64_t> qp;
  std::optional<std::uint64_t> texture_bits;
  std::optional<std::uint64_t> point_count;

  bool empty() const { return !pqs && !qp && !texture_bits && !point_count; }
  bool operator==(const Sidecar&) const = default;
};

inline Sidecar sidecar_from_json(const nlohmann::json& j)
{
  Sidecar s;
  try {
    if (j.contains("pqs"))
      s.pqs = j.at("pqs").get<double>();
    if (j.contains("qp"))
      s.qp = j.at("qp").get<std::uint64_t>();
    if (j.contains("texture_bits"))
      s.texture_bits = j.at("texture_bits").get<std::uint64_t>();
    if (j.contains("point_count"))
      s.point_count = j.at("point_count").get<std::uint64_t>();
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "sidecar", e.what());
  }
  return s;
}

inline nlohmann::json to_json(const Sidecar& s)
{
  auto j = nlohmann::json::object();
  if (s.pqs)
    j["pqs"] = *s.pqs;
  if (s.qp)
    j["qp"] = *s.qp;
  if (s.texture_bits)
    j["texture_bits"] = *s.texture_bits;
  if (s.point_count)
    j["point_count"] = *s.point_count;
  return j;
}

inline std::filesystem::path sidecar_path_for(const std::filesystem::path& stream)
{
  auto p = stream;
  p += ".meta.json";
  return p;
}

inline std::optional<Sidecar> load_sidecar(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string(), e.what());
  }
  return sidecar_from_json(j);
}

//============================================================================
// Extraction

/// Per-unit record of how much of each payload the extractor looked at.
struct UnitTrace {
  std::uint64_t unit_type = 0;
  std::optional<UnitClass> unit_class;
  std::size_t payload_bits = 0;
  std::size_t bits_read = 0;
};

struct Provenance {
  FieldSource pqs = FieldSource::Header;
  FieldSource qp = FieldSource::Header;
  FieldSource texture_bits = FieldSource::Computed;
  FieldSource point_count = FieldSource::Header;
};

struct Extraction {
  BitstreamFeatures features;
  Provenance provenance;
  std::vector<UnitTrace> trace;
};

namespace detail {

inline std::optional<std::int64_t> read_target(
  const SyntaxSchema& schema, Target target, const std::vector<TlvUnit>& units,
  std::vector<UnitTrace>& trace, bool sum_all)
{
  auto spec_it = schema.targets.find(target);
  if (spec_it == schema.targets.end())
    return std::nullopt;
  const auto& spec = spec_it->second;
  const auto code = schema.unit_codes.at(spec.unit);

  std::optional<std::int64_t> result;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i].unit_type != code)
      continue;
    const auto header = parse_header(units[i].payload, schema.path(spec.unit));
    trace[i].bits_read = std::max(trace[i].bits_read, header.bits);
    const std::int64_t value = header.fields.at(spec.field) + spec.offset;
    if (value < 0)
      throw Error(ErrorCode::InvalidInput, std::string(target_name(target)),
                  "negative decoded value");
    result = result.value_or(0) + value;
    if (!sum_all)
      break;
  }
  return result;
}

}  // namespace detail

/// Recovers (pqs, qp, texture bits, point count) from a stream without
/// touching any entropy-coded body. Header values win over the sidecar;
/// point count falls back header > sidecar > decoded cloud.
inline Extraction extract_features_traced(
  std::span<const std::uint8_t> bytes, const SyntaxSchema& schema,
  const std::optional<Sidecar>& sidecar = std::nullopt,
  std::optional<std::uint64_t> decoded_point_count = std::nullopt)
{
  const auto units = read_tlv_units(bytes, schema.framing);

  Extraction ex;
  ex.trace.reserve(units.size());
  for (const auto& u : units)
    ex.trace.push_back({u.unit_type, schema.classify(u.unit_type), u.payload.size() * 8, 0});

  const Sidecar side = sidecar.value_or(Sidecar{});
  auto& f = ex.features;

  // pqs
  if (auto raw = detail::read_target(schema, Target::Pqs, units, ex.trace, false)) {
    const auto divisor = schema.targets.at(Target::Pqs).divisor;
    f.pqs = static_cast<double>(*raw) / static_cast<double>(divisor);
    ex.provenance.pqs = FieldSource::Header;
  }
  else if (side.pqs) {
    f.pqs = *side.pqs;
    ex.provenance.pqs = FieldSource::Sidecar;
  }
  else
    throw Error(ErrorCode::MissingField, "pqs");
  if (!(f.pqs > 0.0))
    throw Error(ErrorCode::NonPositivePqs, "pqs");

  // qp
  if (auto raw = detail::read_target(schema, Target::Qp, units, ex.trace, false)) {
    f.qp = static_cast<std::uint64_t>(*raw);
    ex.provenance.qp = FieldSource::Header;
  }
  else if (side.qp) {
    f.qp = *side.qp;
    ex.provenance.qp = FieldSource::Sidecar;
  }
  else
    throw Error(ErrorCode::MissingField, "qp");

  // texture bits: whole attribute-data payloads, headers included
  const auto attr_code = schema.unit_codes.at(UnitClass::AttributeData);
  bool any_attr = false;
  std::uint64_t attr_bytes = 0;
  for (const auto& u : units)
    if (u.unit_type == attr_code) {
      any_attr = true;
      attr_bytes += u.payload.size();
    }
  if (any_attr) {
    f.texture_bits = 8 * attr_bytes;
    ex.provenance.texture_bits = FieldSource::Computed;
  }
  else if (side.texture_bits) {
    f.texture_bits = *side.texture_bits;
    ex.provenance.texture_bits = FieldSource::Sidecar;
  }
  else
    throw Error(ErrorCode::MissingField, "texture_bits");

  // point count
  if (auto raw = detail::read_target(schema, Target::PointCount, units, ex.trace, true)) {
    f.point_count = static_cast<std::uint64_t>(*raw);
    f.point_count_source = PointCountSource::SliceHeader;
    ex.provenance.point_count = FieldSource::Header;
  }
  else if (side.point_count) {
    f.point_count = *side.point_count;
    f.point_count_source = PointCountSource::Sidecar;
    ex.provenance.point_count = FieldSource::Sidecar;
  }
  else if (decoded_point_count) {
    f.point_count = *decoded_point_count;
    f.point_count_source = PointCountSource::DecodedCloud;
    ex.provenance.point_count = FieldSource::DecodedCloud;
  }
  else
    throw Error(ErrorCode::MissingField, "point_count");

  f.tbpp = compute_tbpp(f.texture_bits, f.point_count);
  return ex;
}

inline BitstreamFeatures extract_features(
  std::span<const std::uint8_t> bytes, const SyntaxSchema& schema,
  const std::optional<Sidecar>& sidecar = std::nullopt,
  std::optional<std::uint64_t> decoded_point_count = std::nullopt)
{
  return extract_features_traced(bytes, schema, sidecar, decoded_point_count).features;
}

//============================================================================
// Synthesis

struct SynthesizedStream {
  std::vector<std::uint8_t> bytes;
  Sidecar sidecar;                        // targets the schema cannot carry
  std::vector<std::size_t> header_bits;   // per emitted unit, before alignment
  std::vector<std::uint64_t> unit_types;
};

namespace detail {

inline void write_field(BitWriter& bw, const FieldSpec& field, std::int64_t value)
{
  try {
    switch (field.descriptor.kind) {
    case Descriptor::Kind::U:
      if (value < 0)
        throw Error(ErrorCode::UnrepresentableField, field.name, "negative value for u(n)");
      bw.write_bits(static_cast<std::uint64_t>(value), field.descriptor.width);
      break;
    case Descriptor::Kind::UE:
      if (value < 0)
        throw Error(ErrorCode::UnrepresentableField, field.name, "negative value for ue(v)");
      bw.write_ue(static_cast<std::uint64_t>(value));
      break;
    case Descriptor::Kind::SE: bw.write_se(value); break;
    }
  }
  catch (const Error& e) {
    if (e.code() == ErrorCode::UnrepresentableField && e.subject().empty())
      throw Error(ErrorCode::UnrepresentableField, field.name, e.what());
    throw;
  }
}

/// Returns the byte-aligned header and its unaligned bit length.
inline std::pair<std::vector<std::uint8_t>, std::size_t>
write_header(const FieldPath& path, const std::map<std::string, std::int64_t>& values)
{
  BitWriter bw;
  for (const auto& field : path) {
    auto it = values.find(field.name);
    write_field(bw, field, it == values.end() ? 0 : it->second);
  }
  const auto bits = bw.position();
  bw.byte_align();
  return {std::move(bw).take(), bits};
}

inline std::int64_t encode_target(
  Target target, const TargetSpec& spec, double value)
{
  const double scaled = value * static_cast<double>(spec.divisor);
  const auto name = std::string(target_name(target));
  if (!(scaled >= 0.0) || scaled > 9.0e15 || std::floor(scaled) != scaled)
    throw Error(ErrorCode::UnrepresentableField, name,
                "value not representable with divisor " + std::to_string(spec.divisor));
  const auto raw = static_cast<std::int64_t>(scaled) - spec.offset;
  if (static_cast<double>(raw + spec.offset) / static_cast<double>(spec.divisor) != value)
    throw Error(ErrorCode::UnrepresentableField, name, "inexact encoding");
  return raw;
}

}  // namespace detail

/// Builds a stream whose headers carry `features` per `schema`. Data-unit
/// bodies are `payload_fill` bytes; attribute-data payloads (headers
/// included) total exactly texture_bits / 8 bytes.
inline SynthesizedStream synthesize_stream(
  const BitstreamFeatures& features, const SyntaxSchema& schema,
  std::uint8_t payload_fill = 0xA5, std::size_t max_attr_unit_bytes = 65536)
{
  features.validate();
  schema.validate();
  if (features.point_count_source != PointCountSource::SliceHeader &&
      schema.targets.contains(Target::PointCount))
    throw Error(ErrorCode::UnrepresentableField, "point_count",
                "schema carries point count in slice header");
  if (features.texture_bits % 8 != 0)
    throw Error(ErrorCode::UnrepresentableField, "texture_bits", "not a whole number of bytes");

  SynthesizedStream out;
  std::map<UnitClass, std::map<std::string, std::int64_t>> values;

  auto place = [&](Target t, double v, auto&& to_sidecar) {
    auto it = schema.targets.find(t);
    if (it == schema.targets.end()) {
      to_sidecar();
      return;
    }
    values[it->second.unit][it->second.field] = detail::encode_target(t, it->second, v);
  };
  place(Target::Pqs, features.pqs, [&] { out.sidecar.pqs = features.pqs; });
  place(Target::Qp, static_cast<double>(features.qp), [&] { out.sidecar.qp = features.qp; });
  place(Target::PointCount, static_cast<double>(features.point_count),
        [&] { out.sidecar.point_count = features.point_count; });

  auto emit = [&](UnitClass cls, std::vector<std::uint8_t> payload, std::size_t header_bits) {
    TlvUnit unit{schema.unit_codes.at(cls), std::move(payload)};
    out.header_bits.push_back(header_bits);
    out.unit_types.push_back(unit.unit_type);
    write_tlv_unit(out.bytes, unit, schema.framing);
  };

  for (auto cls : {UnitClass::SequenceParams, UnitClass::GeometryParams,
                   UnitClass::AttributeParams}) {
    if (!schema.unit_codes.contains(cls))
      continue;
    auto [hdr, bits] = detail::write_header(schema.path(cls), values[cls]);
    emit(cls, std::move(hdr), bits);
  }

  if (schema.unit_codes.contains(UnitClass::GeometryData)) {
    auto [hdr, bits] = detail::write_header(schema.path(UnitClass::GeometryData),
                                            values[UnitClass::GeometryData]);
    hdr.resize(hdr.size() + 16, payload_fill);
    emit(UnitClass::GeometryData, std::move(hdr), bits);
  }

  const std::uint64_t attr_total = features.texture_bits / 8;
  if (attr_total == 0) {
    out.sidecar.texture_bits = features.texture_bits;
  }
  else {
    auto [hdr, bits] = detail::write_header(schema.path(UnitClass::AttributeData),
                                            values[UnitClass::AttributeData]);
    const std::size_t chunk = std::max<std::size_t>(max_attr_unit_bytes, 2 * hdr.size());
    if (attr_total < hdr.size())
      throw Error(ErrorCode::UnrepresentableField, "texture_bits",
                  "smaller than one attribute-data header");
    std::uint64_t left = attr_total;
    while (left > 0) {
      std::uint64_t take = std::min<std::uint64_t>(left, chunk);
      if (left - take != 0 && left - take < hdr.size())
        take = left - hdr.size();
      std::vector<std::uint8_t> payload = hdr;
      payload.resize(take, payload_fill);
      emit(UnitClass::AttributeData, std::move(payload), bits);
      left -= take;
    }
  }
  return out;
}

/// Stream-only variant; every target must be carried by the schema.
inline std::vector<std::uint8_t> synthesize_bitstream(
  const BitstreamFeatures& features, const SyntaxSchema& schema,
  std::uint8_t payload_fill = 0xA5)
{
  auto s = synthesize_stream(features, schema, payload_fill);
  if (s.sidecar.pqs)
    throw Error(ErrorCode::MissingField, "pqs", "schema has no pqs field");
  if (s.sidecar.qp)
    throw Error(ErrorCode::MissingField, "qp", "schema has no qp field");
  if (s.sidecar.point_count)
    throw Error(ErrorCode::MissingField, "point_count", "schema has no point count field");
  if (s.sidecar.texture_bits)
    throw Error(ErrorCode::UnrepresentableField, "texture_bits", "zero texture bits");
  return std::move(s.bytes);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, path.string(), "cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace streampcq
