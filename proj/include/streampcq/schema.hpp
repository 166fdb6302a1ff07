#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streampcq/error.hpp"

namespace streampcq {

// Payload classes the feature extractor cares about. Anything else found in
// a stream is an unknown unit and is skipped.
enum class UnitClass {
  SequenceParams,
  GeometryParams,
  AttributeParams,
  GeometryData,
  AttributeData,
};

inline constexpr std::array kAllUnitClasses{
  UnitClass::SequenceParams, UnitClass::GeometryParams,
  UnitClass::AttributeParams, UnitClass::GeometryData,
  UnitClass::AttributeData};

constexpr std::string_view unit_class_name(UnitClass c) noexcept {
  switch (c) {
  case UnitClass::SequenceParams: return "sequence_params";
  case UnitClass::GeometryParams: return "geometry_params";
  case UnitClass::AttributeParams: return "attribute_params";
  case UnitClass::GeometryData: return "geometry_data";
  case UnitClass::AttributeData: return "attribute_data";
  }
  return "?";
}

inline UnitClass parse_unit_class(std::string_view s) {
  for (auto c : kAllUnitClasses)
    if (unit_class_name(c) == s)
      return c;
  throw Error(ErrorCode::InvalidSchema, std::string(s), "unknown unit class");
}

// Header fields the extractor resolves from a field path.
enum class Target { Pqs, Qp, PointCount };

inline constexpr std::array kAllTargets{Target::Pqs, Target::Qp, Target::PointCount};

constexpr std::string_view target_name(Target t) noexcept {
  switch (t) {
  case Target::Pqs: return "pqs";
  case Target::Qp: return "qp";
  case Target::PointCount: return "point_count";
  }
  return "?";
}

inline Target parse_target(std::string_view s) {
  for (auto t : kAllTargets)
    if (target_name(t) == s)
      return t;
  throw Error(ErrorCode::InvalidSchema, std::string(s), "unknown target");
}

//----------------------------------------------------------------------------

struct Descriptor {
  enum class Kind { U, UE, SE };

  Kind kind = Kind::UE;
  unsigned width = 0;  // only meaningful for u(n)

  static Descriptor u(unsigned n) { return {Kind::U, n}; }
  static Descriptor ue() { return {Kind::UE, 0}; }
  static Descriptor se() { return {Kind::SE, 0}; }

  /// Accepts "u(n)", "ue(v)", "se(v)".
  static Descriptor parse(std::string_view text)
  {
    if (text == "ue(v)")
      return ue();
    if (text == "se(v)")
      return se();
    if (text.size() > 3 && text.starts_with("u(") && text.ends_with(")")) {
      const std::string digits(text.substr(2, text.size() - 3));
      if (!digits.empty() && digits.find_first_not_of("0123456789") == std::string::npos) {
        const auto n = std::stoul(digits);
        if (n >= 1 && n <= 64)
          return u(static_cast<unsigned>(n));
      }
    }
    throw Error(ErrorCode::InvalidSchema, std::string(text), "unsupported descriptor");
  }

  std::string str() const
  {
    switch (kind) {
    case Kind::U: return "u(" + std::to_string(width) + ")";
    case Kind::UE: return "ue(v)";
    case Kind::SE: return "se(v)";
    }
    return "?";
  }

  bool operator==(const Descriptor&) const = default;
};

struct FieldSpec {
  std::string name;
  Descriptor descriptor;
  bool operator==(const FieldSpec&) const = default;
};

using FieldPath = std::vector<FieldSpec>;

/// Locates a target inside a header path. The decoded value is
/// (raw + offset) / divisor, which covers "_minus1" style fields and
/// fixed-point scales.
struct TargetSpec {
  UnitClass unit = UnitClass::SequenceParams;
  std::string field;
  std::int64_t offset = 0;
  std::uint64_t divisor = 1;
  bool operator==(const TargetSpec&) const = default;
};

struct Framing {
  enum class Endian { Big, Little };

  unsigned type_bytes = 1;
  unsigned length_bytes = 4;
  Endian length_endian = Endian::Big;
  bool operator==(const Framing&) const = default;
};

struct SyntaxSchema {
  std::string name;
  Framing framing;
  std::map<UnitClass, std::uint64_t> unit_codes;
  std::map<UnitClass, FieldPath> field_paths;
  std::map<Target, TargetSpec> targets;

  bool operator==(const SyntaxSchema&) const = default;

  std::optional<UnitClass> classify(std::uint64_t code) const
  {
    for (const auto& [cls, c] : unit_codes)
      if (c == code)
        return cls;
    return std::nullopt;
  }

  const FieldPath& path(UnitClass cls) const
  {
    static const FieldPath empty;
    auto it = field_paths.find(cls);
    return it == field_paths.end() ? empty : it->second;
  }

  void validate() const
  {
    if (framing.type_bytes < 1 || framing.type_bytes > 8)
      throw Error(ErrorCode::InvalidSchema, "framing.type_bytes");
    if (framing.length_bytes < 1 || framing.length_bytes > 8)
      throw Error(ErrorCode::InvalidSchema, "framing.length_bytes");

    std::set<std::uint64_t> seen_codes;
    for (const auto& [cls, code] : unit_codes) {
      if (framing.type_bytes < 8 && (code >> (8 * framing.type_bytes)) != 0)
        throw Error(ErrorCode::InvalidSchema, std::string(unit_class_name(cls)),
                    "unit code exceeds type field width");
      if (!seen_codes.insert(code).second)
        throw Error(ErrorCode::InvalidSchema, std::string(unit_class_name(cls)),
                    "duplicate unit code");
    }
    for (auto cls : {UnitClass::AttributeData})
      if (!unit_codes.contains(cls))
        throw Error(ErrorCode::InvalidSchema, std::string(unit_class_name(cls)),
                    "unit code required");

    for (const auto& [cls, path] : field_paths) {
      std::set<std::string> names;
      for (const auto& f : path) {
        if (f.name.empty())
          throw Error(ErrorCode::InvalidSchema, std::string(unit_class_name(cls)),
                      "unnamed field");
        if (!names.insert(f.name).second)
          throw Error(ErrorCode::InvalidSchema, f.name, "field named twice in path");
      }
    }

    for (const auto& [target, spec] : targets) {
      const auto tname = std::string(target_name(target));
      if (spec.divisor == 0)
        throw Error(ErrorCode::InvalidSchema, tname, "zero divisor");
      if (target != Target::Pqs && spec.divisor != 1)
        throw Error(ErrorCode::InvalidSchema, tname, "only pqs may be fractional");
      if (!unit_codes.contains(spec.unit))
        throw Error(ErrorCode::InvalidSchema, tname, "target unit has no code");
      const auto& p = path(spec.unit);
      const auto hit = std::count_if(p.begin(), p.end(),
                                     [&](const FieldSpec& f) { return f.name == spec.field; });
      if (hit != 1)
        throw Error(ErrorCode::InvalidSchema, tname,
                    "field '" + spec.field + "' not in " +
                      std::string(unit_class_name(spec.unit)) + " path");
    }
  }
};

//----------------------------------------------------------------------------
// JSON form

inline nlohmann::json to_json(const SyntaxSchema& s)
{
  nlohmann::json j;
  j["name"] = s.name;
  j["framing"] = {
    {"type_bytes", s.framing.type_bytes},
    {"length_bytes", s.framing.length_bytes},
    {"length_endian", s.framing.length_endian == Framing::Endian::Big ? "big" : "little"}};
  j["unit_codes"] = nlohmann::json::object();
  for (const auto& [cls, code] : s.unit_codes)
    j["unit_codes"][std::string(unit_class_name(cls))] = code;
  j["field_paths"] = nlohmann::json::object();
  for (const auto& [cls, path] : s.field_paths) {
    auto arr = nlohmann::json::array();
    for (const auto& f : path)
      arr.push_back({{"name", f.name}, {"descriptor", f.descriptor.str()}});
    j["field_paths"][std::string(unit_class_name(cls))] = arr;
  }
  j["targets"] = nlohmann::json::object();
  for (const auto& [t, spec] : s.targets)
    j["targets"][std::string(target_name(t))] = {
      {"unit", std::string(unit_class_name(spec.unit))},
      {"field", spec.field},
      {"offset", spec.offset},
      {"divisor", spec.divisor}};
  return j;
}

inline SyntaxSchema schema_from_json(const nlohmann::json& j)
{
  SyntaxSchema s;
  try {
    s.name = j.value("name", std::string{});
    if (j.contains("framing")) {
      const auto& f = j.at("framing");
      s.framing.type_bytes = f.value("type_bytes", 1u);
      s.framing.length_bytes = f.value("length_bytes", 4u);
      const auto endian = f.value("length_endian", std::string("big"));
      if (endian == "big")
        s.framing.length_endian = Framing::Endian::Big;
      else if (endian == "little")
        s.framing.length_endian = Framing::Endian::Little;
      else
        throw Error(ErrorCode::InvalidSchema, "framing.length_endian", endian);
    }
    for (const auto& [key, code] : j.at("unit_codes").items())
      s.unit_codes[parse_unit_class(key)] = code.get<std::uint64_t>();
    if (j.contains("field_paths"))
      for (const auto& [key, arr] : j.at("field_paths").items()) {
        FieldPath path;
        for (const auto& f : arr)
          path.push_back({f.at("name").get<std::string>(),
                          Descriptor::parse(f.at("descriptor").get<std::string>())});
        s.field_paths[parse_unit_class(key)] = std::move(path);
      }
    if (j.contains("targets"))
      for (const auto& [key, t] : j.at("targets").items())
        s.targets[parse_target(key)] = {
          parse_unit_class(t.at("unit").get<std::string>()),
          t.at("field").get<std::string>(), t.value("offset", std::int64_t{0}),
          t.value("divisor", std::uint64_t{1})};
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSchema, {}, e.what());
  }
  s.validate();
  return s;
}

inline SyntaxSchema load_schema(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, path, "cannot open schema");
  nlohmann::json j;
  try {
    in >> j;
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSchema, path, e.what());
  }
  return schema_from_json(j);
}

//----------------------------------------------------------------------------

/// TMC13 v20 style layout: 1-byte payload type, 4-byte big-endian length.
/// Header paths are the fixed prefixes of each parameter set or data unit
/// header, truncated after the last field the extractor needs.
inline SyntaxSchema default_schema()
{
  using D = Descriptor;
  SyntaxSchema s;
  s.name = "tmc13-v20-octree-raht";
  s.unit_codes = {
    {UnitClass::SequenceParams, 0}, {UnitClass::GeometryParams, 1},
    {UnitClass::GeometryData, 2},   {UnitClass::AttributeParams, 3},
    {UnitClass::AttributeData, 4}};

  s.field_paths[UnitClass::SequenceParams] = {
    {"main_profile_compatibility_flag", D::u(1)},
    {"reserved_profile_compatibility_21bits", D::u(21)},
    {"slice_reordering_constraint_flag", D::u(1)},
    {"unique_point_positions_constraint_flag", D::u(1)},
    {"level", D::u(8)},
    {"sps_seq_parameter_set_id", D::u(4)},
    {"frame_ctr_bits", D::u(5)},
    {"slice_tag_bits", D::u(5)},
    {"seq_pos_quant_scale_q8", D::ue()},
  };
  s.field_paths[UnitClass::GeometryParams] = {
    {"gps_geom_parameter_set_id", D::u(4)},
    {"gps_seq_parameter_set_id", D::u(4)},
    {"geom_tree_type", D::u(1)},
  };
  s.field_paths[UnitClass::AttributeParams] = {
    {"aps_attr_parameter_set_id", D::ue()},
    {"aps_seq_parameter_set_id", D::ue()},
    {"attr_encoding", D::ue()},
    {"init_qp_minus4", D::ue()},
    {"aps_chroma_qp_offset", D::se()},
  };
  s.field_paths[UnitClass::GeometryData] = {
    {"gbh_geom_parameter_set_id", D::ue()},
    {"gbh_tile_id", D::ue()},
    {"gbh_slice_id", D::ue()},
    {"geom_num_points_minus1", D::u(32)},
  };
  s.field_paths[UnitClass::AttributeData] = {
    {"abh_attr_parameter_set_id", D::ue()},
    {"abh_attr_sps_attr_idx", D::ue()},
    {"abh_attr_geom_slice_id", D::ue()},
  };

  s.targets[Target::Pqs] = {UnitClass::SequenceParams, "seq_pos_quant_scale_q8", 0, 256};
  s.targets[Target::Qp] = {UnitClass::AttributeParams, "init_qp_minus4", 4, 1};
  s.targets[Target::PointCount] = {UnitClass::GeometryData, "geom_num_points_minus1", 1, 1};
  return s;
}

}  // namespace streampcq
