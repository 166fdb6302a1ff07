#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "streampcq/bitstream.hpp"
#include "streampcq/calibration.hpp"
#include "streampcq/error.hpp"
#include "streampcq/evaluation.hpp"
#include "streampcq/subjective.hpp"

namespace streampcq::csv {

/// Shortest decimal that round-trips; '.' separator regardless of locale.
inline std::string fmt(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::vector<std::string> split_line(std::string_view line)
{
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      }
      else if (c == '"')
        quoted = false;
      else
        cur += c;
    }
    else if (c == '"')
      quoted = true;
    else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    }
    else
      cur += c;
  }
  cells.push_back(std::move(cur));
  return cells;
}

inline std::string quote(std::string_view s)
{
  if (s.find_first_of(",\"\n") == std::string_view::npos)
    return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

/// Header-addressed table. Blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw Error(ErrorCode::MissingField, std::string(name), "column not in CSV header");
  }

  bool has(std::string_view name) const
  {
    for (const auto& h : header)
      if (h == name)
        return true;
    return false;
  }
};

inline Table read_table(std::istream& in, const std::string& origin = "csv")
{
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty())
    throw Error(ErrorCode::InvalidInput, origin, "missing CSV header");
  return t;
}

inline Table read_table(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, path.string(), "cannot open");
  return read_table(in, path.string());
}

inline double to_double(const std::string& s, std::string_view what)
{
  double v = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  while (first < last && *first == ' ')
    ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
    throw Error(ErrorCode::InvalidInput, std::string(what), "not a number: '" + s + "'");
  return v;
}

inline std::uint64_t to_uint(const std::string& s, std::string_view what)
{
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::InvalidInput, std::string(what), "not an unsigned integer: '" + s + "'");
  return v;
}

//============================================================================
// Record formats

/// A row that could not be parsed: 1-based line number and reason.
struct RowError {
  std::size_t line = 0;
  std::string message;
};

// content,pqs,qp,tbpp,tc,mos
inline std::vector<TrainingRecord>
read_training(const Table& t, std::vector<RowError>* errors = nullptr)
{
  const auto c_content = t.column("content"), c_pqs = t.column("pqs"), c_qp = t.column("qp"),
             c_tbpp = t.column("tbpp"), c_tc = t.column("tc"), c_mos = t.column("mos");
  std::vector<TrainingRecord> out;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    try {
      if (r.size() != t.header.size())
        throw Error(ErrorCode::InvalidInput, "row", "wrong number of cells");
      out.push_back({r[c_content], to_double(r[c_pqs], "pqs"), to_double(r[c_qp], "qp"),
                     to_double(r[c_tbpp], "tbpp"), to_double(r[c_tc], "tc"),
                     to_double(r[c_mos], "mos")});
    }
    catch (const Error& e) {
      if (!errors)
        throw Error(e.code(), e.subject(), "line " + std::to_string(t.line_numbers[k]));
      errors->push_back({t.line_numbers[k], e.what()});
    }
  }
  return out;
}

inline void write_training(std::ostream& out, const std::vector<TrainingRecord>& records)
{
  out << "content,pqs,qp,tbpp,tc,mos\n";
  for (const auto& r : records)
    out << quote(r.content) << ',' << fmt(r.pqs) << ',' << fmt(r.qp) << ',' << fmt(r.tbpp) << ','
        << fmt(r.tc) << ',' << fmt(r.mos) << '\n';
}

// stimulus,content,objective,mos
inline ScorePairSet read_scores(const Table& t)
{
  ScorePairSet s;
  const auto c_obj = t.column("objective"), c_mos = t.column("mos");
  const bool has_stim = t.has("stimulus"), has_content = t.has("content");
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    if (r.size() != t.header.size())
      throw Error(ErrorCode::InvalidInput, "row", "line " + std::to_string(t.line_numbers[k]));
    s.objective.push_back(to_double(r[c_obj], "objective"));
    s.mos.push_back(to_double(r[c_mos], "mos"));
    if (has_stim)
      s.labels.push_back(r[t.column("stimulus")]);
    if (has_content)
      s.contents.push_back(r[t.column("content")]);
  }
  return s;
}

/// A "residual" column if present, otherwise the first column.
inline std::vector<double> read_residuals(const Table& t)
{
  const std::size_t col = t.has("residual") ? t.column("residual") : 0;
  std::vector<double> v;
  for (const auto& r : t.rows)
    v.push_back(to_double(r.at(col), "residual"));
  return v;
}

inline constexpr std::string_view kFeatureHeader = "stream,pqs,qp,texture_bits,point_count,tbpp,point_count_source";

inline void write_feature_row(std::ostream& out, const std::string& stream, const BitstreamFeatures& f)
{
  out << quote(stream) << ',' << fmt(f.pqs) << ',' << f.qp << ',' << f.texture_bits << ','
      << f.point_count << ',' << fmt(f.tbpp) << ',' << point_count_source_name(f.point_count_source);
}

struct FeatureRow {
  std::string stream;
  BitstreamFeatures features;
};

/// Feature CSV as written by `extract`. Only pqs, qp and tbpp are
/// required; the other columns are read when present.
inline FeatureRow parse_feature_row(const Table& t, const std::vector<std::string>& r)
{
  if (r.size() != t.header.size())
    throw Error(ErrorCode::InvalidInput, "row", "wrong number of cells");
  FeatureRow out;
  if (t.has("stream"))
    out.stream = r[t.column("stream")];
  auto& f = out.features;
  f.pqs = to_double(r[t.column("pqs")], "pqs");
  f.qp = to_uint(r[t.column("qp")], "qp");
  f.tbpp = to_double(r[t.column("tbpp")], "tbpp");
  if (t.has("texture_bits"))
    f.texture_bits = to_uint(r[t.column("texture_bits")], "texture_bits");
  if (t.has("point_count"))
    f.point_count = to_uint(r[t.column("point_count")], "point_count");
  if (t.has("point_count_source"))
    f.point_count_source = parse_point_count_source(r[t.column("point_count_source")]);
  if (!(f.pqs > 0.0))
    throw Error(ErrorCode::NonPositivePqs, "pqs");
  if (f.tbpp < 0.0)
    throw Error(ErrorCode::InvalidInput, "tbpp", "negative");
  return out;
}

/// Ratings matrix: first column stimulus id, one column per subject.
/// Empty cells are missing ratings.
inline SubjectiveMatrix read_ratings(const Table& t)
{
  if (t.header.size() < 3)
    throw Error(ErrorCode::InvalidInput, "ratings", "need a stimulus column and >= 2 subjects");
  std::vector<std::string> subjects(t.header.begin() + 1, t.header.end());
  std::vector<std::string> stimuli;
  for (const auto& r : t.rows)
    stimuli.push_back(r.at(0));
  SubjectiveMatrix m(stimuli, subjects);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    if (r.size() != t.header.size())
      throw Error(ErrorCode::InvalidInput, "ratings", "line " + std::to_string(t.line_numbers[k]));
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!r[i].empty())
        m.at(k, i - 1) = to_double(r[i], subjects[i - 1]);
  }
  return m;
}

inline void write_ratings(std::ostream& out, const SubjectiveMatrix& m)
{
  out << "stimulus";
  for (const auto& s : m.subjects)
    out << ',' << quote(s);
  out << '\n';
  for (std::size_t k = 0; k < m.n_stimuli(); ++k) {
    out << quote(m.stimuli[k]);
    for (std::size_t i = 0; i < m.n_subjects(); ++i) {
      out << ',';
      if (!SubjectiveMatrix::missing(m.at(k, i)))
        out << fmt(m.at(k, i));
    }
    out << '\n';
  }
}

}  // namespace streampcq::csv
