#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "streampcq/bitstream.hpp"
#include "streampcq/error.hpp"

namespace streampcq {

/// How texture and geometry terms combine.
///  - Literal:       pmos = alpha + beta
///  - AlphaTimesTqs: pmos = alpha * tqs + beta
enum class Variant { Literal, AlphaTimesTqs };

constexpr std::string_view variant_name(Variant v) noexcept {
  return v == Variant::Literal ? "additive" : "alpha-times-tqs";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "additive" || s == "literal")
    return Variant::Literal;
  if (s == "alpha-times-tqs")
    return Variant::AlphaTimesTqs;
  throw Error(ErrorCode::InvalidInput, std::string(s), "unknown variant");
}

/// Nine model coefficients. Defaults are the reference fit.
struct ModelParams {
  double a1 = 0.2176;    // H(qp) = a1 qp^2 + a2 qp + a3
  double a2 = -11.1828;
  double a3 = 146.7245;
  double b1 = 0.2428;    // J(qp) = b1 qp + b2
  double b2 = -3.2494;
  double c = 0.0013;     // alpha = c tc + d
  double d = -0.2042;
  double f1 = -2.7005;   // beta = f1 / pqs + f2
  double f2 = 88.1843;
  Variant variant = Variant::Literal;

  static ModelParams zero()
  {
    return {0, 0, 0, 0, 0, 0, 0, 0, 0, Variant::Literal};
  }

  void validate() const
  {
    for (double v : {a1, a2, a3, b1, b2, c, d, f1, f2})
      if (!std::isfinite(v))
        throw Error(ErrorCode::InvalidInput, "params", "non-finite coefficient");
  }

  bool operator==(const ModelParams&) const = default;
};

struct QualityPrediction {
  double pmos = 0;
  double pmos_t = 0;
  double pmos_g = 0;
  double tc_est = 0;
  double alpha = 0;
  double tqs = 0;
};

/// 2^((qp - 4) / 6).
inline double tqs_from_qp(double qp) { return std::exp2((qp - 4.0) / 6.0); }

inline double h_of_qp(const ModelParams& p, double qp) { return p.a1 * qp * qp + p.a2 * qp + p.a3; }

inline double j_of_qp(const ModelParams& p, double qp) { return p.b1 * qp + p.b2; }

inline double estimate_tc(const ModelParams& p, double qp, double tbpp)
{
  return h_of_qp(p, qp) * tbpp + j_of_qp(p, qp);
}

inline double alpha_from_tc(const ModelParams& p, double tc) { return p.c * tc + p.d; }

inline double pmos_t(const ModelParams& p, double qp, double tbpp)
{
  return alpha_from_tc(p, estimate_tc(p, qp, tbpp)) * tqs_from_qp(qp);
}

inline double pmos_g(const ModelParams& p, double pqs)
{
  if (!(pqs > 0.0))
    throw Error(ErrorCode::NonPositivePqs, "pqs");
  return p.f1 / pqs + p.f2;
}

inline QualityPrediction predict(const ModelParams& p, double pqs, double qp, double tbpp)
{
  QualityPrediction q;
  q.pmos_g = pmos_g(p, pqs);
  q.tc_est = estimate_tc(p, qp, tbpp);
  q.alpha = alpha_from_tc(p, q.tc_est);
  q.tqs = tqs_from_qp(qp);
  q.pmos_t = q.alpha * q.tqs;
  q.pmos = (p.variant == Variant::Literal ? q.alpha : q.pmos_t) + q.pmos_g;
  return q;
}

inline QualityPrediction predict(const ModelParams& p, const BitstreamFeatures& f)
{
  f.validate();
  return predict(p, f.pqs, static_cast<double>(f.qp), f.tbpp);
}

//----------------------------------------------------------------------------
// Flat key/value persistence

inline std::string dump_params(const ModelParams& p)
{
  nlohmann::ordered_json j;
  j["a1"] = p.a1;
  j["a2"] = p.a2;
  j["a3"] = p.a3;
  j["b1"] = p.b1;
  j["b2"] = p.b2;
  j["c"] = p.c;
  j["d"] = p.d;
  j["f1"] = p.f1;
  j["f2"] = p.f2;
  j["variant"] = std::string(variant_name(p.variant));
  return j.dump(2) + "\n";
}

inline nlohmann::json to_json(const ModelParams& p) { return nlohmann::json::parse(dump_params(p)); }

/// Missing keys keep their defaults.
inline ModelParams params_from_json(const nlohmann::json& j)
{
  ModelParams p;
  try {
    p.a1 = j.value("a1", p.a1);
    p.a2 = j.value("a2", p.a2);
    p.a3 = j.value("a3", p.a3);
    p.b1 = j.value("b1", p.b1);
    p.b2 = j.value("b2", p.b2);
    p.c = j.value("c", p.c);
    p.d = j.value("d", p.d);
    p.f1 = j.value("f1", p.f1);
    p.f2 = j.value("f2", p.f2);
    if (j.contains("variant"))
      p.variant = parse_variant(j.at("variant").get<std::string>());
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, "params", e.what());
  }
  p.validate();
  return p;
}

inline ModelParams load_params(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, path.string(), "cannot open params");
  nlohmann::json j;
  try {
    in >> j;
  }
  catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path.string(), e.what());
  }
  return params_from_json(j);
}

inline void save_params(const std::filesystem::path& path, const ModelParams& p)
{
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, path.string(), "cannot write params");
  out << dump_params(p);
}

}  // namespace streampcq
