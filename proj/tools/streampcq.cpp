// streampcq command-line front end.
//
// Exit status: 0 when every item succeeded, 1 when any item (file, row,
// fold) failed or a runtime error occurred, 2 on usage errors.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streampcq/streampcq.hpp"

namespace fs = std::filesystem;
using namespace streampcq;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const std::string& path, const std::string& text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, path, "cannot write");
  out << text;
}

std::string join(const std::vector<std::string>& v, char sep)
{
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? std::string(1, sep) : std::string()) + v[i];
  return s;
}

SyntaxSchema resolve_schema(const std::string& path)
{
  if (path.empty())
    return default_schema();
  if (!fs::exists(path))
    throw UsageError("schema file not found: " + path);
  auto s = load_schema(path);
  s.validate();
  return s;
}

std::string fmt_num(double v) { return csv::fmt(v); }

ojson metrics_json(const EvalReport& r)
{
  ojson j;
  j["n"] = r.n;
  j["plcc"] = r.plcc;
  j["srcc"] = r.srcc;
  j["rmse"] = r.rmse;
  ojson m;
  if (r.map.linear_limit) {
    m["form"] = "linear-limit";
    m["slope"] = r.map.slope;
    m["intercept"] = r.map.intercept;
  }
  else {
    m["form"] = "logistic";
    m["b1"] = r.map.b1;
    m["b2"] = r.map.b2;
    m["b3"] = r.map.b3;
    m["b4"] = r.map.b4;
  }
  j["mapping"] = m;
  j["converged"] = r.converged;
  return j;
}

ojson summary_json(const MetricSummary& s)
{
  return {{"n", s.n}, {"mean", s.mean}, {"std", s.std}, {"min", s.min},
          {"median", s.median}, {"max", s.max}};
}

ojson folds_json(const CrossValReport& cv)
{
  ojson folds = ojson::array();
  for (const auto& f : cv.folds) {
    ojson j;
    j["validation_contents"] = f.validation_contents;
    j["n_train"] = f.n_train;
    j["n_validation"] = f.n_validation;
    if (f.failed)
      j["error"] = f.error;
    else
      j["metrics"] = metrics_json(f.report);
    folds.push_back(j);
  }
  return {{"folds", folds},
          {"failed", cv.failed},
          {"plcc", summary_json(cv.plcc)},
          {"srcc", summary_json(cv.srcc)},
          {"rmse", summary_json(cv.rmse)}};
}

/// Fold rows followed by mean and std rows over the successful folds.
/// With a seed, every row carries it in a trailing column.
std::string folds_csv(const CrossValReport& cv, const std::string& id_column,
                      std::optional<std::uint64_t> seed = std::nullopt)
{
  const std::string tail = seed ? "," + std::to_string(*seed) : "";
  std::ostringstream out;
  out << id_column << ",validation_contents,n_train,n_validation,plcc,srcc,rmse,error"
      << (seed ? ",seed" : "") << '\n';
  for (std::size_t i = 0; i < cv.folds.size(); ++i) {
    const auto& f = cv.folds[i];
    out << i << ',' << csv::quote(join(f.validation_contents, ';')) << ',' << f.n_train << ','
        << f.n_validation << ',';
    if (f.failed)
      out << ",,," << csv::quote(f.error) << tail << '\n';
    else
      out << fmt_num(f.report.plcc) << ',' << fmt_num(f.report.srcc) << ','
          << fmt_num(f.report.rmse) << ',' << tail << '\n';
  }
  out << "mean,,,," << fmt_num(cv.plcc.mean) << ',' << fmt_num(cv.srcc.mean) << ','
      << fmt_num(cv.rmse.mean) << ',' << tail << '\n';
  out << "std,,,," << fmt_num(cv.plcc.std) << ',' << fmt_num(cv.srcc.std) << ','
      << fmt_num(cv.rmse.std) << ',' << tail << '\n';
  return out.str();
}

std::vector<TrainingRecord> load_training(const std::string& path)
{
  return csv::read_training(csv::read_table(fs::path(path)));
}

//----------------------------------------------------------------------------
// extract

struct ExtractOptions {
  std::vector<std::string> streams;
  std::string schema;
  std::string sidecar_dir;
  std::string decoded_dir;
  std::string out;
  bool timing = false;
  unsigned jobs = 1;
};

struct ExtractOutcome {
  std::optional<BitstreamFeatures> features;
  std::int64_t micros = 0;
  std::string error;
};

ExtractOutcome extract_one(const std::string& stream, const SyntaxSchema& schema,
                           const ExtractOptions& opt)
{
  ExtractOutcome r;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto bytes = read_file_bytes(stream);
    const fs::path side_path = opt.sidecar_dir.empty()
                                 ? sidecar_path_for(stream)
                                 : fs::path(opt.sidecar_dir) /
                                     sidecar_path_for(fs::path(stream).filename());
    const auto side = load_sidecar(side_path);
    try {
      r.features = extract_features(bytes, schema, side);
    }
    catch (const Error& e) {
      // last resort for the point count: a decoded cloud next to the stream
      const auto ply = fs::path(opt.decoded_dir) / (fs::path(stream).filename().string() + ".ply");
      if (e.code() != ErrorCode::MissingField || e.subject() != "point_count" ||
          opt.decoded_dir.empty() || !fs::exists(ply))
        throw;
      r.features = extract_features(bytes, schema, side, read_ply(ply).size());
    }
  }
  catch (const std::exception& e) {
    r.error = e.what();
  }
  r.micros = std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now() - t0)
               .count();
  return r;
}

int cmd_extract(const ExtractOptions& opt)
{
  const auto schema = resolve_schema(opt.schema);
  std::vector<ExtractOutcome> results(opt.streams.size());
  detail::parallel_for(opt.streams.size(), opt.jobs, [&](std::size_t i) {
    results[i] = extract_one(opt.streams[i], schema, opt);
  });

  std::ostringstream out;
  out << csv::kFeatureHeader << (opt.timing ? ",extract_us" : "") << '\n';
  int status = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (!r.features) {
      std::cerr << opt.streams[i] << ": " << r.error << '\n';
      status = kExitFailure;
      continue;
    }
    csv::write_feature_row(out, opt.streams[i], *r.features);
    if (opt.timing)
      out << ',' << r.micros;
    out << '\n';
  }
  emit(opt.out, out.str());
  return status;
}

//----------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::vector<std::string> inputs;
  std::string params;
  std::string variant;
  std::string schema;
  std::string sidecar_dir;
  bool clamp = false;
  std::string out;
};

int cmd_score(const ScoreOptions& opt)
{
  ModelParams params = opt.params.empty() ? ModelParams{} : load_params(opt.params);
  if (!opt.variant.empty())
    params.variant = parse_variant(opt.variant);

  std::vector<csv::FeatureRow> rows;
  int status = 0;
  std::optional<SyntaxSchema> schema;
  for (const auto& input : opt.inputs) {
    if (fs::path(input).extension() == ".csv") {
      const auto table = csv::read_table(fs::path(input));
      for (std::size_t k = 0; k < table.rows.size(); ++k) {
        try {
          rows.push_back(csv::parse_feature_row(table, table.rows[k]));
        }
        catch (const Error& e) {
          std::cerr << input << ":" << table.line_numbers[k] << ": " << e.what() << '\n';
          status = kExitFailure;
        }
      }
      continue;
    }
    if (!schema)
      schema = resolve_schema(opt.schema);
    ExtractOptions eo;
    eo.sidecar_dir = opt.sidecar_dir;
    auto r = extract_one(input, *schema, eo);
    if (!r.features) {
      std::cerr << input << ": " << r.error << '\n';
      status = kExitFailure;
      continue;
    }
    rows.push_back({input, *r.features});
  }

  std::ostringstream out;
  out << "stream,pqs,qp,tbpp,tc_est,alpha,tqs,pmos_t,pmos_g,pmos\n";
  for (const auto& row : rows) {
    const auto& f = row.features;
    try {
      const auto q = predict(params, f.pqs, static_cast<double>(f.qp), f.tbpp);
      const double pmos = opt.clamp ? std::clamp(q.pmos, 0.0, 100.0) : q.pmos;
      out << csv::quote(row.stream) << ',' << fmt_num(f.pqs) << ',' << f.qp << ','
          << fmt_num(f.tbpp) << ',' << fmt_num(q.tc_est) << ',' << fmt_num(q.alpha) << ','
          << fmt_num(q.tqs) << ',' << fmt_num(q.pmos_t) << ',' << fmt_num(q.pmos_g) << ','
          << fmt_num(pmos) << '\n';
    }
    catch (const Error& e) {
      std::cerr << row.stream << ": " << e.what() << '\n';
      status = kExitFailure;
    }
  }
  emit(opt.out, out.str());
  return status;
}

//----------------------------------------------------------------------------
// tc

int cmd_tc(const std::vector<std::string>& clouds, int block_edge, const std::string& out_path)
{
  std::ostringstream out;
  out << "cloud,block_edge,blocks_used,tc\n";
  int status = 0;
  for (const auto& c : clouds) {
    try {
      const auto r = compute_tc(read_ply(fs::path(c)), block_edge);
      out << csv::quote(c) << ',' << r.block_edge << ',' << r.blocks_used << ','
          << fmt_num(r.tc) << '\n';
    }
    catch (const Error& e) {
      std::cerr << c << ": " << e.what() << '\n';
      status = kExitFailure;
    }
  }
  emit(out_path, out.str());
  return status;
}

//----------------------------------------------------------------------------
// train / eval / loocv / splits / significance / synth / mos

int cmd_train(const std::string& input, const std::string& variant, const std::string& out_params,
              const std::string& diagnostics)
{
  const auto result = train_full(load_training(input), parse_variant(variant));
  emit(out_params, dump_params(result.params) + "\n");
  if (!diagnostics.empty()) {
    std::ostringstream d;
    write_diagnostics_csv(d, result.diagnostics);
    emit(diagnostics, d.str());
  }
  for (const auto& s : result.diagnostics.stage_a.skipped)
    std::cerr << "note: stage A skipped " << s.group << " (" << s.reason << ")\n";
  for (const auto& s : result.diagnostics.stage_b.skipped)
    std::cerr << "note: stage B skipped " << s.group << " (" << s.reason << ")\n";
  return 0;
}

int cmd_eval(const std::string& input, const std::string& out_path, bool json,
             const std::string& mapped_path)
{
  const auto pairs = csv::read_scores(csv::read_table(fs::path(input)));
  const auto r = evaluate(pairs);
  if (json) {
    emit(out_path, metrics_json(r).dump(2) + "\n");
  }
  else {
    std::ostringstream out;
    out << "n,plcc,srcc,rmse,mapping,b1,b2,b3,b4,slope,intercept,converged\n";
    out << r.n << ',' << fmt_num(r.plcc) << ',' << fmt_num(r.srcc) << ',' << fmt_num(r.rmse) << ','
        << (r.map.linear_limit ? "linear-limit" : "logistic") << ',';
    if (r.map.linear_limit)
      out << ",,,," << fmt_num(r.map.slope) << ',' << fmt_num(r.map.intercept);
    else
      out << fmt_num(r.map.b1) << ',' << fmt_num(r.map.b2) << ',' << fmt_num(r.map.b3) << ','
          << fmt_num(r.map.b4) << ",,";
    out << ',' << (r.converged ? "true" : "false") << '\n';
    emit(out_path, out.str());
  }
  if (!mapped_path.empty()) {
    std::ostringstream m;
    m << "stimulus,objective,mos,mapped,residual\n";
    const auto res = residuals(r, pairs.mos);
    for (std::size_t i = 0; i < pairs.mos.size(); ++i)
      m << csv::quote(pairs.labels.empty() ? std::to_string(i) : pairs.labels[i]) << ','
        << fmt_num(pairs.objective[i]) << ',' << fmt_num(pairs.mos[i]) << ','
        << fmt_num(r.mapped[i]) << ',' << fmt_num(res[i]) << '\n';
    emit(mapped_path, m.str());
  }
  return 0;
}

int cmd_loocv(const std::string& input, const std::string& variant, unsigned jobs,
              const std::string& out_path, bool json)
{
  const auto cv = loocv(load_training(input), parse_variant(variant), jobs);
  emit(out_path, json ? folds_json(cv).dump(2) + "\n" : folds_csv(cv, "fold"));
  for (const auto& f : cv.folds)
    if (f.failed)
      std::cerr << "fold " << join(f.validation_contents, ';') << ": " << f.error << '\n';
  return cv.failed ? kExitFailure : 0;
}

int cmd_splits(const std::string& input, std::size_t n, std::uint64_t seed,
               std::size_t train_contents, const std::string& variant, unsigned jobs,
               const std::string& out_path, bool json, const std::string& hist_path)
{
  const auto rep =
    random_split_eval(load_training(input), n, train_contents, seed, parse_variant(variant), jobs);
  if (json) {
    auto j = folds_json(rep.result);
    j["seed"] = rep.seed;
    j["train_contents"] = rep.train_contents;
    emit(out_path, j.dump(2) + "\n");
  }
  else {
    emit(out_path, folds_csv(rep.result, "split", rep.seed));
  }
  if (!hist_path.empty()) {
    std::ostringstream h;
    h << "metric,bin,lo,hi,count\n";
    auto dump = [&](const char* name, const Histogram& hist) {
      const double w = (hist.hi - hist.lo) / static_cast<double>(hist.counts.size());
      for (std::size_t b = 0; b < hist.counts.size(); ++b)
        h << name << ',' << b << ',' << fmt_num(hist.lo + w * static_cast<double>(b)) << ','
          << fmt_num(hist.lo + w * static_cast<double>(b + 1)) << ',' << hist.counts[b] << '\n';
    };
    dump("plcc", rep.plcc_hist);
    dump("srcc", rep.srcc_hist);
    dump("rmse", rep.rmse_hist);
    emit(hist_path, h.str());
  }
  return rep.result.failed ? kExitFailure : 0;
}

int cmd_significance(const std::vector<std::string>& files, std::vector<std::string> names,
                     double level, const std::string& out_path, bool json)
{
  if (files.size() < 2)
    throw UsageError("significance needs at least two residual files");
  if (names.empty())
    for (const auto& f : files)
      names.push_back(fs::path(f).stem().string());
  if (names.size() != files.size())
    throw UsageError("--names must list one name per residual file");

  std::vector<std::vector<double>> res;
  for (const auto& f : files)
    res.push_back(csv::read_residuals(csv::read_table(fs::path(f))));

  if (json) {
    ojson pairs = ojson::array();
    for (std::size_t i = 0; i < res.size(); ++i)
      for (std::size_t j = 0; j < res.size(); ++j) {
        if (i == j)
          continue;
        const auto v = f_test(res[i], res[j], level);
        pairs.push_back({{"row", names[i]},
                         {"column", names[j]},
                         {"f", v.f_statistic},
                         {"lower", v.lower},
                         {"upper", v.upper},
                         {"decision", std::string(decision_name(v.decision))}});
      }
    emit(out_path, ojson{{"level", level}, {"pairs", pairs}}.dump(2) + "\n");
    return 0;
  }
  const auto m = significance_matrix(res, level);
  std::ostringstream out;
  out << "model";
  for (const auto& n : names)
    out << ',' << csv::quote(n);
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << csv::quote(names[i]);
    for (double v : m[i])
      out << ',' << fmt_num(v);
    out << '\n';
  }
  emit(out_path, out.str());
  return 0;
}

int cmd_synth(double pqs, std::uint64_t qp, std::uint64_t texture_bits, std::uint64_t points,
              const std::string& out_path, const std::string& schema_path, unsigned fill)
{
  const auto schema = resolve_schema(schema_path);
  const auto src = schema.targets.contains(Target::PointCount) ? PointCountSource::SliceHeader
                                                               : PointCountSource::Sidecar;
  const auto f = BitstreamFeatures::make(pqs, qp, texture_bits, points, src);
  const auto s = synthesize_stream(f, schema, static_cast<std::uint8_t>(fill));
  emit(out_path, std::string(s.bytes.begin(), s.bytes.end()));
  const auto side = to_json(s.sidecar);
  if (!side.empty())
    emit(sidecar_path_for(out_path).string(), side.dump(2) + "\n");
  return 0;
}

int cmd_mos(const std::string& input, const std::string& out_path)
{
  const auto table = compute_mos(csv::read_ratings(csv::read_table(fs::path(input))));
  std::ostringstream out;
  out << "stimulus,mos,std,n_valid\n";
  for (std::size_t m = 0; m < table.stimuli.size(); ++m)
    out << csv::quote(table.stimuli[m]) << ',' << fmt_num(table.mos[m]) << ','
        << fmt_num(table.std[m]) << ',' << table.n_valid[m] << '\n';
  emit(out_path, out.str());
  for (const auto& s : table.rejected_subjects)
    std::cerr << "rejected subject: " << s << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Bitstream-layer point cloud quality toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "streampcq 0.1.0");

  const auto variant_check = CLI::IsMember({"additive", "alpha-times-tqs"});

  ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Recover coding features from bitstreams");
  extract->add_option("streams", ex.streams, "Bitstream files")->required();
  extract->add_option("--schema", ex.schema, "Syntax schema JSON")->envname("STREAMPCQ_SCHEMA");
  extract->add_option("--sidecar-dir", ex.sidecar_dir, "Directory holding <stream>.meta.json");
  extract->add_option("--decoded-dir", ex.decoded_dir,
                      "Directory holding decoded <stream>.ply clouds (point count fallback)");
  extract->add_option("-o,--out", ex.out, "Feature CSV (default stdout)");
  extract->add_flag("--timing", ex.timing, "Append per-file extraction time in microseconds");
  extract->add_option("-j,--jobs", ex.jobs, "Parallel files")->check(CLI::PositiveNumber);

  ScoreOptions sc;
  auto* score = app.add_subcommand("score", "Predict quality from features or bitstreams");
  score->add_option("inputs", sc.inputs, "Feature CSV files and/or bitstreams")->required();
  score->add_option("--params", sc.params, "Model parameter JSON")->check(CLI::ExistingFile);
  score->add_option("--variant", sc.variant, "Formula variant")->check(variant_check);
  score->add_option("--schema", sc.schema, "Syntax schema JSON")->envname("STREAMPCQ_SCHEMA");
  score->add_option("--sidecar-dir", sc.sidecar_dir, "Directory holding <stream>.meta.json");
  score->add_flag("--clamp", sc.clamp, "Limit predictions to [0, 100]");
  score->add_option("-o,--out", sc.out, "Score CSV (default stdout)");

  std::vector<std::string> clouds;
  int block_edge = kDefaultBlockEdge;
  std::string tc_out;
  auto* tc = app.add_subcommand("tc", "Texture complexity of source clouds");
  tc->add_option("clouds", clouds, "PLY files")->required()->check(CLI::ExistingFile);
  tc->add_option("--block-edge", block_edge, "Block edge in voxels")->check(CLI::PositiveNumber);
  tc->add_option("-o,--out", tc_out, "TC CSV (default stdout)");

  std::string train_in, train_variant = "additive", out_params, diagnostics;
  auto* train = app.add_subcommand("train", "Fit the nine model coefficients");
  train->add_option("training", train_in, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--variant", train_variant, "Variant stored in the params")->check(variant_check);
  train->add_option("--out-params", out_params, "Parameter JSON (default stdout)");
  train->add_option("--diagnostics", diagnostics, "Per-stage diagnostics CSV");

  std::string eval_in, eval_out, eval_mapped;
  bool eval_json = false;
  auto* eval = app.add_subcommand("eval", "PLCC, SRCC and RMSE of objective scores");
  eval->add_option("scores", eval_in, "Scores CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("-o,--out", eval_out, "Report (default stdout)");
  eval->add_flag("--json", eval_json, "JSON report instead of CSV");
  eval->add_option("--mapped", eval_mapped, "Per-stimulus mapped scores and residuals CSV");

  std::string cv_in, cv_variant = "additive", cv_out;
  unsigned cv_jobs = 1;
  bool cv_json = false;
  auto* cv = app.add_subcommand("loocv", "Leave-one-content-out cross-validation");
  cv->add_option("training", cv_in, "Training CSV")->required()->check(CLI::ExistingFile);
  cv->add_option("--variant", cv_variant, "Formula variant")->check(variant_check);
  cv->add_option("-j,--jobs", cv_jobs, "Parallel folds")->check(CLI::PositiveNumber);
  cv->add_option("-o,--out", cv_out, "Report (default stdout)");
  cv->add_flag("--json", cv_json, "JSON report instead of CSV");

  std::string sp_in, sp_variant = "additive", sp_out, sp_hist;
  std::size_t sp_n = 1000, sp_train = 10;
  std::uint64_t sp_seed = 0;
  unsigned sp_jobs = 1;
  bool sp_json = false;
  auto* sp = app.add_subcommand("splits", "Repeated random content-level splits");
  sp->add_option("training", sp_in, "Training CSV")->required()->check(CLI::ExistingFile);
  sp->add_option("--n", sp_n, "Number of splits");
  sp->add_option("--seed", sp_seed, "PRNG seed")->required();
  sp->add_option("--train-contents", sp_train, "Contents per training set");
  sp->add_option("--variant", sp_variant, "Formula variant")->check(variant_check);
  sp->add_option("-j,--jobs", sp_jobs, "Parallel splits")->check(CLI::PositiveNumber);
  sp->add_option("-o,--out", sp_out, "Report (default stdout)");
  sp->add_flag("--json", sp_json, "JSON report instead of CSV");
  sp->add_option("--histogram", sp_hist, "Histogram CSV of the three metrics");

  std::vector<std::string> sig_files, sig_names;
  double sig_level = 0.95;
  std::string sig_out;
  bool sig_json = false;
  auto* sig = app.add_subcommand("significance", "Pairwise variance-ratio tests on residuals");
  sig->add_option("residuals", sig_files, "Residual CSV per model")->required()->check(CLI::ExistingFile);
  sig->add_option("--names", sig_names, "Model names (default: file stems)");
  sig->add_option("--level", sig_level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
  sig->add_option("-o,--out", sig_out, "Matrix CSV (default stdout)");
  sig->add_flag("--json", sig_json, "Pairwise statistics as JSON");

  double sy_pqs = 1.0;
  std::uint64_t sy_qp = 22, sy_bits = 0, sy_points = 0;
  std::string sy_out, sy_schema;
  unsigned sy_fill = 0xA5;
  auto* synth = app.add_subcommand("synth", "Write a synthetic bitstream with given features");
  synth->add_option("--pqs", sy_pqs, "Position quantization scale")->required();
  synth->add_option("--qp", sy_qp, "Attribute QP")->required();
  synth->add_option("--texture-bits", sy_bits, "Attribute payload size in bits")->required();
  synth->add_option("--points", sy_points, "Point count")->required();
  synth->add_option("-o,--out", sy_out, "Output bitstream")->required();
  synth->add_option("--schema", sy_schema, "Syntax schema JSON")->envname("STREAMPCQ_SCHEMA");
  synth->add_option("--fill", sy_fill, "Payload filler byte")->check(CLI::Range(0u, 255u));

  std::string mos_in, mos_out;
  auto* mos = app.add_subcommand("mos", "MOS from a raw ratings matrix");
  mos->add_option("ratings", mos_in, "Ratings CSV")->required()->check(CLI::ExistingFile);
  mos->add_option("-o,--out", mos_out, "MOS CSV (default stdout)");

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  }
  catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  }
  catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (*extract)
      return cmd_extract(ex);
    if (*score)
      return cmd_score(sc);
    if (*tc)
      return cmd_tc(clouds, block_edge, tc_out);
    if (*train)
      return cmd_train(train_in, train_variant, out_params, diagnostics);
    if (*eval)
      return cmd_eval(eval_in, eval_out, eval_json, eval_mapped);
    if (*cv)
      return cmd_loocv(cv_in, cv_variant, cv_jobs, cv_out, cv_json);
    if (*sp)
      return cmd_splits(sp_in, sp_n, sp_seed, sp_train, sp_variant, sp_jobs, sp_out, sp_json,
                        sp_hist);
    if (*sig)
      return cmd_significance(sig_files, sig_names, sig_level, sig_out, sig_json);
    if (*synth)
      return cmd_synth(sy_pqs, sy_qp, sy_bits, sy_points, sy_out, sy_schema, sy_fill);
    if (*mos)
      return cmd_mos(mos_in, mos_out);
  }
  catch (const UsageError& e) {
    std::cerr << "streampcq " << name << ": " << e.what() << '\n';
    return kExitUsage;
  }
  catch (const std::exception& e) {
    std::cerr << "streampcq " << name << ": " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
