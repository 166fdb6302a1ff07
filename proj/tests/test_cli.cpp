#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "streampcq/csv.hpp"
#include "streampcq/model.hpp"
#include "streampcq/pointcloud.hpp"
#include "streampcq/schema.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace streampcq;

namespace {

class Cli : public ::testing::Test {
protected:
  void SetUp() override
  {
    dir = fs::temp_directory_path() /
          ("streampcq_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  /// Runs the tool with stdout and stderr captured to files; returns the exit code.
  int run(const std::string& args)
  {
    const std::string cmd = "env -u STREAMPCQ_SCHEMA " + std::string(STREAMPCQ_CLI) + " " + args +
                            " > " + (dir / "stdout").string() + " 2> " + (dir / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return read(dir / "stdout"); }
  std::string err() const { return read(dir / "stderr"); }

  static std::string read(const fs::path& p)
  {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const
  {
    std::ofstream(dir / name, std::ios::binary) << text;
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }

  csv::Table table(const std::string& text) const
  {
    std::istringstream in(text);
    return csv::read_table(in);
  }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitTwo)
{
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("splits " + path("none.csv")), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, SynthThenExtractRoundTrip)
{
  ASSERT_EQ(run("synth --pqs 0.25 --qp 34 --texture-bits 1000000 --points 2000000 -o " + path("a.bin")), 0)
    << err();
  ASSERT_EQ(run("synth --pqs 1 --qp 22 --texture-bits 800 --points 100 -o " + path("b.bin")), 0);
  ASSERT_EQ(run("synth --pqs 0.125 --qp 46 --texture-bits 64000 --points 716659 -o " + path("c.bin")), 0);
  ASSERT_EQ(run("extract --timing " + path("a.bin") + " " + path("b.bin") + " " + path("c.bin")), 0)
    << err();
  const auto t = table(out());
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.header.back(), "extract_us");
  const auto a = csv::parse_feature_row(t, t.rows[0]).features;
  EXPECT_EQ(a, BitstreamFeatures::make(0.25, 34, 1'000'000, 2'000'000));
  EXPECT_EQ(a.tbpp, 0.5);
  EXPECT_EQ(csv::parse_feature_row(t, t.rows[2]).features,
            BitstreamFeatures::make(0.125, 46, 64000, 716659));
}

TEST_F(Cli, MissingSchemaIsUsageError)
{
  ASSERT_EQ(run("synth --pqs 1 --qp 22 --texture-bits 800 --points 100 -o " + path("a.bin")), 0);
  EXPECT_EQ(run("extract --schema " + path("nope.json") + " " + path("a.bin")), 2);
  EXPECT_NE(err().find("schema"), std::string::npos);
  const std::string env = "STREAMPCQ_SCHEMA=" + path("nope.json") + " " + STREAMPCQ_CLI;
  EXPECT_EQ(WEXITSTATUS(std::system((env + " extract " + path("a.bin") + " > /dev/null 2>&1").c_str())), 2);
}

TEST_F(Cli, SidecarOnlyPointCount)
{
  auto schema = default_schema();
  schema.targets.erase(Target::PointCount);
  write("no_count.json", to_json(schema).dump(2));
  ASSERT_EQ(run("synth --schema " + path("no_count.json") +
                " --pqs 0.5 --qp 40 --texture-bits 4000000 --points 716659 -o " + path("g.bin")),
            0)
    << err();
  ASSERT_TRUE(fs::exists(path("g.bin.meta.json")));
  ASSERT_EQ(run("extract --schema " + path("no_count.json") + " " + path("g.bin")), 0) << err();
  const auto t = table(out());
  const auto row = csv::parse_feature_row(t, t.rows.at(0));
  EXPECT_EQ(row.features.point_count, 716659u);
  EXPECT_EQ(row.features.point_count_source, PointCountSource::Sidecar);

  // sidecar moved elsewhere
  fs::create_directories(dir / "side");
  fs::rename(path("g.bin.meta.json"), dir / "side" / "g.bin.meta.json");
  EXPECT_EQ(run("extract --schema " + path("no_count.json") + " " + path("g.bin")), 1);
  EXPECT_NE(err().find("MissingField(point_count)"), std::string::npos) << err();
  EXPECT_EQ(run("extract --schema " + path("no_count.json") + " --sidecar-dir " + path("side") +
                " " + path("g.bin")),
            0);
}

TEST_F(Cli, ExtractReportsPerFileFailures)
{
  ASSERT_EQ(run("synth --pqs 1 --qp 22 --texture-bits 800 --points 100 -o " + path("a.bin")), 0);
  write("junk.bin", std::string("\x02\x00\x00\x00\x09\x01", 6));
  EXPECT_EQ(run("extract -j 2 " + path("a.bin") + " " + path("junk.bin")), 1);
  EXPECT_EQ(table(out()).rows.size(), 1u);
  EXPECT_NE(err().find("TruncatedUnit"), std::string::npos);
}

TEST_F(Cli, ScoreVariantsAndClamp)
{
  write("f.csv", "stream,pqs,qp,tbpp\nx,0.25,46,0.5\n");
  ASSERT_EQ(run("score " + path("f.csv")), 0) << err();
  auto t = table(out());
  EXPECT_NEAR(csv::to_double(t.rows[0][t.column("pmos")], "pmos"), 77.2487, 1e-3);

  ASSERT_EQ(run("score --variant alpha-times-tqs " + path("f.csv")), 0);
  t = table(out());
  EXPECT_NEAR(csv::to_double(t.rows[0][t.column("pmos")], "pmos"), 60.2799, 1e-3);

  ModelParams big;
  big.f2 = 500;
  save_params(dir / "big.json", big);
  ASSERT_EQ(run("score --clamp --params " + path("big.json") + " " + path("f.csv")), 0);
  t = table(out());
  EXPECT_EQ(t.rows[0][t.column("pmos")], "100");
}

TEST_F(Cli, ScoreSkipsMalformedRows)
{
  write("f.csv", "stream,pqs,qp,tbpp\nx,0.25,46,0.5\ny,zero,46,0.5\nz,0,22,1\n");
  EXPECT_EQ(run("score " + path("f.csv")), 1);
  EXPECT_EQ(table(out()).rows.size(), 1u);
  EXPECT_NE(err().find(":3:"), std::string::npos) << err();
  EXPECT_NE(err().find("NonPositivePqs"), std::string::npos) << err();
}

TEST_F(Cli, ScoreStreamsDirectly)
{
  ASSERT_EQ(run("synth --pqs 0.25 --qp 46 --texture-bits 1000000 --points 2000000 -o " + path("s.bin")), 0);
  ASSERT_EQ(run("score " + path("s.bin")), 0) << err();
  const auto t = table(out());
  EXPECT_NEAR(csv::to_double(t.rows[0][t.column("pmos")], "pmos"), 77.2487, 1e-3);
}

TEST_F(Cli, TrainRecoversGenerator)
{
  std::ofstream f(dir / "train.csv");
  csv::write_training(f, fixtures::synthetic_dataset());
  f.close();
  ASSERT_EQ(run("train --variant alpha-times-tqs --out-params " + path("p.json") +
                " --diagnostics " + path("d.csv") + " " + path("train.csv")),
            0)
    << err();
  const auto p = load_params(dir / "p.json");
  const ModelParams want;
  EXPECT_NEAR(p.a1, want.a1, 1e-6);
  EXPECT_NEAR(p.a2, want.a2, 1e-6);
  EXPECT_NEAR(p.a3, want.a3, 1e-6);
  EXPECT_NEAR(p.b1, want.b1, 1e-6);
  EXPECT_NEAR(p.b2, want.b2, 1e-6);
  EXPECT_NEAR(p.c, want.c, 1e-6);
  EXPECT_NEAR(p.d, want.d, 1e-6);
  EXPECT_NEAR(p.f1, want.f1, 1e-6);
  EXPECT_NEAR(p.f2, want.f2, 1e-6);
  EXPECT_EQ(p.variant, Variant::AlphaTimesTqs);
  EXPECT_EQ(read(dir / "d.csv").substr(0, 36), "stage,group,n,coef1,coef2,coef3,rss\n");
}

TEST_F(Cli, EvalIdentity)
{
  std::string s = "stimulus,content,objective,mos\n";
  for (int i = 0; i < 30; ++i)
    s += "s" + std::to_string(i) + ",c," + std::to_string(3 * i % 17 + 0.5 * i) + "," +
         std::to_string(3 * i % 17 + 0.5 * i) + "\n";
  write("scores.csv", s);
  ASSERT_EQ(run("eval --mapped " + path("m.csv") + " " + path("scores.csv")), 0) << err();
  const auto t = table(out());
  EXPECT_NEAR(csv::to_double(t.rows[0][t.column("plcc")], "plcc"), 1.0, 1e-12);
  EXPECT_NEAR(csv::to_double(t.rows[0][t.column("srcc")], "srcc"), 1.0, 1e-12);
  ASSERT_EQ(run("eval --json " + path("scores.csv")), 0);
  const auto j = nlohmann::json::parse(out());
  EXPECT_NEAR(j["plcc"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(table(read(dir / "m.csv")).rows.size(), 30u);
}

TEST_F(Cli, LoocvAndSplitsAreDeterministic)
{
  std::ofstream f(dir / "train.csv");
  csv::write_training(f, fixtures::synthetic_dataset(ModelParams{}, 8, 0.5, 21));
  f.close();
  ASSERT_EQ(run("loocv -j 3 -o " + path("cv1.csv") + " " + path("train.csv")), 0) << err();
  ASSERT_EQ(run("loocv -o " + path("cv2.csv") + " " + path("train.csv")), 0);
  EXPECT_EQ(read(dir / "cv1.csv"), read(dir / "cv2.csv"));
  EXPECT_EQ(table(read(dir / "cv1.csv")).rows.size(), 8u + 2u);

  const std::string sp = "splits --n 30 --train-contents 4 --seed 99 ";
  ASSERT_EQ(run(sp + "-j 4 -o " + path("s1.csv") + " --histogram " + path("h.csv") + " " +
                path("train.csv")),
            0)
    << err();
  ASSERT_EQ(run(sp + "-o " + path("s2.csv") + " " + path("train.csv")), 0);
  EXPECT_EQ(read(dir / "s1.csv"), read(dir / "s2.csv"));
  const auto t = table(read(dir / "s1.csv"));
  EXPECT_EQ(t.rows.size(), 32u);
  EXPECT_EQ(t.rows[0][t.column("seed")], "99");
  EXPECT_EQ(table(read(dir / "h.csv")).rows.size(), 60u);
}

TEST_F(Cli, SignificanceMatrix)
{
  std::string a = "residual\n", b = "residual\n";
  for (int i = 0; i < 400; ++i) {
    const double r = ((i * 37) % 101 - 50) / 10.0;
    a += csv::fmt(2 * r) + "\n";
    b += csv::fmt(r) + "\n";
  }
  write("worse.csv", a);
  write("better.csv", b);
  ASSERT_EQ(run("significance " + path("worse.csv") + " " + path("better.csv")), 0) << err();
  EXPECT_EQ(out(), "model,worse,better\nworse,0.5,0\nbetter,1,0.5\n");
  ASSERT_EQ(run("significance --json " + path("worse.csv") + " " + path("better.csv")), 0);
  const auto j = nlohmann::json::parse(out());
  EXPECT_NEAR(j["pairs"][0]["f"].get<double>(), 4.0, 1e-12);
  EXPECT_EQ(j["pairs"][0]["decision"], "column-better");
}

TEST_F(Cli, TcFromPly)
{
  PointCloud pc;
  pc.positions = {{0, 0, 0}, {1, 0, 0}, {8, 8, 8}, {9, 8, 8}, {10, 9, 8}};
  pc.colors = {{0, 0, 0}, {2, 2, 2}, {0, 0, 0}, {0, 0, 0}, {6, 6, 6}};
  {
    std::ofstream f(dir / "c.ply", std::ios::binary);
    write_ply(f, pc, true);
  }
  ASSERT_EQ(run("tc --block-edge 4 " + path("c.ply")), 0) << err();
  const auto t = table(out());
  EXPECT_EQ(t.header, (std::vector<std::string>{"cloud", "block_edge", "blocks_used", "tc"}));
  EXPECT_EQ(t.rows[0][1], "4");
  EXPECT_EQ(t.rows[0][2], "2");
  EXPECT_NEAR(csv::to_double(t.rows[0][3], "tc"), 1.9142136, 1e-6);
}

TEST_F(Cli, MosFromRatings)
{
  write("r.csv", "stimulus,a,b\ns1,10,10\ns2,40,40\ns3,70,70\n");
  ASSERT_EQ(run("mos " + path("r.csv")), 0) << err();
  EXPECT_EQ(out(), "stimulus,mos,std,n_valid\ns1,0,0,2\ns2,50,0,2\ns3,100,0,2\n");
}
