#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "gogan/cli/commands.hpp"
#include "gogan/cli/config.hpp"
#include "gogan/train/checkpoint.hpp"

using namespace gogan;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "gogan");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

const char* kTinyConfig = R"({
  "seed": 4,
  "resolution": 16,
  "domain": {"nelx": 16, "nely": 8},
  "simp": {"rmin": 1.5, "max_iters": 60},
  "dataset": {"pairs": [[0.3, 0.3], [0.5, 0.4], [0.4, 0.25], [0.5, 0.4], [0.35, 0.45]], "workers": 2},
  "generator": {"base_filters": 8, "filter_cap": 16, "dense_widths": [16]},
  "discriminator": {"base_filters": 8, "filter_cap": 16, "stride2_blocks": 2},
  "train": {"epochs": 2, "batch_schedule": [[0, 2]]}
})";

// One generated dataset and trained run shared by the end-to-end tests.
class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("gogan_cli_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    std::ofstream(*dir_ / "cfg.json") << kTinyConfig;
    gen_ = new CliRun(invoke({"generate", "--config", config()}));
    train_ = new CliRun(invoke({"train", "--config", config()}));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete gen_;
    delete train_;
  }
  static std::string config() { return (*dir_ / "cfg.json").string(); }
  static fs::path* dir_;
  static CliRun* gen_;
  static CliRun* train_;
};
fs::path* CliPipeline::dir_ = nullptr;
CliRun* CliPipeline::gen_ = nullptr;
CliRun* CliPipeline::train_ = nullptr;

}  // namespace

TEST(Config, DefaultsAndUnknownKeys) {
  const auto c = cli::parse_config("{}");
  EXPECT_EQ(c.resolution, 64);
  EXPECT_EQ(c.precision, cli::Precision::Float64);
  EXPECT_EQ(c.conditions.size(), 2u);
  EXPECT_EQ(c.generator.in_channels, 2);
  EXPECT_EQ(c.train.lambda, 100.0);
  EXPECT_THROW(cli::parse_config(R"({"resolutoin": 32})"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config(R"({"train": {"lamda": 1}})"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config(R"({"resolution": 48})"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config(R"({"precision": "half"})"), cli::ConfigError);
  EXPECT_THROW(cli::parse_config("{not json"), cli::ConfigError);
}

TEST(Config, ModelTextRoundTrips) {
  const auto c = cli::parse_config(kTinyConfig);
  const auto back = cli::config_from_model_text(c.model_text());
  EXPECT_EQ(back.model_text(), c.model_text());
  EXPECT_EQ(back.generator.base_filters, 8);
  auto other = c;
  other.paths.out = "/elsewhere";
  EXPECT_EQ(other.model_text(), c.model_text());
  other.train.lambda = 10;
  EXPECT_NE(other.model_text(), c.model_text());
}

TEST(Config, DefaultGridCoversRanges) {
  const auto g = cli::default_grid();
  EXPECT_EQ(g.size(), 49u);
  EXPECT_DOUBLE_EQ(g.front().first, 0.25);
  EXPECT_DOUBLE_EQ(g.back().first, 0.55);
  EXPECT_DOUBLE_EQ(g.back().second, 0.5);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({"bogus"}).code, 2);
  EXPECT_EQ(invoke({"infer", "--vf", "0.3"}).code, 2);
  EXPECT_EQ(invoke({"generate", "--config", "/nonexistent/cfg.json"}).code, 2);
  const auto bad = invoke({"generate", "--vf", "0.3", "--nu", "0.7", "--out", "/tmp"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("nu"), std::string::npos) << bad.err;
}

TEST(Cli, TrainWithoutManifestIsUsageError) {
  const auto dir = fs::temp_directory_path() / ("gogan_cli_empty_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto r = invoke({"train", "--out", dir.string(), "--resolution", "32"});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("manifest"), std::string::npos) << r.err;
  fs::remove_all(dir);
}

TEST_F(CliPipeline, GenerateWritesDistinctIds) {
  ASSERT_EQ(gen_->code, 0) << gen_->err;
  const auto recs = io::read_manifest((*dir_ / "dataset/manifest.jsonl").string());
  ASSERT_EQ(recs.size(), 5u);
  std::set<std::string> ids;
  for (const auto& r : recs) {
    ids.insert(r.id);
    EXPECT_TRUE(fs::exists(*dir_ / "dataset" / r.image));
    EXPECT_GT(r.c_act, 0.0);
  }
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_EQ(recs[1].c_act, recs[3].c_act);
  EXPECT_TRUE(fs::exists(*dir_ / "dataset/manifest.csv"));
}

TEST_F(CliPipeline, TrainWritesCheckpointAndCurve) {
  ASSERT_EQ(train_->code, 0) << train_->err;
  EXPECT_TRUE(fs::exists(*dir_ / "run/checkpoint.gog"));
  EXPECT_EQ(count_lines(*dir_ / "run/loss.csv"), 1 + 6);
  const auto info = train::inspect_checkpoint((*dir_ / "run/checkpoint.gog").string());
  EXPECT_EQ(info.dtype, train::DType::F64);
  EXPECT_EQ(info.g_updates, 6);
  const auto ins = invoke({"inspect-checkpoint", (*dir_ / "run/checkpoint.gog").string()});
  EXPECT_EQ(ins.code, 0);
  EXPECT_NE(ins.out.find("generator/enc0.conv.weight"), std::string::npos);
}

TEST_F(CliPipeline, InferIsReproducible) {
  ASSERT_EQ(train_->code, 0);
  const auto a = (*dir_ / "a.pgm").string(), b = (*dir_ / "b.pgm").string();
  const auto ra = invoke({"infer", "--config", config(), "--vf", "0.4", "--nu", "0.3", "--out", a});
  const auto rb = invoke({"infer", "--config", config(), "--vf", "0.4", "--nu", "0.3", "--out", b});
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(io::read_pgm(a).height, 16);
  const auto bin = (*dir_ / "bin.pgm").string();
  ASSERT_EQ(invoke({"infer", "--config", config(), "--vf", "0.4", "--nu", "0.3", "--out", bin, "--binary-threshold",
                 "0.5"})
                .code,
            0);
  for (double p : io::read_pgm(bin).pixels) EXPECT_TRUE(p == 0.0 || p == 1.0);
  EXPECT_EQ(invoke({"infer", "--config", config(), "--vf", "0.4", "--nu", "0.9"}).code, 2);
}

TEST_F(CliPipeline, EvalReportsOneRowPerSample) {
  ASSERT_EQ(train_->code, 0);
  const auto r = invoke({"eval", "--config", config()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(*dir_ / "run/eval/metrics.csv"), 1 + 5);
  const auto gt = invoke({"eval", "--config", config(), "--ground-truth", "--ids", "s0000,s0002"});
  ASSERT_EQ(gt.code, 0) << gt.err;
  const auto unknown = invoke({"eval", "--config", config(), "--ids", "nope"});
  EXPECT_EQ(unknown.code, 0);
  EXPECT_NE((unknown.out + unknown.err).find("nope"), std::string::npos);
}

TEST_F(CliPipeline, ResumeNeedsMatchingConfig) {
  ASSERT_EQ(train_->code, 0);
  auto text = std::string(kTinyConfig);
  text.replace(text.find("\"epochs\": 2"), 11, "\"epochs\": 3");
  std::ofstream(*dir_ / "changed.json") << text;
  const auto r = invoke({"train", "--config", (*dir_ / "changed.json").string(), "--resume"});
  EXPECT_EQ(r.code, 2) << r.err;
}
