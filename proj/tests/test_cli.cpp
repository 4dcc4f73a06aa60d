#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "fedshield/errors.hpp"
#include "fedshield/data.hpp"
#include "fedshield/key_io.hpp"

namespace fedshield::cli {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fedshield_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const fs::path& dir, const std::string& body) {
  fs::create_directories(dir);
  const auto path = dir / "exp.toml";
  std::ofstream(path) << body;
  return path;
}

const char* kSmallConfig = R"(
clients = 6
rounds = 2
gamma = 0.2
defense = "lmtv"
key_bits = 128
threads = 1
[data]
per_class = 60
test_per_class = 30
[model]
hidden = [6]
[train]
batch_size = 8
epochs = 2
)";

TEST(Overrides, ParsesBothForms) {
  const auto o = parse_overrides({"--gamma", "0.3", "--lmtv.beta=0.7"});
  ASSERT_EQ(o.size(), 2u);
  EXPECT_EQ(o[0].key, "gamma");
  EXPECT_EQ(o[0].value, "0.3");
  EXPECT_EQ(o[1].key, "lmtv.beta");
  EXPECT_EQ(o[1].value, "0.7");
  EXPECT_THROW(parse_overrides({"--gamma"}), ConfigError);
  EXPECT_THROW(parse_overrides({"gamma", "1"}), ConfigError);
}

TEST(Keygen, RefusesTinyKeysWithGuidance) {
  std::ostringstream out, err;
  EXPECT_EQ(cmd_keygen({8, scratch("tiny"), 1}, out, err), kExitValidation);
  EXPECT_NE(err.str().find("2048"), std::string::npos);
}

TEST(Keygen, WritesParseableDeterministicKeys) {
  std::ostringstream out, err;
  const auto a = scratch("keys_a"), b = scratch("keys_b");
  ASSERT_EQ(cmd_keygen({512, a, 42}, out, err), kExitOk) << err.str();
  ASSERT_EQ(cmd_keygen({512, b, 42}, out, err), kExitOk);
  const auto pk = paillier::public_key_from_json(slurp(a / "public_key.json"));
  const auto sk = paillier::private_key_from_json(slurp(a / "private_key.json"));
  EXPECT_EQ(pk.bit_length(), 512u);
  EXPECT_NO_THROW(paillier::validate(paillier::Keypair{pk, sk}));
  EXPECT_EQ(slurp(a / "public_key.json"), slurp(b / "public_key.json"));
}

TEST(Run, WritesAllArtifacts) {
  const auto dir = scratch("run");
  const auto cfg = write_config(dir, kSmallConfig);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run({cfg, dir / "out", {}}, out, err), kExitOk) << err.str();
  for (const char* f : {"manifest.json", "config.toml", "rounds.jsonl", "report.json",
                        "report.csv", "car_table.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  }
  const auto rounds = slurp(dir / "out" / "rounds.jsonl");
  EXPECT_EQ(std::count(rounds.begin(), rounds.end(), '\n'), 2);
  const auto manifest = nlohmann::json::parse(slurp(dir / "out" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "run");
  EXPECT_TRUE(manifest["artifact_versions"].contains("gmp"));
}

TEST(Run, ManifestAndConfigReproduceReport) {
  const auto dir = scratch("repro");
  const auto cfg = write_config(dir, kSmallConfig);
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run({cfg, dir / "a", {{"defense", "klad"}}}, out, err), kExitOk);
  ASSERT_EQ(cmd_run({dir / "a" / "config.toml", dir / "b", {}}, out, err), kExitOk);
  EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "divergence.csv"));
}

TEST(Run, ValidationFailuresExitTwo) {
  const auto dir = scratch("invalid");
  const auto cfg = write_config(dir, kSmallConfig);
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run({cfg, dir / "o1", {{"gamma", "0.6"}}}, out, err), kExitValidation);
  EXPECT_EQ(cmd_run({cfg, dir / "o2", {{"unknown.key", "1"}}}, out, err), kExitValidation);
  EXPECT_EQ(cmd_run({dir / "missing.toml", dir / "o3", {}}, out, err), kExitValidation);
}

TEST(Run, RuntimeFailuresExitThree) {
  const auto dir = scratch("runtime");
  const auto cfg = write_config(dir, std::string(kSmallConfig) + R"(
[lmtv]
absolute_floor = 1.0
)");
  // Every client falls below a CAR floor of 1.0, so the quorum is empty.
  std::ostringstream out, err;
  EXPECT_EQ(cmd_run({cfg, dir / "o", {}}, out, err), kExitRuntime);
  EXPECT_NE(err.str().find("error"), std::string::npos);
}

void write_idx(const fs::path& images, const fs::path& labels, std::size_t per_class,
               std::uint64_t seed) {
  auto d = data::synth_blobs(3, per_class, 4, 0.05, seed);
  d.features = ((d.features.array() + 6.0) / 12.0).cwiseMax(0.0).cwiseMin(1.0);
  d.features = (d.features * 255.0).array().round() / 255.0;
  d.sample_shape = {2, 2};
  const auto img = data::serialize_idx_images(d);
  const auto lab = data::serialize_idx_labels(d);
  std::ofstream(images, std::ios::binary)
      .write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  std::ofstream(labels, std::ios::binary)
      .write(reinterpret_cast<const char*>(lab.data()), static_cast<std::streamsize>(lab.size()));
}

TEST(Run, IdxSourceWithPathsRelativeToConfig) {
  const auto dir = scratch("idx");
  fs::create_directories(dir / "data");
  write_idx(dir / "data" / "train-images", dir / "data" / "train-labels", 60, 1);
  write_idx(dir / "data" / "test-images", dir / "data" / "test-labels", 20, 2);
  const auto cfg = write_config(dir, R"(
clients = 6
rounds = 1
gamma = 0.2
defense = "lmtv"
key_bits = 128
threads = 1
[data]
source = "idx"
classes = 3
train_images = "data/train-images"
train_labels = "data/train-labels"
test_images = "data/test-images"
test_labels = "data/test-labels"
[attack]
source_class = 0
target_class = 2
[model]
hidden = [6]
[train]
batch_size = 8
)");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_run({cfg, dir / "out", {}}, out, err), kExitOk) << err.str();
  const auto report = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(report["confusion_matrix"].size(), 3u);
}

TEST(Sweep, WritesOneRowPerValue) {
  const auto dir = scratch("sweep");
  const auto cfg = write_config(dir, kSmallConfig);
  std::ostringstream out, err;
  SweepOptions opts{{cfg, dir / "out", {}}, "beta", {"1.0", "0.8"}};
  ASSERT_EQ(cmd_sweep(opts, out, err), kExitOk) << err.str();
  const auto csv = slurp(dir / "out" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(dir / "out" / "beta_0.8" / "report.json"));

  SweepOptions wrong{{cfg, dir / "out2", {}}, "theta", {"1.0"}};
  EXPECT_EQ(cmd_sweep(wrong, out, err), kExitValidation);
  SweepOptions empty{{cfg, dir / "out3", {}}, "gamma", {}};
  EXPECT_EQ(cmd_sweep(empty, out, err), kExitValidation);
}

}  // namespace
}  // namespace fedshield::cli
