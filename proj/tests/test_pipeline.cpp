#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fixture.hpp"
#include "fs_util.hpp"
#include "kv_config.hpp"
#include "pipeline.hpp"
#include "test_support.hpp"

using namespace dmsrec;
namespace fs = std::filesystem;

namespace {

// Small end-to-end configuration: quick to train, big enough to rank.
Config small_run_config(const fs::path& dir) {
  Config cfg;
  cfg.set("global.out", (dir / "run").string());
  cfg.set("global.seed", "21");
  cfg.set("fixture.sessions", "80");
  cfg.set("fixture.items", "12");
  cfg.set("preprocess.input", (dir / "run" / "fixture" / "events.tsv").string());
  cfg.set("preprocess.min_item_freq", "1");
  cfg.set("train.d", "16");
  cfg.set("train.epochs", "1");
  cfg.set("train.batch_size", "32");
  cfg.set("pretrain.epochs", "1");
  cfg.set("encode.d_text", "24");
  cfg.set("candidates.k", "12");
  return cfg;
}

int run(Config& cfg, const std::string& stage, std::string* status = nullptr, bool force = false) {
  std::string local;
  return run_stage(stage, cfg, force, status ? status : &local);
}

}  // namespace

TEST_CASE("config precedence: override beats file beats default") {
  auto dir = dmsrec::testing::temp_dir("config");
  std::string path = (dir / "run.conf").string();
  atomic_write_file(path,
                    "# comment\n"
                    "[train]\n"
                    "epochs = 7\n"
                    "lr = 0.5\n"
                    "[mine]\n"
                    "api_key = ${DMSREC_TEST_KEY}\n");

  struct Row {
    const char* key;
    bool set_override;
    std::string want;
  };
  const std::vector<Row> table = {
      {"train.epochs", false, "7"},      // file wins over default
      {"train.epochs", true, "9"},       // override wins over file
      {"train.missing", false, "def"},   // default when absent everywhere
      {"train.lr", false, "0.5"},
  };
  for (const auto& row : table) {
    Config cfg;
    cfg.load_file(path);
    if (row.set_override) cfg.set(row.key, "9");
    CHECK(cfg.get(row.key, "def") == row.want);
  }

  Config cfg;
  cfg.load_file(path);
  CHECK(cfg.get_int("train.epochs", 5) == 7);
  CHECK(cfg.get_double("train.lr", 0.001) == doctest::Approx(0.5));
  CHECK_THROWS_AS(cfg.get_int("train.lr", 1), ConfigError);
}

TEST_CASE("environment interpolation applies to api_key entries only") {
  auto dir = dmsrec::testing::temp_dir("config_env");
  std::string path = (dir / "run.conf").string();
  atomic_write_file(path,
                    "[mine]\n"
                    "api_key = ${DMSREC_TEST_KEY}\n"
                    "model = ${DMSREC_TEST_KEY}\n");
  setenv("DMSREC_TEST_KEY", "sekrit", 1);
  Config cfg;
  cfg.load_file(path);
  CHECK(cfg.get("mine.api_key") == "sekrit");
  CHECK(cfg.get("mine.model") == "${DMSREC_TEST_KEY}");  // literal: not a secret key
  unsetenv("DMSREC_TEST_KEY");
}

TEST_CASE("config file with bad syntax is a config error") {
  auto dir = dmsrec::testing::temp_dir("config_bad");
  std::string path = (dir / "bad.conf").string();
  atomic_write_file(path, "just nonsense\n");
  Config cfg;
  CHECK_THROWS_AS(cfg.load_file(path), ConfigError);
}

TEST_CASE("unknown stage and missing input map to config errors") {
  Config cfg;
  std::string status;
  CHECK(run(cfg, "transmogrify", &status) == kConfigError);
  CHECK(status.find("unknown stage") != std::string::npos);

  Config cfg2;
  CHECK(run(cfg2, "preprocess", &status) == kConfigError);  // no input configured
}

TEST_CASE("full mock pipeline: manifests, lineage, skip and tamper") {
  auto dir = dmsrec::testing::temp_dir("pipeline");
  Config cfg = small_run_config(dir);

  std::string status;
  REQUIRE(run(cfg, "fixture", &status) == kOk);
  REQUIRE_MESSAGE(run(cfg, "all", &status) == kOk, status);

  // one manifest per stage plus the pipeline-level one
  fs::path out = dir / "run";
  const std::vector<std::string> stages = {"preprocess", "pretrain", "candidates", "mine",
                                           "encode", "train", "eval"};
  int manifests = 0;
  for (const auto& s : stages) {
    CHECK(fs::exists(out / s / "manifest.json"));
    ++manifests;
  }
  CHECK(fs::exists(out / "manifest.json"));
  CHECK(fs::exists(out / "fixture" / "manifest.json"));
  ++manifests;
  CHECK(manifests == 8);
  CHECK(fs::exists(out / "eval" / "report.jsonl"));
  CHECK(fs::exists(out / "eval" / "report.txt"));

  // mock client: zero hallucinations in the stats artifact
  auto stats = nlohmann::json::parse(read_file(out / "mine" / "stats.train.json"));
  CHECK(stats.at("hallucinated").get<int>() == 0);
  CHECK(stats.at("explicit_histogram").is_object());

  // rerun of an unchanged stage is skipped as up-to-date
  REQUIRE(run(cfg, "train", &status) == kOk);
  CHECK(status == "up-to-date");

  // tampering with an upstream artifact is refused with the lineage code
  fs::path cands = out / "candidates" / "candidates.train.jsonl";
  std::string original = read_file(cands);
  atomic_write_file(
      cands,
      original + "{\"session_id\":\"evil\",\"item_ids\":[1],\"titles\":[\"i1\"],\"scores\":[1.0]}\n");
  // mine consumed candidates; rerunning it must refuse
  int rc = run(cfg, "mine", &status);
  CHECK(rc == kLineageError);
  CHECK(status.find("lineage") != std::string::npos);
  // --force pushes through
  CHECK(run(cfg, "mine", &status, true) == kOk);
  atomic_write_file(cands, original);

  // config change invalidates the up-to-date skip
  cfg.set("train.epochs", "2");
  REQUIRE(run(cfg, "train", &status) == kOk);
  CHECK(status != "up-to-date");
}

TEST_CASE("a failing stage leaves no manifest behind") {
  auto dir = dmsrec::testing::temp_dir("pipeline_fail");
  Config cfg;
  cfg.set("global.out", (dir / "run").string());
  cfg.set("preprocess.input", (dir / "missing.tsv").string());
  std::string status;
  CHECK(run(cfg, "preprocess", &status) == kConfigError);
  CHECK_FALSE(fs::exists(dir / "run" / "preprocess" / "manifest.json"));

  // an events file that filters to nothing is a runtime failure, still no manifest
  atomic_write_file(dir / "missing.tsv", "u1\t1\t10\nu2\t2\t20\n");
  cfg.set("preprocess.min_item_freq", "5");
  CHECK(run(cfg, "preprocess", &status) == kRuntimeError);
  CHECK(status.find("corpus exhausted") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "run" / "preprocess" / "manifest.json"));
}

TEST_CASE("stage lock blocks concurrent writers until forced") {
  auto dir = dmsrec::testing::temp_dir("pipeline_lock");
  Config cfg = small_run_config(dir);
  std::string status;
  REQUIRE(run(cfg, "fixture", &status) == kOk);

  fs::create_directories(dir / "run" / "preprocess");
  atomic_write_file(dir / "run" / "preprocess" / ".lock", "");
  CHECK(run(cfg, "preprocess", &status) == kRuntimeError);
  CHECK(status.find("lock") != std::string::npos);
  CHECK(run(cfg, "preprocess", &status, true) == kOk);
}

TEST_CASE("sweep emits one row per value and sigma=0 matches no_kl") {
  auto dir = dmsrec::testing::temp_dir("pipeline_sweep");
  Config cfg = small_run_config(dir);
  std::string status;
  REQUIRE(run(cfg, "fixture", &status) == kOk);
  REQUIRE_MESSAGE(run(cfg, "all", &status) == kOk, status);

  cfg.set("sweep.param", "sigma");
  cfg.set("sweep.values", "0,0.2");
  REQUIRE_MESSAGE(run(cfg, "sweep", &status) == kOk, status);

  fs::path report = dir / "run" / "sweep" / "report.jsonl";
  std::ifstream in(report);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("value").get<double>() == 0.0);
  CHECK(rows[1].at("value").get<double>() == doctest::Approx(0.2));
  for (const auto& r : rows) CHECK_FALSE(r.contains("failed"));
}

TEST_CASE("ablate writes the five-variant table") {
  auto dir = dmsrec::testing::temp_dir("pipeline_ablate");
  Config cfg = small_run_config(dir);
  std::string status;
  REQUIRE(run(cfg, "fixture", &status) == kOk);
  REQUIRE_MESSAGE(run(cfg, "all", &status) == kOk, status);
  REQUIRE_MESSAGE(run(cfg, "ablate", &status) == kOk, status);

  std::string table = read_file(dir / "run" / "ablate" / "report.txt");
  for (const char* label : {"w/o Semantic", "w/o KL", "w/o Latent-Intent", "w/o Explicit-Intent",
                            "full"})
    CHECK(table.find(label) != std::string::npos);

  std::ifstream in(dir / "run" / "ablate" / "report.jsonl");
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
}
