// Command-line front end. All work happens behind the C API in libdmsrec;
// this binary only maps flags onto config keys and forwards the stage name.
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmsrec.h"

namespace {

struct FlagBinding {
  CLI::Option* opt;
  std::string key;
  std::shared_ptr<std::string> value;
};

class App {
 public:
  App() : cli_("dmsrec: LLM-augmented session-based recommendation pipeline") {
    cli_.require_subcommand(1);
    cli_.add_option("--config", config_path_, "key=value config file with [stage] sections");
    cli_.add_option("--out", out_dir_, "run output directory (one subdirectory per stage)");
    cli_.add_option("--seed", seed_, "root seed; per-stage seeds derive from it");
    cli_.add_flag("--force", force_, "ignore lineage mismatches and break stale locks");
    cli_.add_option("--set", raw_sets_, "extra section.key=value overrides")->take_all();
  }

  CLI::App* add_stage(const std::string& name, const std::string& desc) {
    CLI::App* sub = cli_.add_subcommand(name, desc);
    sub->fallthrough();  // global options remain valid after the subcommand
    return sub;
  }

  void bind(CLI::App* sub, const std::string& flag, const std::string& key,
            const std::string& desc) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = sub->add_option(flag, *value, desc);
    bindings_.push_back({opt, key, value});
  }

  // A boolean flag that, when given, pins one or more config keys.
  void bind_flag(CLI::App* sub, const std::string& flag, const std::string& desc,
                 std::vector<std::pair<std::string, std::string>> kvs) {
    CLI::Option* opt = sub->add_flag(flag, desc);
    for (auto& [key, value] : kvs)
      bindings_.push_back({opt, key, std::make_shared<std::string>(value)});
  }

  int run(int argc, char** argv) {
    try {
      cli_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return cli_.exit(e) == 0 ? 0 : DMSREC_ERR_CONFIG;
    }

    dmsrec_run* run = dmsrec_run_new();
    int rc = DMSREC_OK;
    if (!config_path_.empty()) {
      rc = dmsrec_run_load_config(run, config_path_.c_str());
      if (rc != DMSREC_OK) {
        std::fprintf(stderr, "dmsrec: %s\n", dmsrec_run_last_error(run));
        dmsrec_run_free(run);
        return rc;
      }
    }
    if (!out_dir_.empty()) dmsrec_run_set(run, "global.out", out_dir_.c_str());
    if (!seed_.empty()) dmsrec_run_set(run, "global.seed", seed_.c_str());
    for (const auto& kv : raw_sets_) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "dmsrec: --set expects section.key=value, got '%s'\n", kv.c_str());
        dmsrec_run_free(run);
        return DMSREC_ERR_CONFIG;
      }
      dmsrec_run_set(run, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    for (const auto& b : bindings_)
      if (b.opt->count() > 0) dmsrec_run_set(run, b.key.c_str(), b.value->c_str());
    dmsrec_run_set_force(run, force_ ? 1 : 0);

    std::string stage = cli_.get_subcommands().front()->get_name();
    rc = dmsrec_run_stage(run, stage.c_str());
    if (rc == DMSREC_OK) {
      std::printf("%s\n", dmsrec_run_last_status(run));
    } else {
      std::fprintf(stderr, "dmsrec %s failed (%d): %s\n", stage.c_str(), rc,
                   dmsrec_run_last_error(run));
    }
    dmsrec_run_free(run);
    return rc;
  }

 private:
  CLI::App cli_;
  std::string config_path_, out_dir_, seed_;
  bool force_ = false;
  std::vector<std::string> raw_sets_;
  std::vector<FlagBinding> bindings_;
};

}  // namespace

int main(int argc, char** argv) {
  App app;

  CLI::App* preprocess = app.add_stage("preprocess", "ingest, filter and sessionize raw events");
  app.bind(preprocess, "--input", "preprocess.input", "events file: user,item,timestamp[,title]");
  app.bind(preprocess, "--item-meta", "preprocess.item_meta", "optional item_id,title file");
  app.bind(preprocess, "--mode", "preprocess.mode", "prefix | time");
  app.bind(preprocess, "--augment", "preprocess.augment", "prefix augmentation (true/false)");
  app.bind(preprocess, "--min-item-freq", "preprocess.min_item_freq", "drop rarer items (default 5)");
  app.bind(preprocess, "--min-session-len", "preprocess.min_session_len",
           "keep sessions longer than this (default 1)");
  app.bind(preprocess, "--gap-minutes", "preprocess.gap_minutes", "inactivity split (default 5)");
  app.bind(preprocess, "--max-span-hours", "preprocess.max_span_hours",
           "session span limit (default 24)");
  app.bind(preprocess, "--test-fraction", "preprocess.test_fraction",
           "chronological test share (default 0.1)");

  CLI::App* pretrain = app.add_stage("pretrain", "train the backbone alone (phase I)");
  app.bind(pretrain, "--epochs", "pretrain.epochs", "pretraining epochs (default 3)");
  app.bind(pretrain, "--d", "train.d", "embedding dimension (default 100)");
  app.bind(pretrain, "--steps", "train.steps", "propagation rounds (default 1)");

  CLI::App* candidates = app.add_stage("candidates", "extract frozen top-K candidate sets");
  app.bind(candidates, "--ckpt", "candidates.checkpoint", "backbone checkpoint");
  app.bind(candidates, "--k", "candidates.k", "candidate set size (default 50)");
  app.bind(candidates, "--sessions", "candidates.sessions", "single sessions file override");

  CLI::App* mine = app.add_stage("mine", "LLM intent mining (phase II)");
  app.bind(mine, "--sessions", "mine.sessions", "single sessions file override");
  app.bind(mine, "--candidates", "mine.candidates", "candidates for --sessions");
  app.bind(mine, "--client", "mine.client", "mock | http (default mock)");
  app.bind(mine, "--workers", "mine.workers", "parallel query workers (default 1)");
  app.bind(mine, "--url", "mine.url", "chat-completions endpoint for --client http");
  app.bind(mine, "--model", "mine.model", "model name for --client http");
  app.bind(mine, "--max-retries", "mine.max_retries", "transient-failure retries (default 3)");
  app.bind_flag(mine, "--strict", "drop intents outside the candidate set",
                {{"mine.strict", "true"}});

  CLI::App* encode = app.add_stage("encode", "encode and pool mined intents");
  app.bind(encode, "--intents", "encode.intents", "single intents file override");
  app.bind(encode, "--encoder", "encode.encoder", "double | pretrained (default double)");
  app.bind(encode, "--d-text", "encode.d_text", "text embedding width (default 768)");
  app.bind(encode, "--url", "encode.url", "embeddings endpoint for --encoder pretrained");
  app.bind(encode, "--model", "encode.model", "model name for --encoder pretrained");

  CLI::App* train = app.add_stage("train", "joint training with intent alignment (phase III)");
  app.bind(train, "--ablation", "train.ablation",
           "full | no_semantic | no_kl | no_latent | no_explicit");
  app.bind(train, "--sigma", "train.sigma", "alignment loss weight (default 0.2)");
  app.bind(train, "--alpha", "train.alpha", "explicit intent weight (default 0.1)");
  app.bind(train, "--beta", "train.beta", "latent intent weight (default 0.1)");
  app.bind(train, "--strategy", "train.strategy", "kl | contrastive | infonce | directau | none");
  app.bind(train, "--ce", "train.ce", "binary | categorical (default binary)");
  app.bind(train, "--epochs", "train.epochs", "training epochs (default 5)");
  app.bind(train, "--batch-size", "train.batch_size", "batch size (default 100)");
  app.bind(train, "--lr", "train.lr", "learning rate (default 0.001)");
  app.bind(train, "--d", "train.d", "embedding dimension (default 100)");
  app.bind(train, "--steps", "train.steps", "propagation rounds (default 1)");
  app.bind_flag(train, "--stop-grad-structural",
                "teacher-style alignment: no gradient into the structural side",
                {{"train.stop_grad_structural", "true"}});

  CLI::App* eval = app.add_stage("eval", "evaluate a checkpoint on the test split");
  app.bind(eval, "--ckpt", "eval.checkpoint", "model checkpoint (default train stage output)");

  CLI::App* ablate = app.add_stage("ablate", "train and compare the module ablations");
  app.bind(ablate, "--epochs", "ablate.epochs", "epochs per variant");

  CLI::App* sweep = app.add_stage("sweep", "hyperparameter curve for sigma, alpha or beta");
  app.bind(sweep, "--param", "sweep.param", "sigma | alpha | beta");
  app.bind(sweep, "--values", "sweep.values", "comma-separated values, e.g. 0,0.1,0.2");

  CLI::App* fixture = app.add_stage("fixture", "write a synthetic successor-rule corpus");
  app.bind(fixture, "--sessions", "fixture.sessions", "session count (default 2000)");
  app.bind(fixture, "--items", "fixture.items", "catalog size (default 50)");
  app.bind(fixture, "--style", "fixture.style", "series | plain");

  CLI::App* all = app.add_stage("all", "run preprocess through eval in order");
  app.bind_flag(all, "--mock", "zero-network run: mock LLM client and hash encoder double",
                {{"mine.client", "mock"}, {"encode.encoder", "double"}});

  return app.run(argc, argv);
}
