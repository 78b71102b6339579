#include "pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "candidates.hpp"
#include "corpus.hpp"
#include "encoder.hpp"
#include "evalkit.hpp"
#include "fixture.hpp"
#include "fs_util.hpp"
#include "mining.hpp"
#include "trainer.hpp"
#include "version.hpp"

namespace dmsrec {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string iso_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Holds <dir>/.lock for the duration of a stage; one writer per directory.
class StageLock {
 public:
  StageLock(const fs::path& dir, bool force) : path_(dir / ".lock") {
    if (force) fs::remove(path_);
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw std::runtime_error("stage directory locked (" + path_.string() +
                               " exists); pass --force to break a stale lock");
    ::close(fd);
  }
  ~StageLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
};

json load_manifest(const fs::path& dir) {
  fs::path p = dir / "manifest.json";
  if (!fs::exists(p)) return json();
  try {
    return json::parse(read_file(p));
  } catch (...) {
    return json();
  }
}

// Tamper check: if a producing stage's manifest records this file as an
// output, the recorded fingerprint must match the bytes on disk.
void verify_against_producer(const fs::path& input, const std::string& fp, bool force) {
  json producer = load_manifest(input.parent_path());
  if (producer.is_null() || !producer.contains("outputs")) return;
  std::string name = input.filename().string();
  if (!producer["outputs"].contains(name)) return;
  std::string recorded = producer["outputs"][name].get<std::string>();
  if (recorded == fp) return;
  std::string msg = "lineage: " + input.string() + " does not match its producing manifest (" +
                    recorded + " vs " + fp + ")";
  if (!force) throw LineageError(msg);
  std::cerr << "warning (forced): " << msg << "\n";
}

struct StageContext {
  std::string stage;
  fs::path dir;
  uint64_t root_seed = 0;
  uint64_t seed = 0;  // derived per stage
  std::map<std::string, std::string> inputs;   // path -> fingerprint
  std::map<std::string, std::string> snapshot; // config snapshot
  std::map<std::string, std::string> outputs;  // filename -> fingerprint
  std::string started;
};

StageContext begin_stage(const std::string& stage, Config& cfg,
                         const std::vector<std::string>& input_paths,
                         const std::vector<std::string>& snapshot_sections, bool force) {
  StageContext ctx;
  ctx.stage = stage;
  ctx.dir = fs::path(cfg.get("global.out", "runs/out")) / stage;
  ctx.root_seed = cfg.get_u64("global.seed", 42);
  ctx.seed = derive_seed(ctx.root_seed, stage);
  ctx.started = iso_now();

  for (const auto& p : input_paths) {
    if (!fs::exists(p)) throw ConfigError(stage + ": missing input " + p);
    std::string fp = file_fingerprint(p);
    verify_against_producer(p, fp, force);
    ctx.inputs[p] = fp;
  }
  ctx.snapshot["global.seed"] = std::to_string(ctx.root_seed);
  for (const auto& s : snapshot_sections)
    for (const auto& [k, v] : cfg.section(s)) ctx.snapshot[k] = v;
  return ctx;
}

bool up_to_date(const StageContext& ctx) {
  json m = load_manifest(ctx.dir);
  if (m.is_null()) return false;
  json inputs = json::object(), snapshot = json::object();
  for (const auto& [k, v] : ctx.inputs) inputs[k] = v;
  for (const auto& [k, v] : ctx.snapshot) snapshot[k] = v;
  if (m.value("inputs", json::object()) != inputs) return false;
  if (m.value("config", json::object()) != snapshot) return false;
  json outputs = m.value("outputs", json::object());
  for (auto& [name, fp] : outputs.items()) {
    fs::path p = ctx.dir / name;
    if (!fs::exists(p) || file_fingerprint(p) != fp.get<std::string>()) return false;
  }
  return true;
}

void emit(StageContext& ctx, const std::string& name, const std::string& content) {
  fs::create_directories(ctx.dir);
  atomic_write_file(ctx.dir / name, content);
  ctx.outputs[name] = hash_hex(fnv1a64(content));
}

void note_output(StageContext& ctx, const std::string& name) {
  ctx.outputs[name] = file_fingerprint(ctx.dir / name);
}

// The manifest is the stage's commit record; it is written last so a killed
// stage never looks finished.
void finish_stage(StageContext& ctx) {
  json m;
  m["stage"] = ctx.stage;
  m["tool_version"] = kVersion;
  m["root_seed"] = ctx.root_seed;
  m["started_at"] = ctx.started;
  m["finished_at"] = iso_now();
  json inputs = json::object(), snapshot = json::object(), outputs = json::object();
  for (const auto& [k, v] : ctx.inputs) inputs[k] = v;
  for (const auto& [k, v] : ctx.snapshot) snapshot[k] = v;
  for (const auto& [k, v] : ctx.outputs) outputs[k] = v;
  m["inputs"] = inputs;
  m["config"] = snapshot;
  m["outputs"] = outputs;
  atomic_write_file(ctx.dir / "manifest.json", m.dump(2) + "\n");
}

std::string config_fingerprint(const StageContext& ctx) {
  std::string blob;
  for (const auto& [k, v] : ctx.snapshot) blob += k + "=" + v + "\n";
  return hash_hex(fnv1a64(blob));
}

fs::path out_root(const Config& cfg) { return cfg.get("global.out", "runs/out"); }

// --- shared config readers ---

TrainConfig read_train_config(const Config& cfg, const std::string& section, uint64_t seed) {
  auto key = [&](const char* k) { return section + "." + k; };
  auto fall = [&](const char* k) { return std::string("train.") + k; };
  auto geti = [&](const char* k, int def) {
    return cfg.get_int(key(k), cfg.get_int(fall(k), def));
  };
  auto getd = [&](const char* k, double def) {
    return cfg.get_double(key(k), cfg.get_double(fall(k), def));
  };
  auto gets = [&](const char* k, const std::string& def) {
    return cfg.get(key(k), cfg.get(fall(k), def));
  };

  TrainConfig tc;
  tc.batch_size = geti("batch_size", 100);
  tc.lr = getd("lr", 0.001);
  tc.lr_decay = getd("lr_decay", 0.1);
  tc.lr_decay_every = geti("lr_decay_every", 3);
  tc.weight_decay = getd("weight_decay", 1e-5);
  tc.d = geti("d", 100);
  tc.steps = geti("steps", 1);
  tc.epochs = geti("epochs", section == "pretrain" ? 3 : 5);
  tc.d_text = geti("d_text", 768);
  tc.sigma = getd("sigma", 0.2);
  tc.align.alpha = getd("alpha", 0.1);
  tc.align.beta = getd("beta", 0.1);
  tc.align.strategy = gets("strategy", "kl");
  tc.align.temperature = getd("temperature", 0.2);
  tc.align.margin = getd("margin", 0.5);
  tc.ablation = gets("ablation", "full");
  tc.ce = gets("ce", "binary");
  tc.stop_grad_structural =
      cfg.get_bool(key("stop_grad_structural"), cfg.get_bool(fall("stop_grad_structural"), false));
  tc.seed = seed;
  try {
    tc.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return tc;
}

HttpLLMConfig read_llm_config(const Config& cfg) {
  HttpLLMConfig c;
  c.url = cfg.get("mine.url");
  c.path = cfg.get("mine.path", c.path);
  c.model = cfg.get("mine.model", "qwen2.5-7b-instruct");
  c.temperature = cfg.get_double("mine.temperature", 0.0);
  c.max_tokens = cfg.get_int("mine.max_tokens", 256);
  c.api_key_env = cfg.get("mine.api_key_env", "");
  c.max_retries = cfg.get_int("mine.max_retries", 3);
  c.backoff_ms = cfg.get_int("mine.backoff_ms", 200);
  c.timeout_seconds = cfg.get_int("mine.timeout_seconds", 120);
  return c;
}

// --- stages ---

int run_preprocess(Config& cfg, bool force, std::string* status) {
  PreprocessConfig pc;
  pc.input_path = cfg.get("preprocess.input");
  if (pc.input_path.empty()) throw ConfigError("preprocess: input is required");
  pc.item_meta_path = cfg.get("preprocess.item_meta", "");
  pc.mode = cfg.get("preprocess.mode", "prefix");
  pc.augment = cfg.get_bool("preprocess.augment", pc.mode == "prefix");
  pc.min_item_freq = cfg.get_int("preprocess.min_item_freq", 5);
  pc.min_session_len = cfg.get_int("preprocess.min_session_len", 1);
  pc.gap_minutes = cfg.get_double("preprocess.gap_minutes", 5.0);
  pc.max_span_hours = cfg.get_double("preprocess.max_span_hours", 24.0);
  pc.test_fraction = cfg.get_double("preprocess.test_fraction", 0.1);

  std::vector<std::string> inputs = {pc.input_path};
  if (!pc.item_meta_path.empty()) inputs.push_back(pc.item_meta_path);
  StageContext ctx = begin_stage("preprocess", cfg, inputs, {"preprocess"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  PreprocessOutput out = preprocess(pc);
  emit(ctx, "sessions.train.jsonl", sessions_to_jsonl(out.train));
  emit(ctx, "sessions.test.jsonl", sessions_to_jsonl(out.test));
  emit(ctx, "catalog.json", catalog_to_json(out.catalog));
  finish_stage(ctx);
  *status = "ok: " + std::to_string(out.train.size()) + " train / " +
            std::to_string(out.test.size()) + " test sessions, " +
            std::to_string(out.catalog.n_items()) + " items";
  return kOk;
}

int run_pretrain(Config& cfg, bool force, std::string* status) {
  fs::path pre = out_root(cfg) / "preprocess";
  std::string train_path = cfg.get("pretrain.sessions", (pre / "sessions.train.jsonl").string());
  std::string test_path = cfg.get("pretrain.sessions_test", (pre / "sessions.test.jsonl").string());
  std::string catalog_path = cfg.get("pretrain.catalog", (pre / "catalog.json").string());

  StageContext ctx = begin_stage("pretrain", cfg, {train_path, test_path, catalog_path},
                                 {"pretrain", "train"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  TrainConfig tc = read_train_config(cfg, "pretrain", ctx.seed);
  auto train_sessions = load_sessions(train_path);
  auto test_sessions = load_sessions(test_path);
  auto catalog = load_catalog(catalog_path);

  TrainResult res = pretrain(train_sessions, test_sessions, catalog, tc);
  save_model_checkpoint((ctx.dir / "checkpoint.bin").string(), res.model, res.adam, tc,
                        config_fingerprint(ctx));
  note_output(ctx, "checkpoint.bin");
  emit(ctx, "metrics.jsonl", epochs_to_jsonl(res.epochs));
  finish_stage(ctx);
  *status = "ok: " + std::to_string(res.epochs.size()) + " epochs, final loss " +
            std::to_string(res.epochs.back().loss);
  return kOk;
}

struct SplitSpec {
  std::string label;     // "train", "test" or "" for single-file mode
  std::string sessions;  // input path
  std::string second;    // candidates path (mine) — unused elsewhere
};

std::vector<SplitSpec> session_splits(const Config& cfg, const std::string& stage) {
  fs::path pre = out_root(cfg) / "preprocess";
  if (cfg.has(stage + ".sessions"))
    return {{"", cfg.get(stage + ".sessions"), ""}};
  return {{"train", (pre / "sessions.train.jsonl").string(), ""},
          {"test", (pre / "sessions.test.jsonl").string(), ""}};
}

std::string split_name(const std::string& base, const std::string& label,
                       const std::string& ext) {
  return label.empty() ? base + ext : base + "." + label + ext;
}

int run_candidates(Config& cfg, bool force, std::string* status) {
  std::string ckpt = cfg.get("candidates.checkpoint",
                             (out_root(cfg) / "pretrain" / "checkpoint.bin").string());
  std::string catalog_path =
      cfg.get("candidates.catalog", (out_root(cfg) / "preprocess" / "catalog.json").string());
  int k = cfg.get_int("candidates.k", 50);
  if (k < 1) throw ConfigError("candidates: k must be >= 1");

  auto splits = session_splits(cfg, "candidates");
  std::vector<std::string> inputs = {ckpt, catalog_path};
  for (const auto& s : splits) inputs.push_back(s.sessions);

  StageContext ctx = begin_stage("candidates", cfg, inputs, {"candidates"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  LoadedModel lm = load_model_checkpoint(ckpt);
  auto catalog = load_catalog(catalog_path);
  if (lm.model.backbone.n_items != catalog.n_items())
    throw ConfigError("candidates: checkpoint and catalog item counts differ");

  ExtractStats stats;
  for (const auto& s : splits) {
    auto sessions = load_sessions(s.sessions);
    auto sets = extract_candidates(sessions, lm.model.backbone, catalog, k, &stats);
    emit(ctx, split_name("candidates", s.label, ".jsonl"), candidates_to_jsonl(sets));
  }
  finish_stage(ctx);
  *status = "ok: " + std::to_string(stats.emitted) + " candidate sets (" +
            std::to_string(stats.failed) + " failed)";
  return kOk;
}

int run_mine(Config& cfg, bool force, std::string* status) {
  fs::path cand_dir = out_root(cfg) / "candidates";
  auto splits = session_splits(cfg, "mine");
  for (auto& s : splits) {
    if (s.label.empty()) {
      s.second = cfg.get("mine.candidates");
      if (s.second.empty()) throw ConfigError("mine: candidates path required with mine.sessions");
    } else {
      s.second = cfg.get("mine.candidates_" + s.label,
                         (cand_dir / ("candidates." + s.label + ".jsonl")).string());
    }
  }

  std::vector<std::string> inputs;
  for (const auto& s : splits) {
    inputs.push_back(s.sessions);
    inputs.push_back(s.second);
  }
  StageContext ctx = begin_stage("mine", cfg, inputs, {"mine"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  std::string client_kind = cfg.get("mine.client", "mock");
  std::unique_ptr<LLMClient> client;
  if (client_kind == "mock") {
    client = std::make_unique<MockLLMClient>();
  } else if (client_kind == "http") {
    client = std::make_unique<HttpLLMClient>(read_llm_config(cfg));
  } else {
    throw ConfigError("mine: unknown client '" + client_kind + "'");
  }

  MineOptions opt;
  opt.workers = cfg.get_int("mine.workers", 1);
  opt.max_intents = cfg.get_int("mine.max_intents", 10);
  opt.strict = cfg.get_bool("mine.strict", false);
  opt.substring_match = cfg.get_bool("mine.substring_match", false);

  ResponseCache cache((ctx.dir / "cache.jsonl").string());
  for (const auto& s : splits) {
    auto sessions = load_sessions(s.sessions);
    auto candidates = load_candidates(s.second);
    MineStats stats;
    auto records = mine_intents(sessions, candidates, *client, cache, opt, &stats);
    emit(ctx, split_name("intents", s.label, ".jsonl"), intents_to_jsonl(records));
    emit(ctx, split_name("stats", s.label, ".json"), stats.to_json());
  }
  if (fs::exists(ctx.dir / "cache.jsonl")) note_output(ctx, "cache.jsonl");
  finish_stage(ctx);
  *status = "ok: cache size " + std::to_string(cache.size());
  return kOk;
}

int run_encode(Config& cfg, bool force, std::string* status) {
  fs::path mine_dir = out_root(cfg) / "mine";
  struct EncodeSplit {
    std::string label, intents;
  };
  std::vector<EncodeSplit> splits;
  if (cfg.has("encode.intents")) {
    splits.push_back({"", cfg.get("encode.intents")});
  } else {
    splits.push_back({"train", (mine_dir / "intents.train.jsonl").string()});
    splits.push_back({"test", (mine_dir / "intents.test.jsonl").string()});
  }

  std::vector<std::string> inputs;
  for (const auto& s : splits) inputs.push_back(s.intents);
  StageContext ctx = begin_stage("encode", cfg, inputs, {"encode"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  HttpEncoderConfig http;
  http.url = cfg.get("encode.url");
  http.model = cfg.get("encode.model", "");
  http.api_key_env = cfg.get("encode.api_key_env", "");
  int d_text = cfg.get_int("encode.d_text", 768);
  http.dim = d_text;
  auto encoder =
      make_encoder(cfg.get("encode.encoder", "double"), d_text, derive_seed(ctx.seed, "encoder"),
                   http);

  EncodeCache cache(*encoder);
  for (const auto& s : splits) {
    auto records = load_intents(s.intents);
    std::vector<IntentEmbedding> embs;
    embs.reserve(records.size());
    for (const auto& r : records) embs.push_back(encode_record(r, cache, encoder->dim()));
    std::string stem = (ctx.dir / split_name("intent_embeddings", s.label, "")).string();
    save_intent_embeddings(stem, embs, encoder->dim(), encoder->fingerprint());
    note_output(ctx, split_name("intent_embeddings", s.label, ".bin"));
    note_output(ctx, split_name("intent_embeddings", s.label, ".json"));
  }
  finish_stage(ctx);
  *status = "ok: " + std::to_string(cache.size()) + " unique intents encoded";
  return kOk;
}

RunArtifacts load_artifacts(const Config& cfg, const std::string& section) {
  fs::path pre = out_root(cfg) / "preprocess";
  fs::path enc = out_root(cfg) / "encode";
  RunArtifacts a;
  a.train = load_sessions(cfg.get(section + ".sessions",
                                  (pre / "sessions.train.jsonl").string()));
  a.test = load_sessions(cfg.get(section + ".sessions_test",
                                 (pre / "sessions.test.jsonl").string()));
  a.catalog = load_catalog(cfg.get(section + ".catalog", (pre / "catalog.json").string()));
  std::string tr_stem = cfg.get(section + ".embeddings",
                                (enc / "intent_embeddings.train").string());
  std::string te_stem = cfg.get(section + ".embeddings_test",
                                (enc / "intent_embeddings.test").string());
  a.intents = load_intent_embeddings(tr_stem);
  for (auto& [k, v] : load_intent_embeddings(te_stem)) a.intents.emplace(k, std::move(v));
  return a;
}

std::vector<std::string> artifact_inputs(const Config& cfg, const std::string& section) {
  fs::path pre = out_root(cfg) / "preprocess";
  fs::path enc = out_root(cfg) / "encode";
  return {
      cfg.get(section + ".sessions", (pre / "sessions.train.jsonl").string()),
      cfg.get(section + ".sessions_test", (pre / "sessions.test.jsonl").string()),
      cfg.get(section + ".catalog", (pre / "catalog.json").string()),
      cfg.get(section + ".embeddings", (enc / "intent_embeddings.train").string()) + ".bin",
      cfg.get(section + ".embeddings", (enc / "intent_embeddings.train").string()) + ".json",
      cfg.get(section + ".embeddings_test", (enc / "intent_embeddings.test").string()) + ".bin",
      cfg.get(section + ".embeddings_test", (enc / "intent_embeddings.test").string()) + ".json",
  };
}

int check_d_text(TrainConfig& tc, const RunArtifacts& a) {
  if (a.intents.empty()) return 0;
  int d_text = a.intents.begin()->second.e_explicit.cols;
  tc.d_text = d_text;
  return d_text;
}

int run_train(Config& cfg, bool force, std::string* status) {
  StageContext ctx = begin_stage("train", cfg, artifact_inputs(cfg, "train"),
                                 {"train"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  TrainConfig tc = read_train_config(cfg, "train", ctx.seed);
  RunArtifacts a = load_artifacts(cfg, "train");
  check_d_text(tc, a);

  TrainResult res = train(a.train, a.test, a.catalog, a.intents, tc);
  save_model_checkpoint((ctx.dir / "checkpoint.bin").string(), res.model, res.adam, tc,
                        config_fingerprint(ctx));
  note_output(ctx, "checkpoint.bin");
  emit(ctx, "metrics.jsonl", epochs_to_jsonl(res.epochs));
  finish_stage(ctx);
  *status = "ok: final loss " + std::to_string(res.epochs.back().loss) + ", P@5 " +
            std::to_string(res.epochs.back().eval.p5) + " (" +
            std::to_string(res.missing_intent_fallbacks) + " intent fallbacks)";
  return kOk;
}

int run_eval(Config& cfg, bool force, std::string* status) {
  fs::path pre = out_root(cfg) / "preprocess";
  fs::path enc = out_root(cfg) / "encode";
  std::string ckpt = cfg.get("eval.checkpoint", (out_root(cfg) / "train" / "checkpoint.bin").string());
  std::string test_path = cfg.get("eval.sessions", (pre / "sessions.test.jsonl").string());
  std::string catalog_path = cfg.get("eval.catalog", (pre / "catalog.json").string());
  std::string emb_stem = cfg.get("eval.embeddings", (enc / "intent_embeddings.test").string());

  std::vector<std::string> inputs = {ckpt, test_path, catalog_path};
  LoadedModel lm = load_model_checkpoint(ckpt);
  if (lm.model.semantic) {
    inputs.push_back(emb_stem + ".bin");
    inputs.push_back(emb_stem + ".json");
  }
  StageContext ctx = begin_stage("eval", cfg, inputs, {"eval"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  auto sessions = load_sessions(test_path);
  IntentEmbeddingMap intents;
  if (lm.model.semantic) intents = load_intent_embeddings(emb_stem);
  EvalResult r = evaluate_model(lm.model, sessions, intents, "eval", lm.model.ablation);
  emit(ctx, "report.jsonl", report_to_jsonl({r}));
  emit(ctx, "report.txt", report_to_table({r}));
  finish_stage(ctx);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "ok: P@5 %.4f MRR@5 %.4f over %d sessions", r.p5, r.mrr5,
                r.n_sessions);
  *status = buf;
  return kOk;
}

int run_ablate(Config& cfg, bool force, std::string* status) {
  StageContext ctx = begin_stage("ablate", cfg, artifact_inputs(cfg, "ablate"),
                                 {"ablate", "train"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  TrainConfig tc = read_train_config(cfg, "ablate", ctx.seed);
  RunArtifacts a = load_artifacts(cfg, "ablate");
  check_d_text(tc, a);

  AblationReport report = run_ablations(a, tc);
  emit(ctx, "report.jsonl", report_to_jsonl(report.results));
  emit(ctx, "report.txt", report_to_table(report.results));
  if (report.aborted) {
    std::cerr << "ablate: " << report.error << " (partial results preserved)\n";
    *status = "aborted: " + report.error;
    return kRuntimeError;
  }
  finish_stage(ctx);
  *status = "ok: " + std::to_string(report.results.size()) + " variants";
  return kOk;
}

int run_sweep(Config& cfg, bool force, std::string* status) {
  StageContext ctx = begin_stage("sweep", cfg, artifact_inputs(cfg, "sweep"),
                                 {"sweep", "train"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  std::string param = cfg.get("sweep.param", "sigma");
  auto values = cfg.get_doubles("sweep.values");
  if (values.empty()) throw ConfigError("sweep: sweep.values is required (comma separated)");

  TrainConfig tc = read_train_config(cfg, "sweep", ctx.seed);
  RunArtifacts a = load_artifacts(cfg, "sweep");
  check_d_text(tc, a);

  std::vector<SweepPoint> points;
  try {
    points = sweep(param, values, a, tc);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }

  std::string jsonl;
  std::vector<EvalResult> ok_rows;
  for (const auto& pt : points) {
    json j;
    j["param"] = param;
    j["value"] = pt.value;
    if (pt.failed) {
      j["failed"] = true;
      j["error"] = pt.error;
    } else {
      j["p5"] = pt.eval.p5;
      j["p10"] = pt.eval.p10;
      j["p20"] = pt.eval.p20;
      j["mrr5"] = pt.eval.mrr5;
      j["mrr10"] = pt.eval.mrr10;
      j["mrr20"] = pt.eval.mrr20;
      j["n_sessions"] = pt.eval.n_sessions;
      ok_rows.push_back(pt.eval);
    }
    jsonl += j.dump();
    jsonl += '\n';
  }
  emit(ctx, "report.jsonl", jsonl);
  emit(ctx, "report.txt", report_to_table(ok_rows));
  finish_stage(ctx);
  *status = "ok: " + std::to_string(points.size()) + " points";
  return kOk;
}

int run_fixture(Config& cfg, bool force, std::string* status) {
  StageContext ctx = begin_stage("fixture", cfg, {}, {"fixture"}, force);
  if (up_to_date(ctx)) {
    *status = "up-to-date";
    return kOk;
  }
  fs::create_directories(ctx.dir);
  StageLock lock(ctx.dir, force);

  FixtureConfig fc;
  fc.n_sessions = cfg.get_int("fixture.sessions", 2000);
  fc.n_items = cfg.get_int("fixture.items", 50);
  fc.min_len = cfg.get_int("fixture.min_len", 3);
  fc.max_len = cfg.get_int("fixture.max_len", 6);
  fc.style = cfg.get("fixture.style", "series");
  fc.seed = derive_seed(ctx.seed, "events");
  try {
    write_fixture_events((ctx.dir / "events.tsv").string(), fc);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  note_output(ctx, "events.tsv");
  finish_stage(ctx);
  *status = "ok: " + std::to_string(fc.n_sessions) + " sessions";
  return kOk;
}

int run_all(Config& cfg, bool force, std::string* status) {
  const std::vector<std::string> order = {"preprocess", "pretrain", "candidates", "mine",
                                          "encode", "train", "eval"};
  std::string accum;
  for (const auto& stage : order) {
    std::string st;
    int rc = run_stage(stage, cfg, force, &st);
    accum += stage + ": " + st + "\n";
    std::cerr << "[" << stage << "] " << st << "\n";
    if (rc != kOk) {
      *status = accum;
      return rc;
    }
  }

  json root;
  root["stage"] = "all";
  root["tool_version"] = kVersion;
  root["root_seed"] = cfg.get_u64("global.seed", 42);
  root["finished_at"] = iso_now();
  json stages_j = json::object();
  for (const auto& stage : order) {
    fs::path m = out_root(cfg) / stage / "manifest.json";
    stages_j[stage] = fs::exists(m) ? file_fingerprint(m) : "";
  }
  root["stages"] = stages_j;
  atomic_write_file(out_root(cfg) / "manifest.json", root.dump(2) + "\n");
  *status = accum + "all: ok";
  return kOk;
}

}  // namespace

int run_stage(const std::string& stage, Config& cfg, bool force, std::string* status) {
  std::string local;
  std::string* st = status ? status : &local;
  try {
    if (stage == "preprocess") return run_preprocess(cfg, force, st);
    if (stage == "pretrain") return run_pretrain(cfg, force, st);
    if (stage == "candidates") return run_candidates(cfg, force, st);
    if (stage == "mine") return run_mine(cfg, force, st);
    if (stage == "encode") return run_encode(cfg, force, st);
    if (stage == "train") return run_train(cfg, force, st);
    if (stage == "eval") return run_eval(cfg, force, st);
    if (stage == "ablate") return run_ablate(cfg, force, st);
    if (stage == "sweep") return run_sweep(cfg, force, st);
    if (stage == "fixture") return run_fixture(cfg, force, st);
    if (stage == "all") return run_all(cfg, force, st);
    *st = "unknown stage '" + stage + "'";
    return kConfigError;
  } catch (const ConfigError& ex) {
    *st = std::string("config error: ") + ex.what();
    return kConfigError;
  } catch (const LineageError& ex) {
    *st = std::string("lineage error: ") + ex.what();
    return kLineageError;
  } catch (const std::invalid_argument& ex) {
    *st = std::string("config error: ") + ex.what();
    return kConfigError;
  } catch (const std::exception& ex) {
    *st = std::string("runtime error: ") + ex.what();
    return kRuntimeError;
  }
}

}  // namespace dmsrec
