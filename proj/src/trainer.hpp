#pragma once

#include <map>
#include <string>
#include <vector>

#include "backbone.hpp"
#include "corpus.hpp"
#include "encoder.hpp"
#include "fusion.hpp"
#include "metrics.hpp"

namespace dmsrec {

struct TrainConfig {
  int batch_size = 100;
  double lr = 0.001;
  double lr_decay = 0.1;
  int lr_decay_every = 3;
  double weight_decay = 1e-5;
  int d = 100;
  int steps = 1;
  int epochs = 5;
  int d_text = 768;
  double sigma = 0.2;
  AlignmentConfig align;
  std::string ablation = "full";  // full | no_semantic | no_kl | no_latent | no_explicit
  std::string ce = "binary";      // binary (loss summed over items, one-hot) | categorical
  bool stop_grad_structural = false;
  uint64_t seed = 42;

  void validate() const;
  bool semantic_enabled() const { return ablation != "no_semantic"; }
};

// softmax(S^T v_i) over the catalog; sums to 1.
std::vector<double> predict(const Tensor& s_vector, const Tensor& item_table);

// Next-item loss over a probability vector clamped to [eps, 1-eps].
// "binary": cross entropy summed over all items against the one-hot target;
// "categorical": plain -log(y_hat[target]).
double rec_loss(const std::vector<double>& y_hat, int target, const std::string& ce = "binary");

// Backbone + fusion with the ablation wiring used during training, so that
// evaluation scores sessions exactly the way they were trained.
struct Model {
  BackboneParams backbone;
  FusionParams fusion;
  bool semantic = false;
  std::string ablation = "full";

  // Scores over the catalog. emb may be null (missing intent record); the
  // learned no-intent embeddings then stand in for both buckets.
  std::vector<double> score_session(const std::vector<int>& items, const IntentEmbedding* emb);
};

struct StepLoss {
  double loss = 0, loss_r = 0, loss_info = 0;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0, loss = 0, loss_r = 0, loss_info = 0;
  EvalResult eval;
};

struct AdamState {
  std::map<std::string, Tensor> m, v;
  int64_t t = 0;
};

struct TrainResult {
  Model model;
  AdamState adam;
  std::vector<StepLoss> steps;
  std::vector<EpochLog> epochs;
  int missing_intent_fallbacks = 0;
};

// Joint training: per batch the structural intent, fusion, prediction,
// recommendation loss and weighted alignment loss, then one Adam step with
// L2 weight decay; lr decays by lr_decay every lr_decay_every epochs.
// Deterministic for a fixed config and seed.
TrainResult train(const std::vector<Session>& train_sessions,
                  const std::vector<Session>& test_sessions, const ItemCatalog& catalog,
                  const IntentEmbeddingMap& intents, const TrainConfig& cfg);

// Phase I: the backbone alone under the same loop (ablation = no_semantic).
TrainResult pretrain(const std::vector<Session>& train_sessions,
                     const std::vector<Session>& test_sessions, const ItemCatalog& catalog,
                     const TrainConfig& cfg);

// Evaluates a model over sessions, ranking the target across the catalog.
EvalResult evaluate_model(Model& model, const std::vector<Session>& sessions,
                          const IntentEmbeddingMap& intents, const std::string& run_id,
                          const std::string& variant);

// Joint loss L = L_r + sigma * L_info of a single session on a fresh tape.
// When grads is given it receives d(loss)/d(parameter) for every model
// parameter, in named() order (backbone first, fusion if semantic).
double joint_loss(Model& model, const Session& session, const IntentEmbedding* emb,
                  const TrainConfig& cfg, std::vector<std::pair<std::string, Tensor>>* grads);

std::string epochs_to_jsonl(const std::vector<EpochLog>& epochs);

// --- checkpoint glue ---

void save_model_checkpoint(const std::string& path, Model& model, const AdamState& adam,
                           const TrainConfig& cfg, const std::string& config_fp);

struct LoadedModel {
  Model model;
  AdamState adam;
  TrainConfig cfg;
  std::string config_fp;
};

LoadedModel load_model_checkpoint(const std::string& path);

}  // namespace dmsrec
