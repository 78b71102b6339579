#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "checkpoint.hpp"

namespace dmsrec {

using json = nlohmann::json;

namespace {
constexpr double kProbEps = 1e-8;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1 || epochs < 1 || d < 1 || d_text < 1 || steps < 0)
    throw std::invalid_argument("train config: non-positive size field");
  if (!(lr > 0.0) || !(lr_decay > 0.0) || lr_decay_every < 1)
    throw std::invalid_argument("train config: bad learning-rate schedule");
  if (!(weight_decay >= 0.0) || !(sigma >= 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("train config: bad weight_decay/sigma");
  if (ablation != "full" && ablation != "no_semantic" && ablation != "no_kl" &&
      ablation != "no_latent" && ablation != "no_explicit")
    throw std::invalid_argument("train config: unknown ablation '" + ablation + "'");
  if (ce != "binary" && ce != "categorical")
    throw std::invalid_argument("train config: unknown ce '" + ce + "'");
  align.validate();
}

std::vector<double> predict(const Tensor& s_vector, const Tensor& item_table) {
  if (s_vector.rows != 1 || s_vector.cols != item_table.cols)
    throw std::invalid_argument("predict: dimension mismatch");
  Tensor logits = matmul_nt(s_vector, item_table);
  double mx = *std::max_element(logits.v.begin(), logits.v.end());
  double sum = 0.0;
  for (auto& x : logits.v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : logits.v) x /= sum;
  return logits.v;
}

double rec_loss(const std::vector<double>& y_hat, int target, const std::string& ce) {
  if (target < 1 || target > static_cast<int>(y_hat.size()))
    throw std::out_of_range("rec_loss: target outside catalog");
  auto clamped = [](double p) { return std::min(std::max(p, kProbEps), 1.0 - kProbEps); };
  if (ce == "categorical") return -std::log(clamped(y_hat[target - 1]));
  double loss = 0.0;
  for (size_t i = 0; i < y_hat.size(); ++i) {
    double p = clamped(y_hat[i]);
    double y = (static_cast<int>(i) == target - 1) ? 1.0 : 0.0;
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return loss;
}

namespace {

Var ce_loss(Tape& t, Var scores, int target, int n_items, const std::string& ce) {
  Tensor y(1, n_items);
  y.at(0, target - 1) = 1.0;
  Var y_v = t.leaf(std::move(y));
  if (ce == "categorical") return neg(sum_all(mul(y_v, log_softmax_row(scores))));
  Var yh = clamp(softmax_row(scores), kProbEps, 1.0 - kProbEps);
  Tensor ones(1, n_items);
  ones.fill(1.0);
  Var ones_v = t.leaf(std::move(ones));
  Var pos = mul(y_v, log_v(yh));
  Var negterm = mul(sub(ones_v, y_v), log_v(sub(ones_v, yh)));
  return neg(sum_all(add(pos, negterm)));
}

struct SessionForward {
  Var s;          // fused (or structural-only) session vector
  Var g;          // structural intent
  Var e_explicit; // projected explicit vector when real intents were used
  Var e_latent;
  bool real_explicit = false;
  bool real_latent = false;
};

SessionForward forward_session(Tape& t, const SessionGraph& graph, const BackboneVars& bv,
                               const FusionVars* fv, const IntentEmbedding* emb,
                               const std::string& ablation, int steps) {
  SessionForward out;
  out.g = backbone_forward(t, graph, bv, steps);
  if (!fv) {  // w/o Semantic: the model reduces to the plain backbone
    out.s = out.g;
    return out;
  }
  bool explicit_on = ablation != "no_explicit";
  bool latent_on = ablation != "no_latent";
  if (explicit_on && emb && emb->has_explicit) {
    out.e_explicit = project(t.leaf(emb->e_explicit), *fv);
    out.real_explicit = true;
  } else {
    out.e_explicit = fv->no_intent_explicit;
  }
  if (latent_on && emb && emb->has_latent) {
    out.e_latent = project(t.leaf(emb->e_latent), *fv);
    out.real_latent = true;
  } else {
    out.e_latent = fv->no_intent_latent;
  }
  out.s = fuse(out.g, out.e_explicit, out.e_latent, *fv);
  return out;
}

class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Tensor*>> params, AdamState* state, double weight_decay)
      : params_(std::move(params)), state_(state), weight_decay_(weight_decay) {
    for (auto& [name, p] : params_) {
      if (!state_->m.count(name)) state_->m.emplace(name, Tensor(p->rows, p->cols));
      if (!state_->v.count(name)) state_->v.emplace(name, Tensor(p->rows, p->cols));
    }
  }

  void step(const std::vector<Tensor>& grads, double lr) {
    ++state_->t;
    double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state_->t));
    double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state_->t));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& [name, p] = params_[i];
      Tensor& m = state_->m.at(name);
      Tensor& v = state_->v.at(name);
      const Tensor& g = grads[i];
      for (size_t k = 0; k < p->v.size(); ++k) {
        double gk = g.v[k] + weight_decay_ * p->v[k];
        m.v[k] = kAdamBeta1 * m.v[k] + (1.0 - kAdamBeta1) * gk;
        v.v[k] = kAdamBeta2 * v.v[k] + (1.0 - kAdamBeta2) * gk * gk;
        p->v[k] -= lr * (m.v[k] / bc1) / (std::sqrt(v.v[k] / bc2) + kAdamEps);
      }
    }
  }

  const std::vector<std::pair<std::string, Tensor*>>& params() const { return params_; }

 private:
  std::vector<std::pair<std::string, Tensor*>> params_;
  AdamState* state_;
  double weight_decay_;
};

struct LiftedParams {
  BackboneVars bv;
  FusionVars fv;
  std::vector<Var> ordered;  // same order as the Adam parameter list
};

LiftedParams lift_all(Tape& t, Model& model, bool needs_grad) {
  LiftedParams lp;
  lp.bv = lift(t, model.backbone, needs_grad);
  lp.ordered = {lp.bv.embedding, lp.bv.w_in,   lp.bv.b_in,   lp.bv.w_out,  lp.bv.b_out,
                lp.bv.w_z,       lp.bv.u_z,    lp.bv.b_z,    lp.bv.w_r,    lp.bv.u_r,
                lp.bv.b_r,       lp.bv.w_h,    lp.bv.u_h,    lp.bv.b_h,    lp.bv.att_w1,
                lp.bv.att_w2,    lp.bv.att_q,  lp.bv.att_c,  lp.bv.w3};
  if (model.semantic) {
    lp.fv = lift(t, model.fusion, needs_grad);
    lp.ordered.push_back(lp.fv.proj_w);
    lp.ordered.push_back(lp.fv.proj_b);
    lp.ordered.push_back(lp.fv.fuse_w);
    lp.ordered.push_back(lp.fv.no_intent_explicit);
    lp.ordered.push_back(lp.fv.no_intent_latent);
  }
  return lp;
}

std::vector<std::pair<std::string, Tensor*>> model_params(Model& model) {
  auto params = model.backbone.named();
  if (model.semantic)
    for (auto& p : model.fusion.named()) params.push_back(p);
  return params;
}

}  // namespace

std::vector<double> Model::score_session(const std::vector<int>& items,
                                         const IntentEmbedding* emb) {
  Tape t;
  LiftedParams lp = lift_all(t, *this, false);
  SessionGraph graph = build_session_graph(items);
  SessionForward f = forward_session(t, graph, lp.bv, semantic ? &lp.fv : nullptr, emb, ablation,
                                     backbone.steps);
  Var scores = item_scores(f.s, lp.bv);
  return t.val(scores).v;
}

TrainResult train(const std::vector<Session>& train_sessions,
                  const std::vector<Session>& test_sessions, const ItemCatalog& catalog,
                  const IntentEmbeddingMap& intents, const TrainConfig& cfg) {
  cfg.validate();
  if (train_sessions.empty()) throw std::invalid_argument("train: no sessions");

  TrainResult res;
  Model& model = res.model;
  model.semantic = cfg.semantic_enabled();
  model.ablation = cfg.ablation;

  Rng rng_backbone(derive_seed(cfg.seed, "backbone_init"));
  model.backbone.init(catalog.n_items(), cfg.d, cfg.steps, rng_backbone);
  if (model.semantic) {
    Rng rng_fusion(derive_seed(cfg.seed, "fusion_init"));
    model.fusion.init(cfg.d, cfg.d_text, rng_fusion);
  }

  // Join intent embeddings once; missing records fall back to the learned
  // no-intent embeddings and are counted.
  std::vector<const IntentEmbedding*> session_emb(train_sessions.size(), nullptr);
  if (model.semantic) {
    for (size_t i = 0; i < train_sessions.size(); ++i) {
      auto it = intents.find(train_sessions[i].session_id);
      if (it != intents.end()) {
        session_emb[i] = &it->second;
      } else {
        ++res.missing_intent_fallbacks;
      }
    }
  }

  std::vector<SessionGraph> graphs;
  graphs.reserve(train_sessions.size());
  for (const auto& s : train_sessions) {
    if (s.items.empty()) throw std::invalid_argument("train: empty session " + s.session_id);
    if (!catalog.contains(s.target))
      throw std::invalid_argument("train: target outside catalog in " + s.session_id);
    graphs.push_back(build_session_graph(s.items));
  }

  Adam adam(model_params(model), &res.adam, cfg.weight_decay);

  bool align_active = model.semantic && cfg.ablation != "no_kl" && cfg.sigma != 0.0 &&
                      cfg.align.strategy != "none";
  AlignmentConfig eff_align = cfg.align;
  if (cfg.ablation == "no_latent") eff_align.beta = 0.0;
  if (cfg.ablation == "no_explicit") eff_align.alpha = 0.0;

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<size_t> order(train_sessions.size());
  std::iota(order.begin(), order.end(), 0);

  int n_items = catalog.n_items();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
    shuffle_rng.shuffle(order);

    double ep_loss = 0, ep_loss_r = 0, ep_loss_info = 0;
    int ep_steps = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      int batch = static_cast<int>(end - start);

      Tape t;
      LiftedParams lp = lift_all(t, model, true);
      Var loss_r_sum = t.leaf(Tensor(1, 1));
      AlignmentBatch abatch;
      abatch.batch_size = batch;

      for (size_t pos = start; pos < end; ++pos) {
        size_t i = order[pos];
        const Session& s = train_sessions[i];
        SessionForward f = forward_session(t, graphs[i], lp.bv, model.semantic ? &lp.fv : nullptr,
                                           session_emb[i], cfg.ablation, cfg.steps);
        Var scores = item_scores(f.s, lp.bv);
        loss_r_sum = add(loss_r_sum, ce_loss(t, scores, s.target, n_items, cfg.ce));
        if (align_active) {
          Var g_al = cfg.stop_grad_structural ? detach(f.g) : f.g;
          if (f.real_explicit && eff_align.alpha != 0.0) {
            abatch.g_explicit.push_back(g_al);
            abatch.e_explicit.push_back(f.e_explicit);
          }
          if (f.real_latent && eff_align.beta != 0.0) {
            abatch.g_latent.push_back(g_al);
            abatch.e_latent.push_back(f.e_latent);
          }
        }
      }

      Var loss_r_mean = scale(loss_r_sum, 1.0 / batch);
      StepLoss sl;
      Var loss = loss_r_mean;
      if (align_active) {
        Var l_info = info_loss(t, abatch, eff_align);
        loss = add(loss_r_mean, scale(l_info, cfg.sigma));
        sl.loss_info = scalar(l_info);
      }
      sl.loss_r = scalar(loss_r_mean);
      sl.loss = scalar(loss);
      if (!std::isfinite(sl.loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(ep_steps) + " (loss_r=" +
                                 std::to_string(sl.loss_r) + ", loss_info=" +
                                 std::to_string(sl.loss_info) + ")");

      t.backward(loss);
      std::vector<Tensor> grads;
      grads.reserve(lp.ordered.size());
      for (Var p : lp.ordered) grads.push_back(t.grad(p));
      adam.step(grads, lr);

      res.steps.push_back(sl);
      ep_loss += sl.loss;
      ep_loss_r += sl.loss_r;
      ep_loss_info += sl.loss_info;
      ++ep_steps;
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.loss = ep_loss / ep_steps;
    log.loss_r = ep_loss_r / ep_steps;
    log.loss_info = ep_loss_info / ep_steps;
    if (!test_sessions.empty())
      log.eval = evaluate_model(model, test_sessions, intents, "epoch" + std::to_string(epoch),
                                cfg.ablation);
    res.epochs.push_back(log);
  }
  if (!model.backbone.all_finite())
    throw std::runtime_error("train: non-finite parameter after final update");
  return res;
}

TrainResult pretrain(const std::vector<Session>& train_sessions,
                     const std::vector<Session>& test_sessions, const ItemCatalog& catalog,
                     const TrainConfig& cfg) {
  TrainConfig pc = cfg;
  pc.ablation = "no_semantic";
  return train(train_sessions, test_sessions, catalog, IntentEmbeddingMap{}, pc);
}

double joint_loss(Model& model, const Session& session, const IntentEmbedding* emb,
                  const TrainConfig& cfg, std::vector<std::pair<std::string, Tensor>>* grads) {
  Tape t;
  LiftedParams lp = lift_all(t, model, grads != nullptr);
  SessionGraph graph = build_session_graph(session.items);
  SessionForward f = forward_session(t, graph, lp.bv, model.semantic ? &lp.fv : nullptr, emb,
                                     model.ablation, model.backbone.steps);
  Var scores = item_scores(f.s, lp.bv);
  Var loss = ce_loss(t, scores, session.target, model.backbone.n_items, cfg.ce);
  bool align_active = model.semantic && model.ablation != "no_kl" && cfg.sigma != 0.0 &&
                      cfg.align.strategy != "none";
  if (align_active) {
    AlignmentBatch batch;
    batch.batch_size = 1;
    Var g_al = cfg.stop_grad_structural ? detach(f.g) : f.g;
    if (f.real_explicit && cfg.align.alpha != 0.0) {
      batch.g_explicit.push_back(g_al);
      batch.e_explicit.push_back(f.e_explicit);
    }
    if (f.real_latent && cfg.align.beta != 0.0) {
      batch.g_latent.push_back(g_al);
      batch.e_latent.push_back(f.e_latent);
    }
    loss = add(loss, scale(info_loss(t, batch, cfg.align), cfg.sigma));
  }
  if (grads) {
    t.backward(loss);
    grads->clear();
    auto params = model_params(model);
    for (size_t i = 0; i < params.size(); ++i)
      grads->emplace_back(params[i].first, t.grad(lp.ordered[i]));
  }
  return scalar(loss);
}

EvalResult evaluate_model(Model& model, const std::vector<Session>& sessions,
                          const IntentEmbeddingMap& intents, const std::string& run_id,
                          const std::string& variant) {
  if (sessions.empty()) throw std::invalid_argument("evaluate_model: no sessions");
  std::vector<int> ranks;
  ranks.reserve(sessions.size());
  for (const auto& s : sessions) {
    const IntentEmbedding* emb = nullptr;
    if (model.semantic) {
      auto it = intents.find(s.session_id);
      if (it != intents.end()) emb = &it->second;
    }
    auto scores = model.score_session(s.items, emb);
    ranks.push_back(rank_target(scores, s.target));
  }
  EvalResult r = metrics_at_standard_ks(ranks);
  r.run_id = run_id;
  r.variant = variant;
  return r;
}

std::string epochs_to_jsonl(const std::vector<EpochLog>& epochs) {
  std::string out;
  for (const auto& e : epochs) {
    json j;
    j["epoch"] = e.epoch;
    j["lr"] = e.lr;
    j["loss"] = e.loss;
    j["loss_r"] = e.loss_r;
    j["loss_info"] = e.loss_info;
    j["p5"] = e.eval.p5;
    j["p10"] = e.eval.p10;
    j["p20"] = e.eval.p20;
    j["mrr5"] = e.eval.mrr5;
    j["mrr10"] = e.eval.mrr10;
    j["mrr20"] = e.eval.mrr20;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_model_checkpoint(const std::string& path, Model& model, const AdamState& adam,
                           const TrainConfig& cfg, const std::string& config_fp) {
  json header;
  header["kind"] = "dmsrec-model";
  header["d"] = model.backbone.d;
  header["n_items"] = model.backbone.n_items;
  header["steps"] = model.backbone.steps;
  header["d_text"] = model.fusion.d_text;
  header["semantic"] = model.semantic;
  header["ablation"] = model.ablation;
  header["ce"] = cfg.ce;
  header["sigma"] = cfg.sigma;
  header["alpha"] = cfg.align.alpha;
  header["beta"] = cfg.align.beta;
  header["strategy"] = cfg.align.strategy;
  header["seed"] = cfg.seed;
  header["config_fp"] = config_fp;
  header["adam_t"] = adam.t;

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  for (auto& [name, p] : model_params(model)) tensors.emplace_back(name, p);
  for (auto& [name, m] : adam.m) tensors.emplace_back("adam.m." + name, &m);
  for (auto& [name, v] : adam.v) tensors.emplace_back("adam.v." + name, &v);
  save_checkpoint(path, std::move(header), tensors);
}

LoadedModel load_model_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  const json& h = ck.header;
  if (h.value("kind", "") != "dmsrec-model")
    throw std::runtime_error("not a model checkpoint: " + path);

  LoadedModel lm;
  lm.cfg.d = h.at("d").get<int>();
  lm.cfg.steps = h.at("steps").get<int>();
  lm.cfg.d_text = h.at("d_text").get<int>();
  lm.cfg.ce = h.value("ce", "binary");
  lm.cfg.sigma = h.value("sigma", 0.0);
  lm.cfg.align.alpha = h.value("alpha", 0.0);
  lm.cfg.align.beta = h.value("beta", 0.0);
  lm.cfg.align.strategy = h.value("strategy", "kl");
  lm.cfg.seed = h.value("seed", 0ULL);
  lm.cfg.ablation = h.at("ablation").get<std::string>();
  lm.config_fp = h.value("config_fp", "");

  Model& model = lm.model;
  model.semantic = h.at("semantic").get<bool>();
  model.ablation = lm.cfg.ablation;
  Rng dummy(0);
  model.backbone.init(h.at("n_items").get<int>(), lm.cfg.d, lm.cfg.steps, dummy);
  if (model.semantic) model.fusion.init(lm.cfg.d, lm.cfg.d_text, dummy);

  for (auto& [name, p] : model_params(model)) {
    const Tensor& t = ck.tensor(name);
    if (!t.same_shape(*p))
      throw std::runtime_error("checkpoint tensor " + name + " has unexpected shape");
    *p = t;
    if (ck.has("adam.m." + name)) {
      lm.adam.m[name] = ck.tensor("adam.m." + name);
      lm.adam.v[name] = ck.tensor("adam.v." + name);
    }
  }
  lm.adam.t = h.value("adam_t", 0LL);
  return lm;
}

}  // namespace dmsrec
