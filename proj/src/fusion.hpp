#pragma once

#include <optional>
#include <string>
#include <vector>

#include "autodiff.hpp"

namespace dmsrec {

// Projection of pooled intent vectors into the backbone space plus the
// fusion map S = fuse_w^T [G, E_e, E_l]. One (proj_w, proj_b) pair is shared
// by both intent buckets. Missing buckets are represented by the learned
// no-intent embeddings, which live in the projected space.
struct FusionParams {
  int d = 100;
  int d_text = 768;

  Tensor proj_w;            // d_text x d
  Tensor proj_b;            // 1 x d
  Tensor fuse_w;            // 3d x d
  Tensor no_intent_explicit, no_intent_latent;  // 1 x d

  void init(int d_, int d_text_, Rng& rng);
  std::vector<std::pair<std::string, Tensor*>> named();
};

struct FusionVars {
  Var proj_w, proj_b, fuse_w, no_intent_explicit, no_intent_latent;
};

FusionVars lift(Tape& t, FusionParams& p, bool needs_grad);

// e (1 x d_text) -> e * proj_w + proj_b (1 x d)
Var project(Var e, const FusionVars& p);

// [g, e_e, e_l] (1 x 3d) * fuse_w -> 1 x d
Var fuse(Var g, Var e_explicit, Var e_latent, const FusionVars& p);

// KL(softmax(g) || softmax(e)), summed over vector components. Gradients
// flow into both arguments.
Var kl_alignment(Var g, Var e);

// Plain-value convenience used by tests and tools; grads optional.
double kl_alignment_value(const Tensor& g, const Tensor& e, Tensor* dg = nullptr,
                          Tensor* de = nullptr);

struct AlignmentConfig {
  std::string strategy = "kl";  // kl | contrastive | infonce | directau | none
  double alpha = 0.1;           // explicit weight
  double beta = 0.1;            // latent weight
  double temperature = 0.2;     // infonce
  double margin = 0.5;          // contrastive

  void validate() const;
};

// One batch worth of alignment inputs: the structural vectors and, for each
// bucket, the projected semantic vectors of the sessions where that bucket
// is present (paired by index).
struct AlignmentBatch {
  std::vector<Var> g_explicit, e_explicit;
  std::vector<Var> g_latent, e_latent;
  int batch_size = 0;
};

// L_info = alpha * L_e + beta * L_l under the configured strategy, reduced
// by mean over the batch. Returns a scalar Var on the batch's tape; empty
// buckets contribute zero.
Var info_loss(Tape& t, const AlignmentBatch& batch, const AlignmentConfig& cfg);

}  // namespace dmsrec
