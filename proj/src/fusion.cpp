#include "fusion.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmsrec {

void FusionParams::init(int d_, int d_text_, Rng& rng) {
  d = d_;
  d_text = d_text_;
  if (d < 1 || d_text < 1) throw std::invalid_argument("fusion: bad dims");
  proj_w = Tensor(d_text, d);
  proj_b = Tensor(1, d);
  fuse_w = Tensor(3 * d, d);
  no_intent_explicit = Tensor(1, d);
  no_intent_latent = Tensor(1, d);
  double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (auto& [name, t] : named()) {
    (void)name;
    t->fill_uniform(rng, -bound, bound);
  }
}

std::vector<std::pair<std::string, Tensor*>> FusionParams::named() {
  return {
      {"fusion.proj_w", &proj_w},
      {"fusion.proj_b", &proj_b},
      {"fusion.fuse_w", &fuse_w},
      {"fusion.no_intent_explicit", &no_intent_explicit},
      {"fusion.no_intent_latent", &no_intent_latent},
  };
}

FusionVars lift(Tape& t, FusionParams& p, bool needs_grad) {
  FusionVars v;
  v.proj_w = t.leaf(p.proj_w, needs_grad);
  v.proj_b = t.leaf(p.proj_b, needs_grad);
  v.fuse_w = t.leaf(p.fuse_w, needs_grad);
  v.no_intent_explicit = t.leaf(p.no_intent_explicit, needs_grad);
  v.no_intent_latent = t.leaf(p.no_intent_latent, needs_grad);
  return v;
}

Var project(Var e, const FusionVars& p) {
  return add(matmul(e, p.proj_w), p.proj_b);
}

Var fuse(Var g, Var e_explicit, Var e_latent, const FusionVars& p) {
  return matmul(concat_cols(concat_cols(g, e_explicit), e_latent), p.fuse_w);
}

namespace {

void check_finite(const Tensor& x, const char* which) {
  for (size_t i = 0; i < x.v.size(); ++i)
    if (!std::isfinite(x.v[i]))
      throw std::runtime_error(std::string("kl_alignment: non-finite ") + which +
                               " at index " + std::to_string(i));
}

}  // namespace

Var kl_alignment(Var g, Var e) {
  Tape& t = *g.tape;
  if (!t.val(g).same_shape(t.val(e)))
    throw std::invalid_argument("kl_alignment: shape mismatch");
  check_finite(t.val(g), "structural input");
  check_finite(t.val(e), "semantic input");
  Var p = softmax_row(g);
  return sum_all(mul(p, sub(log_softmax_row(g), log_softmax_row(e))));
}

double kl_alignment_value(const Tensor& g, const Tensor& e, Tensor* dg, Tensor* de) {
  Tape t;
  Var vg = t.leaf(g, dg != nullptr);
  Var ve = t.leaf(e, de != nullptr);
  Var loss = kl_alignment(vg, ve);
  if (dg || de) {
    t.backward(loss);
    if (dg) *dg = t.grad(vg);
    if (de) *de = t.grad(ve);
  }
  return scalar(loss);
}

void AlignmentConfig::validate() const {
  if (strategy != "kl" && strategy != "contrastive" && strategy != "infonce" &&
      strategy != "directau" && strategy != "none")
    throw std::invalid_argument("alignment: unknown strategy '" + strategy + "'");
  if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw std::invalid_argument("alignment: alpha/beta must be finite and >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("alignment: temperature must be > 0");
}

namespace {

Var zero_scalar(Tape& t) { return t.leaf(Tensor(1, 1)); }

// ||a_i - b_j||^2 for stacked rows, via the expansion |a|^2 + |b|^2 - 2ab.
Var pairwise_sqdist(Var a, Var b) {
  Var cross = scale(matmul_nt(a, b), -2.0);
  Var sq_a = sum_rows(mul(a, a));         // n x 1
  Var sq_b = sum_rows(mul(b, b));         // m x 1
  Var d2 = add_colvec(add_rowvec(cross, transpose_v(sq_b)), sq_a);
  return clamp(d2, 0.0, std::numeric_limits<double>::infinity());
}

Var offdiag_mask(Tape& t, int n) {
  Tensor m(n, n);
  m.fill(1.0);
  for (int i = 0; i < n; ++i) m.at(i, i) = 0.0;
  return t.leaf(std::move(m));
}

Var kl_bucket(Tape& t, const std::vector<Var>& g, const std::vector<Var>& e) {
  Var total = zero_scalar(t);
  for (size_t i = 0; i < g.size(); ++i) total = add(total, kl_alignment(g[i], e[i]));
  return total;
}

// Symmetric InfoNCE over cosine similarities with in-batch negatives.
Var infonce_bucket(const std::vector<Var>& g, const std::vector<Var>& e,
                   double temperature) {
  int n = static_cast<int>(g.size());
  Var ng = rows_l2_normalize(stack_rows(g));
  Var ne = rows_l2_normalize(stack_rows(e));
  Var sim = scale(matmul_nt(ng, ne), 1.0 / temperature);  // n x n
  Var diag = take_diag(sim);
  Var loss_a = sub(logsumexp_row(sim), diag);
  Var loss_b = sub(logsumexp_row(transpose_v(sim)), diag);
  return scale(sum_all(add(loss_a, loss_b)), 0.5 / n);
}

// Margin pair loss: pulled positives (same session), pushed in-batch
// negatives below the margin in euclidean distance.
Var contrastive_bucket(Tape& t, const std::vector<Var>& g, const std::vector<Var>& e,
                       double margin) {
  int n = static_cast<int>(g.size());
  Var d2 = pairwise_sqdist(stack_rows(g), stack_rows(e));
  Var positive = scale(sum_all(take_diag(d2)), 1.0 / n);
  if (n < 2) return positive;
  Tensor eps(n, n);
  eps.fill(1e-12);
  Var dist = sqrt_v(add(d2, t.leaf(std::move(eps))));
  Tensor m(n, n);
  m.fill(margin);
  Var hinge = relu(sub(t.leaf(std::move(m)), dist));
  Var masked = mul(mul(hinge, hinge), offdiag_mask(t, n));
  return add(positive, scale(sum_all(masked), 1.0 / (static_cast<double>(n) * (n - 1))));
}

Var uniformity(Tape& t, Var stacked, int n) {
  Var d2 = pairwise_sqdist(stacked, stacked);
  Var kernel = mul(exp_v(scale(d2, -2.0)), offdiag_mask(t, n));
  return log_v(scale(sum_all(kernel), 1.0 / (static_cast<double>(n) * (n - 1))));
}

// Alignment + uniformity on each view.
Var directau_bucket(Tape& t, const std::vector<Var>& g, const std::vector<Var>& e) {
  int n = static_cast<int>(g.size());
  Var sg = stack_rows(g);
  Var se = stack_rows(e);
  Var align = scale(sum_all(take_diag(pairwise_sqdist(sg, se))), 1.0 / n);
  if (n < 2) return align;
  Var unif = scale(add(uniformity(t, sg, n), uniformity(t, se, n)), 0.5);
  return add(align, unif);
}

Var bucket_loss(Tape& t, const std::vector<Var>& g, const std::vector<Var>& e,
                const AlignmentConfig& cfg, int batch_size) {
  if (g.empty()) return zero_scalar(t);
  if (cfg.strategy == "kl") return scale(kl_bucket(t, g, e), 1.0 / batch_size);
  if (cfg.strategy == "infonce") return infonce_bucket(g, e, cfg.temperature);
  if (cfg.strategy == "contrastive") return contrastive_bucket(t, g, e, cfg.margin);
  if (cfg.strategy == "directau") return directau_bucket(t, g, e);
  throw std::invalid_argument("alignment: unknown strategy '" + cfg.strategy + "'");
}

}  // namespace

Var info_loss(Tape& t, const AlignmentBatch& batch, const AlignmentConfig& cfg) {
  cfg.validate();
  if (cfg.strategy == "none" || batch.batch_size == 0) return zero_scalar(t);
  Var total = zero_scalar(t);
  if (cfg.alpha != 0.0 && !batch.g_explicit.empty())
    total = add(total, scale(bucket_loss(t, batch.g_explicit, batch.e_explicit, cfg,
                                         batch.batch_size),
                             cfg.alpha));
  if (cfg.beta != 0.0 && !batch.g_latent.empty())
    total = add(total, scale(bucket_loss(t, batch.g_latent, batch.e_latent, cfg,
                                         batch.batch_size),
                             cfg.beta));
  return total;
}

}  // namespace dmsrec
