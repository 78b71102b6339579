#include <doctest.h>

#include <cmath>
#include <limits>

#include "fusion.hpp"
#include "test_support.hpp"

using namespace dmsrec;
using dmsrec::testing::finite_diff;
using dmsrec::testing::grads_match;

namespace {

FusionParams random_fusion(int d, int d_text, uint64_t seed) {
  Rng rng(seed);
  FusionParams p;
  p.init(d, d_text, rng);
  return p;
}

}  // namespace

TEST_CASE("projection: zero map, identity passthrough, naive oracle") {
  FusionParams p = random_fusion(4, 6, 1);
  p.proj_w.fill(0);
  p.proj_b.fill(0);
  Tensor e(1, 6, {1, 2, 3, 4, 5, 6});
  {
    Tape t;
    auto fv = lift(t, p, false);
    Var out = project(t.leaf(e), fv);
    CHECK(dot(t.val(out), t.val(out)) == 0.0);
  }

  FusionParams q = random_fusion(5, 5, 2);
  q.proj_w.fill(0);
  for (int i = 0; i < 5; ++i) q.proj_w.at(i, i) = 1.0;
  q.proj_b.fill(0);
  Tensor e5(1, 5, {1, -2, 3, -4, 5});
  {
    Tape t;
    auto fv = lift(t, q, false);
    Var out = project(t.leaf(e5), fv);
    CHECK(max_abs_diff(t.val(out), e5) < 1e-12);
  }

  FusionParams r = random_fusion(3, 7, 3);
  Tensor e7(1, 7);
  Rng rng(4);
  e7.fill_uniform(rng, -1, 1);
  Tape t;
  auto fv = lift(t, r, false);
  Var out = project(t.leaf(e7), fv);
  for (int j = 0; j < 3; ++j) {
    double want = r.proj_b.at(0, j);
    for (int k = 0; k < 7; ++k) want += e7.at(0, k) * r.proj_w.at(k, j);
    CHECK(t.val(out).at(0, j) == doctest::Approx(want).epsilon(1e-6));
  }
  CHECK_THROWS(project(t.leaf(Tensor(1, 2)), fv));
}

TEST_CASE("fuse: block identity, zeros, block mat-vec oracle, linearity") {
  int d = 4;
  FusionParams p = random_fusion(d, 8, 5);
  p.fuse_w.fill(0);
  for (int i = 0; i < d; ++i) p.fuse_w.at(i, i) = 1.0;  // [I | 0 | 0]

  Rng rng(6);
  Tensor g(1, d), ee(1, d), el(1, d);
  g.fill_uniform(rng, -1, 1);
  ee.fill_uniform(rng, -1, 1);
  el.fill_uniform(rng, -1, 1);

  {
    Tape t;
    auto fv = lift(t, p, false);
    Var out = fuse(t.leaf(g), t.leaf(ee), t.leaf(el), fv);
    CHECK(max_abs_diff(t.val(out), g) < 1e-12);
  }
  {
    Tape t;
    auto fv = lift(t, p, false);
    Var out = fuse(t.leaf(Tensor(1, d)), t.leaf(Tensor(1, d)), t.leaf(Tensor(1, d)), fv);
    CHECK(dot(t.val(out), t.val(out)) == 0.0);
  }

  FusionParams q = random_fusion(d, 8, 7);
  {
    Tape t;
    auto fv = lift(t, q, false);
    Var out = fuse(t.leaf(g), t.leaf(ee), t.leaf(el), fv);
    for (int j = 0; j < d; ++j) {
      double want = 0;
      for (int k = 0; k < d; ++k)
        want += g.at(0, k) * q.fuse_w.at(k, j) + ee.at(0, k) * q.fuse_w.at(d + k, j) +
                el.at(0, k) * q.fuse_w.at(2 * d + k, j);
      CHECK(t.val(out).at(0, j) == doctest::Approx(want).epsilon(1e-6));
    }

    // linearity: fuse(a*x) == a*fuse(x)
    double a = 2.5;
    Tensor ga = g, eea = ee, ela = el;
    for (auto* v : {&ga, &eea, &ela})
      for (auto& x : v->v) x *= a;
    Var scaled = fuse(t.leaf(ga), t.leaf(eea), t.leaf(ela), fv);
    Tensor expect = t.val(out);
    for (auto& x : expect.v) x *= a;
    CHECK(max_abs_diff(t.val(scaled), expect) < 1e-9);
  }
}

TEST_CASE("KL of identical logits is zero") {
  Tensor g(1, 5, {0.3, -1.2, 0.0, 2.0, 0.4});
  CHECK(std::fabs(kl_alignment_value(g, g)) < 1e-9);
}

TEST_CASE("KL hand value: [0,0] vs [0, ln 3]") {
  Tensor g(1, 2, {0.0, 0.0});
  Tensor e(1, 2, {0.0, std::log(3.0)});
  CHECK(kl_alignment_value(g, e) == doctest::Approx(0.5 * std::log(4.0 / 3.0)).epsilon(1e-6));
}

TEST_CASE("KL is non-negative over random pairs") {
  Rng rng(8);
  for (int trial = 0; trial < 1000; ++trial) {
    int d = 2 + static_cast<int>(rng.next_below(12));
    Tensor g(1, d), e(1, d);
    g.fill_uniform(rng, -4, 4);
    e.fill_uniform(rng, -4, 4);
    CHECK(kl_alignment_value(g, e) >= -1e-12);
  }
}

TEST_CASE("KL is invariant to constant logit shifts") {
  Rng rng(9);
  Tensor g(1, 6), e(1, 6);
  g.fill_uniform(rng, -2, 2);
  e.fill_uniform(rng, -2, 2);
  double base = kl_alignment_value(g, e);
  Tensor g2 = g, e2 = e;
  for (auto& x : g2.v) x += 3.7;
  for (auto& x : e2.v) x -= 1.9;
  CHECK(std::fabs(kl_alignment_value(g2, e2) - base) < 1e-9);
}

TEST_CASE("KL gradients match finite differences in both arguments") {
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor g(1, 7), e(1, 7);
    g.fill_uniform(rng, -2, 2);
    e.fill_uniform(rng, -2, 2);
    Tensor dg, de;
    kl_alignment_value(g, e, &dg, &de);
    auto value = [&]() { return kl_alignment_value(g, e); };
    CHECK(grads_match(dg, finite_diff(g, value)));
    CHECK(grads_match(de, finite_diff(e, value)));
  }
}

TEST_CASE("KL rejects non-finite input with the offending index") {
  Tensor g(1, 3, {0.0, std::numeric_limits<double>::infinity(), 0.0});
  Tensor e(1, 3);
  CHECK_THROWS_WITH_AS(kl_alignment_value(g, e), doctest::Contains("index 1"),
                       std::runtime_error);
}

namespace {

// Builds an alignment batch on the tape from plain tensors.
struct BatchFixture {
  std::vector<Tensor> g, ee, el;

  double loss(const AlignmentConfig& cfg, std::vector<Tensor>* grads_g = nullptr) {
    Tape t;
    AlignmentBatch batch;
    batch.batch_size = static_cast<int>(g.size());
    std::vector<Var> gv;
    for (size_t i = 0; i < g.size(); ++i) {
      Var vg = t.leaf(g[i], grads_g != nullptr);
      gv.push_back(vg);
      batch.g_explicit.push_back(vg);
      batch.e_explicit.push_back(t.leaf(ee[i]));
      batch.g_latent.push_back(vg);
      batch.e_latent.push_back(t.leaf(el[i]));
    }
    Var loss = info_loss(t, batch, cfg);
    if (grads_g) {
      t.backward(loss);
      grads_g->clear();
      for (Var v : gv) grads_g->push_back(t.grad(v));
    }
    return scalar(loss);
  }
};

BatchFixture random_batch(int n, int d, uint64_t seed) {
  Rng rng(seed);
  BatchFixture f;
  for (int i = 0; i < n; ++i) {
    Tensor g(1, d), ee(1, d), el(1, d);
    g.fill_uniform(rng, -1, 1);
    ee.fill_uniform(rng, -1, 1);
    el.fill_uniform(rng, -1, 1);
    f.g.push_back(g);
    f.ee.push_back(ee);
    f.el.push_back(el);
  }
  return f;
}

}  // namespace

TEST_CASE("info_loss: zero weights give exactly zero") {
  auto f = random_batch(3, 6, 11);
  AlignmentConfig cfg;
  cfg.alpha = 0;
  cfg.beta = 0;
  for (const char* strategy : {"kl", "infonce", "contrastive", "directau"}) {
    cfg.strategy = strategy;
    CHECK(f.loss(cfg) == 0.0);
  }
  cfg.strategy = "none";
  cfg.alpha = cfg.beta = 1.0;
  CHECK(f.loss(cfg) == 0.0);
}

TEST_CASE("info_loss kl: batch of one with e == g is zero") {
  BatchFixture f;
  Tensor v(1, 4, {0.5, -0.5, 1.0, 0.0});
  f.g = {v};
  f.ee = {v};
  f.el = {v};
  AlignmentConfig cfg;
  CHECK(std::fabs(f.loss(cfg)) < 1e-12);
}

TEST_CASE("info_loss rejects unknown strategies") {
  auto f = random_batch(2, 4, 12);
  AlignmentConfig cfg;
  cfg.strategy = "mystery";
  CHECK_THROWS_AS(f.loss(cfg), std::invalid_argument);
}

TEST_CASE("infonce with batch 2 equals the hand-expanded softmax") {
  // hand-set vectors with known cosines
  BatchFixture f;
  f.g = {Tensor(1, 2, {1, 0}), Tensor(1, 2, {0, 1})};
  f.ee = {Tensor(1, 2, {1, 0}), Tensor(1, 2, {1, 1})};
  f.el = f.ee;
  AlignmentConfig cfg;
  cfg.strategy = "infonce";
  cfg.alpha = 1.0;
  cfg.beta = 0.0;
  double tau = cfg.temperature;

  // similarities of unit vectors: s00=1, s01=1/sqrt2, s10=0, s11=1/sqrt2
  double s00 = 1 / tau, s01 = (1 / std::sqrt(2.0)) / tau;
  double s10 = 0 / tau, s11 = (1 / std::sqrt(2.0)) / tau;
  double row0 = -(s00 - std::log(std::exp(s00) + std::exp(s01)));
  double row1 = -(s11 - std::log(std::exp(s10) + std::exp(s11)));
  double col0 = -(s00 - std::log(std::exp(s00) + std::exp(s10)));
  double col1 = -(s11 - std::log(std::exp(s01) + std::exp(s11)));
  double want = 0.5 * ((row0 + row1) / 2.0 + (col0 + col1) / 2.0);
  CHECK(f.loss(cfg) == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("every strategy's structural gradient matches finite differences") {
  for (const char* strategy : {"kl", "infonce", "contrastive", "directau"}) {
    auto f = random_batch(3, 5, fnv1a64(strategy));
    AlignmentConfig cfg;
    cfg.strategy = strategy;
    cfg.alpha = 0.7;
    cfg.beta = 0.4;
    std::vector<Tensor> grads;
    f.loss(cfg, &grads);
    for (size_t i = 0; i < f.g.size(); ++i) {
      Tensor fd = finite_diff(f.g[i], [&]() { return f.loss(cfg); });
      CHECK_MESSAGE(grads_match(grads[i], fd), "strategy ", strategy, " element ", i);
    }
  }
}
