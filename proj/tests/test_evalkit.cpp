#include <doctest.h>

#include "corpus_fixtures.hpp"
#include "evalkit.hpp"

using namespace dmsrec;
using dmsrec::testing::tiny_config;
using dmsrec::testing::tiny_corpus;

namespace {

RunArtifacts as_artifacts(dmsrec::testing::TinyCorpus& c) {
  RunArtifacts a;
  a.train = c.train;
  a.test = c.test;
  a.catalog = c.catalog;
  a.intents = c.intents;
  return a;
}

bool same_metrics(const EvalResult& a, const EvalResult& b) {
  return a.p5 == b.p5 && a.p10 == b.p10 && a.p20 == b.p20 && a.mrr5 == b.mrr5 &&
         a.mrr10 == b.mrr10 && a.mrr20 == b.mrr20;
}

}  // namespace

TEST_CASE("ablation table has five rows in the documented order") {
  auto c = tiny_corpus(40);
  auto a = as_artifacts(c);
  auto cfg = tiny_config();
  cfg.epochs = 1;

  AblationReport report = run_ablations(a, cfg);
  CHECK_FALSE(report.aborted);
  REQUIRE(report.results.size() == 5);
  CHECK(report.results[0].variant == "w/o Semantic");
  CHECK(report.results[1].variant == "w/o KL");
  CHECK(report.results[2].variant == "w/o Latent-Intent");
  CHECK(report.results[3].variant == "w/o Explicit-Intent");
  CHECK(report.results[4].variant == "full");
  for (const auto& r : report.results) {
    CHECK(r.n_sessions == static_cast<int>(c.test.size()));
    for (double m : {r.p5, r.p10, r.p20, r.mrr5, r.mrr10, r.mrr20}) {
      CHECK(m >= 0.0);
      CHECK(m <= 100.0);
    }
  }

  // w/o Semantic row equals a standalone backbone run with the same seed
  auto standalone = pretrain(a.train, a.test, a.catalog, cfg);
  auto eval = evaluate_model(standalone.model, a.test, IntentEmbeddingMap{}, "x", "x");
  CHECK(same_metrics(report.results[0], eval));

  // the report renders to both formats
  CHECK(report_to_jsonl(report.results).find("w/o KL") != std::string::npos);
  CHECK(report_to_table(report.results).find("MRR@20") != std::string::npos);
}

TEST_CASE("sigma sweep: point count and the sigma=0 / no_kl identity") {
  auto c = tiny_corpus(40);
  auto a = as_artifacts(c);
  auto cfg = tiny_config();
  cfg.epochs = 1;

  auto points = sweep("sigma", {0.0, 0.2}, a, cfg);
  REQUIRE(points.size() == 2);
  CHECK_FALSE(points[0].failed);
  CHECK_FALSE(points[1].failed);

  TrainConfig no_kl = cfg;
  no_kl.ablation = "no_kl";
  auto r = train(a.train, a.test, a.catalog, a.intents, no_kl);
  auto no_kl_eval = evaluate_model(r.model, a.test, a.intents, "x", "x");
  CHECK(same_metrics(points[0].eval, no_kl_eval));

  CHECK_THROWS_AS(sweep("gamma", {0.1}, a, cfg), std::invalid_argument);
  CHECK_THROWS_AS(sweep("sigma", {}, a, cfg), std::invalid_argument);
}

TEST_CASE("alpha/beta sweeps emit one row per value") {
  auto c = tiny_corpus(30);
  auto a = as_artifacts(c);
  auto cfg = tiny_config();
  cfg.epochs = 1;
  auto points = sweep("alpha", {0.0, 0.1, 0.3}, a, cfg);
  CHECK(points.size() == 3);
  auto beta_points = sweep("beta", {0.05}, a, cfg);
  CHECK(beta_points.size() == 1);
}
