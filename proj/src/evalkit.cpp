#include "evalkit.hpp"

#include <cstdio>

#include <json.hpp>

namespace dmsrec {

using json = nlohmann::json;

namespace {

const std::vector<std::pair<std::string, std::string>> kAblationRows = {
    {"no_semantic", "w/o Semantic"},
    {"no_kl", "w/o KL"},
    {"no_latent", "w/o Latent-Intent"},
    {"no_explicit", "w/o Explicit-Intent"},
    {"full", "full"},
};

EvalResult train_and_eval(const RunArtifacts& data, const TrainConfig& cfg,
                          const std::string& run_id, const std::string& variant) {
  TrainResult tr = train(data.train, data.test, data.catalog, data.intents, cfg);
  return evaluate_model(tr.model, data.test, data.intents, run_id, variant);
}

}  // namespace

AblationReport run_ablations(const RunArtifacts& data, const TrainConfig& base) {
  AblationReport report;
  for (const auto& [ablation, label] : kAblationRows) {
    TrainConfig cfg = base;
    cfg.ablation = ablation;
    try {
      report.results.push_back(train_and_eval(data, cfg, "ablate:" + ablation, label));
    } catch (const std::exception& ex) {
      report.aborted = true;
      report.error = "variant " + ablation + " failed: " + ex.what();
      break;
    }
  }
  return report;
}

std::vector<SweepPoint> sweep(const std::string& param, const std::vector<double>& values,
                              const RunArtifacts& data, const TrainConfig& base) {
  if (param != "sigma" && param != "alpha" && param != "beta")
    throw std::invalid_argument("sweep: unknown parameter '" + param + "'");
  if (values.empty()) throw std::invalid_argument("sweep: no values");

  std::vector<SweepPoint> points;
  for (double v : values) {
    TrainConfig cfg = base;
    if (param == "sigma") cfg.sigma = v;
    if (param == "alpha") cfg.align.alpha = v;
    if (param == "beta") cfg.align.beta = v;
    SweepPoint pt;
    pt.value = v;
    char run_id[64];
    std::snprintf(run_id, sizeof(run_id), "sweep:%s=%g", param.c_str(), v);
    try {
      pt.eval = train_and_eval(data, cfg, run_id, param + " sweep");
    } catch (const std::exception& ex) {
      pt.failed = true;
      pt.error = ex.what();
    }
    points.push_back(std::move(pt));
  }
  return points;
}

std::string report_to_jsonl(const std::vector<EvalResult>& results) {
  std::string out;
  for (const auto& r : results) {
    json j;
    j["run_id"] = r.run_id;
    j["variant"] = r.variant;
    j["n_sessions"] = r.n_sessions;
    j["p5"] = r.p5;
    j["p10"] = r.p10;
    j["p20"] = r.p20;
    j["mrr5"] = r.mrr5;
    j["mrr10"] = r.mrr10;
    j["mrr20"] = r.mrr20;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string report_to_table(const std::vector<EvalResult>& results) {
  size_t width = 20;
  for (const auto& r : results) width = std::max(width, r.variant.size() + 2);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-*s %8s %8s %8s %8s %8s %8s\n", static_cast<int>(width),
                "Model", "P@5", "P@10", "P@20", "MRR@5", "MRR@10", "MRR@20");
  std::string out = buf;
  for (const auto& r : results) {
    std::snprintf(buf, sizeof(buf), "%-*s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                  static_cast<int>(width), r.variant.c_str(), r.p5, r.p10, r.p20, r.mrr5, r.mrr10,
                  r.mrr20);
    out += buf;
  }
  return out;
}

}  // namespace dmsrec
