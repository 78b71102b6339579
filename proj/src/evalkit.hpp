#pragma once

#include <string>
#include <vector>

#include "trainer.hpp"

namespace dmsrec {

// Everything a training-based evaluation needs, loaded once.
struct RunArtifacts {
  std::vector<Session> train;
  std::vector<Session> test;
  ItemCatalog catalog;
  IntentEmbeddingMap intents;
};

struct AblationReport {
  std::vector<EvalResult> results;  // w/o variants first, full last
  bool aborted = false;
  std::string error;
};

// Trains and evaluates the four w/o variants plus the full model with a
// shared seed. A failing variant aborts the table; rows finished so far are
// preserved in the report.
AblationReport run_ablations(const RunArtifacts& data, const TrainConfig& base);

struct SweepPoint {
  double value = 0.0;
  EvalResult eval;
  bool failed = false;
  std::string error;
};

// One train+eval per value of sigma, alpha or beta; per-point failures are
// recorded and the sweep continues.
std::vector<SweepPoint> sweep(const std::string& param, const std::vector<double>& values,
                              const RunArtifacts& data, const TrainConfig& base);

std::string report_to_jsonl(const std::vector<EvalResult>& results);
std::string report_to_table(const std::vector<EvalResult>& results);

}  // namespace dmsrec
