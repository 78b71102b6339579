#pragma once

#include <string>
#include <vector>

namespace dmsrec {

// Shared comparator: higher score wins, ties broken by smaller item id.
// Used identically by candidate extraction and evaluation ranking.
inline bool score_beats(double score_a, int id_a, double score_b, int id_b) {
  return score_a > score_b || (score_a == score_b && id_a < id_b);
}

// 1-based rank of the target among all items. scores[j] is the score of
// item id j+1.
int rank_target(const std::vector<double>& scores, int target_id);

struct KMetrics {
  double p = 0.0;    // percent
  double mrr = 0.0;  // percent
};

// P@K = 100 * |{rank <= K}| / N; MRR@K = 100 * mean(1/rank if rank <= K else 0).
KMetrics compute_metrics(const std::vector<int>& ranks, int k);

struct EvalResult {
  std::string run_id;
  std::string variant;
  int n_sessions = 0;
  double p5 = 0, p10 = 0, p20 = 0;
  double mrr5 = 0, mrr10 = 0, mrr20 = 0;
};

EvalResult metrics_at_standard_ks(const std::vector<int>& ranks);

}  // namespace dmsrec
