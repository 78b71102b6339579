#include "metrics.hpp"

#include <stdexcept>

namespace dmsrec {

int rank_target(const std::vector<double>& scores, int target_id) {
  if (target_id < 1 || target_id > static_cast<int>(scores.size()))
    throw std::out_of_range("rank_target: target outside catalog");
  double ts = scores[target_id - 1];
  int rank = 1;
  for (size_t j = 0; j < scores.size(); ++j) {
    int id = static_cast<int>(j) + 1;
    if (id == target_id) continue;
    if (score_beats(scores[j], id, ts, target_id)) ++rank;
  }
  return rank;
}

KMetrics compute_metrics(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) throw std::invalid_argument("compute_metrics: no ranks");
  if (k < 1) throw std::invalid_argument("compute_metrics: k must be >= 1");
  double hits = 0.0, rr = 0.0;
  for (int r : ranks) {
    if (r >= 1 && r <= k) {
      hits += 1.0;
      rr += 1.0 / r;
    }
  }
  double n = static_cast<double>(ranks.size());
  return KMetrics{100.0 * hits / n, 100.0 * rr / n};
}

EvalResult metrics_at_standard_ks(const std::vector<int>& ranks) {
  EvalResult r;
  r.n_sessions = static_cast<int>(ranks.size());
  auto m5 = compute_metrics(ranks, 5);
  auto m10 = compute_metrics(ranks, 10);
  auto m20 = compute_metrics(ranks, 20);
  r.p5 = m5.p;
  r.mrr5 = m5.mrr;
  r.p10 = m10.p;
  r.mrr10 = m10.mrr;
  r.p20 = m20.p;
  r.mrr20 = m20.mrr;
  return r;
}

}  // namespace dmsrec
