#include <doctest.h>

#include <algorithm>

#include "metrics.hpp"
#include "rng.hpp"

using namespace dmsrec;

namespace {

// Independent oracle: materialize the full ranking with the documented
// comparator and find the target's position.
int rank_by_full_sort(const std::vector<double>& scores, int target) {
  std::vector<int> ids(scores.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i) + 1;
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    if (scores[a - 1] != scores[b - 1]) return scores[a - 1] > scores[b - 1];
    return a < b;
  });
  for (size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == target) return static_cast<int>(i) + 1;
  return -1;
}

}  // namespace

TEST_CASE("rank basics and tie handling") {
  CHECK(rank_target({0.1, 0.9, 0.5}, 2) == 1);
  CHECK(rank_target({0.5, 0.5}, 1) == 1);  // tie broken toward the smaller id
  CHECK(rank_target({0.5, 0.5}, 2) == 2);
  CHECK_THROWS_AS(rank_target({0.5}, 2), std::out_of_range);
}

TEST_CASE("rank equals full-sort oracle on random vectors") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 5 + static_cast<int>(rng.next_below(60));
    std::vector<double> scores(n);
    for (auto& s : scores) s = rng.uniform(-1, 1);
    if (trial % 3 == 0) scores[rng.next_below(n)] = scores[rng.next_below(n)];  // force ties
    int target = 1 + static_cast<int>(rng.next_below(n));
    CHECK(rank_target(scores, target) == rank_by_full_sort(scores, target));
  }
}

TEST_CASE("metric hand values") {
  // ranks [1, 4, miss]: P@5 = 66.67, MRR@5 = 100 * (1 + 0.25 + 0) / 3
  std::vector<int> ranks = {1, 4, 1000};
  auto m = compute_metrics(ranks, 5);
  CHECK(m.p == doctest::Approx(100.0 * 2 / 3));
  CHECK(m.mrr == doctest::Approx(100.0 * (1.0 + 0.25) / 3));

  CHECK(compute_metrics({1, 1, 1}, 5).p == doctest::Approx(100.0));
  CHECK(compute_metrics({1, 1, 1}, 5).mrr == doctest::Approx(100.0));
  CHECK(compute_metrics({99, 99}, 5).p == doctest::Approx(0.0));
  CHECK(compute_metrics({99, 99}, 5).mrr == doctest::Approx(0.0));
  CHECK_THROWS_AS(compute_metrics({}, 5), std::invalid_argument);
}

TEST_CASE("monotonicity in K and MRR <= P") {
  Rng rng(9);
  std::vector<int> ranks;
  for (int i = 0; i < 500; ++i) ranks.push_back(1 + static_cast<int>(rng.next_below(40)));
  auto r = metrics_at_standard_ks(ranks);
  CHECK(r.p5 <= r.p10);
  CHECK(r.p10 <= r.p20);
  CHECK(r.mrr5 <= r.mrr10);
  CHECK(r.mrr10 <= r.mrr20);
  CHECK(r.mrr5 <= r.p5);
  CHECK(r.mrr10 <= r.p10);
  CHECK(r.mrr20 <= r.p20);
}
