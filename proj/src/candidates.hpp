#pragma once

#include <string>
#include <vector>

#include "backbone.hpp"
#include "corpus.hpp"

namespace dmsrec {

// Frozen top-K of one session: ids ordered by (score desc, id asc), titles
// parallel via the catalog.
struct CandidateSet {
  std::string session_id;
  std::vector<int> item_ids;
  std::vector<std::string> titles;
  std::vector<double> scores;
};

// Top-K selection from a full score vector (scores[j] <-> item id j+1).
CandidateSet top_k_candidates(const std::string& session_id, const std::vector<double>& scores,
                              const ItemCatalog& catalog, int k);

struct ExtractStats {
  int emitted = 0;
  int failed = 0;
};

// Runs the frozen backbone over every session. A session referencing an id
// outside the catalog is logged and skipped; extraction continues.
std::vector<CandidateSet> extract_candidates(const std::vector<Session>& sessions,
                                             BackboneParams& backbone, const ItemCatalog& catalog,
                                             int k, ExtractStats* stats = nullptr);

std::string candidates_to_jsonl(const std::vector<CandidateSet>& sets);
std::vector<CandidateSet> candidates_from_jsonl(const std::string& text);
std::vector<CandidateSet> load_candidates(const std::string& path);

}  // namespace dmsrec
