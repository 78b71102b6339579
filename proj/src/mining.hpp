#pragma once

#include <map>
#include <string>
#include <vector>

#include "candidates.hpp"
#include "corpus.hpp"
#include "intent.hpp"
#include "llm_client.hpp"

namespace dmsrec {

struct MineOptions {
  int workers = 1;
  int max_intents = 10;       // cap kept per session
  bool strict = false;        // drop intents outside the candidate set
  bool substring_match = false;
};

struct MineStats {
  int sessions = 0;
  int failed_sessions = 0;    // no candidates or exhausted retries
  int empty_sessions = 0;     // parsed to zero intents
  int total_intents = 0;
  int explicit_total = 0;
  int latent_total = 0;
  int hallucinated = 0;       // intents outside the candidate set
  std::map<int, int> explicit_histogram;  // per-session count -> sessions
  std::map<int, int> latent_histogram;

  double hallucination_rate() const {
    return total_intents == 0 ? 0.0 : static_cast<double>(hallucinated) / total_intents;
  }
  std::string to_json() const;
};

// Phase II driver: prompt -> (cache | client) -> parse -> classify, with
// bounded worker parallelism. Results come back in session input order; a
// per-session failure yields an empty flagged record and the run continues.
std::vector<IntentRecord> mine_intents(const std::vector<Session>& sessions,
                                       const std::vector<CandidateSet>& candidates,
                                       LLMClient& client, ResponseCache& cache,
                                       const MineOptions& options, MineStats* stats = nullptr);

}  // namespace dmsrec
