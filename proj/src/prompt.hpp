#pragma once

#include <string>
#include <vector>

#include "candidates.hpp"

namespace dmsrec {

struct PromptPair {
  std::string instruction;
  std::string input;
};

// Renders the fixed instruction (three numbered requirements) and the input
// prompt: the numbered click sequence followed by the numbered candidate
// set. Pure function of (titles, candidates); equal inputs give byte-equal
// prompts.
PromptPair build_prompts(const std::vector<std::string>& session_titles,
                         const CandidateSet& candidates);

}  // namespace dmsrec
