#include "prompt.hpp"

#include <stdexcept>

namespace dmsrec {

PromptPair build_prompts(const std::vector<std::string>& session_titles,
                         const CandidateSet& candidates) {
  if (session_titles.empty()) throw std::invalid_argument("build_prompts: no session titles");
  if (candidates.titles.empty())
    throw std::invalid_argument("build_prompts: empty candidate set (grounding base required)");

  PromptPair p;
  p.instruction =
      "You are tasked with inferring the user's intents based on a sequence of items "
      "they have interacted with.\n"
      "\n"
      "Requirements:\n"
      "1. If multiple intents are inferred, list all relevant intents that reflect the "
      "user's current preferences and separate them with semicolons.\n"
      "2. The inferred intents must be selected from the Candidate item set.\n"
      "3. Note that the number of recommended intents should be appropriate.\n";

  std::string in = "The order in which users click on items is as follows:\n";
  for (size_t i = 0; i < session_titles.size(); ++i) {
    in += std::to_string(i + 1) + ". " + session_titles[i];
    in += (i + 1 < session_titles.size()) ? ";\n" : "\n";
  }
  in += "\nCandidate item set:\n";
  for (size_t i = 0; i < candidates.titles.size(); ++i)
    in += std::to_string(i + 1) + ". " + candidates.titles[i] + "\n";
  p.input = std::move(in);
  return p;
}

}  // namespace dmsrec
