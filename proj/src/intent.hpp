#pragma once

#include <string>
#include <vector>

namespace dmsrec {

// One session's mined intents. explicit + latent partition the parsed list:
// an intent is explicit iff its normalized form equals a session title.
struct IntentRecord {
  std::string session_id;
  std::string raw_response;
  std::vector<std::string> intents;
  std::vector<std::string> explicit_intents;
  std::vector<std::string> latent_intents;
  bool empty_flag = false;  // nothing parsed; session trains structural-only
};

// Splits on semicolons, trims, strips list numbering ("1.", "2)", "-"),
// drops empties. Total function.
std::vector<std::string> parse_intents(const std::string& raw);

// Fills explicit/latent from record.intents, preserving order within each
// bucket. substring_mode relaxes the match to containment either way.
void classify_intents(IntentRecord& record, const std::vector<std::string>& session_titles,
                      bool substring_mode = false);

std::string intents_to_jsonl(const std::vector<IntentRecord>& records);
std::vector<IntentRecord> intents_from_jsonl(const std::string& text);
std::vector<IntentRecord> load_intents(const std::string& path);

}  // namespace dmsrec
