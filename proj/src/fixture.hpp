#pragma once

#include <string>

#include "rng.hpp"

namespace dmsrec {

// Synthetic successor-rule corpus: each session walks x, x+1, x+2, ...
// (wrapping at n_items), one session per user. With style "series" the
// titles carry item and series tokens, so mock-mined intents overlap the
// item actually clicked next; "plain" titles carry the item token only.
struct FixtureConfig {
  int n_sessions = 2000;
  int n_items = 50;
  int min_len = 3;   // raw length including the final target position
  int max_len = 6;
  int series_size = 5;
  uint64_t seed = 7;
  std::string style = "series";  // series | plain
};

std::string fixture_title(int item_id, const FixtureConfig& cfg);

// Writes a user,item,timestamp,title TSV consumable by preprocess.
void write_fixture_events(const std::string& path, const FixtureConfig& cfg);

}  // namespace dmsrec
