#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dmsrec {

struct InteractionEvent {
  std::string user_id;
  int64_t item_id = 0;   // original id at ingest, reindexed after filtering
  int64_t timestamp = 0; // seconds since epoch
  std::string title;     // resolved + normalized at ingest
};

// Items are reindexed to contiguous ids 1..n; every id has a non-empty title.
struct ItemCatalog {
  std::vector<std::string> titles{""};  // index 0 unused

  int n_items() const { return static_cast<int>(titles.size()) - 1; }
  bool contains(int id) const { return id >= 1 && id <= n_items(); }
  const std::string& title(int id) const;
  int add(const std::string& title);
};

// A training/inference unit: item sequence s_t with next-item target. Until
// the target split, `items` holds the full raw sequence and target is 0.
struct Session {
  std::string session_id;
  std::vector<int> items;
  std::vector<std::string> titles;  // parallel to items
  int target = 0;
};

// Events of one pre-split sequence (one user for the prefix path, one time
// window for the sessionized path).
struct RawSession {
  std::string key;
  std::vector<InteractionEvent> events;
};

struct FilterResult {
  std::vector<RawSession> sessions;
  ItemCatalog catalog;
  std::map<int64_t, int> remap;  // original id -> contiguous id
};

// Groups events into per-user sequences, stable in first-appearance order.
// Events within a user keep input order; timestamps must be non-decreasing.
std::vector<RawSession> group_by_user(const std::vector<InteractionEvent>& events);

// Splits each user's stream at inactivity gaps > gap_seconds and whenever the
// running span would exceed max_span_seconds. Throws if a user's events are
// not sorted by timestamp.
std::vector<RawSession> sessionize_by_time(const std::vector<InteractionEvent>& events,
                                           int64_t gap_seconds = 5 * 60,
                                           int64_t max_span_seconds = 24 * 3600);

// Drops items with global frequency < min_item_freq and sessions with
// length <= min_session_len, iterated to a fixed point so both conditions
// hold simultaneously. Surviving item ids are reindexed 1..n in order of
// first appearance. Throws "corpus exhausted" if nothing survives.
FilterResult filter_corpus(const std::vector<RawSession>& sessions, int min_item_freq = 5,
                           int min_session_len = 1);

// Event-level variant: sessions are per-user groups.
FilterResult filter_corpus_events(const std::vector<InteractionEvent>& events,
                                  int min_item_freq = 5, int min_session_len = 1);

// For a full sequence [v1..vn] emits ([v1..vk], v_{k+1}) for k = 2..n-1.
// Inputs of length 1 are discarded, so n <= 2 yields nothing.
std::vector<Session> prefix_augment(const Session& session);

// Last item becomes the target, no prefix expansion. n >= 2 required.
Session last_item_target(const Session& session);

struct PreprocessConfig {
  std::string input_path;
  std::string item_meta_path;  // optional
  std::string mode = "prefix"; // prefix | time
  bool augment = true;         // forced off for time mode unless set explicitly
  int min_item_freq = 5;
  int min_session_len = 1;
  double gap_minutes = 5.0;
  double max_span_hours = 24.0;
  double test_fraction = 0.1;
};

struct PreprocessOutput {
  std::vector<Session> train;
  std::vector<Session> test;
  ItemCatalog catalog;
  int base_sessions = 0;
};

std::vector<InteractionEvent> load_events(const std::string& path, const std::string& meta_path);

PreprocessOutput preprocess(const PreprocessConfig& cfg);

// --- artifact files ---

std::string sessions_to_jsonl(const std::vector<Session>& sessions);
std::vector<Session> sessions_from_jsonl(const std::string& text);
std::vector<Session> load_sessions(const std::string& path);

std::string catalog_to_json(const ItemCatalog& catalog);
ItemCatalog catalog_from_json(const std::string& text);
ItemCatalog load_catalog(const std::string& path);

}  // namespace dmsrec
